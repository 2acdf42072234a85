"""Ornstein-Uhlenbeck surrogate for ``a(t)`` and its Ito-transformed entropy.

The surrogate uses the time-discretized update

    a_{i+1} = a_i (1 - R tau) + sqrt(2 R / N) dw_i,

with ``dw_i`` Wiener increments of variance ``tau``. Through the quadratic
entropy ``S = N ln N - N a^2 / 2`` and Ito's lemma it induces

    S_{i+1} = S_i + 2 R (N ln N - S_i - 1/2) tau - sqrt(4 R (N ln N - S_i)) dw_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .entropy import entropy_quadratic
from .errors import InvalidSpecError, PathIntegrityError
from .states import OU_STREAM, stream


@dataclass(frozen=True)
class OUParams:
    """Parameters of one surrogate run.

    ``rate`` is R, ``dimension`` is N, ``step`` is tau. The noise
    amplitude ``sqrt(2R/N)`` is derived, see :attr:`amplitude`.
    """

    rate: float
    dimension: int
    step: float
    n_steps: int
    a0: float = 0.0
    stream_seed: int = 0

    def __post_init__(self):
        if not self.rate > 0:
            raise InvalidSpecError("rate must be positive")
        if not self.step > 0:
            raise InvalidSpecError("step must be positive")
        if self.dimension < 1 or self.n_steps < 1:
            raise InvalidSpecError("dimension and n_steps must be positive")
        if not abs(self.a0) <= 1:
            raise InvalidSpecError("|a0| must not exceed 1")

    @property
    def amplitude(self) -> float:
        return math.sqrt(2.0 * self.rate / self.dimension)

    @property
    def damping(self) -> float:
        """One-step decay factor ``1 - R tau``."""
        return 1.0 - self.rate * self.step

    def stationary_variance(self) -> float:
        """Exact stationary variance of the discrete recursion."""
        return self.amplitude**2 * self.step / (1.0 - self.damping**2)


def wiener_increments(count, step: float, rng: np.random.Generator) -> np.ndarray:
    """I.i.d. normal increments with mean 0 and variance ``step``.

    ``count`` may be an int or a shape tuple.
    """
    if not step > 0:
        raise InvalidSpecError("step must be positive")
    return rng.standard_normal(count) * math.sqrt(step)


def _increments(params: OUParams, n_paths: int) -> np.ndarray:
    rng = stream(params.stream_seed, OU_STREAM)
    return wiener_increments((n_paths, params.n_steps), params.step, rng)


def simulate_ou_a(params: OUParams, n_paths: int | None = None, amplitude: float | None = None,
                  increments: np.ndarray | None = None) -> np.ndarray:
    """Euler-Maruyama path(s) of ``a``, including the initial point.

    Returns shape ``(n_steps + 1,)`` for a single path, or
    ``(n_paths, n_steps + 1)`` when ``n_paths`` or 2-d ``increments`` are
    given. ``amplitude``
    overrides ``sqrt(2R/N)`` (0 gives the deterministic limit) and
    ``increments`` overrides the drawn ``dw``.
    """
    single = n_paths is None and (increments is None or np.ndim(increments) == 1)
    dw = _increments(params, 1 if single else n_paths) if increments is None \
        else np.atleast_2d(np.asarray(increments, dtype=float))
    b = params.amplitude if amplitude is None else amplitude
    forcing = np.concatenate([np.full((dw.shape[0], 1), params.a0), b * dw], axis=1)
    # y[i] = damping * y[i-1] + forcing[i] is exactly the update rule
    paths = lfilter([1.0], [1.0, -params.damping], forcing, axis=1)
    return paths[0] if single else paths


def simulate_entropy_sde(params: OUParams, n_paths: int | None = None,
                         amplitude_scale: float = 1.0, s0: float | None = None,
                         increments: np.ndarray | None = None) -> np.ndarray:
    """Path(s) of the Ito entropy SDE, starting from ``S(a0)`` (quadratic form).

    The ``-1/2`` Ito term is kept. Raises :class:`PathIntegrityError` when
    ``N ln N - S`` turns negative, since the noise amplitude is then
    undefined. ``amplitude_scale = 0`` switches the noise off.
    """
    single = n_paths is None and (increments is None or np.ndim(increments) == 1)
    dw = _increments(params, 1 if single else n_paths) if increments is None \
        else np.atleast_2d(np.asarray(increments, dtype=float))
    dim = params.dimension
    s_max = dim * math.log(dim)
    r, tau = params.rate, params.step
    # integrate the deficit s_max - S to keep the O(N ln N) offset out of the arithmetic
    deficit = np.empty((dw.shape[0], params.n_steps + 1))
    start = entropy_quadratic(params.a0, dim) if s0 is None else s0
    deficit[:, 0] = s_max - start
    for i in range(params.n_steps):
        d = deficit[:, i]
        if np.any(d < 0):
            raise PathIntegrityError(f"N ln N - S < 0 at step {i}", step=i)
        drift = 2.0 * r * (d - 0.5) * tau
        noise = amplitude_scale * np.sqrt(4.0 * r * d) * dw[:, i]
        deficit[:, i + 1] = d - drift + noise
    if np.any(deficit[:, -1] < 0):
        raise PathIntegrityError(f"N ln N - S < 0 at step {params.n_steps}", step=params.n_steps)
    paths = s_max - deficit
    return paths[0] if single else paths


def productions_from_entropy(paths: np.ndarray, step: float) -> np.ndarray:
    """``Sigma_i = (S_{i+1} - S_i) / tau`` along the last axis."""
    return np.diff(paths, axis=-1) / step


def linearized_productions(sigma0, step: float, dw) -> np.ndarray:
    """Productions with the ``1/2`` term dropped: ``Sigma0 - sqrt(2 Sigma0) dw / tau``."""
    sigma0 = np.asarray(sigma0, dtype=float)
    return sigma0 - np.sqrt(2.0 * sigma0) * np.asarray(dw) / step
