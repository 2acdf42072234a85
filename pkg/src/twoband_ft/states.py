"""Random initial pure states.

Two ensembles are provided: Haar-random states on the whole space (the
measure behind Hilbert-space averages) and states with a prescribed
``a(0)`` that are Haar-random inside each band otherwise.

Reproducibility comes from :func:`stream`: every trajectory draws from its
own generator derived from ``(master_seed, purpose, index)``, so results do
not depend on execution order or on how work is split across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSpecError
from .propagator import PureState, SpectralModel

# spawn-key prefixes keep the stream families of different samplers apart
HAAR_STREAM = 1
FIXED_A_STREAM = 2
MONTE_CARLO_STREAM = 3
OU_STREAM = 4


def stream(master_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(key)))


@dataclass(frozen=True)
class StateSpec:
    """Which initial ensemble to draw from.

    ``kind`` is ``"haar"`` or ``"fixed-a"``; ``a0`` is required (and must
    satisfy ``|a0| < 1``) for the latter.
    """

    kind: str = "haar"
    a0: float | None = None
    stream_seed: int = 0

    def __post_init__(self):
        if self.kind not in ("haar", "fixed-a"):
            raise InvalidSpecError(f"unknown state kind {self.kind!r}")
        if self.kind == "fixed-a":
            if self.a0 is None or not abs(self.a0) < 1:
                raise InvalidSpecError(f"fixed-a states need |a0| < 1, got {self.a0!r}")


def _gaussian_columns(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    parts = rng.standard_normal((2, dim, count))
    return parts[0] + 1j * parts[1]


def haar_vectors(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` Haar-random unit vectors as the columns of a ``(dim, count)`` array."""
    z = _gaussian_columns(rng, dim, count)
    return z / np.linalg.norm(z, axis=0)


def sample_haar(dim: int, rng: np.random.Generator) -> PureState:
    """One Haar-random state: normalized i.i.d. complex Gaussian amplitudes.

    The Haar measure is basis independent, so the amplitudes can be read in
    whichever basis the caller uses.
    """
    if dim < 1:
        raise InvalidSpecError("dimension must be positive")
    return PureState(haar_vectors(dim, 1, rng)[:, 0])


def fixed_a_site_vectors(a0: float, n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Site-basis columns with left weight ``(1+a0)/2`` and right weight ``(1-a0)/2``."""
    if not abs(a0) < 1:
        raise InvalidSpecError(f"|a0| must be < 1, got {a0!r}")
    left = haar_vectors(n, count, rng) * np.sqrt((1.0 + a0) / 2.0)
    right = haar_vectors(n, count, rng) * np.sqrt((1.0 - a0) / 2.0)
    return np.vstack([left, right])


def sample_fixed_a(a0: float, model: SpectralModel, rng: np.random.Generator) -> PureState:
    """Random state with ``<A> = a0`` exactly, in the eigenbasis of ``model``."""
    phi = fixed_a_site_vectors(a0, model.n_left, 1, rng)[:, 0]
    amps = model.to_eigenbasis(phi)
    # renormalize away the rotation's rounding so PureState's 1e-12 check holds
    return PureState(amps / np.linalg.norm(amps))


def ensemble_amplitudes(spec: StateSpec, model: SpectralModel, count: int,
                        first_index: int = 0) -> np.ndarray:
    """Eigenbasis amplitudes of ``count`` initial states, one stream each.

    Column ``k`` depends only on ``(spec, first_index + k)``.
    """
    n = model.n_left
    columns = []
    for index in range(first_index, first_index + count):
        if spec.kind == "haar":
            rng = stream(spec.stream_seed, HAAR_STREAM, index)
            columns.append(haar_vectors(model.dim, 1, rng)[:, 0])
        else:
            rng = stream(spec.stream_seed, FIXED_A_STREAM, index)
            columns.append(fixed_a_site_vectors(spec.a0, n, 1, rng)[:, 0])
    site = np.stack(columns, axis=1) if columns else np.empty((model.dim, 0), dtype=complex)
    if spec.kind == "haar":
        # Haar states are drawn directly in the eigenbasis
        return site
    amps = model.to_eigenbasis(site)
    return amps / np.linalg.norm(amps, axis=0)
