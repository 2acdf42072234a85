"""Hilbert-space averages: analytic identities and a Monte-Carlo verifier.

For traceless Hermitian ``M1, M2`` on an ``N``-dimensional space the
uniform (Haar) average of ``<psi|M1|psi><psi|M2|psi>`` is
``Tr{M1 M2} / (N (N + 1))``. Applied to ``A(t)`` this gives the ensemble
variance of the increments ``D(psi, t, tau)`` from three traces.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidSpecError
from .propagator import SpectralModel, trace_correlation
from .states import haar_vectors

TRACE_TOL = 1e-9
DEFAULT_BATCH = 2000


@dataclass(frozen=True)
class HAEstimate:
    value: float
    std_error: float
    n_samples: int
    formula: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.value - target) <= sigmas * self.std_error


def ha_product_analytic(m1: np.ndarray, m2: np.ndarray, dim: int | None = None) -> float:
    """``Tr{M1 M2} / (N (N + 1))`` for traceless ``M1, M2``."""
    m1 = np.asarray(m1)
    m2 = np.asarray(m2)
    dim = m1.shape[0] if dim is None else dim
    for name, m in (("M1", m1), ("M2", m2)):
        tr = np.trace(m)
        if abs(tr) > TRACE_TOL * dim:
            raise InvalidSpecError(f"{name} is not traceless (Tr = {tr:.3e})")
    # Tr{M1 M2} without forming the product
    value = np.sum(m1 * m2.T)
    return float(value.real) / (dim * (dim + 1))


def ha_monte_carlo(functional, n_samples: int, dim: int, rng: np.random.Generator,
                   batch: int = DEFAULT_BATCH, formula: str = "monte_carlo") -> HAEstimate:
    """Mean and standard error of ``functional`` over Haar-random states.

    ``functional`` receives a ``(dim, m)`` array whose columns are states
    and must return ``m`` real values.
    """
    if n_samples < 2:
        raise InvalidSpecError("need at least two samples for a standard error")
    total = 0.0
    total_sq = 0.0
    # shifted sums keep the variance accurate when the mean dominates
    shift = None
    done = 0
    while done < n_samples:
        m = min(batch, n_samples - done)
        values = np.asarray(functional(haar_vectors(dim, m, rng)), dtype=float)
        if shift is None:
            shift = float(values[0])
        centred = values - shift
        total += centred.sum()
        total_sq += np.dot(centred, centred)
        done += m
    mean_c = total / n_samples
    var = (total_sq - n_samples * mean_c**2) / (n_samples - 1)
    return HAEstimate(shift + mean_c, math.sqrt(max(var, 0.0) / n_samples), n_samples, formula)


def band_expectations(states: np.ndarray, n_left: int | None = None) -> np.ndarray:
    """``<psi|A|psi>`` for site-basis columns with ``A = P_L - P_R``."""
    n_left = states.shape[0] // 2 if n_left is None else n_left
    weights = np.abs(states) ** 2
    return weights[:n_left].sum(axis=0) - weights[n_left:].sum(axis=0)


def ha_observable_square(dim: int) -> float:
    """Analytic ``HA(<A>^2) = Tr{A^2} / (N (N + 1)) = 1 / (N + 1)``."""
    return 1.0 / (dim + 1)


def ha_increment_variance(rate: float, tau: float, dim: int) -> float:
    """Linearized ``HA(D^2) = 2 R tau / N``."""
    return 2.0 * rate * tau / dim


def ha_increment_variance_exact(model: SpectralModel, t: float, tau: float, rate: float) -> float:
    """Three-trace ``HA(D^2)`` from the spectral model, no exponential assumption.

    ``[Tr{A(t+tau)^2} - 2 (1 - R tau) Tr{A(t+tau) A(t)} + (1 - R tau)^2 Tr{A(t)^2}] / (N (N+1))``

    Every trace depends on time differences only, so ``t`` drops out; it is
    kept in the signature to mirror the definition of ``D(psi, t, tau)``.
    """
    dim = model.dim
    g = 1.0 - rate * tau
    late_sq = trace_correlation(model, (t + tau) - (t + tau))
    cross = trace_correlation(model, (t + tau) - t)
    early_sq = trace_correlation(model, t - t)
    return (late_sq - 2.0 * g * cross + g * g * early_sq) / (dim * (dim + 1))


def ha_increment_covariance_exact(model: SpectralModel, tau: float, lag: float, rate: float) -> float:
    """``HA(D(t, tau) D(t + lag, tau))`` from traces of ``A``.

    Expanding both increments gives four two-time traces at separations
    ``lag``, ``lag + tau`` and ``lag - tau``.
    """
    dim = model.dim
    g = 1.0 - rate * tau
    c = trace_correlation(model, [lag, lag + tau, lag - tau])
    value = c[0] * (1.0 + g * g) - g * (c[1] + c[2])
    return float(value) / (dim * (dim + 1))


def ha_increments_monte_carlo(model: SpectralModel, t: float, tau: float, rate: float,
                              n_samples: int, rng: np.random.Generator,
                              batch: int = 256) -> HAEstimate:
    """Monte-Carlo ``HA(D^2)`` with Haar states drawn in the eigenbasis."""
    phases_t = np.exp(-1j * model.eigenvalues * t)[:, None]
    phases_tt = np.exp(-1j * model.eigenvalues * (t + tau))[:, None]
    ul = model.left_rows
    g = 1.0 - rate * tau

    def squared_increment(states):
        a_t = 2.0 * np.sum(np.abs(ul @ (phases_t * states)) ** 2, axis=0) - 1.0
        a_tt = 2.0 * np.sum(np.abs(ul @ (phases_tt * states)) ** 2, axis=0) - 1.0
        return (a_tt - g * a_t) ** 2

    return ha_monte_carlo(squared_increment, n_samples, model.dim, rng, batch=batch,
                          formula="ha_increment_variance_mc")


def ha_report_records(estimates) -> list[dict]:
    """JSON-ready records with keys ``value, std_error, n_samples, formula``."""
    return [asdict(e) for e in estimates]
