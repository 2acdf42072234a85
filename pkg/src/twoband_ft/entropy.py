"""Maximum-entropy (Jaynes) entropy of the band-asymmetry observable.

Given only ``a = <A>``, the least-biased density matrix is
``rho(a) = ((1 + a) P_L + (1 - a) P_R) / N``, which has two distinct
eigenvalues ``(1 +- a) / N``, each ``n``-fold. The entropy used throughout
is ``S(a) = N * (-Tr rho ln rho)``.
"""

from __future__ import annotations

import numpy as np
from scipy.special import xlogy

# Values this close beyond +-1 are rounding noise from a band eigenstate.
BOUNDARY_TOL = 1e-12


def _as_domain(a):
    a = np.asarray(a, dtype=float)
    if np.any(~np.isfinite(a)) or np.any(np.abs(a) > 1.0 + BOUNDARY_TOL):
        raise ValueError("entropy is defined for |a| <= 1 only")
    return np.clip(a, -1.0, 1.0)


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


def entropy_deficit(a, dim: int):
    """Distance below the maximum, ``N ln N - S(a)``.

    Differences of entropies are taken on this quantity to avoid cancelling
    two numbers of size ``N ln N``.
    """
    x = _as_domain(a)
    deficit = 0.5 * dim * (xlogy(1.0 + x, 1.0 + x) + xlogy(1.0 - x, 1.0 - x))
    return _scalar_or_array(deficit, a)


def entropy_exact(a, dim: int):
    """``N [ln N - ((1+a) ln(1+a) + (1-a) ln(1-a)) / 2]`` with ``0 ln 0 = 0``.

    Accepts scalars or arrays; raises ``ValueError`` for ``|a| > 1``.
    """
    return _scalar_or_array(dim * np.log(dim) - entropy_deficit(a, dim), a)


def entropy_quadratic(a, dim: int):
    """Second-order expansion ``N ln N - N a^2 / 2`` about equilibrium."""
    x = _as_domain(a)
    return _scalar_or_array(dim * np.log(dim) - 0.5 * dim * x**2, a)


def entropy_derivative(a, dim: int):
    """Analytic ``dS/da = -(N/2) ln((1 + a) / (1 - a))`` for ``|a| < 1``."""
    x = np.asarray(a, dtype=float)
    if np.any(np.abs(x) >= 1.0):
        raise ValueError("dS/da diverges at |a| = 1")
    return _scalar_or_array(-0.5 * dim * (np.log1p(x) - np.log1p(-x)), a)


def entropy_production(s_end, s_start, tau: float):
    """Time-averaged production ``(S(t + tau) - S(t)) / tau``."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    diff = (np.asarray(s_end, dtype=float) - np.asarray(s_start, dtype=float)) / tau
    return _scalar_or_array(diff, s_end)


def mean_production(a, rate: float, dim: int):
    """Predicted mean production ``2 R (N ln N - S_quad(a))``.

    Evaluated in the cancellation-free form ``R N a^2``.
    """
    x = _as_domain(a)
    return _scalar_or_array(rate * dim * x**2, a)
