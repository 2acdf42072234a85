"""Entropy-production and increment statistics along trajectories.

Trajectories are cut into consecutive, non-overlapping segments of length
``tau``. Each segment yields one time-averaged entropy production
``Sigma = (S(t + tau) - S(t)) / tau`` and one increment
``D = a(t + tau) - a(t) (1 - R tau)``. The fluctuation theorem predicts
``ln P(Sigma) / P(-Sigma) = Sigma tau``; for a Gaussian this pins the
variance to ``2 Sigma0 / tau``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .entropy import entropy_deficit, mean_production
from .errors import InsufficientDataError, InvalidSpecError, RangeError
from .propagator import Trajectory, TrajectoryEnsemble

logger = logging.getLogger(__name__)

GRID_TOL = 1e-9
MIN_FIT_SAMPLES = 100
MIN_PAIRS = 1000
MIN_WINDOW_SAMPLES = 500
# asymptotic 1 % critical value of the KS statistic with estimated mean and
# variance (Lilliefors), in units of 1/sqrt(n)
LILLIEFORS_1PCT = 1.035


@dataclass(frozen=True)
class SegmentPlan:
    """Where segments are cut.

    Segments start at ``t_min, t_min + tau, ...`` and must end by
    ``t_max``. ``segments_per_trajectory`` caps the count (``None`` fills
    the window). ``a_window`` keeps only segments whose ``|a_mid|`` lies
    in ``[a_min, a_max]``.
    """

    t_min: float
    t_max: float
    tau: float
    segments_per_trajectory: int | None = None
    a_window: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidSpecError("tau must be positive")
        if not self.t_max > self.t_min:
            raise InvalidSpecError("t_window must be non-degenerate")
        if self.segments_per_trajectory is not None and self.segments_per_trajectory < 1:
            raise InvalidSpecError("segments_per_trajectory must be positive")
        if self.a_window is not None:
            lo, hi = self.a_window
            if not 0 <= lo < hi:
                raise InvalidSpecError(f"bad a_window {self.a_window!r}")

    def starts(self) -> np.ndarray:
        count = int(math.floor((self.t_max - self.t_min) / self.tau * (1 + 1e-12) + 1e-9))
        if self.segments_per_trajectory is not None:
            count = min(count, self.segments_per_trajectory)
        if count < 1:
            raise RangeError("t_window is shorter than one segment")
        return self.t_min + self.tau * np.arange(count)

    def check_regime(self, correlation_time: float, relaxation_time: float) -> list[str]:
        """Warn when ``tau`` is outside ``tau_C < tau << tau_R``."""
        issues = []
        if self.tau <= correlation_time:
            issues.append(f"tau = {self.tau:g} does not exceed tau_C = {correlation_time:.4g}")
        if self.tau > 0.1 * relaxation_time:
            issues.append(f"tau = {self.tau:g} is not << tau_R = {relaxation_time:.4g}")
        for message in issues:
            warnings.warn(message, stacklevel=2)
        return issues


@dataclass(frozen=True)
class ProductionSample:
    sigma: float
    t_start: float
    tau: float
    a_mid: float
    trajectory_id: int


@dataclass(frozen=True, eq=False)
class ProductionSet:
    """Columnar store of entropy productions, one entry per segment.

    ``a_mid`` is the mean of the segment's endpoint values of ``a``.
    """

    sigma: np.ndarray
    t_start: np.ndarray
    a_start: np.ndarray
    a_end: np.ndarray
    trajectory_id: np.ndarray
    tau: float

    @property
    def a_mid(self) -> np.ndarray:
        return 0.5 * (self.a_start + self.a_end)

    def __len__(self) -> int:
        return self.sigma.shape[0]

    def __iter__(self):
        for s, t, a, tid in zip(self.sigma, self.t_start, self.a_mid, self.trajectory_id):
            yield ProductionSample(float(s), float(t), self.tau, float(a), int(tid))

    def subset(self, mask) -> "ProductionSet":
        return ProductionSet(self.sigma[mask], self.t_start[mask], self.a_start[mask],
                             self.a_end[mask], self.trajectory_id[mask], self.tau)

    def in_window(self, a_min: float, a_max: float) -> "ProductionSet":
        a = np.abs(self.a_mid)
        return self.subset((a >= a_min) & (a <= a_max))

    def sorted(self) -> "ProductionSet":
        order = np.lexsort((self.t_start, self.trajectory_id))
        return self.subset(order)


@dataclass(frozen=True, eq=False)
class IncrementSet:
    d: np.ndarray
    chi: np.ndarray
    t_start: np.ndarray
    a_start: np.ndarray
    trajectory_id: np.ndarray
    tau: float

    def __len__(self) -> int:
        return self.d.shape[0]


def _groups(trajectories):
    """Yield ``(times, a_2d, ids)`` blocks sharing one grid."""
    if isinstance(trajectories, TrajectoryEnsemble):
        yield trajectories.times, trajectories.a_values, trajectories.trajectory_ids
        return
    if isinstance(trajectories, Trajectory):
        trajectories = [trajectories]
    for traj in trajectories:
        if isinstance(traj, TrajectoryEnsemble):
            yield traj.times, traj.a_values, traj.trajectory_ids
        else:
            yield (np.asarray(traj.times, dtype=float), np.atleast_2d(traj.a_values),
                   np.array([traj.trajectory_id]))


def grid_indices(times: np.ndarray, targets) -> np.ndarray:
    """Indices of ``targets`` on ``times``; raises :class:`RangeError` if off-grid."""
    targets = np.asarray(targets, dtype=float)
    scale = max(1.0, float(np.max(np.abs(times))))
    tol = GRID_TOL * scale
    if np.any(targets < times[0] - tol) or np.any(targets > times[-1] + tol):
        raise RangeError(
            f"requested times [{targets.min():g}, {targets.max():g}] outside the sampled "
            f"range [{times[0]:g}, {times[-1]:g}]"
        )
    idx = np.clip(np.searchsorted(times, targets - tol), 0, len(times) - 1)
    if np.any(np.abs(times[idx] - targets) > tol):
        bad = targets[np.abs(times[idx] - targets) > tol][0]
        raise RangeError(f"time {bad:g} is not a grid point; sample on a grid that contains it")
    return idx


def _segment_endpoints(trajectories, plan: SegmentPlan):
    starts = plan.starts()
    for times, a, ids in _groups(trajectories):
        i0 = grid_indices(times, starts)
        i1 = grid_indices(times, starts + plan.tau)
        yield starts, a[:, i0], a[:, i1], ids


def collect_entropy_productions(trajectories, plan: SegmentPlan, dim: int) -> ProductionSet:
    """One ``Sigma_tau`` per (trajectory, segment), using the exact entropy.

    Segment endpoints must be grid points of the trajectories. The
    plan's ``a_window``, if any, filters on ``|a_mid|``.
    """
    cols = {"sigma": [], "t": [], "a0": [], "a1": [], "id": []}
    for starts, a0, a1, ids in _segment_endpoints(trajectories, plan):
        # S(end) - S(start) = deficit(start) - deficit(end)
        sigma = (entropy_deficit(a0, dim) - entropy_deficit(a1, dim)) / plan.tau
        cols["sigma"].append(sigma.ravel())
        cols["t"].append(np.broadcast_to(starts, a0.shape).ravel())
        cols["a0"].append(a0.ravel())
        cols["a1"].append(a1.ravel())
        cols["id"].append(np.repeat(ids, len(starts)))
    if not cols["sigma"]:
        raise InsufficientDataError("no trajectories supplied")
    out = ProductionSet(*(np.concatenate(cols[k]) for k in ("sigma", "t", "a0", "a1", "id")),
                        tau=plan.tau)
    if plan.a_window is not None:
        out = out.in_window(*plan.a_window)
    return out


def normalize_productions(samples, sigma0, tau: float) -> np.ndarray:
    """``xi = (Sigma - Sigma0) / sqrt(2 Sigma0 / tau)``.

    ``sigma0`` may be a scalar or one value per sample.
    """
    sigma = samples.sigma if isinstance(samples, ProductionSet) else np.asarray(samples, float)
    sigma0 = np.asarray(sigma0, dtype=float)
    if np.any(sigma0 <= 0):
        raise ValueError("Sigma0 must be positive")
    if not tau > 0:
        raise ValueError("tau must be positive")
    return (sigma - sigma0) / np.sqrt(2.0 * sigma0 / tau)


def predicted_means(samples: ProductionSet, rate: float, dim: int) -> np.ndarray:
    """Per-sample ``Sigma0 = R N a_mid^2``."""
    return mean_production(samples.a_mid, rate, dim)


def normalized_productions(samples: ProductionSet, rate: float, dim: int) -> np.ndarray:
    """``xi`` with each sample's ``Sigma0`` taken from its own ``a_mid``."""
    return normalize_productions(samples, predicted_means(samples, rate, dim), samples.tau)


def collect_increments(trajectories, plan: SegmentPlan, rate: float, dim: int) -> IncrementSet:
    """``D = a(t + tau) - a(t) (1 - R tau)`` and ``chi = D / sqrt(2 R tau / N)``."""
    scale = math.sqrt(2.0 * rate * plan.tau / dim)
    g = 1.0 - rate * plan.tau
    parts = {"d": [], "t": [], "a": [], "id": []}
    for starts, a0, a1, ids in _segment_endpoints(trajectories, plan):
        d = a1 - g * a0
        mid = np.abs(0.5 * (a0 + a1))
        keep = np.ones_like(d, dtype=bool) if plan.a_window is None else \
            (mid >= plan.a_window[0]) & (mid <= plan.a_window[1])
        parts["d"].append(d[keep])
        parts["t"].append(np.broadcast_to(starts, d.shape)[keep])
        parts["a"].append(a0[keep])
        parts["id"].append(np.broadcast_to(ids[:, None], d.shape)[keep])
    if not parts["d"]:
        raise InsufficientDataError("no trajectories supplied")
    d = np.concatenate(parts["d"])
    return IncrementSet(d, d / scale, np.concatenate(parts["t"]), np.concatenate(parts["a"]),
                        np.concatenate(parts["id"]), plan.tau)


@dataclass(frozen=True)
class FitReport:
    """Moment fit plus a shape test.

    ``ks_statistic`` is the Kolmogorov-Smirnov distance between the
    standardized samples and N(0, 1); ``gaussian`` is False when it exceeds
    the 1 % Lilliefors critical value.
    """

    mu: float
    sigma: float
    n: int
    ks_statistic: float
    gaussian: bool = True

    @property
    def variance(self) -> float:
        return self.sigma**2

    def to_dict(self) -> dict:
        return {"mu": self.mu, "sigma": self.sigma, "variance": self.variance, "n": self.n,
                "ks_statistic": self.ks_statistic, "gaussian": self.gaussian}


def gaussian_fit(samples, min_samples: int = MIN_FIT_SAMPLES) -> FitReport:
    """Sample mean, unbiased standard deviation and KS distance to a Gaussian."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < min_samples:
        raise InsufficientDataError(f"gaussian_fit needs >= {min_samples} samples, got {x.size}")
    mu = float(np.mean(x))
    sigma = float(np.std(x, ddof=1))
    if sigma == 0:
        return FitReport(mu, 0.0, x.size, 1.0, False)
    ks = float(stats.kstest((x - mu) / sigma, "norm").statistic)
    return FitReport(mu, sigma, x.size, ks, ks <= LILLIEFORS_1PCT / math.sqrt(x.size))


@dataclass(frozen=True, eq=False)
class FTRatioResult:
    """Outcome of the ``ln P(+S)/P(-S)`` versus ``S tau`` regression.

    ``path`` is ``"histogram"`` when counts were regressed directly and
    ``"gaussian"`` when the ratio came from the fitted normal density.
    """

    slope: float
    intercept: float
    path: str
    sigma_center: np.ndarray
    n_pos: np.ndarray
    n_neg: np.ndarray
    log_ratio: np.ndarray

    def to_dict(self) -> dict:
        return {
            "slope": self.slope, "intercept": self.intercept, "path": self.path,
            "bins": [
                {"sigma": float(s), "n_pos": int(p), "n_neg": int(m), "log_ratio": float(r)}
                for s, p, m, r in zip(self.sigma_center, self.n_pos, self.n_neg, self.log_ratio)
            ],
        }


def _histogram_edges(x: np.ndarray, bins) -> np.ndarray:
    if np.ndim(bins):
        edges = np.asarray(bins, dtype=float)
        if edges[0] != 0 or np.any(np.diff(edges) <= 0):
            raise ValueError("explicit bins must be increasing edges starting at 0")
        return edges
    negatives = -x[x < 0]
    top = negatives.max() if negatives.size else np.abs(x).max()
    return np.linspace(0.0, top, int(bins) + 1)


def ft_ratio_test(samples, tau: float, bins=20, method: str = "auto",
                  min_count: int = 5) -> FTRatioResult:
    """Regress ``ln(count(+bin) / count(-bin))`` on ``Sigma tau``.

    Bins are symmetric intervals ``[e_k, e_{k+1})`` in ``|Sigma|``. Pairs with
    fewer than ``min_count`` entries on either side are skipped and the
    rest are fitted by weighted least squares (weights are inverse Poisson
    variances of the log ratio). The FT predicts slope 1, intercept 0.

    With ``method="auto"`` the Gaussian-implied ratio
    ``2 mu Sigma / sigma^2`` is used when fewer than three bin pairs
    survive; ``method="gaussian"`` forces it.
    """
    x = samples.sigma if isinstance(samples, ProductionSet) else np.asarray(samples, float)
    x = x.ravel()
    if method not in ("auto", "histogram", "gaussian"):
        raise ValueError(f"unknown method {method!r}")
    edges = _histogram_edges(x, bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    n_pos, _ = np.histogram(x[x > 0], bins=edges)
    n_neg, _ = np.histogram(-x[x < 0], bins=edges)
    usable = (n_pos >= min_count) & (n_neg >= min_count)

    if method == "histogram" or (method == "auto" and usable.sum() >= 3):
        if usable.sum() < 2:
            raise InsufficientDataError("fewer than two symmetric bin pairs are populated")
        p, m = n_pos[usable].astype(float), n_neg[usable].astype(float)
        log_ratio = np.log(p / m)
        weights = 1.0 / (1.0 / p + 1.0 / m)
        slope, intercept = np.polyfit(centers[usable] * tau, log_ratio, 1, w=np.sqrt(weights))
        return FTRatioResult(float(slope), float(intercept), "histogram", centers[usable],
                             n_pos[usable], n_neg[usable], log_ratio)

    fit = gaussian_fit(x, min_samples=2)
    log_ratio = (stats.norm.logpdf(centers, fit.mu, fit.sigma)
                 - stats.norm.logpdf(-centers, fit.mu, fit.sigma))
    slope, intercept = np.polyfit(centers * tau, log_ratio, 1)
    return FTRatioResult(float(slope), float(intercept), "gaussian", centers, n_pos, n_neg,
                         log_ratio)


def gaussian_ft_slope(mu: float, sigma: float, tau: float) -> float:
    """Slope of ``ln P(S)/P(-S)`` against ``S tau`` for ``N(mu, sigma^2)``."""
    return 2.0 * mu / (sigma**2 * tau)


@dataclass(frozen=True)
class CorrelationRow:
    delta_t: float
    k: float
    std_error: float
    n_pairs: int


def correlation_K(trajectories, tau: float, delta_ts, rate: float, dim: int,
                  t_window: tuple[float, float] | None = None,
                  min_pairs: int = MIN_PAIRS) -> list[CorrelationRow]:
    """``K(dt) = <D(t, tau) D(t + dt, tau)> / (2 R tau / N)``.

    ``t`` runs over consecutive segment starts ``t_min, t_min + tau, ...``;
    a pair counts when its second segment also ends inside the window.
    """
    norm = 2.0 * rate * tau / dim
    g = 1.0 - rate * tau
    rows = []
    for dt in np.atleast_1d(np.asarray(delta_ts, dtype=float)):
        products = []
        for times, a, _ in _groups(trajectories):
            lo, hi = (times[0], times[-1]) if t_window is None else t_window
            count = int(math.floor((hi - lo - dt - tau) / tau * (1 + 1e-12) + 1e-9)) + 1
            if count < 1:
                continue
            starts = lo + tau * np.arange(count)
            i0, i1 = grid_indices(times, starts), grid_indices(times, starts + tau)
            j0, j1 = grid_indices(times, starts + dt), grid_indices(times, starts + dt + tau)
            d_first = a[:, i1] - g * a[:, i0]
            d_second = a[:, j1] - g * a[:, j0]
            products.append((d_first * d_second).ravel())
        prod = np.concatenate(products) if products else np.empty(0)
        if prod.size < min_pairs:
            raise InsufficientDataError(
                f"K({dt:g}) has {prod.size} pairs, needs at least {min_pairs}"
            )
        rows.append(CorrelationRow(float(dt), float(prod.mean() / norm),
                                   float(prod.std(ddof=1) / math.sqrt(prod.size) / norm),
                                   int(prod.size)))
    return rows


@dataclass(frozen=True)
class SweepRow:
    a_min: float
    a_max: float
    a_mean: float
    n: int
    mu: float
    sigma: float


def sigma_vs_a_sweep(source, a_windows, rate: float, dim: int, tau: float | None = None,
                     min_samples: int = MIN_WINDOW_SAMPLES) -> list[SweepRow]:
    """Fitted width of ``xi`` per ``|a_mid|`` window.

    ``source`` is a :class:`ProductionSet` or trajectories; for the latter
    every segment of length ``tau`` from the first grid time is used.
    Windows with fewer than ``min_samples`` samples are dropped with a
    warning.
    """
    if isinstance(source, ProductionSet):
        productions = source
    else:
        if tau is None:
            raise ValueError("tau is required when sweeping raw trajectories")
        times = next(_groups(source))[0]
        productions = collect_entropy_productions(
            source, SegmentPlan(times[0], times[-1], tau), dim)
    rows = []
    for lo, hi in a_windows:
        window = productions.in_window(lo, hi)
        if len(window) < min_samples:
            warnings.warn(f"a-window [{lo}, {hi}] has {len(window)} samples "
                          f"(< {min_samples}); dropped", stacklevel=2)
            continue
        xi = normalized_productions(window, rate, dim)
        fit = gaussian_fit(xi)
        rows.append(SweepRow(float(lo), float(hi), float(np.mean(np.abs(window.a_mid))),
                             len(window), fit.mu, fit.sigma))
    return rows


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def density(self) -> np.ndarray:
        widths = np.diff(self.edges)
        total = self.counts.sum()
        return self.counts / (total * widths) if total else np.zeros_like(widths)


def histogram(values, bins: int = 40, span: float = 5.0) -> Histogram:
    """Fixed-range histogram on ``[-span, span]`` (suited to normalized samples)."""
    counts, edges = np.histogram(np.asarray(values, float), bins=bins, range=(-span, span))
    return Histogram(edges, counts)
