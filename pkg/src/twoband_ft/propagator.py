"""Exact Schroedinger dynamics by one dense diagonalization.

After :func:`diagonalize`, every state lives in the eigenbasis of ``H`` and
evolution is a phase rotation ``c_k(t) = exp(-i E_k t) c_k(0)``. The
observable is rotated once, ``A~ = U^dag A U``.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import linalg

from .entropy import entropy_exact
from .errors import InvalidSpecError, NumericalIntegrityError
from .model import HamiltonianRealization, ModelSpec, RegimeReport, build_hamiltonian

logger = logging.getLogger(__name__)

SPECTRAL_TOL = 1e-10
NORM_TOL = 1e-12
IMAG_TOL = 1e-10
RANGE_TOL = 1e-10

# Fixed so batched results never depend on the worker count.
CHUNK_SIZE = 128


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Eigen-decomposition of one realization.

    Attributes
    ----------
    eigenvalues : ndarray, shape (N,)
        Sorted ascending.
    eigenbasis : ndarray, shape (N, N)
        Columns are eigenvectors, expressed in the site (H0) basis.
    n_left : int
        Size of the left band; rows ``:n_left`` of the eigenbasis are
        the left-band components.
    """

    eigenvalues: np.ndarray
    eigenbasis: np.ndarray
    n_left: int
    spec: ModelSpec | None = None

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @cached_property
    def left_rows(self) -> np.ndarray:
        return np.ascontiguousarray(self.eigenbasis[: self.n_left])

    @cached_property
    def observable_rotated(self) -> np.ndarray:
        """``U^dag A U`` with ``A = P_L - P_R = 2 P_L - 1``."""
        ul = self.left_rows
        out = 2.0 * (ul.conj().T @ ul)
        out[np.diag_indices(self.dim)] -= 1.0
        return out

    @cached_property
    def transition_weights(self) -> np.ndarray:
        """``|A~_kl|**2``, the spectral weights of every trace ``Tr{A(t) A}``."""
        return np.abs(self.observable_rotated) ** 2

    def signature(self) -> np.ndarray:
        return np.concatenate([np.ones(self.n_left), -np.ones(self.dim - self.n_left)])

    def to_eigenbasis(self, site_amplitudes: np.ndarray) -> np.ndarray:
        """Rotate site-basis column vector(s) into the eigenbasis."""
        return self.eigenbasis.conj().T @ site_amplitudes

    def save(self, path) -> None:
        np.savez(path, eigenvalues=self.eigenvalues, eigenbasis=self.eigenbasis,
                 n_left=np.int64(self.n_left))

    @classmethod
    def load(cls, path, spec: ModelSpec | None = None) -> "SpectralModel":
        with np.load(path) as data:
            return cls(eigenvalues=data["eigenvalues"], eigenbasis=data["eigenbasis"],
                       n_left=int(data["n_left"]), spec=spec)


def diagonalize(realization: HamiltonianRealization, check: bool = True) -> SpectralModel:
    """Full dense diagonalization of ``H``.

    With ``check`` the eigen-residual ``max_k |H u_k - E_k u_k| / |H|`` and
    the unitarity defect ``|U^dag U - 1|_F`` (an upper bound on the spectral
    norm) are both verified against 1e-10.
    """
    h = realization.full_matrix()
    try:
        energies, vectors = linalg.eigh(h, driver="evd")
    except linalg.LinAlgError as exc:
        raise NumericalIntegrityError(f"eigensolver failed: {exc}") from exc
    model = SpectralModel(energies, vectors, realization.n, realization.spec)
    if check:
        scale = max(np.max(np.abs(energies)), np.finfo(float).tiny)
        residual = np.max(np.linalg.norm(h @ vectors - vectors * energies, axis=0)) / scale
        if residual > SPECTRAL_TOL:
            raise NumericalIntegrityError(
                f"eigen-residual {residual:.3e} exceeds {SPECTRAL_TOL}", residual=residual
            )
        gram = vectors.conj().T @ vectors
        gram[np.diag_indices_from(gram)] -= 1.0
        defect = np.linalg.norm(gram)
        if defect > SPECTRAL_TOL:
            raise NumericalIntegrityError(
                f"eigenbasis unitarity defect {defect:.3e} exceeds {SPECTRAL_TOL}", residual=defect
            )
    return model


class SpectralCache:
    """Directory of ``.npz`` decompositions keyed by ``ModelSpec.digest()``."""

    def __init__(self, directory):
        self.directory = Path(directory)

    def path_for(self, spec: ModelSpec) -> Path:
        return self.directory / f"spectral-{spec.digest()[:24]}.npz"

    def get(self, spec: ModelSpec) -> SpectralModel:
        path = self.path_for(spec)
        if path.exists():
            logger.info("spectral cache hit: %s", path)
            return SpectralModel.load(path, spec)
        model = diagonalize(build_hamiltonian(spec))
        self.directory.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp.npz")
        model.save(tmp)
        tmp.replace(path)
        return model


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitudes in the eigenbasis of ``H``."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1:
            raise InvalidSpecError("a pure state is a 1-d amplitude vector")
        drift = abs(np.vdot(amps, amps).real - 1.0)
        if drift > NORM_TOL:
            raise InvalidSpecError(f"state is not normalized (|norm^2 - 1| = {drift:.2e})")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))


def evolve(state: PureState, model: SpectralModel, t: float) -> PureState:
    """Apply ``exp(-i H t)``."""
    return PureState(np.exp(-1j * model.eigenvalues * t) * state.amplitudes)


def expectation(state: PureState, model: SpectralModel) -> float:
    """Return ``<psi|A|psi>``, refusing a non-real or out-of-range result."""
    c = state.amplitudes
    value = np.vdot(c, model.observable_rotated @ c)
    if abs(value.imag) > IMAG_TOL:
        raise NumericalIntegrityError(
            f"<A> has imaginary part {value.imag:.3e}", residual=abs(value.imag)
        )
    a = float(value.real)
    if abs(a) > 1.0 + RANGE_TOL:
        raise NumericalIntegrityError(f"<A> = {a!r} outside [-1, 1]", residual=abs(a) - 1.0)
    return a


def _check_grid(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise InvalidSpecError("time grid must be a non-empty 1-d sequence")
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise InvalidSpecError("time grid must be strictly increasing")
    return times


@dataclass(frozen=True, eq=False)
class Trajectory:
    """``a(t)`` sampled on a grid for one initial state."""

    times: np.ndarray
    a_values: np.ndarray
    trajectory_id: int = 0
    seed: int | None = None
    a0: float | None = None

    def entropy(self, dim: int) -> np.ndarray:
        return entropy_exact(self.a_values, dim)

    def to_csv(self, path, dim: int) -> Path:
        """Write columns ``t, a, S``."""
        path = Path(path)
        write_trajectory_csv(path, self.times, self.a_values, self.entropy(dim))
        return path


def write_trajectory_csv(path, times, a_values, s_values) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "a", "S"])
        for t, a, s in zip(times, a_values, s_values):
            writer.writerow([f"{t:.17g}", f"{a:.17g}", f"{s:.17g}"])


def read_trajectory_csv(path) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(times=data[:, 0], a_values=data[:, 1])


@dataclass(frozen=True, eq=False)
class TrajectoryEnsemble:
    """Many trajectories sharing one time grid.

    ``a_values`` has shape ``(n_trajectories, n_times)``; row ``k`` belongs
    to ``trajectory_ids[k]``.
    """

    times: np.ndarray
    a_values: np.ndarray
    trajectory_ids: np.ndarray = field(default=None)
    a0: float | None = None

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a_values, dtype=float))
        object.__setattr__(self, "a_values", a)
        object.__setattr__(self, "times", np.asarray(self.times, dtype=float))
        if a.shape[1] != self.times.shape[0]:
            raise InvalidSpecError("a_values columns must match the time grid")
        if self.trajectory_ids is None:
            object.__setattr__(self, "trajectory_ids", np.arange(a.shape[0]))
        else:
            object.__setattr__(self, "trajectory_ids", np.asarray(self.trajectory_ids, dtype=int))

    def __len__(self) -> int:
        return self.a_values.shape[0]

    def __iter__(self):
        for row, tid in zip(self.a_values, self.trajectory_ids):
            yield Trajectory(self.times, row, int(tid), a0=self.a0)

    def mean(self) -> np.ndarray:
        return self.a_values.mean(axis=0)


def trajectory(state: PureState, model: SpectralModel, grid) -> Trajectory:
    """``a(t)`` at every grid time, one exact evolution per point."""
    times = _check_grid(grid)
    values = np.array([expectation(evolve(state, model, t), model) for t in times])
    return Trajectory(times, values)


def _band_weight_expectations(model: SpectralModel, amplitudes: np.ndarray, times) -> np.ndarray:
    # <A> = 2 |P_L psi|^2 - 1 in the site basis: real by construction and
    # half the flops of the full U^dag A U product.
    out = np.empty((amplitudes.shape[1], len(times)))
    ul = model.left_rows
    for i, t in enumerate(times):
        rotated = np.exp(-1j * model.eigenvalues * t)[:, None] * amplitudes
        left = ul @ rotated
        out[:, i] = 2.0 * np.einsum("ij,ij->j", left.real, left.real) \
            + 2.0 * np.einsum("ij,ij->j", left.imag, left.imag) - 1.0
    return out


def evolve_ensemble(model: SpectralModel, amplitudes: np.ndarray, grid, threads: int = 1,
                    ids=None, a0: float | None = None) -> TrajectoryEnsemble:
    """Evaluate ``a(t)`` for many states at once.

    Parameters
    ----------
    amplitudes : ndarray, shape (N, m)
        Column ``k`` is the eigenbasis amplitude vector of state ``k``.
    threads : int
        Worker threads; chunking is fixed so outputs are identical for any
        value.
    """
    times = _check_grid(grid)
    amplitudes = np.asarray(amplitudes, dtype=complex)
    if amplitudes.ndim == 1:
        amplitudes = amplitudes[:, None]
    norms = np.einsum("ij,ij->j", amplitudes.conj(), amplitudes).real
    if np.any(np.abs(norms - 1.0) > NORM_TOL):
        raise InvalidSpecError("every state column must be normalized")
    m = amplitudes.shape[1]
    starts = range(0, m, CHUNK_SIZE)

    def work(start):
        return _band_weight_expectations(model, amplitudes[:, start:start + CHUNK_SIZE], times)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(work, starts))
    else:
        blocks = [work(s) for s in starts]
    a_values = np.vstack(blocks) if blocks else np.empty((0, len(times)))
    excess = np.max(np.abs(a_values)) - 1.0 if a_values.size else 0.0
    if excess > RANGE_TOL:
        raise NumericalIntegrityError(f"<A> left [-1, 1] by {excess:.3e}", residual=excess)
    return TrajectoryEnsemble(times, a_values, ids, a0=a0)


def trace_correlation(model: SpectralModel, lag) -> np.ndarray:
    """``Tr{A(t + lag) A(t)}`` for one or many lags.

    Evaluated as ``sum_kl |A~_kl|^2 exp(i (E_k - E_l) lag)``, which is real
    and even in ``lag`` because the weights are symmetric.
    """
    lags = np.atleast_1d(np.asarray(lag, dtype=float))
    w = model.transition_weights
    out = np.empty(lags.shape, dtype=complex)
    for i, dt in enumerate(lags):
        phase = np.exp(1j * model.eigenvalues * dt)
        out[i] = phase @ (w @ phase.conj())
    imag = np.max(np.abs(out.imag)) / model.dim
    if imag > SPECTRAL_TOL:
        raise NumericalIntegrityError(f"trace correlation not real ({imag:.2e})", residual=imag)
    result = out.real
    return result if np.ndim(lag) else float(result[0])


def autocorrelation(model: SpectralModel, times) -> np.ndarray:
    """Normalized ``C(t) = Tr{A(t) A} / N``; ``C(0) = 1``."""
    return np.asarray(trace_correlation(model, np.atleast_1d(times))) / model.dim


def fit_decay_rate(times, values, amplitude: float | None = None) -> tuple[float, float]:
    """Log-linear least-squares fit of ``values ~ amplitude * exp(-rate t)``.

    Returns ``(rate, amplitude)``. If ``amplitude`` is given it is held
    fixed and only the rate is fitted. Non-positive values cannot be
    log-fitted and raise ``ValueError``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if np.any(y <= 0):
        raise ValueError("decay fit needs strictly positive values")
    logs = np.log(y)
    if amplitude is None:
        slope, intercept = np.polyfit(t, logs, 1)
        return float(-slope), float(math.exp(intercept))
    shifted = logs - math.log(amplitude)
    slope = float(np.dot(t, shifted) / np.dot(t, t))
    return -slope, float(amplitude)


def default_time_grid(report: RegimeReport, t_max: float) -> np.ndarray:
    """Uniform grid from 0 to ``t_max`` with step ``tau_C / 4``."""
    step = report.correlation_time / 4.0
    count = int(math.floor(t_max / step + 1e-9)) + 1
    return np.arange(count) * step
