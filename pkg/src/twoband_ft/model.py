"""Two-band random-matrix Hamiltonian and its relaxation time scales.

The model has two bands of ``n`` equidistant levels each, spanning the
same energy interval ``[0, band_width]``. A dense complex Gaussian block
couples every left level to every right level. The observable
``A = P_L - P_R`` measures the occupation asymmetry between the bands.

Basis ordering: indices ``0..n-1`` are the left band, ``n..2n-1`` the
right band. Units have hbar = 1.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidSpecError

logger = logging.getLogger(__name__)

SMALL_CRITERION_LIMIT = 0.1
LARGE_CRITERION_LIMIT = 1.0

_SPEC_KEYS = ("n", "band_width", "coupling", "seed")


@dataclass(frozen=True)
class ModelSpec:
    """The four numbers that pin down one model realization.

    Parameters
    ----------
    n : int
        Levels per band, ``n >= 2``.
    band_width : float
        Width of each band (delta epsilon).
    coupling : float
        Perturbation strength lambda, the RMS of the coupling elements.
    seed : int
        Seed for the coupling block, a non-negative 64-bit integer.
    """

    n: int
    band_width: float
    coupling: float
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise InvalidSpecError(f"n must be an integer >= 2, got {self.n!r}")
        if not (self.band_width > 0 and math.isfinite(self.band_width)):
            raise InvalidSpecError(f"band_width must be positive, got {self.band_width!r}")
        if not (self.coupling > 0 and math.isfinite(self.coupling)):
            raise InvalidSpecError(f"coupling must be positive, got {self.coupling!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise InvalidSpecError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "band_width", float(self.band_width))
        object.__setattr__(self, "coupling", float(self.coupling))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def dim(self) -> int:
        """Total Hilbert-space dimension ``N = 2n``."""
        return 2 * self.n

    def canonical_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        """Stable hex digest used as a cache key."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def to_config_text(self) -> str:
        lines = ["[model]"]
        lines += [f"{key} = {getattr(self, key)!r}" for key in _SPEC_KEYS]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, mapping) -> "ModelSpec":
        missing = [key for key in _SPEC_KEYS[:3] if key not in mapping]
        if missing:
            raise InvalidSpecError(f"model section lacks keys: {', '.join(missing)}")
        try:
            return cls(
                n=int(mapping["n"]),
                band_width=float(mapping["band_width"]),
                coupling=float(mapping["coupling"]),
                seed=int(mapping.get("seed", 0)),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidSpecError):
                raise
            raise InvalidSpecError(f"unparsable model value: {exc}") from exc

    @classmethod
    def from_config_text(cls, text: str) -> "ModelSpec":
        """Parse the ``[model]`` section of an INI-style config."""
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise InvalidSpecError(f"malformed config: {exc}") from exc
        if not parser.has_section("model"):
            raise InvalidSpecError("config has no [model] section")
        return cls.from_mapping(parser["model"])


def load_model_spec(path) -> ModelSpec:
    return ModelSpec.from_config_text(Path(path).read_text())


@dataclass(frozen=True, eq=False)
class HamiltonianRealization:
    """One fixed draw of the two-band Hamiltonian.

    Attributes
    ----------
    spec : ModelSpec
    h0_diagonal : ndarray, shape (N,)
        Unperturbed energies, left band first.
    coupling_block : ndarray, shape (n, n), complex
        The ``v_ij`` connecting left level ``i`` to right level ``j``.
    observable_signature : ndarray, shape (N,)
        Eigenvalues of ``A``: +1 on the left band, -1 on the right band.
    """

    spec: ModelSpec
    h0_diagonal: np.ndarray
    coupling_block: np.ndarray
    observable_signature: np.ndarray

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def dim(self) -> int:
        return self.spec.dim

    def full_matrix(self) -> np.ndarray:
        """Assemble the dense Hermitian ``H = H0 + V``."""
        n = self.n
        h = np.zeros((2 * n, 2 * n), dtype=complex)
        h[np.diag_indices(2 * n)] = self.h0_diagonal
        h[:n, n:] = self.coupling_block
        h[n:, :n] = self.coupling_block.conj().T
        return h

    def observable_matrix(self) -> np.ndarray:
        return np.diag(self.observable_signature.astype(float))

    def save_npz(self, path) -> None:
        np.savez(
            path,
            spec=np.array(self.spec.canonical_json()),
            h0_diagonal=self.h0_diagonal,
            coupling_block=self.coupling_block,
            observable_signature=self.observable_signature,
        )

    @classmethod
    def load_npz(cls, path) -> "HamiltonianRealization":
        with np.load(path) as data:
            spec = ModelSpec(**json.loads(str(data["spec"])))
            return cls(
                spec=spec,
                h0_diagonal=data["h0_diagonal"],
                coupling_block=data["coupling_block"],
                observable_signature=data["observable_signature"],
            )

    def export_csv(self, directory) -> list[Path]:
        """Write ``h0_diagonal.csv`` and ``coupling_block.csv`` for cross-checks.

        The coupling file is long-format with columns ``i, j, re, im``.
        """
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        h0_path = directory / "h0_diagonal.csv"
        with h0_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["index", "energy", "signature"])
            for k, (e, s) in enumerate(zip(self.h0_diagonal, self.observable_signature)):
                writer.writerow([k, f"{e:.17g}", int(s)])
        v_path = directory / "coupling_block.csv"
        with v_path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["i", "j", "re", "im"])
            n = self.n
            for i in range(n):
                row = self.coupling_block[i]
                for j in range(n):
                    writer.writerow([i, j, f"{row[j].real:.17g}", f"{row[j].imag:.17g}"])
        return [h0_path, v_path]


def band_energies(n: int, band_width: float) -> np.ndarray:
    return np.arange(n) / (n - 1) * band_width


def build_hamiltonian(spec: ModelSpec) -> HamiltonianRealization:
    """Draw the coupling block for ``spec`` and assemble the realization.

    Real and imaginary parts are i.i.d. normal with variance 1/2 each;
    the block is then rescaled by one global factor so that the mean of
    ``|v_ij|**2`` equals ``coupling**2`` exactly. The same seed always
    yields a bit-identical block.
    """
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    parts = rng.standard_normal((2, n, n))
    v = (parts[0] + 1j * parts[1]) * math.sqrt(0.5)
    v *= spec.coupling / math.sqrt(np.mean(np.abs(v) ** 2))

    energies = band_energies(n, spec.band_width)
    return HamiltonianRealization(
        spec=spec,
        h0_diagonal=np.concatenate([energies, energies]),
        coupling_block=v,
        observable_signature=np.concatenate([np.ones(n, dtype=np.int8), -np.ones(n, dtype=np.int8)]),
    )


@dataclass(frozen=True)
class RegimeReport:
    criterion_small: float
    criterion_large: float
    rate: float
    correlation_time: float
    relaxation_time: float
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.warnings

    def to_dict(self) -> dict:
        out = asdict(self)
        out["warnings"] = list(self.warnings)
        return out


def relaxation_rate(n: int, band_width: float, coupling: float) -> float:
    """Golden-rule decay rate ``R = 4 pi n lambda^2 / delta_eps`` of ``<A>``."""
    return 4.0 * math.pi * n * coupling**2 / band_width


def correlation_time(band_width: float) -> float:
    return 4.0 * math.pi / band_width


def validate_regime(spec: ModelSpec) -> RegimeReport:
    """Evaluate the weak-coupling window and the derived time scales.

    Exponential relaxation needs ``16 pi^2 n lambda^2 / de^2 << 1`` and
    ``8 pi^2 n^2 lambda^2 / de^2 > 1``. Violations are flagged in
    ``warnings`` and logged; the spec is never refused.
    """
    n, de, lam = spec.n, spec.band_width, spec.coupling
    small = 16.0 * math.pi**2 * n * lam**2 / de**2
    large = 8.0 * math.pi**2 * n**2 * lam**2 / de**2
    rate = relaxation_rate(n, de, lam)
    warnings = []
    if small >= SMALL_CRITERION_LIMIT:
        warnings.append(
            f"16 pi^2 n lambda^2 / de^2 = {small:.4g} is not << 1 (limit {SMALL_CRITERION_LIMIT})"
        )
    if large <= LARGE_CRITERION_LIMIT:
        warnings.append(f"8 pi^2 n^2 lambda^2 / de^2 = {large:.4g} is not > 1")
    for message in warnings:
        logger.warning("regime: %s", message)
    return RegimeReport(
        criterion_small=small,
        criterion_large=large,
        rate=rate,
        correlation_time=correlation_time(de),
        relaxation_time=1.0 / rate,
        warnings=tuple(warnings),
    )
