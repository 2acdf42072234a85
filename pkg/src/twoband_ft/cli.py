"""Command-line driver: config file in, CSV/JSON artifacts and a manifest out.

Subcommands ``regime``, ``relax``, ``ft``, ``increments``, ``ou`` and
``ha`` each run one experiment; ``run`` executes every analysis listed in
the config's ``[run] analyses`` key. Exit codes: 0 success, 2 config error,
3 numerical-integrity error, 4 insufficient data.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import analysis, stochastic, typicality
from .entropy import entropy_exact
from .errors import (ConfigError, InsufficientDataError, InvalidSpecError,
                     NumericalIntegrityError, RangeError)
from .model import ModelSpec, build_hamiltonian, validate_regime
from .propagator import (SpectralCache, SpectralModel, autocorrelation, diagonalize,
                         evolve_ensemble, fit_decay_rate, write_trajectory_csv)
from .states import MONTE_CARLO_STREAM, StateSpec, ensemble_amplitudes, stream

logger = logging.getLogger("twoband_ft")

ANALYSES = ("regime", "relax", "ft", "increments", "ou", "ha")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_DATA = 0, 2, 3, 4


def git_blob_hash(data: bytes) -> str:
    """Content hash computed the way ``git hash-object`` does."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


@dataclass
class RunConfig:
    model: ModelSpec
    sections: dict
    analyses: tuple[str, ...]
    output_dir: Path
    master_seed: int
    config_hash: str
    source: str = ""

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _windows(text: str) -> list[tuple[float, float]]:
    out = []
    for item in text.replace(";", ",").split(","):
        if item.strip():
            lo, hi = item.split(":")
            out.append((float(lo), float(hi)))
    return out


def load_config(path, seed: int | None = None, out: str | None = None) -> RunConfig:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(raw.decode())
    except (configparser.Error, UnicodeDecodeError) as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    if not parser.has_section("model"):
        raise ConfigError("config has no [model] section")
    try:
        model = ModelSpec.from_mapping(parser["model"])
    except InvalidSpecError as exc:
        raise ConfigError(str(exc)) from exc
    sections = {name: dict(parser[name]) for name in parser.sections()}
    run = sections.get("run", {})
    analyses = tuple(a.strip() for a in run.get("analyses", "regime").split(",") if a.strip())
    unknown = [a for a in analyses if a not in ANALYSES]
    if unknown:
        raise ConfigError(f"unknown analyses: {', '.join(unknown)}")
    try:
        master_seed = int(run.get("master_seed", 0)) if seed is None else int(seed)
    except ValueError as exc:
        raise ConfigError(f"bad master_seed: {exc}") from exc
    if not 0 <= master_seed < 2**64:
        raise ConfigError("master_seed must be a 64-bit unsigned integer")
    output = Path(out) if out else Path(run.get("output_dir", "output"))
    return RunConfig(model, sections, analyses, output, master_seed,
                     git_blob_hash(raw), str(path))


def _get(section: dict, key: str, cast, default=None):
    if key not in section or section[key].strip() == "":
        if default is None:
            raise ConfigError(f"missing config key {key!r}")
        return default
    try:
        return cast(section[key])
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {exc}") from exc


class Runner:
    """Executes analyses for one config and records every file it writes."""

    def __init__(self, config: RunConfig, threads: int = 1, cache_dir=None):
        self.config = config
        self.threads = max(1, threads)
        self.cache = SpectralCache(cache_dir) if cache_dir else None
        self.files: list[Path] = []
        self._spectral: SpectralModel | None = None
        self.regime = validate_regime(config.model)
        for message in self.regime.warnings:
            print(f"WARNING regime: {message}", file=sys.stderr)

    # -- infrastructure ------------------------------------------------
    @property
    def dim(self) -> int:
        return self.config.model.dim

    @property
    def rate(self) -> float:
        return self.regime.rate

    def spectral(self) -> SpectralModel:
        if self._spectral is None:
            if self.cache is not None:
                self._spectral = self.cache.get(self.config.model)
            else:
                self._spectral = diagonalize(build_hamiltonian(self.config.model))
        return self._spectral

    def _path(self, name: str) -> Path:
        path = self.config.output_dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        self.files.append(path)
        return path

    def write_json(self, name: str, payload) -> None:
        text = json.dumps(payload, sort_keys=True, indent=2, default=_json_default)
        self._path(name).write_text(text + "\n")

    def write_csv(self, name: str, header, rows) -> None:
        with self._path(name).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(v) for v in row])

    def metadata(self, extra=None) -> dict:
        meta = {"model": asdict(self.config.model), "master_seed": self.config.master_seed,
                "config_hash": self.config.config_hash}
        if extra:
            meta.update(extra)
        return meta

    def trajectories(self, spec: StateSpec, count: int, grid):
        model = self.spectral()
        amps = ensemble_amplitudes(spec, model, count)
        return evolve_ensemble(model, amps, grid, threads=self.threads, a0=spec.a0)

    def _state_spec(self, section: dict, default_kind: str) -> StateSpec:
        kind = section.get("kind", default_kind).strip()
        a0 = _get(section, "a0", float, 0.5) if kind == "fixed-a" else None
        try:
            return StateSpec(kind, a0, self.config.master_seed)
        except InvalidSpecError as exc:
            raise ConfigError(str(exc)) from exc

    # -- analyses ------------------------------------------------------
    def run_regime(self) -> None:
        report = self.regime.to_dict()
        for key in ("rate", "correlation_time", "relaxation_time", "criterion_small",
                    "criterion_large"):
            print(f"{key:>16} = {report[key]:.6g}")
        self.write_json("regime.json", {"regime": report, **self.metadata()})

    def run_relax(self) -> None:
        sec = self.config.section("relax")
        spec = self._state_spec(sec, "fixed-a")
        count = _get(sec, "trajectories", int, 200)
        t_max = _get(sec, "t_max", float, 2.0 * self.regime.relaxation_time)
        step = _get(sec, "step", float, self.regime.correlation_time / 4.0)
        grid = np.arange(int(math.floor(t_max / step + 1e-9)) + 1) * step
        ens = self.trajectories(spec, count, grid)
        mean = ens.mean()
        a0 = spec.a0 if spec.a0 is not None else float(mean[0])
        fitted, amp = fit_decay_rate(grid, mean)
        c = autocorrelation(self.spectral(), grid)
        self.write_csv("relax/mean.csv", ["t", "a_mean", "a_exponential", "C"],
                       zip(grid, mean, a0 * np.exp(-self.rate * grid), c))
        first = ens.a_values[0]
        write_trajectory_csv(self._path("relax/trajectory_0.csv"), grid, first,
                             entropy_exact(first, self.dim))
        self.write_json("relax/fit.json", {
            "fitted_rate": fitted, "fitted_amplitude": amp, "analytic_rate": self.rate,
            "rate_ratio": fitted / self.rate, "trajectories": count,
            **self.metadata({"state": asdict(spec)})})

    def run_ft(self) -> None:
        sec = self.config.section("ft")
        spec = self._state_spec(sec, "fixed-a")
        count = _get(sec, "trajectories", int, 1000)
        tau = _get(sec, "tau", float, 2.0 * self.regime.correlation_time)
        t_min = _get(sec, "t_min", float, 0.0)
        t_max = _get(sec, "t_max", float, 4.0 * self.regime.relaxation_time)
        segments = _get(sec, "segments", int, 0) or None
        plan = analysis.SegmentPlan(t_min, t_max, tau, segments)
        plan.check_regime(self.regime.correlation_time, self.regime.relaxation_time)
        grid = plan.t_min + tau * np.arange(len(plan.starts()) + 1)
        ens = self.trajectories(spec, count, grid)
        prods = analysis.collect_entropy_productions(ens, plan, self.dim).sorted()
        lo = _get(sec, "a_min", float, 0.15)
        hi = _get(sec, "a_max", float, 0.25)
        window = prods.in_window(lo, hi)
        xi_all = analysis.normalized_productions(prods, self.rate, self.dim)
        self.write_csv("ft/samples.csv",
                       ["trajectory_id", "t_start", "tau", "a_mid", "sigma", "xi"],
                       zip(prods.trajectory_id, prods.t_start, np.full(len(prods), tau),
                           prods.a_mid, prods.sigma, xi_all))
        xi = analysis.normalized_productions(window, self.rate, self.dim)
        fit = analysis.gaussian_fit(xi)
        hist = analysis.histogram(xi)
        self.write_csv("ft/histogram.csv", ["left", "right", "count", "density"],
                       zip(hist.edges[:-1], hist.edges[1:], hist.counts, hist.density))
        self.write_json("ft/fit.json", {
            "fit": fit.to_dict(), "a_window": [lo, hi],
            "raw_mean": float(np.mean(window.sigma)),
            "predicted_mean": float(np.mean(analysis.predicted_means(window, self.rate, self.dim))),
            "sigma_below_one": fit.sigma < 1.0,
            **self.metadata({"plan": asdict(plan), "state": asdict(spec), "trajectories": count})})
        ratio_window = _windows(sec.get("ratio_window", f"{lo}:{hi}"))[0]
        ratio = analysis.ft_ratio_test(prods.in_window(*ratio_window), tau,
                                       bins=_get(sec, "bins", int, 20))
        self.write_json("ft/ft_ratio.json", {**ratio.to_dict(), "a_window": list(ratio_window)})
        windows = _windows(sec.get("a_windows", "0:0.05, 0.15:0.25"))
        rows = analysis.sigma_vs_a_sweep(prods, windows, self.rate, self.dim)
        self.write_csv("ft/sigma_vs_a.csv", ["a_min", "a_max", "a_mean", "n", "mu", "sigma"],
                       [(r.a_min, r.a_max, r.a_mean, r.n, r.mu, r.sigma) for r in rows])

    def run_increments(self) -> None:
        sec = self.config.section("increments")
        spec = self._state_spec(sec, "haar")
        count = _get(sec, "trajectories", int, 200)
        tau = _get(sec, "tau", float, 2.0 * self.regime.correlation_time)
        t_max = _get(sec, "t_max", float, 3.0 * self.regime.relaxation_time)
        t_min = _get(sec, "t_min", float, 0.0)
        segments = _get(sec, "segments", int, 0) or None
        plan = analysis.SegmentPlan(t_min, t_max, tau, segments)
        plan.check_regime(self.regime.correlation_time, self.regime.relaxation_time)
        grid = plan.t_min + tau * np.arange(len(plan.starts()) + 1)
        ens = self.trajectories(spec, count, grid)
        inc = analysis.collect_increments(ens, plan, self.rate, self.dim)
        self.write_csv("increments/increments.csv",
                       ["trajectory_id", "t_start", "a_start", "d", "chi"],
                       zip(inc.trajectory_id, inc.t_start, inc.a_start, inc.d, inc.chi))
        fit = analysis.gaussian_fit(inc.chi)
        hist = analysis.histogram(inc.chi)
        self.write_csv("increments/histogram.csv", ["left", "right", "count", "density"],
                       zip(hist.edges[:-1], hist.edges[1:], hist.counts, hist.density))
        multiples = _floats(sec.get("delta_t_multiples", "0, 1, 2, 4, 8"))
        rows = analysis.correlation_K(ens, tau, [m * tau for m in multiples], self.rate,
                                      self.dim, min_pairs=_get(sec, "min_pairs", int, 1000))
        self.write_csv("increments/correlation.csv", ["delta_t", "K", "std_error", "n_pairs"],
                       [(r.delta_t, r.k, r.std_error, r.n_pairs) for r in rows])
        exact = typicality.ha_increment_variance_exact(self.spectral(), 0.0, tau, self.rate)
        self.write_json("increments/fit.json", {
            "fit": fit.to_dict(),
            "variance_empirical": float(np.var(inc.d, ddof=1)),
            "variance_three_trace": exact,
            "variance_linear": typicality.ha_increment_variance(self.rate, tau, self.dim),
            **self.metadata({"plan": asdict(plan), "state": asdict(spec), "trajectories": count})})

    def run_ou(self) -> None:
        sec = self.config.section("ou")
        params = stochastic.OUParams(
            rate=_get(sec, "rate", float, self.rate),
            dimension=_get(sec, "dimension", int, self.dim),
            step=_get(sec, "tau", float, 2.0 * self.regime.correlation_time),
            n_steps=_get(sec, "n_steps", int, 1),
            a0=_get(sec, "a0", float, 0.2),
            stream_seed=self.config.master_seed)
        paths = _get(sec, "paths", int, 100000)
        s_paths = stochastic.simulate_entropy_sde(params, n_paths=paths)
        sigma = stochastic.productions_from_entropy(s_paths, params.step).ravel()
        fit = analysis.gaussian_fit(sigma)
        relation = abs(fit.variance - 2.0 * fit.mu / params.step) / fit.variance
        ratio = analysis.ft_ratio_test(sigma, params.step, bins=_get(sec, "bins", int, 20))
        self.write_csv("ou/samples.csv", ["sigma"], ((s,) for s in sigma))
        self.write_json("ou/fit.json", {"fit": fit.to_dict(), "mean_variance_mismatch": relation,
                                        "params": asdict(params)})
        self.write_json("ou/ft_ratio.json", ratio.to_dict())
        a_path = stochastic.simulate_ou_a(
            stochastic.OUParams(params.rate, params.dimension, params.step,
                                _get(sec, "path_steps", int, 200), params.a0, params.stream_seed))
        grid = params.step * np.arange(a_path.size)
        write_trajectory_csv(self._path("ou/path_0.csv"), grid, a_path,
                             entropy_exact(np.clip(a_path, -1, 1), params.dimension))

    def run_ha(self) -> None:
        sec = self.config.section("ha")
        dims = [int(d) for d in _floats(sec.get("dims", "50, 200, 1000"))]
        samples = _get(sec, "samples", int, 100000)
        records = []
        for k, dim in enumerate(dims):
            rng = stream(self.config.master_seed, MONTE_CARLO_STREAM, k)
            est = typicality.ha_monte_carlo(lambda s: typicality.band_expectations(s) ** 2,
                                            samples, dim, rng, formula="ha_observable_square")
            records.append({**asdict(est), "dim": dim,
                            "analytic": typicality.ha_observable_square(dim),
                            "z_score": (est.value - typicality.ha_observable_square(dim))
                            / est.std_error})
        inc_samples = _get(sec, "increment_samples", int, 0) if "increment_samples" in sec else 0
        if inc_samples:
            tau = _get(sec, "tau", float, 2.0 * self.regime.correlation_time)
            rng = stream(self.config.master_seed, MONTE_CARLO_STREAM, len(dims))
            est = typicality.ha_increments_monte_carlo(self.spectral(), 0.0, tau, self.rate,
                                                       inc_samples, rng)
            records.append({**asdict(est), "dim": self.dim,
                            "analytic": typicality.ha_increment_variance_exact(
                                self.spectral(), 0.0, tau, self.rate)})
        self.write_json("ha/ha.json", {"records": records})

    def manifest(self, command: str) -> Path:
        entries = []
        for path in sorted(set(self.files)):
            data = path.read_bytes()
            entries.append({"path": str(path.relative_to(self.config.output_dir)),
                            "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)})
        target = self.config.output_dir / "manifest.json"
        payload = {"command": command, "config": self.config.source,
                   "config_hash": self.config.config_hash,
                   "master_seed": self.config.master_seed,
                   "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"), "files": entries}
        target.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        return target


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (np.integer, np.bool_)):
        return int(value)
    return value


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def execute(config: RunConfig, command: str, threads: int = 1, cache_dir=None) -> Path:
    """Run ``command`` (an analysis name or ``run``) and return the manifest path."""
    runner = Runner(config, threads=threads, cache_dir=cache_dir)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    todo = config.analyses if command == "run" else (command,)
    for name in todo:
        logger.info("running %s", name)
        getattr(runner, f"run_{name}")()
    return runner.manifest(command)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twoband-ft",
        description="Entropy-production fluctuation statistics of a two-band random-matrix model.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + ANALYSES:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="INI-style run configuration")
        p.add_argument("--seed", type=int, help="override [run] master_seed")
        p.add_argument("--threads", type=int, default=1, help="trajectory worker threads")
        p.add_argument("--cache-dir", help="directory for cached diagonalizations")
        p.add_argument("--out", help="override [run] output_dir")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config, seed=args.seed, out=args.out)
        manifest = execute(config, args.command, threads=args.threads, cache_dir=args.cache_dir)
    except (ConfigError, InvalidSpecError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalIntegrityError as exc:
        print(f"numerical-integrity error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InsufficientDataError, RangeError) as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
