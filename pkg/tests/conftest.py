import dataclasses

import numpy as np
import pytest

from twoband_ft.model import ModelSpec, build_hamiltonian, validate_regime
from twoband_ft.propagator import SpectralCache, diagonalize, evolve_ensemble
from twoband_ft.states import StateSpec, ensemble_amplitudes

DESK_SPEC = ModelSpec(n=1000, band_width=0.5, coupling=2e-4, seed=1)
SMALL_SPEC = ModelSpec(n=200, band_width=0.5, coupling=6e-4, seed=1)
MASTER_SEED = 1234
DESK_TAU = 50.0


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return tmp_path_factory.mktemp("spectral-cache")


@pytest.fixture(scope="session")
def small_model():
    return diagonalize(build_hamiltonian(SMALL_SPEC))


@pytest.fixture(scope="session")
def desk_model(cache_dir):
    return SpectralCache(cache_dir).get(DESK_SPEC)


@pytest.fixture(scope="session")
def desk_regime():
    return validate_regime(DESK_SPEC)


@pytest.fixture(scope="session")
def desk_relaxing_ensemble(desk_model):
    """2000 trajectories from a(0) = 0.5 sampled every tau up to t = 4000."""
    spec = StateSpec("fixed-a", 0.5, MASTER_SEED)
    grid = DESK_TAU * np.arange(81)
    return evolve_ensemble(desk_model, ensemble_amplitudes(spec, desk_model, 2000), grid,
                           a0=0.5)


@pytest.fixture(scope="session")
def desk_haar_ensemble(desk_model):
    """200 Haar-random trajectories sampled every tau up to t = 3000."""
    spec = StateSpec("haar", None, MASTER_SEED)
    grid = DESK_TAU * np.arange(61)
    return evolve_ensemble(desk_model, ensemble_amplitudes(spec, desk_model, 200), grid)


def uncoupled(realization):
    """Same realization with the coupling block switched off."""
    return dataclasses.replace(realization,
                               coupling_block=np.zeros_like(realization.coupling_block))


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
