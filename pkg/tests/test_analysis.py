import math
import warnings

import numpy as np
import pytest

from twoband_ft.analysis import (ProductionSet, SegmentPlan, collect_entropy_productions,
                                 collect_increments, correlation_K, ft_ratio_test, gaussian_fit,
                                 gaussian_ft_slope, grid_indices, histogram,
                                 normalize_productions, normalized_productions,
                                 predicted_means, sigma_vs_a_sweep)
from twoband_ft.entropy import mean_production
from twoband_ft.errors import InsufficientDataError, InvalidSpecError, RangeError
from twoband_ft.propagator import Trajectory, TrajectoryEnsemble
from twoband_ft.states import stream
from twoband_ft.stochastic import (OUParams, productions_from_entropy, simulate_entropy_sde,
                                   simulate_ou_a)

RATE, DIM = 1.0e-3, 2000


def _ou_ensemble(a0, tau, n_steps, n_paths, seed, amplitude=None):
    p = OUParams(RATE, DIM, step=tau, n_steps=n_steps, a0=a0, stream_seed=seed)
    paths = simulate_ou_a(p, n_paths=n_paths, amplitude=amplitude)
    return TrajectoryEnsemble(tau * np.arange(n_steps + 1), paths)


# -- segment plans ----------------------------------------------------------

def test_plan_validation_and_starts():
    plan = SegmentPlan(100.0, 600.0, 50.0)
    np.testing.assert_allclose(plan.starts(), 100 + 50 * np.arange(10))
    assert len(SegmentPlan(0.0, 600.0, 50.0, segments_per_trajectory=4).starts()) == 4
    with pytest.raises(InvalidSpecError):
        SegmentPlan(10.0, 10.0, 5.0)
    with pytest.raises(InvalidSpecError):
        SegmentPlan(0.0, 10.0, 0.0)
    with pytest.raises(RangeError):
        SegmentPlan(0.0, 10.0, 20.0).starts()


def test_plan_regime_warnings():
    with pytest.warns(UserWarning):
        SegmentPlan(0.0, 100.0, 10.0).check_regime(25.0, 1000.0)
    with pytest.warns(UserWarning):
        SegmentPlan(0.0, 1000.0, 500.0).check_regime(25.0, 1000.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert SegmentPlan(0.0, 1000.0, 50.0).check_regime(25.0, 1000.0) == []


def test_grid_lookup():
    times = np.arange(0, 1001, 25.0)
    np.testing.assert_array_equal(grid_indices(times, [0, 50, 1000]), [0, 2, 40])
    with pytest.raises(RangeError):
        grid_indices(times, [10.0])
    with pytest.raises(RangeError):
        grid_indices(times, [1025.0])


# -- collection -------------------------------------------------------------

def test_constant_trajectory_produces_nothing():
    traj = Trajectory(np.arange(11) * 10.0, np.full(11, 0.7))
    prods = collect_entropy_productions(traj, SegmentPlan(0.0, 100.0, 10.0), 100)
    assert len(prods) == 10
    assert np.all(prods.sigma == 0)


def test_segments_are_consecutive_and_labelled():
    ens = _ou_ensemble(0.3, 10.0, 30, 4, seed=1)
    prods = collect_entropy_productions(ens, SegmentPlan(50.0, 250.0, 10.0), DIM)
    assert len(prods) == 4 * 20
    first = prods.subset(prods.trajectory_id == 2)
    np.testing.assert_allclose(first.t_start, 50 + 10 * np.arange(20))
    np.testing.assert_array_equal(first.a_start[1:], first.a_end[:-1])
    np.testing.assert_allclose(first.a_mid, 0.5 * (first.a_start + first.a_end))


def test_window_outside_trajectory_is_rejected():
    ens = _ou_ensemble(0.3, 10.0, 10, 2, seed=1)
    with pytest.raises(RangeError):
        collect_entropy_productions(ens, SegmentPlan(0.0, 200.0, 10.0), DIM)
    with pytest.raises(RangeError):
        collect_entropy_productions(ens, SegmentPlan(0.0, 100.0, 15.0), DIM)


def test_a_window_filters_on_magnitude():
    ens = _ou_ensemble(-0.3, 10.0, 100, 20, seed=2)
    prods = collect_entropy_productions(ens, SegmentPlan(0.0, 1000.0, 10.0,
                                                         a_window=(0.2, 0.25)), DIM)
    assert len(prods) > 0
    assert np.all((np.abs(prods.a_mid) >= 0.2) & (np.abs(prods.a_mid) <= 0.25))


def test_list_of_trajectories_matches_ensemble():
    ens = _ou_ensemble(0.2, 10.0, 20, 3, seed=3)
    plan = SegmentPlan(0.0, 200.0, 10.0)
    a = collect_entropy_productions(ens, plan, DIM)
    b = collect_entropy_productions(list(ens), plan, DIM)
    assert np.array_equal(a.sigma, b.sigma)
    assert np.array_equal(a.trajectory_id, b.trajectory_id)


def test_sorting_is_order_independent():
    ens = _ou_ensemble(0.2, 10.0, 20, 5, seed=4)
    plan = SegmentPlan(0.0, 200.0, 10.0)
    forward = collect_entropy_productions(list(ens), plan, DIM).sorted()
    backward = collect_entropy_productions(list(ens)[::-1], plan, DIM).sorted()
    assert np.array_equal(forward.sigma, backward.sigma)


def test_deterministic_decay_has_negligible_increments():
    tau = 50.0
    times = tau * np.arange(41)
    traj = Trajectory(times, 0.5 * np.exp(-RATE * times))
    inc = collect_increments(traj, SegmentPlan(0.0, 2000.0, tau), RATE, DIM)
    bound = 0.5 * (RATE * tau) ** 2
    assert np.max(np.abs(inc.d)) <= bound
    np.testing.assert_allclose(inc.chi, inc.d / math.sqrt(2 * RATE * tau / DIM))


# -- normalization ----------------------------------------------------------

def test_normalize_productions():
    np.testing.assert_array_equal(normalize_productions(np.array([0.2, 0.2]), 0.2, 50.0), 0.0)
    assert normalize_productions(np.array([0.3]), 0.2, 50.0)[0] == pytest.approx(
        0.1 / math.sqrt(2 * 0.2 / 50))
    with pytest.raises(ValueError):
        normalize_productions(np.array([0.3]), 0.0, 50.0)


def test_per_sample_prediction_uses_midpoint():
    prods = ProductionSet(np.array([0.1]), np.array([0.0]), np.array([0.3]),
                          np.array([0.1]), np.array([0]), 50.0)
    assert predicted_means(prods, RATE, DIM)[0] == pytest.approx(RATE * DIM * 0.2**2)


# -- fits -------------------------------------------------------------------

def test_gaussian_fit_on_standard_normal():
    x = stream(1, 7).standard_normal(10**5)
    fit = gaussian_fit(x)
    assert abs(fit.mu) < 0.01 and fit.sigma == pytest.approx(1, rel=0.01)
    assert fit.gaussian and fit.ks_statistic < 0.01


def test_gaussian_fit_flags_bimodal_input():
    rng = stream(2, 7)
    x = np.concatenate([rng.normal(-3, 0.5, 5000), rng.normal(3, 0.5, 5000)])
    fit = gaussian_fit(x)
    assert not fit.gaussian and fit.ks_statistic > 0.1


def test_gaussian_fit_needs_samples():
    with pytest.raises(InsufficientDataError):
        gaussian_fit(np.zeros(99))


# -- fluctuation-theorem ratio ----------------------------------------------

def test_gaussian_path_reproduces_closed_form():
    rng = stream(3, 7)
    tau = 50.0
    for mu, sd in ((0.08, 0.06), (0.02, 0.05), (0.3, 0.04)):
        x = rng.normal(mu, sd, 5000)
        res = ft_ratio_test(x, tau, method="gaussian")
        fit = gaussian_fit(x)
        assert res.path == "gaussian"
        assert res.slope == pytest.approx(gaussian_ft_slope(fit.mu, fit.sigma, tau), rel=1e-6)
        assert abs(res.intercept) < 1e-9


def test_histogram_ratio_on_ft_consistent_gaussian():
    tau, sigma0 = 50.0, 0.05
    x = stream(4, 7).normal(sigma0, math.sqrt(2 * sigma0 / tau), 10**6)
    res = ft_ratio_test(x, tau)
    assert res.path == "histogram"
    assert res.slope == pytest.approx(1.0, abs=0.05)
    assert abs(res.intercept) < 0.05


def test_falls_back_without_negative_samples():
    x = stream(5, 7).normal(1.0, 0.05, 2000)
    res = ft_ratio_test(x, 50.0)
    assert res.path == "gaussian"
    with pytest.raises(InsufficientDataError):
        ft_ratio_test(x, 50.0, method="histogram")


def test_ratio_table_serializes():
    x = stream(6, 7).normal(0.05, 0.06, 20_000)
    d = ft_ratio_test(x, 50.0).to_dict()
    assert set(d) == {"slope", "intercept", "path", "bins"}
    assert all(set(b) == {"sigma", "n_pos", "n_neg", "log_ratio"} for b in d["bins"])


def test_ou_surrogate_ratio_slope_near_equilibrium():
    p = OUParams(RATE, DIM, step=50.0, n_steps=1, a0=0.1, stream_seed=7)
    sigma = productions_from_entropy(simulate_entropy_sde(p, n_paths=10**6), 50.0).ravel()
    res = ft_ratio_test(sigma, 50.0)
    assert res.path == "histogram"
    assert res.slope == pytest.approx(1.0, abs=0.1)


def test_ou_paths_through_collector_obey_ratio():
    # Sigma from a-paths is quadratic in the noise; N a^2 = 80 keeps that distortion small
    ens = _ou_ensemble(0.2, 50.0, 1, 10**6, seed=7)
    prods = collect_entropy_productions(ens, SegmentPlan(0.0, 50.0, 50.0), DIM)
    assert ft_ratio_test(prods, 50.0).slope == pytest.approx(1.0, abs=0.1)


# -- surrogate through the quantum pipeline ---------------------------------

def test_pipeline_identity_on_ou_paths():
    tau = 50.0
    ens = _ou_ensemble(0.2, tau, 1, 10**5, seed=8)
    prods = collect_entropy_productions(ens, SegmentPlan(0.0, tau, tau), DIM)
    fit = gaussian_fit(prods.sigma)
    assert abs(fit.variance - 2 * fit.mu / tau) / fit.variance < 0.05


def test_raw_mean_matches_prediction_off_equilibrium():
    tau = 10.0
    ens = _ou_ensemble(0.3, tau, 100, 2000, seed=9)
    prods = collect_entropy_productions(ens, SegmentPlan(0.0, 1000.0, tau), DIM)
    for lo, hi in ((0.15, 0.2), (0.2, 0.25), (0.25, 0.3)):
        w = prods.in_window(lo, hi)
        assert len(w) >= 1000
        predicted = np.mean(mean_production(w.a_mid, RATE, DIM))
        assert np.mean(w.sigma) == pytest.approx(predicted, rel=0.1)


def test_surrogate_sweep_has_unit_width():
    tau = 10.0
    ens = _ou_ensemble(0.35, tau, 200, 2000, seed=10)
    rows = sigma_vs_a_sweep(ens, [(0.1, 0.15), (0.15, 0.25), (0.25, 0.35)], RATE, DIM, tau=tau)
    assert len(rows) == 3
    for row in rows:
        assert row.sigma == pytest.approx(1.0, abs=0.05)


def test_sweep_drops_sparse_windows():
    ens = _ou_ensemble(0.3, 10.0, 50, 20, seed=11)
    prods = collect_entropy_productions(ens, SegmentPlan(0.0, 500.0, 10.0), DIM)
    with pytest.warns(UserWarning, match="dropped"):
        rows = sigma_vs_a_sweep(prods, [(0.25, 0.35), (0.6, 0.7)], RATE, DIM, min_samples=100)
    assert len(rows) == 1


def test_normalized_productions_shape():
    ens = _ou_ensemble(0.3, 10.0, 20, 5, seed=12)
    prods = collect_entropy_productions(ens, SegmentPlan(0.0, 200.0, 10.0), DIM)
    assert normalized_productions(prods, RATE, DIM).shape == (100,)


# -- correlations -----------------------------------------------------------

def test_white_increments_are_uncorrelated():
    # the discrete surrogate's increments D are exactly its i.i.d. noise
    tau = 50.0
    ens = _ou_ensemble(0.0, tau, 40, 100, seed=13)
    rows = correlation_K(ens, tau, [0.0, tau, 2 * tau, 4 * tau, 8 * tau], RATE, DIM)
    assert rows[0].k == pytest.approx(1.0, abs=4 * rows[0].std_error)
    for row in rows[1:]:
        assert row.n_pairs >= 1000
        assert abs(row.k) < 3 / math.sqrt(1000)


def test_correlation_needs_pairs():
    ens = _ou_ensemble(0.0, 50.0, 10, 5, seed=14)
    with pytest.raises(InsufficientDataError):
        correlation_K(ens, 50.0, [50.0], RATE, DIM)


def test_histogram_density_integrates_to_one():
    x = stream(7, 7).standard_normal(10_000)
    h = histogram(x, bins=50, span=6)
    assert h.counts.sum() == 10_000
    assert np.sum(h.density * np.diff(h.edges)) == pytest.approx(1.0)
