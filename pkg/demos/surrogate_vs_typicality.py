"""Compare the Ornstein-Uhlenbeck surrogate with Hilbert-space averages."""

import numpy as np

from twoband_ft import (OUParams, ft_ratio_test, gaussian_fit, ha_monte_carlo,
                        ha_product_analytic, simulate_entropy_sde, stream)
from twoband_ft.stochastic import productions_from_entropy
from twoband_ft.typicality import band_expectations

rate, dim, tau = 1e-3, 2000, 50.0
params = OUParams(rate, dim, tau, 1, a0=0.2, stream_seed=11)
sigma = productions_from_entropy(simulate_entropy_sde(params, n_paths=50_000), tau).ravel()
fit = gaussian_fit(sigma)
ratio = ft_ratio_test(sigma, tau)
print(f"surrogate: mean {fit.mu:.4g}, variance {fit.variance:.4g}, 2 mean / tau "
      f"{2 * fit.mu / tau:.4g}, FT slope {ratio.slope:.3f}")

for n_states in (50, 200):
    signature = np.diag(np.r_[np.ones(n_states // 2), -np.ones(n_states // 2)])
    est = ha_monte_carlo(lambda s: band_expectations(s) ** 2, 50_000, n_states, stream(5, 3))
    exact = ha_product_analytic(signature, signature)
    print(f"N = {n_states}: <A>^2 average {est.value:.5f} +- {est.std_error:.5f}, "
          f"exact {exact:.5f}")
