"""Fluctuation statistics of entropy production in a closed two-band quantum system."""

from .analysis import (FitReport, FTRatioResult, ProductionSet, SegmentPlan,
                       collect_entropy_productions, collect_increments, correlation_K,
                       ft_ratio_test, gaussian_fit, normalized_productions, sigma_vs_a_sweep)
from .entropy import (entropy_deficit, entropy_derivative, entropy_exact, entropy_production,
                      entropy_quadratic, mean_production)
from .errors import (ConfigError, InsufficientDataError, InvalidSpecError,
                     NumericalIntegrityError, PathIntegrityError, RangeError)
from .model import (HamiltonianRealization, ModelSpec, RegimeReport, build_hamiltonian,
                    correlation_time, relaxation_rate, validate_regime)
from .propagator import (PureState, SpectralCache, SpectralModel, Trajectory,
                         TrajectoryEnsemble, diagonalize, evolve, evolve_ensemble,
                         expectation, trace_correlation, trajectory)
from .states import StateSpec, ensemble_amplitudes, sample_fixed_a, sample_haar, stream
from .stochastic import OUParams, simulate_entropy_sde, simulate_ou_a
from .typicality import (HAEstimate, ha_increment_variance, ha_increment_variance_exact,
                         ha_monte_carlo, ha_product_analytic)

__version__ = "0.1.0"
