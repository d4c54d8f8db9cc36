"""Bayesian linear regression under R2-D2, Dirichlet-Laplace, Horseshoe and
Horseshoe+ shrinkage priors: samplers, marginal densities, Gibbs kernels,
simulation studies and diagnostics."""
from .density import (
    DensityCurve,
    density_curve,
    interquartile_range,
    iqr_calibrate,
    log_marginal,
    loglog_slope,
    marginal,
    prior_mass_near_zero,
    total_mass,
    upper_tail,
)
from .diagnostics import autocorrelation, diagnose_draws, effective_sample_size
from .errors import CalibrationError, NumericalFailure, ParameterDomainError
from .experiments import (
    SimulationConfig,
    SimulationReport,
    SplitConfig,
    auc_from_tstats,
    gen_setup1,
    gen_setup2,
    ordering_agreement,
    run_simulation,
    screen_by_marginal_correlation,
    sse_decompose,
    train_test_evaluate,
)
from .gibbs import Dataset, McmcConfig, PosteriorDraws, run_chain
from .priors import (
    DlParams,
    HsParams,
    HsPlusParams,
    R2d2Params,
    SigmaPrior,
    default_r2d2,
    resolve_prior,
)
from .rngdist import RngStream

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
