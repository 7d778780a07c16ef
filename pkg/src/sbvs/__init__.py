"""Two-step Bayesian variable selection for sparse linear models with p >> n."""

from .experiments import (CVResult, ExperimentCell, ExperimentGrid, loocv_median_square_error,
                          run_grid, run_replications)
from .gibbs import GibbsConfig, GibbsResult, inclusion_log_odds, run_gibbs
from .marginal import (Dataset, DegenerateResponseError, ModelWorkspace, PriorConfig,
                       add_covariate, init_workspace, log_posterior_weight,
                       posterior_mean_coefficients, remove_covariate, swap_covariate)
from .oracle import EnumerationResult, dense_log_weight, enumerate_posteriors
from .screening import ScreeningConfig, ScreeningResult, evaluation_pass, run_screening
from .selector import SelectionResult, two_step_select
from .simgen import (GeneratedTruth, ScenarioSpec, generate_dataset, sample_covariates,
                     sample_errors)

__version__ = "0.1.0"
