"""Fast Bayesian intensity estimation for point processes with a squared
Gaussian-process link, via a Laplace approximation in a truncated spectral
basis. Includes evidence-based model selection, exact evaluation metrics,
thinning-based simulation, and a kernel-smoothing baseline."""

from .basis import SpectralBasis, ThinPlateParams, build_cosine_basis
from .datasets import dataset_domain, load_dataset
from .domain import (
    BoxDomain,
    NormalizedPattern,
    PointPattern,
    bernoulli_split,
    load_point_pattern,
    normalize,
    standard_domain,
)
from .evidence import MarginalParts, SearchSpace, log_marginal, ml2_search
from .fit import FitOptions, FittedModel, fit_mode, load_model, save_model
from .kernels import (
    GaussianKernelParams,
    NystromConfig,
    equivalent_kernel,
    gaussian_kernel,
    nystrom_basis,
)
from .metrics import (
    Quadrature,
    expected_log_likelihood,
    integrate,
    l2_error,
    pp_kl_divergence,
    test_log_likelihood,
)
from .predict import (
    PredictiveDist,
    gamma_quantile,
    integrated_mean_intensity,
    intensity_posterior,
    mean_intensity,
    mean_intensity_fn,
    predict_grid,
    predictive_mean_f,
    predictive_var_f,
)
from .simulate import IntensityFn, make_toy_intensity, sample_gp_weights, sample_poisson_thinning
from .smoothing import KsModel, fit_ks, ks_intensity, loo_bandwidth

__version__ = "0.1.0"
