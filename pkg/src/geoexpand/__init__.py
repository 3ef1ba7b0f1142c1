"""Geostatistics with weight-space / function-space regression and
dimension expansion for non-stationary fields."""

from .exceptions import (
    ConditioningError,
    EmptyResultError,
    FitError,
    GeoExpandError,
    ParseError,
    UndefinedStatisticError,
    ValidationError,
)
from . import io
from .sample_model import (
    SampleSet,
    augment_dimensions,
    pairwise_distances,
    standardize_columns,
)
from .variogram import (
    BinnedVariogram,
    VariogramCloud,
    VariogramModel,
    bin_cloud,
    empirical_semivariance,
    exponential_variogram,
    fit_variogram,
    gaussian_variogram,
    model_to_covariance,
    morans_i,
)
from .regression import (
    BasisSpec,
    KernelParams,
    PredictiveDistribution,
    WeightPrior,
    apply_basis,
    equivalence_check,
    gp_predict,
    log_marginal_likelihood,
    mixed_fit_predict,
    optimize_hyperparams,
    rbf_kernel,
    weight_space_predict,
)
from .expansion import (
    Expansion,
    ExpansionConfig,
    expansion_gradient,
    expansion_objective,
    interpolate_latent,
    learn_expansion,
    stationarity_report,
)
from .synthetic import (
    FieldSpec,
    random_subsample,
    sample_stationary_field,
    sample_two_regime_field,
)

__version__ = "0.1.0"
