"""Bayesian estimation of extreme quantiles and bivariate extreme quantile regions."""

from .dependence import (
    BetaCoefficients,
    EtaCoefficients,
    angular_density_eval,
    beta_to_eta,
    eta_to_beta,
    pickands_d1,
    pickands_d2,
    pickands_eval,
)
from .likelihoods import (
    BivariateSample,
    DependenceParams,
    bivariate_censored_loglik,
    univariate_censored_loglik,
)
from .margins import (
    CensoredSample,
    GevParams,
    MarginalModel,
    extreme_quantile,
    gev_cdf_power,
    gev_tail_logdensity,
    marginal_transform,
    select_threshold,
)
from .regions import (
    QuantileTarget,
    RegionCurve,
    angular_basic_density,
    basic_set_boundary,
    nu_S,
    quantile_region,
    summarize_posterior_quantiles,
    summarize_posterior_regions,
)
from .samplers import (
    ChainConfig,
    PosteriorChain,
    run_bivariate_chain,
    run_univariate_chain,
)
from .testbeds import make_testbed

__version__ = "0.1.0"
