"""Euler capital allocation on scenario samples.

Risk measures (standard deviation, VaR, ES), Euler and marginal risk
contributions, diversification indices, CDO tranche loss components and
non-linear factor risk impact, plus a two-factor Vasicek example model.
"""

from eulercap.errors import DegeneracyError, ValidationError
from eulercap.scenarios import (
    Convention,
    PortfolioWeights,
    ScenarioMatrix,
    as_weights,
    aggregate,
    load_scenarios,
    losses_to_profit_loss,
)
from eulercap.measures import (
    MeasureKind,
    RiskMeasureSpec,
    chebychev_c,
    expected_shortfall,
    homogeneity_check,
    quantile,
    std_dev_measure,
    unexpected_loss,
    value_at_risk,
)
from eulercap.kernel import (
    KernelConfig,
    nadaraya_watson,
    nadaraya_watson_se,
    rp_density,
    silverman_bandwidth,
    silverman_rule,
    smoothed_cdf,
    smoothed_quantile,
    smoothing_noise_mean,
)
from eulercap.allocation import (
    ContributionReport,
    Method,
    ProbeVerdict,
    RoracReport,
    diversification_index,
    euler_contrib,
    euler_es_contrib,
    euler_stddev_contrib,
    euler_var_contrib_kernel,
    euler_var_contrib_linear,
    gradient_check,
    marginal_contrib,
    marginal_diversification_index,
    normalized_marginal_contrib,
    rorac,
    rorac_compatibility_probe,
    standalone_risks,
)
from eulercap.vasicek import (
    FactorSample,
    VasicekParams,
    conditional_el_given_factor,
    portfolio_loss,
    simulate,
    vasicek_density,
    vasicek_loss,
    vasicek_quantile,
)
from eulercap.tranches import (
    ELMultiple,
    Extreme,
    QuantileLevel,
    TrancheComponentMatrix,
    TrancheSpec,
    expected_capped_loss,
    extreme_check,
    f_derivative_general,
    f_derivative_quantile,
    realize_levels,
    tranche_loss_components,
    tranche_losses,
    tranche_ratio_se,
)
from eulercap.impact import (
    ConditionalELSample,
    RiskImpactReport,
    conditional_el_sample,
    quasi_ri,
    quasi_ri_es,
    risk_impact,
    risk_impact_es,
    risk_impact_sigma,
    risk_impact_var,
)

__version__ = "0.1.0"

__all__ = [
    "ConditionalELSample",
    "ContributionReport",
    "Convention",
    "DegeneracyError",
    "ELMultiple",
    "Extreme",
    "FactorSample",
    "KernelConfig",
    "MeasureKind",
    "Method",
    "PortfolioWeights",
    "ProbeVerdict",
    "QuantileLevel",
    "RiskImpactReport",
    "RiskMeasureSpec",
    "RoracReport",
    "ScenarioMatrix",
    "TrancheComponentMatrix",
    "TrancheSpec",
    "ValidationError",
    "VasicekParams",
    "aggregate",
    "as_weights",
    "chebychev_c",
    "conditional_el_given_factor",
    "conditional_el_sample",
    "diversification_index",
    "euler_contrib",
    "euler_es_contrib",
    "euler_stddev_contrib",
    "euler_var_contrib_kernel",
    "euler_var_contrib_linear",
    "expected_capped_loss",
    "expected_shortfall",
    "extreme_check",
    "f_derivative_general",
    "f_derivative_quantile",
    "gradient_check",
    "homogeneity_check",
    "load_scenarios",
    "losses_to_profit_loss",
    "marginal_contrib",
    "marginal_diversification_index",
    "nadaraya_watson",
    "nadaraya_watson_se",
    "normalized_marginal_contrib",
    "portfolio_loss",
    "quantile",
    "quasi_ri",
    "quasi_ri_es",
    "realize_levels",
    "risk_impact",
    "risk_impact_es",
    "risk_impact_sigma",
    "risk_impact_var",
    "rorac",
    "rorac_compatibility_probe",
    "rp_density",
    "silverman_bandwidth",
    "silverman_rule",
    "simulate",
    "smoothed_cdf",
    "smoothed_quantile",
    "smoothing_noise_mean",
    "standalone_risks",
    "std_dev_measure",
    "tranche_loss_components",
    "tranche_losses",
    "tranche_ratio_se",
    "unexpected_loss",
    "value_at_risk",
    "vasicek_density",
    "vasicek_loss",
    "vasicek_quantile",
    "__version__",
]
