"""Enums and constants used across the toolkit."""
from enum import Enum
from typing import Dict, List, Set


class OutcomeKind(str, Enum):
    """Measurement scale of the outcome."""
    CONTINUOUS = "continuous"
    COUNT = "count"
    BINARY = "binary"

    @property
    def is_discrete(self) -> bool:
        return self in (OutcomeKind.COUNT, OutcomeKind.BINARY)


class Layout(str, Enum):
    """Accepted CSV layouts."""
    WIDE = "wide"
    LONG = "long"
    CONTINGENCY = "contingency"


class EstimatorMethod(str, Enum):
    """Identification strategy + estimator form."""
    DID_MOMENT = "did_moment"
    LDV_CONTROL_REG = "ldv_control_reg"
    LDV_CONTROL_REG_QUADRATIC = "ldv_control_reg_quadratic"
    LDV_POOLED_REG = "ldv_pooled_reg"
    LDV_NONPARAMETRIC = "ldv_nonparametric"
    IPW_DID = "ipw_did"
    IPW_LDV = "ipw_ldv"


# Methods that need a discrete lagged outcome
DISCRETE_ONLY_METHODS: Set[EstimatorMethod] = {EstimatorMethod.LDV_NONPARAMETRIC}

# CLI short names
METHOD_ALIASES: Dict[str, EstimatorMethod] = {
    "did": EstimatorMethod.DID_MOMENT,
    "ldv": EstimatorMethod.LDV_CONTROL_REG,
    "ldv_quadratic": EstimatorMethod.LDV_CONTROL_REG_QUADRATIC,
    "ldv_pooled": EstimatorMethod.LDV_POOLED_REG,
    "ldv_np": EstimatorMethod.LDV_NONPARAMETRIC,
    "ipw_did": EstimatorMethod.IPW_DID,
    "ipw_ldv": EstimatorMethod.IPW_LDV,
}


class LdvVariant(str, Enum):
    """Regression forms of lagged-dependent-variable adjustment."""
    CONTROL_ONLY = "control_only"
    CONTROL_ONLY_QUADRATIC = "control_only_quadratic"
    POOLED = "pooled"


LDV_VARIANT_METHODS: Dict[LdvVariant, EstimatorMethod] = {
    LdvVariant.CONTROL_ONLY: EstimatorMethod.LDV_CONTROL_REG,
    LdvVariant.CONTROL_ONLY_QUADRATIC: EstimatorMethod.LDV_CONTROL_REG_QUADRATIC,
    LdvVariant.POOLED: EstimatorMethod.LDV_POOLED_REG,
}


class PropensityModel(str, Enum):
    """Propensity score model e(Y_t) for the weighting LDV estimator."""
    SATURATED_DISCRETE = "saturated_discrete"
    LOGISTIC = "logistic"


class StationarityMethod(str, Enum):
    """How the stationarity condition was assessed."""
    REGRESSION_SLOPE = "regression_slope"
    DISCRETE_DIFFERENCES = "discrete_differences"
    BINARY_AUTO = "binary_auto"


class DominanceDirection(str, Enum):
    """Stochastic monotonicity direction of the lagged-outcome CDFs."""
    A = "a"  # treated CDF above control: treated have smaller lagged outcomes
    B = "b"  # treated CDF below control
    NONE = "none"


class BracketOrder(str, Enum):
    """Ordering of the DID and LDV effect estimates."""
    DID_GE_LDV = "did_ge_ldv"
    DID_LE_LDV = "did_le_ldv"
    INDETERMINATE = "indeterminate"


class Quantity(str, Enum):
    """Estimate component a bootstrap target refers to."""
    TAU = "tau"
    GAMMA = "gamma"


class DgpFamily(str, Enum):
    """Simulated data generating processes."""
    IGNORABILITY_AR = "ignorability_ar"
    PARALLEL_TRENDS_FE = "parallel_trends_fe"


class ReportFormat(str, Enum):
    """Report output formats."""
    JSON = "json"
    MARKDOWN = "markdown"


class Subcommand(str, Enum):
    """CLI subcommands."""
    ESTIMATE = "estimate"
    DIAGNOSE = "diagnose"
    BRACKET = "bracket"
    BOOTSTRAP = "bootstrap"
    SIMULATE = "simulate"


class PayloadType(str, Enum):
    """Report payload identifiers."""
    ESTIMATES = "estimates"
    DIAGNOSTICS = "diagnostics"
    BRACKET = "bracket"
    INTERVALS = "intervals"
    MONTE_CARLO = "monte_carlo"


# Column headers of the accepted CSV layouts (optional trailing column last)
WIDE_COLUMNS: List[str] = ["unit", "group", "y_pre", "y_post"]
LONG_COLUMNS: List[str] = ["unit", "period", "group", "y"]
CONTINGENCY_COLUMNS: List[str] = ["group", "y_pre", "y_post", "count"]
STRATUM_COLUMN: str = "stratum"

# Plot-point exports
CDF_POINT_COLUMNS: List[str] = ["y", "cdf_treated", "cdf_control"]
CONDITIONAL_MEAN_COLUMNS: List[str] = ["y", "n_control", "mean_control", "n_treated", "fit_linear", "fit_quadratic"]

REPORT_SCHEMA_VERSION: str = "1.0"
