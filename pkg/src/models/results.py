"""Estimator, diagnostic, inference and simulation result models."""
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional, Tuple

from .enums import (
    BracketOrder, DgpFamily, DominanceDirection, EstimatorMethod, PropensityModel,
    Quantity, StationarityMethod,
)


@dataclass
class LeastSquaresFit:
    """Ordinary least squares solution of one design."""
    coefficients: List[float]
    residual_sum_of_squares: float
    regressors: List[str]

    def coefficient(self, name: str) -> float:
        return self.coefficients[self.regressors.index(name)]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class EstimateResult:
    """One estimator run: μ1, μ0 and the additive (τ) and ratio (γ) effects on the treated."""
    method: EstimatorMethod
    mu1: float
    mu0: float
    tau: float
    gamma: Optional[float]
    n_treated: int
    n_control: int
    coefficients: List[Tuple[str, float]] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def coefficient(self, name: str) -> Optional[float]:
        for key, value in self.coefficients:
            if key == name:
                return value
        return None

    def value(self, quantity: Quantity) -> Optional[float]:
        if quantity == Quantity.TAU:
            return self.tau
        return self.gamma

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "mu1": self.mu1,
            "mu0": self.mu0,
            "tau": self.tau,
            "gamma": self.gamma,
            "n_treated": self.n_treated,
            "n_control": self.n_control,
            "coefficients": {k: v for k, v in self.coefficients},
            "details": self.details,
            "warnings": list(self.warnings),
        }


# ============================================================================
# Diagnostics
# ============================================================================

@dataclass
class StationarityReport:
    """Evidence on whether E(Y_post | G=0, Y_pre=y) has slope below one."""
    method: StationarityMethod
    statistics: List[Tuple[float, float]]   # (location, slope)
    satisfied: bool
    margin: float                           # 1 - max slope
    unevaluable: List[float] = field(default_factory=list)
    quadratic_slopes: List[Tuple[float, float]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "method": self.method.value,
            "statistics": [{"location": loc, "slope": s} for loc, s in self.statistics],
            "satisfied": self.satisfied,
            "margin": self.margin,
            "unevaluable": list(self.unevaluable),
            "quadratic_slopes": [{"location": loc, "slope": s} for loc, s in self.quadratic_slopes],
            "warnings": list(self.warnings),
        }


@dataclass
class MonotonicityReport:
    """Empirical lagged-outcome CDFs of both groups on the pooled support."""
    points: List[float]
    cdf_treated: List[float]
    cdf_control: List[float]
    direction: DominanceDirection
    max_violation: float
    tolerance: float = 0.0
    degenerate_equality: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self) | {"direction": self.direction.value}


@dataclass
class BracketReport:
    """Ordering predicted from the conditions next to the observed ordering."""
    delta_table: List[Tuple[float, float]]
    delta_description: str
    lemma1_gap: float
    predicted_order: BracketOrder
    did_method: EstimatorMethod
    ldv_method: EstimatorMethod
    tau_did: float
    tau_ldv: float
    gamma_did: Optional[float]
    gamma_ldv: Optional[float]
    mu0_did: float
    mu0_ldv: float
    observed_order: BracketOrder
    agreement: Optional[bool]               # None when the prediction is indeterminate

    def to_dict(self) -> Dict[str, Any]:
        return {
            "delta_table": [{"y": y, "delta": d} for y, d in self.delta_table],
            "delta_description": self.delta_description,
            "lemma1_gap": self.lemma1_gap,
            "predicted_order": self.predicted_order.value,
            "observed": {
                "did_method": self.did_method.value,
                "ldv_method": self.ldv_method.value,
                "tau_did": self.tau_did,
                "tau_ldv": self.tau_ldv,
                "gamma_did": self.gamma_did,
                "gamma_ldv": self.gamma_ldv,
                "mu0_did": self.mu0_did,
                "mu0_ldv": self.mu0_ldv,
                "order": self.observed_order.value,
            },
            "agreement": self.agreement,
        }


@dataclass
class LinearBracket:
    """Linear-model bracket: τ̂_DID − τ̂_LDV = (β̂ − 1)(Ȳ1,t − Ȳ0,t), likewise for the pooled fit."""
    pre_mean_gap: float                     # Ȳ1,t − Ȳ0,t
    beta: float
    beta_prime: float
    tau_did: float
    tau_ldv: float
    tau_ldv_pooled: float
    order_ldv: BracketOrder
    order_ldv_pooled: BracketOrder

    @property
    def predicted_gap(self) -> float:
        return (self.beta - 1.0) * self.pre_mean_gap

    @property
    def predicted_gap_pooled(self) -> float:
        return (self.beta_prime - 1.0) * self.pre_mean_gap

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self) | {
            "order_ldv": self.order_ldv.value,
            "order_ldv_pooled": self.order_ldv_pooled.value,
            "predicted_gap": self.predicted_gap,
            "predicted_gap_pooled": self.predicted_gap_pooled,
        }


# ============================================================================
# Inference
# ============================================================================

@dataclass(frozen=True)
class BootstrapSpec:
    """Nonparametric bootstrap settings."""
    replicates: int = 2000
    seed: int = 0
    level: float = 0.95
    stratify_by_group: bool = True

    def __post_init__(self) -> None:
        if self.replicates <= 0:
            raise ValueError(f"replicates must be positive, got {self.replicates}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")


@dataclass(frozen=True)
class BootstrapTarget:
    """A quantity of one estimator, or the difference between two estimators."""
    quantity: Quantity
    method: EstimatorMethod
    minus: Optional[EstimatorMethod] = None
    propensity: PropensityModel = PropensityModel.SATURATED_DISCRETE

    @property
    def name(self) -> str:
        label = f"{self.quantity.value}[{self.method.value}]"
        if self.minus is not None:
            label += f"-{self.quantity.value}[{self.minus.value}]"
        return label

    @property
    def methods(self) -> Tuple[EstimatorMethod, ...]:
        return (self.method,) if self.minus is None else (self.method, self.minus)


@dataclass
class IntervalEstimate:
    """Percentile bootstrap interval for one target."""
    target: str
    point: float
    lower: float
    upper: float
    std_error: float
    significant_at_level: bool
    level: float
    replicates_used: int
    replicates_dropped: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class ComparisonReport:
    """All applicable estimators, their differences and the bracket in one artifact."""
    dataset: Dict[str, Any]
    estimates: Dict[EstimatorMethod, EstimateResult]
    unavailable: Dict[EstimatorMethod, str]
    stationarity: Optional[StationarityReport]
    monotonicity: Optional[MonotonicityReport]
    bracket: Optional[BracketReport]
    linear_bracket: Optional[LinearBracket] = None
    intervals: List[IntervalEstimate] = field(default_factory=list)
    conditional_means: List[Dict[str, Any]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset,
            "estimates": {m.value: r.to_dict() for m, r in self.estimates.items()},
            "unavailable": {m.value: reason for m, reason in self.unavailable.items()},
            "stationarity": self.stationarity.to_dict() if self.stationarity else None,
            "monotonicity": self.monotonicity.to_dict() if self.monotonicity else None,
            "bracket": self.bracket.to_dict() if self.bracket else None,
            "linear_bracket": self.linear_bracket.to_dict() if self.linear_bracket else None,
            "intervals": [i.to_dict() for i in self.intervals],
            "conditional_means": list(self.conditional_means),
            "warnings": list(self.warnings),
        }


# ============================================================================
# Simulation
# ============================================================================

@dataclass(frozen=True)
class DgpSpec:
    """Parameters of a simulated two-period data generating process."""
    family: DgpFamily
    n: int = 2000
    tau_true: float = 1.0
    beta: float = 0.5               # lag coefficient (ignorability_ar)
    selection: float = 0.0          # logistic slope of G on standardized Y_t or alpha_i
    noise_sd: float = 1.0
    baseline_mean: float = 0.0
    baseline_sd: float = 1.0
    intercept: float = 0.0          # alpha in ignorability_ar
    time_shift: float = 0.0         # lambda_{t+1} - lambda_t in parallel_trends_fe

    def __post_init__(self) -> None:
        if self.n < 4:
            raise ValueError(f"n must be at least 4, got {self.n}")
        if self.noise_sd <= 0:
            raise ValueError(f"noise_sd must be positive, got {self.noise_sd}")
        if self.baseline_sd <= 0:
            raise ValueError(f"baseline_sd must be positive, got {self.baseline_sd}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self) | {"family": self.family.value}


@dataclass
class EstimatorMonteCarlo:
    """Replication statistics of one estimator."""
    mean: float
    mean_bias: float
    sd: float
    mc_standard_error: float
    replications_ok: int
    replications_failed: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class MonteCarloSummary:
    """Aggregated Monte Carlo study."""
    spec: DgpSpec
    replications: int
    seed: int
    estimators: Dict[EstimatorMethod, EstimatorMonteCarlo]
    did_ge_ldv_frequency: float
    stationarity_pass_rate: float
    monotonicity_a_rate: float
    monotonicity_b_rate: float
    premises_pass_rate: float
    ordering_violations: int
    replicate_rows: List[Dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "replications": self.replications,
            "seed": self.seed,
            "estimators": {m.value: s.to_dict() for m, s in self.estimators.items()},
            "did_ge_ldv_frequency": self.did_ge_ldv_frequency,
            "stationarity_pass_rate": self.stationarity_pass_rate,
            "monotonicity_a_rate": self.monotonicity_a_rate,
            "monotonicity_b_rate": self.monotonicity_b_rate,
            "premises_pass_rate": self.premises_pass_rate,
            "ordering_violations": self.ordering_violations,
        }
