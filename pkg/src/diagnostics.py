"""
Empirical checks of the bracketing conditions.

- Stationarity: E(Y_t+1 | G=0, Y_t=y) grows with slope below one
- Stochastic monotonicity: ordering of the groups' lagged-outcome CDFs
- Gap decomposition of μ̂0_LDV − μ̂0_DID and the resulting bracket prediction
"""
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.config import config
from src.data import group_level_table
from src.errors import EmptyGroupError, OverlapError, SingularDesignError
from src.estimators import did_moment, fit_least_squares, ldv_regression
from src.logger import logger
from src.models import (
    BracketOrder, BracketReport, DominanceDirection, EstimateResult, LdvVariant,
    LinearBracket, MonotonicityReport, OutcomeKind, PanelDataset, StationarityMethod,
    StationarityReport,
)

# Orderings closer than this count as ties
_ORDER_TOLERANCE = 1e-12
_QUADRATIC_GRID = np.linspace(0.0, 1.0, 11)


# ============================================================================
# Stationarity
# ============================================================================

def _control_fit(ds: PanelDataset, quadratic: bool) -> np.ndarray:
    y = ds.y_pre[ds.control]
    columns = [np.ones_like(y), y] + ([y ** 2] if quadratic else [])
    names = ["intercept", "y_pre"] + (["y_pre_sq"] if quadratic else [])
    if np.unique(y).size < len(names):
        raise SingularDesignError(names)
    fit = fit_least_squares(np.column_stack(columns), ds.y_post[ds.control], names)
    return np.asarray(fit.coefficients)


def quadratic_slope_check(ds: PanelDataset) -> List[Tuple[float, float]]:
    """
    Derivative β̂1 + 2β̂2·y of the quadratic control fit at the deciles of control y_pre.

    Raises:
        SingularDesignError: fewer than three distinct control y_pre values
    """
    _, b1, b2 = _control_fit(ds, quadratic=True)
    grid = np.quantile(ds.y_pre[ds.control], _QUADRATIC_GRID)
    return [(float(y), float(b1 + 2.0 * b2 * y)) for y in grid]


def check_stationarity(ds: PanelDataset) -> StationarityReport:
    """
    Assess whether the control conditional mean of Y_t+1 has slope below one in Y_t.

    binary:     always satisfied (bounded conditional means)
    count:      difference quotients of the empirical conditional means between
                consecutive control-supported levels
    continuous: slope of the linear control regression, with quadratic-fit
                derivatives reported alongside
    """
    if ds.n_control == 0:
        raise EmptyGroupError("stationarity: control group empty")

    if ds.outcome_kind == OutcomeKind.BINARY:
        return StationarityReport(
            method=StationarityMethod.BINARY_AUTO, statistics=[], satisfied=True, margin=1.0,
        )

    warnings: List[str] = []
    if ds.outcome_kind == OutcomeKind.COUNT:
        method = StationarityMethod.DISCRETE_DIFFERENCES
        table = group_level_table(ds)
        supported = table["n_control"] > 0
        levels = table["levels"][supported]
        means = table["sum_post_control"][supported] / table["n_control"][supported]
        slopes = np.diff(means) / np.diff(levels)
        statistics = [(float(y), float(s)) for y, s in zip(levels[:-1], slopes)]
        unevaluable = [float(y) for y in table["levels"][~supported]]
        if unevaluable:
            warnings.append(f"stationarity: no control units at y_pre level(s) {unevaluable}; differences bridge them")
        if len(levels) < 2:
            warnings.append("stationarity: fewer than two control-supported levels; nothing to compare")
        quadratic_slopes: List[Tuple[float, float]] = []
    else:
        method = StationarityMethod.REGRESSION_SLOPE
        _, beta = _control_fit(ds, quadratic=False)
        statistics = [(float(np.mean(ds.y_pre[ds.control])), float(beta))]
        unevaluable = []
        try:
            quadratic_slopes = quadratic_slope_check(ds)
        except SingularDesignError as e:
            quadratic_slopes = []
            warnings.append(f"stationarity: quadratic slopes unavailable ({e})")

    for message in warnings:
        logger.warning(f"⚠️ {message}")

    max_slope = max((s for _, s in statistics), default=None)
    return StationarityReport(
        method=method,
        statistics=statistics,
        satisfied=max_slope is None or max_slope < 1.0,
        margin=1.0 - max_slope if max_slope is not None else 1.0,
        unevaluable=unevaluable,
        quadratic_slopes=quadratic_slopes,
        warnings=warnings,
    )


# ============================================================================
# Stochastic monotonicity
# ============================================================================

def _ecdf(sample: np.ndarray, points: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.sort(sample), points, side="right") / sample.size


def check_monotonicity(ds: PanelDataset, tolerance: float = config.DOMINANCE_TOLERANCE) -> MonotonicityReport:
    """
    Compare the empirical y_pre CDFs of the groups on the pooled support.

    Direction a: treated CDF ≥ control CDF − tolerance everywhere (treated have smaller
    lagged outcomes); b is the mirror image; none when the curves cross by more than
    the tolerance. Identical curves report a with `degenerate_equality`.
    """
    if ds.n_treated == 0 or ds.n_control == 0:
        raise EmptyGroupError("monotonicity: both groups must be nonempty")

    points = np.unique(ds.y_pre)
    cdf_treated = _ecdf(ds.y_pre[ds.treated], points)
    cdf_control = _ecdf(ds.y_pre[ds.control], points)
    difference = cdf_treated - cdf_control
    violation_a = max(0.0, float(np.max(-difference)))
    violation_b = max(0.0, float(np.max(difference)))
    holds_a = violation_a <= tolerance
    holds_b = violation_b <= tolerance

    if holds_a:
        direction, max_violation = DominanceDirection.A, violation_a
    elif holds_b:
        direction, max_violation = DominanceDirection.B, violation_b
    else:
        direction, max_violation = DominanceDirection.NONE, min(violation_a, violation_b)

    return MonotonicityReport(
        points=[float(y) for y in points],
        cdf_treated=[float(c) for c in cdf_treated],
        cdf_control=[float(c) for c in cdf_control],
        direction=direction,
        max_violation=max_violation,
        tolerance=tolerance,
        degenerate_equality=bool(np.all(difference == 0.0)),
    )


def cdf_points(report: MonotonicityReport) -> List[Dict[str, float]]:
    """Plot points (y, cdf_treated, cdf_control)."""
    return [
        {"y": y, "cdf_treated": t, "cdf_control": c}
        for y, t, c in zip(report.points, report.cdf_treated, report.cdf_control)
    ]


# ============================================================================
# Gap decomposition
# ============================================================================

def lemma1_gap(ds: PanelDataset) -> Tuple[List[Tuple[float, float]], float]:
    """
    Δ(y) = E(Y_t+1 | G=0, Y_t=y) − y and gap = Σ Δ(y)·p(y|G=1) − Σ Δ(y)·p(y|G=0).

    Discrete outcomes use empirical conditional means, so the gap equals
    μ̂0 of the nonparametric LDV estimator minus μ̂0 of the moment DID estimator.
    Continuous outcomes use the fitted linear Δ(y) = α̂ + (β̂ − 1)·y, evaluated at the
    two group means of y_pre.

    Raises:
        OverlapError: a treated y_pre level has no control units (discrete case)
    """
    if ds.n_treated == 0 or ds.n_control == 0:
        raise EmptyGroupError("lemma1_gap: both groups must be nonempty")

    if not ds.outcome_kind.is_discrete:
        alpha, beta = _control_fit(ds, quadratic=False)
        mean_control = float(np.mean(ds.y_pre[ds.control]))
        mean_treated = float(np.mean(ds.y_pre[ds.treated]))
        delta_table = [(y, float(alpha + (beta - 1.0) * y)) for y in (mean_control, mean_treated)]
        return delta_table, float((beta - 1.0) * (mean_treated - mean_control))

    table = group_level_table(ds)
    unsupported = (table["n_treated"] > 0) & (table["n_control"] == 0)
    if np.any(unsupported):
        levels = [float(y) for y in table["levels"][unsupported]]
        raise OverlapError(f"lemma1_gap: treated y_pre level(s) without control units: {levels}", levels)

    supported = table["n_control"] > 0
    levels = table["levels"][supported]
    delta = table["sum_post_control"][supported] / table["n_control"][supported] - levels
    p_treated = table["n_treated"][supported] / ds.n_treated
    p_control = table["n_control"][supported] / ds.n_control
    gap = float(np.sum(delta * p_treated) - np.sum(delta * p_control))
    return [(float(y), float(d)) for y, d in zip(levels, delta)], gap


def delta_description(ds: PanelDataset) -> str:
    if ds.outcome_kind.is_discrete:
        return "empirical: mean control y_post at each y_pre level minus the level"
    return "fitted linear: alpha + (beta - 1) * y from the control regression, at the group means of y_pre"


# ============================================================================
# Bracket prediction
# ============================================================================

def _observed_order(did: EstimateResult, ldv: EstimateResult) -> BracketOrder:
    return BracketOrder.DID_GE_LDV if did.tau >= ldv.tau else BracketOrder.DID_LE_LDV


def _agrees(predicted: BracketOrder, did: EstimateResult, ldv: EstimateResult) -> Optional[bool]:
    if predicted == BracketOrder.INDETERMINATE:
        return None
    if predicted == BracketOrder.DID_GE_LDV:
        return did.tau >= ldv.tau - _ORDER_TOLERANCE
    return did.tau <= ldv.tau + _ORDER_TOLERANCE


def predict_bracket(
    stationarity: StationarityReport,
    monotonicity: MonotonicityReport,
    did: EstimateResult,
    ldv: EstimateResult,
    delta_table: Optional[List[Tuple[float, float]]] = None,
    gap: Optional[float] = None,
    delta_description: str = "",
) -> BracketReport:
    """
    Map the condition checks onto a predicted ordering and compare with the estimates.

    Stationarity with direction a predicts τ̂_DID ≥ τ̂_LDV; with direction b the
    reverse; anything else is indeterminate. τ and γ share the ordering because both
    estimators use the same μ̂1.
    """
    if stationarity.satisfied and monotonicity.direction == DominanceDirection.A:
        predicted = BracketOrder.DID_GE_LDV
    elif stationarity.satisfied and monotonicity.direction == DominanceDirection.B:
        predicted = BracketOrder.DID_LE_LDV
    else:
        predicted = BracketOrder.INDETERMINATE

    report = BracketReport(
        delta_table=list(delta_table or []),
        delta_description=delta_description,
        lemma1_gap=gap if gap is not None else ldv.mu0 - did.mu0,
        predicted_order=predicted,
        did_method=did.method,
        ldv_method=ldv.method,
        tau_did=did.tau,
        tau_ldv=ldv.tau,
        gamma_did=did.gamma,
        gamma_ldv=ldv.gamma,
        mu0_did=did.mu0,
        mu0_ldv=ldv.mu0,
        observed_order=_observed_order(did, ldv),
        agreement=_agrees(predicted, did, ldv),
    )
    if report.agreement is False:
        logger.warning(f"⚠️ Bracket prediction {predicted.value} not matched by estimates ({report.observed_order.value})")
    return report


def bracket(
    ds: PanelDataset,
    did: EstimateResult,
    ldv: EstimateResult,
    tolerance: float = config.DOMINANCE_TOLERANCE,
) -> Tuple[StationarityReport, MonotonicityReport, BracketReport]:
    """Run both condition checks and the gap decomposition, then predict."""
    stationarity = check_stationarity(ds)
    monotonicity = check_monotonicity(ds, tolerance)
    delta_table, gap = lemma1_gap(ds)
    report = predict_bracket(
        stationarity, monotonicity, did, ldv,
        delta_table=delta_table, gap=gap, delta_description=delta_description(ds),
    )
    return stationarity, monotonicity, report


def linear_bracket(ds: PanelDataset) -> LinearBracket:
    """
    Bracket implied by the linear models.

    τ̂_DID − τ̂_LDV = (β̂ − 1)(Ȳ1,t − Ȳ0,t) for the control-only fit and likewise with β̂′
    for the pooled fit, so β̂, β̂′ < 1 with treated units starting lower predicts
    τ̂_DID ≥ τ̂_LDV.
    """
    did = did_moment(ds)
    control = ldv_regression(ds, LdvVariant.CONTROL_ONLY)
    pooled = ldv_regression(ds, LdvVariant.POOLED)
    pre_mean_gap = float(np.mean(ds.y_pre[ds.treated]) - np.mean(ds.y_pre[ds.control]))
    return LinearBracket(
        pre_mean_gap=pre_mean_gap,
        beta=control.coefficient("beta"),
        beta_prime=pooled.coefficient("beta_prime"),
        tau_did=did.tau,
        tau_ldv=control.tau,
        tau_ldv_pooled=pooled.tau,
        order_ldv=_observed_order(did, control),
        order_ldv_pooled=_observed_order(did, pooled),
    )


# ============================================================================
# Plot points
# ============================================================================

def conditional_mean_table(ds: PanelDataset) -> List[Dict[str, Any]]:
    """
    Rows (y, n_control, mean_control, n_treated, fit_linear, fit_quadratic) over the
    pooled y_pre support.

    mean_control is the empirical control mean of y_post for discrete outcomes (None
    where the level has no control units, and for continuous outcomes). Fits are None
    when the control design cannot support them.
    """
    table = group_level_table(ds)
    levels = table["levels"]
    fits: Dict[str, Optional[np.ndarray]] = {}
    for name, quadratic in (("fit_linear", False), ("fit_quadratic", True)):
        try:
            coefficients = _control_fit(ds, quadratic)
        except SingularDesignError:
            fits[name] = None
            continue
        powers = np.column_stack([levels ** k for k in range(len(coefficients))])
        fits[name] = powers @ coefficients

    rows = []
    for k, y in enumerate(levels):
        n_control = int(table["n_control"][k])
        mean_control = None
        if ds.outcome_kind.is_discrete and n_control > 0:
            mean_control = float(table["sum_post_control"][k] / n_control)
        rows.append({
            "y": float(y),
            "n_control": n_control,
            "mean_control": mean_control,
            "n_treated": int(table["n_treated"][k]),
            "fit_linear": float(fits["fit_linear"][k]) if fits["fit_linear"] is not None else None,
            "fit_quadratic": float(fits["fit_quadratic"][k]) if fits["fit_quadratic"] is not None else None,
        })
    return rows
