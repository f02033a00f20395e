"""
Nonparametric bootstrap and the estimator comparison report.

Replicate b draws from its own generator seeded by SeedSequence([seed, b]), so
results do not depend on how replicates are scheduled across workers.
"""
from typing import Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from src import diagnostics
from src.config import config
from src.errors import EstimationError, InferenceError, UnstableResamplingError
from src.estimators import estimate
from src.logger import logger
from src.models import (
    BootstrapSpec, BootstrapTarget, ComparisonReport, DISCRETE_ONLY_METHODS, EstimateResult, EstimatorMethod,
    IntervalEstimate, PanelDataset, PropensityModel, Quantity,
)

MIN_INTERVAL_REPLICATES = 100


# ============================================================================
# Bootstrap
# ============================================================================

def _resample_indices(ds: PanelDataset, rng: np.random.Generator, stratify_by_group: bool) -> np.ndarray:
    if not stratify_by_group:
        return rng.integers(0, ds.n, size=ds.n)
    treated = np.flatnonzero(ds.treated)
    control = np.flatnonzero(ds.control)
    return np.concatenate([
        treated[rng.integers(0, treated.size, size=treated.size)],
        control[rng.integers(0, control.size, size=control.size)],
    ])


def _target_values(ds: PanelDataset, targets: Sequence[BootstrapTarget]) -> List[Optional[float]]:
    """Value of every target on one dataset; None where a target cannot be computed."""
    cache: Dict[tuple, Optional[EstimateResult]] = {}

    def result(method: EstimatorMethod, propensity: PropensityModel) -> Optional[EstimateResult]:
        key = (method, propensity)
        if key not in cache:
            try:
                cache[key] = estimate(ds, method, propensity)
            except EstimationError:
                cache[key] = None
        return cache[key]

    values: List[Optional[float]] = []
    for target in targets:
        parts = [result(m, target.propensity) for m in target.methods]
        numbers = [p.value(target.quantity) if p is not None else None for p in parts]
        if any(v is None for v in numbers):
            values.append(None)
        elif len(numbers) == 1:
            values.append(numbers[0])
        else:
            values.append(numbers[0] - numbers[1])
    return values


def _replicate(ds: PanelDataset, targets: Sequence[BootstrapTarget], spec: BootstrapSpec, index: int) -> List[Optional[float]]:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, index]))
    indices = _resample_indices(ds, rng, spec.stratify_by_group)
    return _target_values(ds.take(indices), targets)


def bootstrap_estimates(
    ds: PanelDataset,
    targets: Sequence[BootstrapTarget],
    spec: BootstrapSpec,
    n_jobs: int = config.N_JOBS,
    max_dropped_fraction: float = config.MAX_DROPPED_FRACTION,
) -> List[IntervalEstimate]:
    """
    Percentile intervals for estimates and paired estimator differences.

    Each replicate resamples units with replacement (within group when
    `spec.stratify_by_group`) and recomputes every target. Replicates where a
    target is incomputable are dropped for that target.

    Raises:
        InferenceError: fewer than 100 replicates requested
        EstimationError: a target is incomputable on the full sample
        UnstableResamplingError: a target lost more than `max_dropped_fraction` of replicates
    """
    if spec.replicates < MIN_INTERVAL_REPLICATES:
        raise InferenceError(f"at least {MIN_INTERVAL_REPLICATES} replicates needed for intervals, got {spec.replicates}")

    points = _target_values(ds, targets)
    for target, point in zip(targets, points):
        if point is None:
            raise EstimationError(f"bootstrap target {target.name} cannot be computed on the full sample")

    logger.info(f"🎲 Bootstrapping {len(targets)} target(s) with {spec.replicates} replicates (seed {spec.seed})")
    # Parallel returns results in submission order
    replicates = Parallel(n_jobs=n_jobs)(
        delayed(_replicate)(ds, targets, spec, b) for b in range(spec.replicates)
    )

    alpha = 1.0 - spec.level
    intervals = []
    for k, (target, point) in enumerate(zip(targets, points)):
        values = np.array([r[k] for r in replicates if r[k] is not None], dtype=np.float64)
        dropped = spec.replicates - values.size
        if dropped > max_dropped_fraction * spec.replicates:
            raise UnstableResamplingError(
                f"unstable resampling: {target.name} incomputable in {dropped} of {spec.replicates} replicates"
            )
        if dropped:
            logger.warning(f"⚠️ {target.name}: dropped {dropped} of {spec.replicates} replicates")

        lower, upper = np.quantile(values, [alpha / 2.0, 1.0 - alpha / 2.0])
        intervals.append(IntervalEstimate(
            target=target.name,
            point=float(point),
            lower=float(lower),
            upper=float(upper),
            std_error=float(np.std(values, ddof=1)) if values.size > 1 else 0.0,
            significant_at_level=bool(lower > 0.0 or upper < 0.0),
            level=spec.level,
            replicates_used=int(values.size),
            replicates_dropped=int(dropped),
        ))
    return intervals


# ============================================================================
# Comparison report
# ============================================================================

def applicable_methods(ds: PanelDataset) -> List[EstimatorMethod]:
    """Estimators that make sense for the outcome kind, in report order."""
    ordered = [
        EstimatorMethod.DID_MOMENT,
        EstimatorMethod.IPW_DID,
        EstimatorMethod.LDV_CONTROL_REG,
        EstimatorMethod.LDV_CONTROL_REG_QUADRATIC,
        EstimatorMethod.LDV_POOLED_REG,
        EstimatorMethod.LDV_NONPARAMETRIC,
        EstimatorMethod.IPW_LDV,
    ]
    if ds.outcome_kind.is_discrete:
        return ordered
    return [m for m in ordered if m not in DISCRETE_ONLY_METHODS]


def default_propensity(ds: PanelDataset) -> PropensityModel:
    if ds.outcome_kind.is_discrete:
        return PropensityModel.SATURATED_DISCRETE
    return PropensityModel.LOGISTIC


def bracket_ldv_method(ds: PanelDataset) -> EstimatorMethod:
    """LDV estimator compared against did_moment: the plug-in for discrete data, else the control regression."""
    if ds.outcome_kind.is_discrete:
        return EstimatorMethod.LDV_NONPARAMETRIC
    return EstimatorMethod.LDV_CONTROL_REG


def bracket_targets(
    ldv: EstimatorMethod,
    propensity: PropensityModel = PropensityModel.SATURATED_DISCRETE,
    gamma: bool = True,
) -> List[BootstrapTarget]:
    """τ of did_moment and `ldv` and their τ (and γ) differences."""
    did = EstimatorMethod.DID_MOMENT
    targets = [
        BootstrapTarget(Quantity.TAU, did, propensity=propensity),
        BootstrapTarget(Quantity.TAU, ldv, propensity=propensity),
        BootstrapTarget(Quantity.TAU, did, minus=ldv, propensity=propensity),
    ]
    if gamma:
        targets.append(BootstrapTarget(Quantity.GAMMA, did, minus=ldv, propensity=propensity))
    return targets


def compare_estimators(
    ds: PanelDataset,
    spec: Optional[BootstrapSpec] = None,
    tolerance: float = config.DOMINANCE_TOLERANCE,
    n_jobs: int = config.N_JOBS,
) -> ComparisonReport:
    """
    Every applicable estimator, the condition checks, the bracket prediction and,
    when `spec` is given, bootstrap intervals for the bracket pair.

    Estimators that fail are listed under `unavailable` with the reason.
    """
    warnings: List[str] = list(ds.notes)
    if ds.n < config.SMALL_SAMPLE_THRESHOLD:
        warnings.append(f"small sample: n = {ds.n} < {config.SMALL_SAMPLE_THRESHOLD}")

    propensity = default_propensity(ds)
    estimates: Dict[EstimatorMethod, EstimateResult] = {}
    unavailable: Dict[EstimatorMethod, str] = {}
    for method in applicable_methods(ds):
        try:
            estimates[method] = estimate(ds, method, propensity)
        except EstimationError as e:
            unavailable[method] = str(e)
            logger.warning(f"⚠️ {method.value} unavailable: {e}")
    if not ds.outcome_kind.is_discrete:
        for method in sorted(DISCRETE_ONLY_METHODS, key=lambda m: m.value):
            unavailable[method] = "requires a binary or count outcome"

    stationarity = monotonicity = None
    try:
        stationarity = diagnostics.check_stationarity(ds)
        monotonicity = diagnostics.check_monotonicity(ds, tolerance)
    except EstimationError as e:
        warnings.append(f"condition checks unavailable: {e}")

    did = estimates.get(EstimatorMethod.DID_MOMENT)
    ldv_method = bracket_ldv_method(ds)
    if ldv_method not in estimates:
        ldv_method = EstimatorMethod.LDV_CONTROL_REG
    ldv = estimates.get(ldv_method)

    bracket = None
    if stationarity is None or monotonicity is None:
        warnings.append("bracket unavailable: condition checks failed")
    elif did is not None and ldv is not None:
        delta_table, gap, description = None, None, f"mu0 difference of {ldv.method.value} and {did.method.value}"
        if ldv_method == bracket_ldv_method(ds):
            delta_table, gap = diagnostics.lemma1_gap(ds)
            description = diagnostics.delta_description(ds)
        bracket = diagnostics.predict_bracket(
            stationarity, monotonicity, did, ldv,
            delta_table=delta_table, gap=gap, delta_description=description,
        )
    else:
        warnings.append("bracket unavailable: DID or LDV estimate missing")

    try:
        linear = diagnostics.linear_bracket(ds)
    except EstimationError as e:
        linear = None
        logger.warning(f"⚠️ linear bracket unavailable: {e}")

    intervals: List = []
    if spec is not None and bracket is not None:
        targets = bracket_targets(ldv_method, propensity, gamma=did.gamma is not None and ldv.gamma is not None)
        intervals = bootstrap_estimates(ds, targets, spec, n_jobs=n_jobs)

    for message in warnings:
        logger.warning(f"⚠️ {message}")
    logger.info(f"📊 Compared {len(estimates)} estimator(s), {len(unavailable)} unavailable")

    return ComparisonReport(
        dataset=ds.summary(),
        estimates=estimates,
        unavailable=unavailable,
        stationarity=stationarity,
        monotonicity=monotonicity,
        bracket=bracket,
        linear_bracket=linear,
        intervals=intervals,
        conditional_means=diagnostics.conditional_mean_table(ds),
        warnings=warnings,
    )
