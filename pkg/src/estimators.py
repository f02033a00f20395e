"""
Estimators of μ1, μ0 and the effects on the treated.

Parallel-trends family: `did_moment`, `ipw_did`.
Ignorability family:    `ldv_regression` (control-only linear / quadratic, pooled),
                        `ldv_nonparametric`, `ipw_ldv`.
`stratified` aggregates any of them over discrete covariate strata.

All functions are pure functions of an immutable PanelDataset.
"""
import warnings
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import statsmodels.api as sm
from numpy.linalg import LinAlgError
from scipy.linalg import cho_factor, cho_solve
from statsmodels.tools.sm_exceptions import PerfectSeparationError, PerfectSeparationWarning

from src.config import config
from src.data import group_level_table, stratum_labels
from src.errors import (
    ConvergenceError, EmptyGroupError, EstimationError, OverlapError,
    PositivityError, SingularDesignError,
)
from src.logger import logger
from src.models import (
    LDV_VARIANT_METHODS, EstimateResult, EstimatorMethod, LdvVariant,
    LeastSquaresFit, PanelDataset, PropensityModel,
)

# Null-space loadings above this mark a column as part of a collinear set
_COLLINEAR_LOADING = 1e-8
# Propensities this close to one are treated as one
_POSITIVITY_EPS = 1e-12


# ============================================================================
# Least squares
# ============================================================================

def _collinear_columns(design: np.ndarray, names: Sequence[str]) -> List[str]:
    """Names of the first set of linearly dependent columns."""
    for j in range(design.shape[1]):
        block = design[:, : j + 1]
        if np.linalg.matrix_rank(block) < j + 1:
            _, _, vt = np.linalg.svd(block, full_matrices=False)
            null = vt[-1]
            null = null / np.max(np.abs(null))
            return [names[k] for k in range(j + 1) if abs(null[k]) > _COLLINEAR_LOADING]
    return list(names)


def fit_least_squares(
    design: np.ndarray,
    response: np.ndarray,
    names: Optional[Sequence[str]] = None,
    pivot_tolerance: float = config.PIVOT_TOLERANCE,
) -> LeastSquaresFit:
    """
    Ordinary least squares via the normal equations and a Cholesky factorization.

    Args:
        design: n x k regressor matrix (a 1-D array is one column)
        response: length-n response
        names: regressor names, used in results and singularity errors
        pivot_tolerance: squared Cholesky pivots below this fraction of the
            largest diagonal of X'X mark the design as rank deficient

    Raises:
        SingularDesignError: naming the collinear columns
    """
    X = np.asarray(design, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(response, dtype=np.float64)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"design has {X.shape[0]} rows but response has {y.shape[0]} entries")
    names = list(names) if names is not None else [f"x{j}" for j in range(X.shape[1])]

    xtx = X.T @ X
    xty = X.T @ y
    scale = float(np.max(np.diag(xtx))) if X.size else 0.0
    if scale <= 0.0:
        raise SingularDesignError(names)

    try:
        factor = cho_factor(xtx, lower=True)
    except LinAlgError:
        raise SingularDesignError(_collinear_columns(X, names))
    pivots = np.diag(factor[0]) ** 2
    if np.any(pivots < pivot_tolerance * scale):
        raise SingularDesignError(_collinear_columns(X, names))

    coefficients = cho_solve(factor, xty)
    residuals = y - X @ coefficients
    return LeastSquaresFit(
        coefficients=[float(c) for c in coefficients],
        residual_sum_of_squares=float(residuals @ residuals),
        regressors=names,
    )


# ============================================================================
# Shared helpers
# ============================================================================

def _require_groups(ds: PanelDataset, method: EstimatorMethod) -> None:
    if ds.n_treated == 0 or ds.n_control == 0:
        empty = "treated" if ds.n_treated == 0 else "control"
        raise EmptyGroupError(f"{method.value}: {empty} group empty")


def _require_discrete(ds: PanelDataset, method: EstimatorMethod) -> None:
    if not ds.outcome_kind.is_discrete:
        raise EstimationError(f"{method.value} requires a binary or count outcome, got {ds.outcome_kind.value}")


def _group_means(ds: PanelDataset) -> Tuple[float, float, float, float]:
    """(Ȳ1,t, Ȳ1,t+1, Ȳ0,t, Ȳ0,t+1)"""
    treated, control = ds.treated, ds.control
    return (
        float(np.mean(ds.y_pre[treated])),
        float(np.mean(ds.y_post[treated])),
        float(np.mean(ds.y_pre[control])),
        float(np.mean(ds.y_post[control])),
    )


def build_result(
    method: EstimatorMethod,
    ds: PanelDataset,
    mu1: float,
    mu0: float,
    coefficients: Sequence[Tuple[str, float]] = (),
    details: Optional[Dict] = None,
) -> EstimateResult:
    """Assemble an EstimateResult; τ is always μ1 − μ0 and γ needs μ0 > 0."""
    mu1, mu0 = float(mu1), float(mu0)
    result = EstimateResult(
        method=method,
        mu1=mu1,
        mu0=mu0,
        tau=mu1 - mu0,
        gamma=mu1 / mu0 if mu0 > 0 else None,
        n_treated=ds.n_treated,
        n_control=ds.n_control,
        coefficients=[(k, float(v)) for k, v in coefficients],
        details=dict(details or {}),
    )
    if result.gamma is None:
        message = f"gamma not reported: mu0 = {mu0:.6g} is not positive"
        result.warnings.append(message)
        logger.debug(f"{method.value}: {message}")
    return result


# ============================================================================
# Parallel trends
# ============================================================================

def did_moment(ds: PanelDataset) -> EstimateResult:
    """Moment difference-in-differences: μ0 = Ȳ1,t + (Ȳ0,t+1 − Ȳ0,t)."""
    method = EstimatorMethod.DID_MOMENT
    _require_groups(ds, method)
    y1_pre, y1_post, y0_pre, y0_post = _group_means(ds)
    tau = (y1_post - y1_pre) - (y0_post - y0_pre)
    return build_result(method, ds, mu1=y1_post, mu0=y1_post - tau)


def ipw_did(ds: PanelDataset) -> EstimateResult:
    """
    Weighting form of the parallel-trends identification with marginal propensity ê = n1/n.

    μ0 = [Σ G·Y_t + ê/(1−ê)·Σ (1−G)(Y_t+1 − Y_t)] / Σ G
    """
    method = EstimatorMethod.IPW_DID
    _require_groups(ds, method)
    treated, control = ds.treated, ds.control
    e = ds.n_treated / ds.n
    numerator = np.sum(ds.y_pre[treated]) + e / (1.0 - e) * np.sum(ds.y_post[control] - ds.y_pre[control])
    mu0 = numerator / ds.n_treated
    mu1 = float(np.mean(ds.y_post[treated]))
    return build_result(method, ds, mu1=mu1, mu0=mu0, details={"propensity": e})


# ============================================================================
# Ignorability
# ============================================================================

_LDV_DESIGNS: Dict[LdvVariant, Tuple[List[str], List[str]]] = {
    # regressor names, coefficient labels
    LdvVariant.CONTROL_ONLY: (["intercept", "y_pre"], ["alpha", "beta"]),
    LdvVariant.CONTROL_ONLY_QUADRATIC: (["intercept", "y_pre", "y_pre_sq"], ["alpha", "beta1", "beta2"]),
    LdvVariant.POOLED: (["intercept", "group", "y_pre"], ["alpha", "tau_prime", "beta_prime"]),
}


def _control_design(y_pre: np.ndarray, quadratic: bool) -> np.ndarray:
    columns = [np.ones_like(y_pre), y_pre]
    if quadratic:
        columns.append(y_pre ** 2)
    return np.column_stack(columns)


def ldv_regression(ds: PanelDataset, variant: LdvVariant = LdvVariant.CONTROL_ONLY) -> EstimateResult:
    """
    Lagged-dependent-variable adjustment by least squares.

    control_only[_quadratic]: fit E(Y_t+1 | G=0, Y_t) on control units and average the
        fitted curve over treated Y_t (linear case: α̂ + β̂·Ȳ1,t).
    pooled: fit Y_t+1 ~ 1 + G + Y_t on all units; the G coefficient is τ̂′.
    """
    variant = LdvVariant(variant)
    method = LDV_VARIANT_METHODS[variant]
    _require_groups(ds, method)
    names, labels = _LDV_DESIGNS[variant]
    treated, control = ds.treated, ds.control
    mu1 = float(np.mean(ds.y_post[treated]))

    if variant == LdvVariant.POOLED:
        design = np.column_stack([np.ones(ds.n), ds.group.astype(np.float64), ds.y_pre])
        fit = fit_least_squares(design, ds.y_post, names)
        mu0 = mu1 - fit.coefficient("group")
    else:
        quadratic = variant == LdvVariant.CONTROL_ONLY_QUADRATIC
        distinct = np.unique(ds.y_pre[control]).size
        if distinct < len(names):
            raise SingularDesignError(names)
        fit = fit_least_squares(_control_design(ds.y_pre[control], quadratic), ds.y_post[control], names)
        fitted = _control_design(ds.y_pre[treated], quadratic) @ np.asarray(fit.coefficients)
        mu0 = float(np.mean(fitted))

    return build_result(
        method, ds, mu1=mu1, mu0=mu0,
        coefficients=list(zip(labels, fit.coefficients)),
        details={"residual_sum_of_squares": fit.residual_sum_of_squares},
    )


def _unsupported_levels(levels: np.ndarray, n_treated: np.ndarray, n_control: np.ndarray) -> List[float]:
    return [float(y) for y in levels[(n_treated > 0) & (n_control == 0)]]


def ldv_nonparametric(ds: PanelDataset) -> EstimateResult:
    """Plug-in μ0 = Σ_y Ê(Y_t+1 | G=0, Y_t=y) · p̂(Y_t=y | G=1) for discrete outcomes."""
    method = EstimatorMethod.LDV_NONPARAMETRIC
    _require_groups(ds, method)
    _require_discrete(ds, method)
    table = group_level_table(ds)
    unsupported = _unsupported_levels(table["levels"], table["n_treated"], table["n_control"])
    if unsupported:
        raise OverlapError(f"{method.value}: treated y_pre level(s) without control units: {unsupported}", unsupported)

    used = table["n_treated"] > 0
    conditional_means = table["sum_post_control"][used] / table["n_control"][used]
    mu0 = float(np.sum(conditional_means * table["n_treated"][used]) / ds.n_treated)
    mu1 = float(np.mean(ds.y_post[ds.treated]))
    return build_result(method, ds, mu1=mu1, mu0=mu0, details={"levels_used": int(used.sum())})


def fit_logistic_propensity(
    ds: PanelDataset,
    max_iter: int = config.LOGISTIC_MAX_ITER,
    tolerance: float = config.LOGISTIC_TOLERANCE,
) -> Tuple[np.ndarray, List[Tuple[str, float]]]:
    """
    Logistic regression of G on (1, Y_t) by iteratively reweighted least squares.

    Returns fitted probabilities and the (intercept, slope) coefficients.

    Raises:
        ConvergenceError: no convergence within `max_iter`, or perfect separation
    """
    design = np.column_stack([np.ones(ds.n), ds.y_pre])
    model = sm.GLM(ds.group.astype(np.float64), design, family=sm.families.Binomial())
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fitted = model.fit(method="IRLS", maxiter=max_iter, tol=tolerance, tol_criterion="params", rtol=0.0)
    except (PerfectSeparationError, LinAlgError, ValueError) as e:
        raise ConvergenceError(f"logistic propensity fit failed: {e}")
    if any(issubclass(w.category, PerfectSeparationWarning) for w in caught):
        raise ConvergenceError("logistic propensity fit failed: perfect separation on y_pre")
    if not fitted.converged:
        raise ConvergenceError(f"logistic propensity fit did not converge in {max_iter} iterations")

    params = np.asarray(fitted.params, dtype=np.float64)
    probabilities = np.asarray(fitted.fittedvalues, dtype=np.float64)
    return probabilities, [("propensity_intercept", float(params[0])), ("propensity_slope", float(params[1]))]


def ipw_ldv(ds: PanelDataset, propensity: PropensityModel = PropensityModel.SATURATED_DISCRETE) -> EstimateResult:
    """
    Weighting form of the ignorability identification.

    μ0 = [Σ e(Y_t)/(1−e(Y_t)) · (1−G) · Y_t+1] / Σ G, with e either the saturated
    cell frequency n1(y)/(n1(y)+n0(y)) or a logistic fit on Y_t.
    """
    method = EstimatorMethod.IPW_LDV
    propensity = PropensityModel(propensity)
    _require_groups(ds, method)
    treated, control = ds.treated, ds.control
    coefficients: List[Tuple[str, float]] = []

    if propensity == PropensityModel.SATURATED_DISCRETE:
        _require_discrete(ds, method)
        table = group_level_table(ds)
        unsupported = _unsupported_levels(table["levels"], table["n_treated"], table["n_control"])
        if unsupported:
            raise PositivityError(f"{method.value}: estimated propensity is 1 at y_pre level(s) {unsupported}", unsupported)
        positions = np.searchsorted(table["levels"], ds.y_pre[control])
        n1 = table["n_treated"][positions].astype(np.float64)
        n0 = table["n_control"][positions].astype(np.float64)
        e = n1 / (n1 + n0)
    else:
        probabilities, coefficients = fit_logistic_propensity(ds)
        e = probabilities[control]
        if np.any(e >= 1.0 - _POSITIVITY_EPS):
            raise PositivityError(f"{method.value}: fitted propensity is 1 for some control units")

    odds = e / (1.0 - e)
    mu0 = float(np.sum(odds * ds.y_post[control]) / ds.n_treated)
    mu1 = float(np.mean(ds.y_post[treated]))
    return build_result(method, ds, mu1=mu1, mu0=mu0, coefficients=coefficients,
                        details={"propensity": propensity.value})


# ============================================================================
# Dispatch and stratification
# ============================================================================

def estimate(
    ds: PanelDataset,
    method: EstimatorMethod,
    propensity: PropensityModel = PropensityModel.SATURATED_DISCRETE,
) -> EstimateResult:
    """Run one estimator by name."""
    method = EstimatorMethod(method)
    if method == EstimatorMethod.DID_MOMENT:
        return did_moment(ds)
    if method == EstimatorMethod.IPW_DID:
        return ipw_did(ds)
    if method == EstimatorMethod.LDV_CONTROL_REG:
        return ldv_regression(ds, LdvVariant.CONTROL_ONLY)
    if method == EstimatorMethod.LDV_CONTROL_REG_QUADRATIC:
        return ldv_regression(ds, LdvVariant.CONTROL_ONLY_QUADRATIC)
    if method == EstimatorMethod.LDV_POOLED_REG:
        return ldv_regression(ds, LdvVariant.POOLED)
    if method == EstimatorMethod.LDV_NONPARAMETRIC:
        return ldv_nonparametric(ds)
    return ipw_ldv(ds, propensity)


def stratified(
    ds: PanelDataset,
    inner: EstimatorMethod,
    propensity: PropensityModel = PropensityModel.SATURATED_DISCRETE,
) -> EstimateResult:
    """
    Covariate-conditional estimate: run `inner` within each stratum and average with
    weights equal to each stratum's share of treated units.

    Strata without treated units carry zero weight and are skipped.

    Raises:
        OverlapError: a stratum has treated but no control units
    """
    inner = EstimatorMethod(inner)
    _require_groups(ds, inner)
    if ds.strata is None:
        logger.debug(f"{inner.value}: no strata, treating the dataset as a single stratum")
        labels: List = [None]
        masks = [np.ones(ds.n, dtype=bool)]
    else:
        labels = stratum_labels(ds)
        masks = [ds.strata == label for label in labels]

    lacking_control = [
        label for label, mask in zip(labels, masks)
        if np.any(ds.treated & mask) and not np.any(ds.control & mask)
    ]
    if lacking_control:
        raise OverlapError(f"stratified {inner.value}: stratum(s) with treated but no control units: {lacking_control}", lacking_control)

    mu1 = mu0 = 0.0
    per_stratum = []
    for label, mask in zip(labels, masks):
        n1 = int(np.count_nonzero(ds.treated & mask))
        if n1 == 0:
            continue
        weight = n1 / ds.n_treated
        result = estimate(ds.subset(mask), inner, propensity)
        mu1 += weight * result.mu1
        mu0 += weight * result.mu0
        per_stratum.append({
            "stratum": label,
            "weight": weight,
            "mu1": result.mu1,
            "mu0": result.mu0,
            "tau": result.tau,
        })

    logger.debug(f"stratified {inner.value}: aggregated {len(per_stratum)} strata")
    return build_result(inner, ds, mu1=mu1, mu0=mu0, details={"stratified": True, "strata": per_stratum})
