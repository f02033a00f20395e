import numpy as np
import pytest

from src.diagnostics import (
    bracket, cdf_points, check_monotonicity, check_stationarity, conditional_mean_table,
    lemma1_gap, linear_bracket, predict_bracket, quadratic_slope_check,
)
from src.errors import EmptyGroupError, OverlapError
from src.estimators import did_moment, ldv_nonparametric, ldv_regression
from src.models import (
    BracketOrder, DominanceDirection, LdvVariant, MonotonicityReport, OutcomeKind,
    StationarityMethod, StationarityReport,
)

from conftest import make_dataset


class TestStationarity:
    def test_crash_counts_difference_quotients(self, crash_counts):
        report = check_stationarity(crash_counts)
        assert report.method == StationarityMethod.DISCRETE_DIFFERENCES
        slopes = [s for _, s in report.statistics]
        assert slopes == pytest.approx([0.203, 0.098, -0.009], abs=0.001)
        assert report.satisfied
        assert report.margin == pytest.approx(1 - 0.203, abs=0.001)

    def test_tiny_regression_slope(self, tiny):
        report = check_stationarity(tiny)
        assert report.method == StationarityMethod.REGRESSION_SLOPE
        assert report.statistics[0][1] == pytest.approx(1.5)
        assert not report.satisfied
        assert report.margin == pytest.approx(-0.5)

    def test_tiny_quadratic_derivatives(self, tiny):
        # exact control fit 0.5·y + 0.5·y², derivative 0.5 + y
        slopes = quadratic_slope_check(tiny)
        assert len(slopes) == 11
        for y, slope in slopes:
            assert slope == pytest.approx(0.5 + y)

    def test_binary_auto_pass(self, crash_binary):
        report = check_stationarity(crash_binary)
        assert report.method == StationarityMethod.BINARY_AUTO
        assert report.satisfied
        assert report.statistics == []
        assert report.margin == 1.0

    def test_unsupported_level_is_reported(self):
        ds = make_dataset([0, 0, 1, 1], [0, 2, 1, 2], [0, 1, 1, 1], OutcomeKind.COUNT)
        report = check_stationarity(ds)
        assert report.unevaluable == [1.0]
        assert report.statistics == [(0.0, pytest.approx(0.5))]
        assert report.warnings

    def test_single_control_level_is_vacuous(self):
        ds = make_dataset([0, 0, 1], [1, 1, 1], [0, 2, 1], OutcomeKind.COUNT)
        report = check_stationarity(ds)
        assert report.satisfied
        assert report.statistics == []
        assert any("fewer than two" in w for w in report.warnings)

    def test_quadratic_unavailable_is_warning(self):
        ds = make_dataset([0, 0, 0, 1], [0, 1, 1, 1], [0, 0.5, 1, 2])
        report = check_stationarity(ds)
        assert report.quadratic_slopes == []
        assert any("quadratic" in w for w in report.warnings)

    def test_no_controls(self):
        with pytest.raises(EmptyGroupError):
            check_stationarity(make_dataset([1, 1], [0, 1], [0, 1]))


class TestMonotonicity:
    def test_crash_counts_direction_a(self, crash_counts):
        report = check_monotonicity(crash_counts)
        assert report.direction == DominanceDirection.A
        assert report.points == [0.0, 1.0, 2.0, 3.0]
        assert report.cdf_treated[:3] == pytest.approx([0.7009, 0.9094, 0.9728], abs=1e-4)
        assert report.cdf_control[:3] == pytest.approx([0.6659, 0.8985, 0.9680], abs=1e-4)
        assert report.cdf_treated[-1] == report.cdf_control[-1] == 1.0
        assert not report.degenerate_equality

    def test_mirror_is_direction_b(self):
        ds = make_dataset([0, 0, 1, 1], [0, 1, 1, 2], [0, 0, 0, 0])
        assert check_monotonicity(ds).direction == DominanceDirection.B

    def test_identical_distributions_are_degenerate(self):
        ds = make_dataset([0, 0, 1, 1], [0, 1, 0, 1], [0, 0, 0, 0])
        report = check_monotonicity(ds)
        assert report.direction == DominanceDirection.A
        assert report.degenerate_equality
        assert report.max_violation == 0.0

    def test_crossing_curves(self):
        ds = make_dataset([0, 0, 1, 1, 1, 1], [1, 2, 0, 3, 3, 3], [0] * 6)
        report = check_monotonicity(ds)
        assert report.direction == DominanceDirection.NONE
        assert report.max_violation > 0

    def test_tolerance_absorbs_small_crossing(self):
        ds = make_dataset([0, 0, 1, 1, 1, 1], [1, 2, 0, 3, 3, 3], [0] * 6)
        report = check_monotonicity(ds, tolerance=0.5)
        assert report.direction == DominanceDirection.B
        assert not report.degenerate_equality

    def test_close_curves_are_not_flagged_equal(self):
        ds = make_dataset([1] * 4 + [0] * 5, [0, 1, 2, 3, 0, 1, 2, 2, 3], [0] * 9)
        report = check_monotonicity(ds, tolerance=0.1)
        assert report.direction == DominanceDirection.A
        assert not report.degenerate_equality

    def test_cdf_points(self, tiny):
        rows = cdf_points(check_monotonicity(tiny))
        assert rows[0] == {"y": 0.0, "cdf_treated": 0.0, "cdf_control": pytest.approx(1 / 3)}
        assert rows[-1]["cdf_treated"] == 1.0


class TestGapDecomposition:
    def test_crash_counts_gap(self, crash_counts):
        table, gap = lemma1_gap(crash_counts)
        assert gap == pytest.approx(0.043, abs=0.001)
        assert gap == pytest.approx(ldv_nonparametric(crash_counts).mu0 - did_moment(crash_counts).mu0, abs=1e-12)
        assert [y for y, _ in table] == [0.0, 1.0, 2.0, 3.0]

    def test_crash_binary_gap(self, crash_binary):
        _, gap = lemma1_gap(crash_binary)
        assert gap == pytest.approx(0.030, abs=0.001)

    def test_continuous_gap_matches_estimates(self, tiny):
        table, gap = lemma1_gap(tiny)
        ldv = ldv_regression(tiny, LdvVariant.CONTROL_ONLY)
        assert gap == pytest.approx(ldv.mu0 - did_moment(tiny).mu0)
        assert gap == pytest.approx(0.5 * (2 - 1))
        assert [y for y, _ in table] == pytest.approx([1.0, 2.0])

    def test_overlap_violation(self):
        ds = make_dataset([0, 1], [0, 1], [0, 1], OutcomeKind.COUNT)
        with pytest.raises(OverlapError):
            lemma1_gap(ds)


class TestBracket:
    def test_crash_counts_agree(self, crash_counts):
        did = did_moment(crash_counts)
        ldv = ldv_nonparametric(crash_counts)
        stationarity, monotonicity, report = bracket(crash_counts, did, ldv)
        assert report.predicted_order == BracketOrder.DID_GE_LDV
        assert report.observed_order == BracketOrder.DID_GE_LDV
        assert report.agreement is True
        assert report.tau_did == pytest.approx(-0.045, abs=0.001)
        assert report.tau_ldv == pytest.approx(-0.087, abs=0.001)

    def test_crash_binary_agree(self, crash_binary):
        _, _, report = bracket(crash_binary, did_moment(crash_binary), ldv_nonparametric(crash_binary))
        assert report.predicted_order == BracketOrder.DID_GE_LDV
        assert report.agreement is True

    def test_failed_stationarity_is_indeterminate(self, tiny):
        did = did_moment(tiny)
        ldv = ldv_regression(tiny, LdvVariant.CONTROL_ONLY)
        _, _, report = bracket(tiny, did, ldv)
        assert report.predicted_order == BracketOrder.INDETERMINATE
        assert report.agreement is None
        assert report.observed_order == BracketOrder.DID_GE_LDV

    def test_direction_b_predicts_did_below(self, tiny):
        stationarity = StationarityReport(
            method=StationarityMethod.REGRESSION_SLOPE, statistics=[(0.0, 0.5)], satisfied=True, margin=0.5,
        )
        monotonicity = MonotonicityReport(
            points=[0.0], cdf_treated=[0.2], cdf_control=[0.6], direction=DominanceDirection.B, max_violation=0.0,
        )
        did = did_moment(tiny)
        ldv = ldv_regression(tiny, LdvVariant.CONTROL_ONLY)
        report = predict_bracket(stationarity, monotonicity, did, ldv)
        assert report.predicted_order == BracketOrder.DID_LE_LDV
        assert report.agreement is False
        assert report.lemma1_gap == pytest.approx(ldv.mu0 - did.mu0)

    def test_ties_count_as_agreement(self):
        ds = make_dataset([0, 0, 1, 1], [0, 1, 0, 1], [1, 1, 2, 2], OutcomeKind.COUNT)
        did, ldv = did_moment(ds), ldv_nonparametric(ds)
        _, _, report = bracket(ds, did, ldv)
        assert report.predicted_order == BracketOrder.DID_GE_LDV
        assert report.agreement is True


class TestLinearBracket:
    def test_identity(self, tiny):
        result = linear_bracket(tiny)
        assert result.pre_mean_gap == pytest.approx(1.0)
        assert result.beta == pytest.approx(1.5)
        assert result.beta_prime == pytest.approx(1.5)
        assert result.tau_did - result.tau_ldv == pytest.approx(result.predicted_gap)
        assert result.tau_did - result.tau_ldv_pooled == pytest.approx(result.predicted_gap_pooled)

    def test_random_identity(self):
        rng = np.random.default_rng(5)
        group = np.array([1] * 30 + [0] * 50)
        y_pre = rng.normal(size=80) + 0.5 * group
        y_post = 0.6 * y_pre + rng.normal(size=80)
        result = linear_bracket(make_dataset(group, y_pre, y_post))
        assert result.tau_did - result.tau_ldv == pytest.approx(result.predicted_gap, abs=1e-9)
        assert result.tau_did - result.tau_ldv_pooled == pytest.approx(result.predicted_gap_pooled, abs=1e-9)
        assert result.to_dict()["order_ldv"] in {o.value for o in BracketOrder}


class TestConditionalMeans:
    def test_crash_counts(self, crash_counts):
        rows = conditional_mean_table(crash_counts)
        assert [r["y"] for r in rows] == [0.0, 1.0, 2.0, 3.0]
        means = [r["mean_control"] for r in rows]
        assert means == pytest.approx([0.3684, 0.5714, 0.6696, 0.6604], abs=1e-4)
        assert all(r["fit_linear"] is not None for r in rows)

    def test_continuous_has_fits_only(self, tiny):
        rows = conditional_mean_table(tiny)
        assert all(r["mean_control"] is None for r in rows)
        fits = {r["y"]: r["fit_linear"] for r in rows}
        assert fits[3.0] == pytest.approx(-1 / 6 + 3 * 1.5)
        assert {r["y"]: r["fit_quadratic"] for r in rows}[3.0] == pytest.approx(6.0)

    def test_missing_control_level(self, tiny):
        counts = tiny.with_outcomes(tiny.y_pre, tiny.y_post, OutcomeKind.COUNT)
        rows = {r["y"]: r for r in conditional_mean_table(counts)}
        assert rows[3.0]["mean_control"] is None
        assert rows[3.0]["n_treated"] == 1
