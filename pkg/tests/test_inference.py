import numpy as np
import pytest

from src.errors import EstimationError, InferenceError, UnstableResamplingError
from src.inference import (
    applicable_methods, bootstrap_estimates, bracket_ldv_method, bracket_targets,
    compare_estimators, default_propensity,
)
from src.models import (
    BootstrapSpec, BootstrapTarget, EstimatorMethod, OutcomeKind, PropensityModel, Quantity,
)

from conftest import make_dataset

NP = EstimatorMethod.LDV_NONPARAMETRIC
DID = EstimatorMethod.DID_MOMENT


@pytest.fixture
def sparse_level():
    """Only one control unit at y_pre = 1, where a treated unit also sits."""
    return make_dataset(
        group=[1, 1] + [0] * 10,
        y_pre=[0, 1] + [0] * 9 + [1],
        y_post=[1, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1],
        kind=OutcomeKind.COUNT,
    )


class TestBootstrap:
    def test_constant_dataset(self):
        ds = make_dataset([0, 0, 0, 1, 1], [1] * 5, [1] * 5, OutcomeKind.COUNT)
        intervals = bootstrap_estimates(ds, bracket_targets(NP), BootstrapSpec(replicates=100, seed=1))
        for interval in intervals:
            assert interval.lower == interval.upper == interval.point == 0.0
            assert interval.std_error == 0.0
            assert not interval.significant_at_level

    def test_deterministic(self, tiny):
        targets = [BootstrapTarget(Quantity.TAU, DID)]
        spec = BootstrapSpec(replicates=200, seed=42)
        first = bootstrap_estimates(tiny, targets, spec)
        second = bootstrap_estimates(tiny, targets, spec)
        assert first == second

    def test_independent_of_worker_count(self, crash_binary):
        spec = BootstrapSpec(replicates=100, seed=3)
        serial = bootstrap_estimates(crash_binary, bracket_targets(NP), spec, n_jobs=1)
        parallel = bootstrap_estimates(crash_binary, bracket_targets(NP), spec, n_jobs=2)
        assert serial == parallel

    def test_seed_changes_replicates(self, crash_binary):
        targets = [BootstrapTarget(Quantity.TAU, DID)]
        a = bootstrap_estimates(crash_binary, targets, BootstrapSpec(replicates=100, seed=1))
        b = bootstrap_estimates(crash_binary, targets, BootstrapSpec(replicates=100, seed=2))
        assert a[0].point == b[0].point
        assert (a[0].lower, a[0].upper) != (b[0].lower, b[0].upper)

    def test_wider_level_nests(self, crash_binary):
        targets = bracket_targets(NP)
        narrow = bootstrap_estimates(crash_binary, targets, BootstrapSpec(replicates=300, seed=9, level=0.95))
        wide = bootstrap_estimates(crash_binary, targets, BootstrapSpec(replicates=300, seed=9, level=0.99))
        for n, w in zip(narrow, wide):
            assert w.lower <= n.lower <= n.upper <= w.upper

    def test_crash_gamma_difference_not_significant(self, crash_counts):
        spec = BootstrapSpec(replicates=2000, seed=20190101)
        intervals = {i.target: i for i in bootstrap_estimates(crash_counts, bracket_targets(NP), spec)}
        gamma = intervals["gamma[did_moment]-gamma[ldv_nonparametric]"]
        assert gamma.lower <= 0.0 <= gamma.upper
        assert not gamma.significant_at_level
        assert gamma.replicates_used + gamma.replicates_dropped == 2000

        tau = intervals["tau[did_moment]-tau[ldv_nonparametric]"]
        assert tau.point == pytest.approx(0.043, abs=0.001)
        assert tau.lower <= tau.point <= tau.upper

    def test_too_few_replicates(self, tiny):
        with pytest.raises(InferenceError):
            bootstrap_estimates(tiny, [BootstrapTarget(Quantity.TAU, DID)], BootstrapSpec(replicates=99))

    def test_incomputable_on_full_sample(self, tiny):
        counts = tiny.with_outcomes(tiny.y_pre, tiny.y_post, OutcomeKind.COUNT)
        with pytest.raises(EstimationError):
            bootstrap_estimates(counts, [BootstrapTarget(Quantity.TAU, NP)], BootstrapSpec(replicates=100))

    def test_dropped_replicates_are_counted(self, sparse_level):
        intervals = bootstrap_estimates(sparse_level, [BootstrapTarget(Quantity.TAU, NP)], BootstrapSpec(replicates=200))
        interval = intervals[0]
        assert interval.replicates_dropped > 0
        assert interval.replicates_used + interval.replicates_dropped == 200

    def test_unstable_resampling(self, sparse_level):
        with pytest.raises(UnstableResamplingError):
            bootstrap_estimates(
                sparse_level, [BootstrapTarget(Quantity.TAU, NP)], BootstrapSpec(replicates=200),
                max_dropped_fraction=0.05,
            )

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            BootstrapSpec(level=1.0)
        with pytest.raises(ValueError):
            BootstrapSpec(replicates=0)
        with pytest.raises(ValueError):
            BootstrapSpec(seed=-1)


class TestMethodSelection:
    def test_continuous(self, tiny):
        assert NP not in applicable_methods(tiny)
        assert default_propensity(tiny) == PropensityModel.LOGISTIC
        assert bracket_ldv_method(tiny) == EstimatorMethod.LDV_CONTROL_REG

    def test_discrete(self, crash_counts):
        assert NP in applicable_methods(crash_counts)
        assert default_propensity(crash_counts) == PropensityModel.SATURATED_DISCRETE
        assert bracket_ldv_method(crash_counts) == NP

    def test_bracket_targets(self):
        names = [t.name for t in bracket_targets(NP, gamma=False)]
        assert names == [
            "tau[did_moment]",
            "tau[ldv_nonparametric]",
            "tau[did_moment]-tau[ldv_nonparametric]",
        ]


class TestCompareEstimators:
    def test_crash_counts(self, crash_counts):
        report = compare_estimators(crash_counts)
        assert set(report.estimates) == set(applicable_methods(crash_counts))
        assert report.unavailable == {}
        assert report.bracket.agreement is True
        assert report.bracket.lemma1_gap == pytest.approx(0.043, abs=0.001)
        assert report.linear_bracket is not None
        assert report.intervals == []
        assert any("3+" in w for w in report.warnings)
        assert len(report.conditional_means) == 4

    def test_with_intervals(self, crash_binary):
        report = compare_estimators(crash_binary, BootstrapSpec(replicates=100, seed=5))
        assert [i.target for i in report.intervals] == [t.name for t in bracket_targets(NP)]

    def test_small_sample_warning(self, tiny):
        report = compare_estimators(tiny)
        assert "small sample: n = 5 < 30" in report.warnings
        assert NP in report.unavailable
        assert report.bracket.ldv_method == EstimatorMethod.LDV_CONTROL_REG

    def test_overlap_failure_falls_back(self, tiny):
        counts = tiny.with_outcomes(tiny.y_pre, tiny.y_post, OutcomeKind.COUNT)
        report = compare_estimators(counts)
        assert NP in report.unavailable
        assert EstimatorMethod.IPW_LDV in report.unavailable
        assert report.bracket.ldv_method == EstimatorMethod.LDV_CONTROL_REG
        assert report.bracket.lemma1_gap == pytest.approx(report.bracket.mu0_ldv - report.bracket.mu0_did)

    def test_report_serializes(self, crash_binary):
        data = compare_estimators(crash_binary).to_dict()
        assert data["bracket"]["predicted_order"] == "did_ge_ldv"
        assert data["stationarity"]["method"] == "binary_auto"
        assert np.isfinite(data["estimates"]["did_moment"]["tau"])

    def test_constant_control_baseline_keeps_moment_estimates(self):
        ds = make_dataset([0, 0, 0, 1, 1], [1, 1, 1, 0, 2], [0.5, 1.5, 2, 1, 3])
        report = compare_estimators(ds)
        assert DID in report.estimates
        assert EstimatorMethod.IPW_DID in report.estimates
        assert EstimatorMethod.LDV_CONTROL_REG in report.unavailable
        assert report.stationarity is None
        assert report.bracket is None
        assert report.linear_bracket is None
        assert any("condition checks unavailable" in w for w in report.warnings)
        data = report.to_dict()
        assert data["stationarity"] is None and data["bracket"] is None
