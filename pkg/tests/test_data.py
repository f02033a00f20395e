import io

import numpy as np
import pytest

from src.data import (
    assign_single_stratum, dichotomize, expand_contingency, group_level_table, input_digest,
    load_panel, load_panel_file, read_contingency, stratum_labels, validate,
)
from src.errors import DataParseError, DataValidationError
from src.models import ContingencyCell, ContingencyTable, Layout, OutcomeKind, PanelDataset, PanelUnit

from conftest import DATA_DIR, make_dataset

WIDE = b"""unit,group,y_pre,y_post
a,0,0,0
b,0,1,1
c,0,2,3
d,1,1,2
e,1,3,5
"""

LONG = b"""unit,period,group,y
e,2019,1,3
a,2019,0,0
a,2020,0,0
b,2019,0,1
b,2020,0,1
c,2019,0,2
c,2020,0,3
d,2019,1,1
d,2020,1,2
e,2020,1,5
"""


class TestLoadPanel:
    def test_wide_rows_become_units(self):
        ds = load_panel(WIDE, Layout.WIDE, OutcomeKind.CONTINUOUS)
        assert ds.n == 5
        assert ds.n_treated == 2
        assert list(ds.unit_ids) == ["a", "b", "c", "d", "e"]
        assert ds.y_post.tolist() == [0, 1, 3, 2, 5]

    def test_long_and_wide_agree_up_to_order(self):
        wide = load_panel(WIDE, Layout.WIDE, OutcomeKind.CONTINUOUS)
        long = load_panel(LONG, Layout.LONG, OutcomeKind.CONTINUOUS)
        assert long.unit_ids[0] == "e"
        assert long.equals_ignoring_order(wide)

    def test_accepts_binary_stream(self):
        ds = load_panel(io.BytesIO(WIDE), Layout.WIDE, OutcomeKind.CONTINUOUS)
        assert ds.n == 5

    def test_only_treated_rows(self):
        with pytest.raises(DataValidationError, match="control group empty"):
            load_panel(b"unit,group,y_pre,y_post\na,1,0,1\nb,1,1,1\n", Layout.WIDE, OutcomeKind.COUNT)

    def test_malformed_row_reports_line(self):
        with pytest.raises(DataParseError) as info:
            load_panel(b"unit,group,y_pre,y_post\na,0,0,0\nb,1,x,1\n", Layout.WIDE, OutcomeKind.CONTINUOUS)
        assert info.value.line == 3
        assert "line 3" in str(info.value)

    def test_missing_column(self):
        with pytest.raises(DataParseError, match="missing column"):
            load_panel(b"unit,group,y_pre\na,0,0\n", Layout.WIDE, OutcomeKind.CONTINUOUS)

    def test_unknown_group_code(self):
        with pytest.raises(DataValidationError, match="unknown group code"):
            load_panel(b"unit,group,y_pre,y_post\na,0,0,0\nb,2,1,1\n", Layout.WIDE, OutcomeKind.CONTINUOUS)

    def test_long_unit_in_one_period(self):
        data = b"unit,period,group,y\na,1,0,0\na,2,0,1\nb,1,1,0\n"
        with pytest.raises(DataValidationError, match="expected exactly 2"):
            load_panel(data, Layout.LONG, OutcomeKind.CONTINUOUS)

    def test_long_needs_two_periods(self):
        data = b"unit,period,group,y\na,1,0,0\na,2,0,1\nb,1,1,0\nb,3,1,1\n"
        with pytest.raises(DataValidationError, match="exactly two distinct periods"):
            load_panel(data, Layout.LONG, OutcomeKind.CONTINUOUS)

    def test_nan_outcome_is_validation_error(self):
        with pytest.raises(DataValidationError, match="non-finite outcome"):
            load_panel(b"unit,group,y_pre,y_post\na,0,0,nan\nb,1,1,1\n", Layout.WIDE, OutcomeKind.CONTINUOUS)

    def test_stratum_column(self):
        data = b"unit,group,y_pre,y_post,stratum\na,0,0,0,x\nb,1,1,1,y\nc,0,1,0,y\n"
        ds = load_panel(data, Layout.WIDE, OutcomeKind.COUNT)
        assert stratum_labels(ds) == ["x", "y"]

    def test_digest_stable(self):
        _, first = load_panel_file(DATA_DIR / "crash_counts.csv", Layout.CONTINGENCY, OutcomeKind.COUNT, top_code=3)
        _, second = load_panel_file(DATA_DIR / "crash_counts.csv", Layout.CONTINGENCY, OutcomeKind.COUNT, top_code=3)
        assert first == second
        assert first == input_digest((DATA_DIR / "crash_counts.csv").read_bytes())
        assert first.startswith("sha256:")


class TestContingency:
    def test_crash_table_sizes(self, crash_counts):
        assert crash_counts.n == 1986
        assert crash_counts.n_treated == 331
        assert int(np.sum(crash_counts.treated & (crash_counts.y_pre == 0))) == 232
        assert crash_counts.top_code == 3

    def test_top_code_is_flagged(self, crash_counts):
        assert any("3+" in note for note in crash_counts.notes)

    def test_cell_expands_to_units(self, crash_counts):
        cell = crash_counts.control & (crash_counts.y_pre == 0) & (crash_counts.y_post == 0)
        assert int(cell.sum()) == 789

    def test_expansion_preserves_counts(self):
        table = read_contingency((DATA_DIR / "crash_counts.csv").read_bytes())
        ds = expand_contingency(table)
        tallies = {}
        for g, a, b in zip(ds.group, ds.y_pre, ds.y_post):
            key = (int(g), int(a), int(b))
            tallies[key] = tallies.get(key, 0) + 1
        assert tallies == table.tallies()

    def test_unit_ids_number_units_within_cell(self):
        ds = expand_contingency(read_contingency(b"group,y_pre,y_post,count\n0,0,1,2\n1,1,0,0\n1,2,2,3\n"))
        assert list(ds.unit_ids) == ["g0_0_1_0", "g0_0_1_1", "g1_2_2_0", "g1_2_2_1", "g1_2_2_2"]
        assert ds.group.tolist() == [0, 0, 1, 1, 1]
        assert ds.y_pre.tolist() == [0, 0, 2, 2, 2]

    def test_top_code_from_plus_suffix(self):
        table = read_contingency(b"group,y_pre,y_post,count\n0,0,2+,3\n1,2+,0,1\n")
        assert table.top_code == 2

    def test_conflicting_top_code(self):
        with pytest.raises(DataParseError, match="top code"):
            read_contingency(b"group,y_pre,y_post,count\n0,0,3+,3\n", top_code=2)

    def test_level_above_top_code(self):
        with pytest.raises(DataValidationError, match="above top code"):
            read_contingency(b"group,y_pre,y_post,count\n0,0,4,3\n1,0,0,1\n", top_code=3)

    def test_empty_table(self):
        with pytest.raises(DataValidationError, match="control group empty"):
            expand_contingency(ContingencyTable(cells=()))

    def test_duplicate_cell(self):
        with pytest.raises(DataValidationError, match="duplicate"):
            read_contingency(b"group,y_pre,y_post,count\n0,0,0,3\n0,0,0,1\n")

    def test_negative_count(self):
        with pytest.raises(ValueError):
            ContingencyTable(cells=(ContingencyCell(0, 0, 0, -1),))


class TestValidate:
    def test_crash_table_is_valid(self, crash_counts):
        assert validate(crash_counts).ok

    def test_non_finite(self):
        ds = make_dataset([0, 1], [0, 1], [np.nan, 1])
        assert any("non-finite outcome" in v for v in validate(ds).violations)

    def test_binary_out_of_range(self):
        ds = make_dataset([0, 1], [0, 1], [2, 1], OutcomeKind.BINARY)
        assert any("outcome out of range" in v for v in validate(ds).violations)

    def test_count_must_be_integer(self):
        ds = make_dataset([0, 1], [0.5, 1], [0, 1], OutcomeKind.COUNT)
        assert any("outcome out of range" in v for v in validate(ds).violations)

    def test_reports_every_violation(self):
        ds = make_dataset([1, 1], [0, np.inf], [0, 1])
        violations = validate(ds).violations
        assert "control group empty" in violations
        assert any("non-finite" in v for v in violations)


class TestTransformations:
    def test_dichotomize_matches_binary_table(self, crash_counts, crash_binary):
        binary = dichotomize(crash_counts)
        assert binary.outcome_kind == OutcomeKind.BINARY
        def rows(ds):
            return sorted(zip(ds.group.tolist(), ds.y_pre.tolist(), ds.y_post.tolist()))

        assert rows(binary) == rows(crash_binary)

    def test_single_stratum(self, tiny):
        ds = assign_single_stratum(tiny)
        assert stratum_labels(ds) == ["all"]
        assert ds.n == tiny.n

    def test_group_level_table(self, tiny):
        table = group_level_table(tiny)
        assert table["levels"].tolist() == [0, 1, 2, 3]
        assert table["n_control"].tolist() == [1, 1, 1, 0]
        assert table["n_treated"].tolist() == [0, 1, 0, 1]
        assert table["sum_post_control"].tolist() == [0, 1, 3, 0]

    def test_units_round_trip(self, tiny):
        stratified = assign_single_stratum(tiny)
        units = stratified.units
        assert units[3] == PanelUnit(unit_id="u3", group=1, y_pre=1.0, y_post=2.0, stratum="all")
        rebuilt = PanelDataset.from_units(units, stratified.outcome_kind)
        assert rebuilt.units == units
        assert rebuilt.group.tolist() == tiny.group.tolist()
        assert stratum_labels(rebuilt) == ["all"]
