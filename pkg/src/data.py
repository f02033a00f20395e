"""
Panel data ingestion, validation and normalization.

Three CSV layouts are accepted (see `Layout`):
- wide:        unit,group,y_pre,y_post[,stratum]
- long:        unit,period,group,y[,stratum]   (exactly two distinct periods)
- contingency: group,y_pre,y_post,count        (discrete outcomes, optional top code)

Every loader returns a validated, immutable PanelDataset or raises a DataError.
"""
import hashlib
import io
import re
from pathlib import Path
from typing import BinaryIO, Dict, Hashable, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.errors import DataParseError, DataValidationError
from src.logger import logger
from src.models import (
    CONTINGENCY_COLUMNS, LONG_COLUMNS, STRATUM_COLUMN, WIDE_COLUMNS,
    ContingencyCell, ContingencyTable, Layout, OutcomeKind, PanelDataset, ValidationReport,
)

Source = Union[bytes, BinaryIO]

# pandas reports tokenizer failures as "... in line N, saw M"
_PARSER_LINE_PATTERN = re.compile(r"line (\d+)")
_NUMERIC_LITERALS = {"nan", "inf", "+inf", "-inf", "infinity", "-infinity"}
# Number of offending lines quoted in a violation message
_MAX_QUOTED_LINES = 5


def _read_bytes(source: Source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        return bytes(source)
    return source.read()


def input_digest(raw: bytes) -> str:
    """Content hash used by the report envelope."""
    return "sha256:" + hashlib.sha256(raw).hexdigest()


def _read_frame(raw: bytes, required: List[str]) -> pd.DataFrame:
    """Parse CSV text into string columns, checking the header."""
    try:
        frame = pd.read_csv(
            io.BytesIO(raw),
            dtype=str,
            keep_default_na=False,
            skipinitialspace=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        raise DataParseError("empty input, expected a header row", line=1)
    except pd.errors.ParserError as e:
        match = _PARSER_LINE_PATTERN.search(str(e))
        raise DataParseError(f"malformed row ({e})", line=int(match.group(1)) if match else None)
    except UnicodeDecodeError as e:
        raise DataParseError(f"input is not UTF-8 text: {e}")

    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DataParseError(f"missing column(s) {', '.join(missing)}; header is {','.join(frame.columns)}", line=1)
    unexpected = [c for c in frame.columns if c not in required and c != STRATUM_COLUMN]
    if unexpected:
        raise DataParseError(f"unexpected column(s) {', '.join(unexpected)}", line=1)
    for column in frame.columns:
        frame[column] = frame[column].str.strip()
    return frame


def _parse_numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    """Locale-independent float parsing; the first malformed cell raises with its line number."""
    raw = frame[column]
    values = pd.to_numeric(raw, errors="coerce")
    bad = values.isna() & ~raw.str.lower().isin(_NUMERIC_LITERALS)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        cell = raw.iloc[row]
        what = "missing value" if cell == "" else f"non-numeric value {cell!r}"
        # header is line 1
        raise DataParseError(f"{what} in column '{column}'", line=row + 2)
    return values.to_numpy(dtype=np.float64)


def _parse_group(frame: pd.DataFrame) -> np.ndarray:
    raw = frame["group"]
    values = pd.to_numeric(raw, errors="coerce")
    bad = ~values.isin([0, 1])
    if bad.any():
        rows = np.flatnonzero(bad.to_numpy())
        quoted = ", ".join(f"{raw.iloc[r]!r} (line {r + 2})" for r in rows[:_MAX_QUOTED_LINES])
        raise DataValidationError([f"unknown group code: {quoted}; expected 0 or 1"])
    return values.to_numpy(dtype=np.int64)


def _parse_strata(frame: pd.DataFrame) -> Optional[np.ndarray]:
    if STRATUM_COLUMN not in frame.columns:
        return None
    raw = frame[STRATUM_COLUMN]
    blank = raw == ""
    if blank.any():
        row = int(np.flatnonzero(blank.to_numpy())[0])
        raise DataParseError(f"missing value in column '{STRATUM_COLUMN}'", line=row + 2)
    return raw.to_numpy(dtype=object)


# ============================================================================
# Loaders
# ============================================================================

def _load_wide(raw: bytes, outcome_kind: OutcomeKind) -> PanelDataset:
    frame = _read_frame(raw, WIDE_COLUMNS)
    y_pre = _parse_numeric(frame, "y_pre")
    y_post = _parse_numeric(frame, "y_post")
    group = _parse_group(frame)
    duplicated = frame["unit"].duplicated(keep=False)
    if duplicated.any():
        units = sorted(set(frame.loc[duplicated, "unit"]))
        raise DataValidationError([f"unit(s) listed more than once in wide layout: {', '.join(units[:_MAX_QUOTED_LINES])}"])
    return PanelDataset(
        unit_ids=frame["unit"].to_numpy(dtype=object),
        group=group,
        y_pre=y_pre,
        y_post=y_post,
        outcome_kind=outcome_kind,
        strata=_parse_strata(frame),
    )


def _period_order(periods: List[str]) -> Tuple[str, str]:
    """Smaller period is 'pre': numerically when both parse, otherwise lexicographically."""
    try:
        numeric = [float(p) for p in periods]
        first, second = sorted(zip(numeric, periods))
        return first[1], second[1]
    except ValueError:
        first, second = sorted(periods)
        return first, second


def _load_long(raw: bytes, outcome_kind: OutcomeKind) -> PanelDataset:
    frame = _read_frame(raw, LONG_COLUMNS)
    frame["y_value"] = _parse_numeric(frame, "y")
    frame["group_value"] = _parse_group(frame)
    strata = _parse_strata(frame)

    periods = list(pd.unique(frame["period"]))
    if len(periods) != 2:
        raise DataValidationError([f"long layout needs exactly two distinct periods, found {len(periods)}: {periods[:_MAX_QUOTED_LINES]}"])
    pre_label, post_label = _period_order(periods)

    violations: List[str] = []
    per_unit = frame.groupby("unit", sort=False)
    sizes = per_unit["period"].nunique()
    rows = per_unit.size()
    broken = sizes[(sizes != 2) | (rows != 2)]
    for unit in list(broken.index)[:_MAX_QUOTED_LINES]:
        violations.append(f"unit {unit!r} appears in {int(rows[unit])} row(s) covering {int(sizes[unit])} period(s); expected exactly 2")
    if len(broken) > _MAX_QUOTED_LINES:
        violations.append(f"... and {len(broken) - _MAX_QUOTED_LINES} more units with != 2 periods")

    inconsistent_group = per_unit["group_value"].nunique() > 1
    for unit in list(inconsistent_group[inconsistent_group].index)[:_MAX_QUOTED_LINES]:
        violations.append(f"unit {unit!r} changes group between periods")
    if strata is not None:
        inconsistent_stratum = per_unit[STRATUM_COLUMN].nunique() > 1
        for unit in list(inconsistent_stratum[inconsistent_stratum].index)[:_MAX_QUOTED_LINES]:
            violations.append(f"unit {unit!r} changes stratum between periods")
    if violations:
        raise DataValidationError(violations)

    pre = frame[frame["period"] == pre_label].set_index("unit")
    post = frame[frame["period"] == post_label].set_index("unit")
    order = pd.Index(pd.unique(frame["unit"]))
    pre, post = pre.loc[order], post.loc[order]

    logger.debug(f"Long layout periods: pre={pre_label!r}, post={post_label!r}")
    return PanelDataset(
        unit_ids=order.to_numpy(dtype=object),
        group=pre["group_value"].to_numpy(),
        y_pre=pre["y_value"].to_numpy(),
        y_post=post["y_value"].to_numpy(),
        outcome_kind=outcome_kind,
        strata=pre[STRATUM_COLUMN].to_numpy(dtype=object) if strata is not None else None,
    )


def _parse_level(cell: str, line: int, top_code: Optional[int]) -> Tuple[int, Optional[int]]:
    """Integer level; a trailing '+' marks the top code."""
    marked = cell.endswith("+")
    text = cell[:-1] if marked else cell
    try:
        level = int(text)
    except ValueError:
        raise DataParseError(f"contingency level {cell!r} is not an integer", line=line)
    if marked:
        if top_code is not None and top_code != level:
            raise DataParseError(f"level {cell!r} disagrees with declared top code {top_code}", line=line)
        top_code = level
    return level, top_code


def read_contingency(source: Source, top_code: Optional[int] = None) -> ContingencyTable:
    """Parse a contingency CSV (group,y_pre,y_post,count) into a ContingencyTable."""
    frame = _read_frame(_read_bytes(source), CONTINGENCY_COLUMNS)
    if STRATUM_COLUMN in frame.columns:
        raise DataParseError("contingency layout does not take a stratum column", line=1)
    group = _parse_group(frame)

    cells: List[ContingencyCell] = []
    rows = zip(frame["y_pre"], frame["y_post"], frame["count"])
    for i, (pre_cell, post_cell, count_cell) in enumerate(rows):
        line = i + 2
        y_pre, top_code = _parse_level(pre_cell, line, top_code)
        y_post, top_code = _parse_level(post_cell, line, top_code)
        try:
            count = int(count_cell)
        except ValueError:
            raise DataParseError(f"count {count_cell!r} is not an integer", line=line)
        cells.append(ContingencyCell(group=int(group[i]), y_pre_level=y_pre, y_post_level=y_post, count=count))

    try:
        table = ContingencyTable(cells=tuple(cells), top_code=top_code)
    except ValueError as e:
        raise DataValidationError([str(e)])

    if top_code is not None:
        above = [c for c in table.cells if max(c.y_pre_level, c.y_post_level) > top_code]
        if above:
            raise DataValidationError([f"level above top code {top_code} in cell (group={above[0].group}, y_pre={above[0].y_pre_level}, y_post={above[0].y_post_level})"])
    return table


def expand_contingency(table: ContingencyTable, outcome_kind: OutcomeKind = OutcomeKind.COUNT) -> PanelDataset:
    """
    Materialize one PanelUnit per counted unit.

    Top-coded levels ("K+") become the numeric value K; the dataset notes record
    that table-derived means understate raw-data means wherever K+ cells are non-empty.
    """
    counts = np.array([c.count for c in table.cells], dtype=np.int64)
    group = np.repeat([c.group for c in table.cells], counts)
    y_pre = np.repeat([c.y_pre_level for c in table.cells], counts)
    y_post = np.repeat([c.y_post_level for c in table.cells], counts)
    # position of each unit within its cell
    offsets = np.cumsum(counts) - counts
    within = np.arange(int(counts.sum())) - np.repeat(offsets, counts)
    prefixes = pd.Series(
        np.repeat([f"g{c.group}_{c.y_pre_level}_{c.y_post_level}_" for c in table.cells], counts),
        dtype=object,
    )
    unit_ids = (prefixes + pd.Series(within).astype(str)).tolist()

    notes: List[str] = []
    if table.top_code is not None:
        truncated = sum(
            c.count for c in table.cells
            if table.top_code in (c.y_pre_level, c.y_post_level)
        )
        notes.append(
            f"top-coded level {table.top_code}+ materialized as {table.top_code} for {truncated} unit(s); "
            f"means involving that level understate the raw-data values"
        )

    ds = PanelDataset(
        unit_ids=unit_ids,
        group=group,
        y_pre=y_pre,
        y_post=y_post,
        outcome_kind=outcome_kind,
        top_code=table.top_code,
        notes=tuple(notes),
    )
    _raise_if_invalid(ds)
    return ds


def load_panel(
    source: Source,
    layout: Layout,
    outcome_kind: OutcomeKind,
    top_code: Optional[int] = None,
) -> PanelDataset:
    """
    Load and validate a panel dataset from CSV bytes or a binary stream.

    Raises:
        DataParseError: malformed row (message carries the line number)
        DataValidationError: any PanelDataset invariant violated
    """
    layout = Layout(layout)
    outcome_kind = OutcomeKind(outcome_kind)
    raw = _read_bytes(source)

    if layout == Layout.CONTINGENCY:
        ds = expand_contingency(read_contingency(raw, top_code=top_code), outcome_kind)
    else:
        if top_code is not None:
            logger.warning(f"⚠️ --top-code only applies to the contingency layout, ignored for {layout.value}")
        ds = _load_wide(raw, outcome_kind) if layout == Layout.WIDE else _load_long(raw, outcome_kind)
        _raise_if_invalid(ds)

    logger.info(f"✅ Loaded {ds.n} units ({ds.n_treated} treated, {ds.n_control} control) from {layout.value} layout")
    return ds


def load_panel_file(
    path: Path,
    layout: Layout,
    outcome_kind: OutcomeKind,
    top_code: Optional[int] = None,
) -> Tuple[PanelDataset, str]:
    """Load a dataset from disk and return it with the input digest."""
    raw = Path(path).read_bytes()
    return load_panel(raw, layout, outcome_kind, top_code=top_code), input_digest(raw)


# ============================================================================
# Validation
# ============================================================================

def validate(ds: PanelDataset) -> ValidationReport:
    """List every invariant violation; an empty report means estimators can run."""
    report = ValidationReport()

    if ds.n_control == 0:
        report.violations.append("control group empty")
    if ds.n_treated == 0:
        report.violations.append("treated group empty")

    bad_group = ~np.isin(ds.group, (0, 1))
    if bad_group.any():
        report.violations.append(f"group must be 0 or 1 ({int(bad_group.sum())} unit(s) violate)")

    outcomes = np.concatenate([ds.y_pre, ds.y_post])
    finite = np.isfinite(outcomes)
    if not finite.all():
        report.violations.append(f"non-finite outcome ({int((~finite).sum())} value(s))")

    values = outcomes[finite]
    if ds.outcome_kind == OutcomeKind.BINARY:
        out_of_range = ~np.isin(values, (0.0, 1.0))
        if out_of_range.any():
            report.violations.append(f"outcome out of range for binary outcome: {sorted(set(values[out_of_range].tolist()))[:_MAX_QUOTED_LINES]}")
    elif ds.outcome_kind == OutcomeKind.COUNT:
        out_of_range = (values < 0) | (values != np.floor(values))
        if out_of_range.any():
            report.violations.append(f"outcome out of range for count outcome (nonnegative integers): {sorted(set(values[out_of_range].tolist()))[:_MAX_QUOTED_LINES]}")

    return report


def _raise_if_invalid(ds: PanelDataset) -> None:
    report = validate(ds)
    if not report.ok:
        for violation in report.violations:
            logger.error(f"❌ Validation failed: {violation}")
        raise DataValidationError(report.violations)


# ============================================================================
# Transformations
# ============================================================================

def dichotomize(ds: PanelDataset, threshold: float = 1) -> PanelDataset:
    """Binary outcome 1{y >= threshold} in both periods (e.g. "at least one crash")."""
    y_pre = (ds.y_pre >= threshold).astype(np.float64)
    y_post = (ds.y_post >= threshold).astype(np.float64)
    note = f"outcome dichotomized as 1{{y >= {threshold:g}}}"
    logger.debug(f"Dichotomized {ds.n} units at threshold {threshold:g}")
    return ds.with_outcomes(y_pre, y_post, OutcomeKind.BINARY, notes=[note])


def assign_single_stratum(ds: PanelDataset, label: Hashable = "all") -> PanelDataset:
    """Put every unit in one stratum (trivial stratification)."""
    return ds.with_strata([label] * ds.n)


def stratum_labels(ds: PanelDataset) -> List[Hashable]:
    """Distinct stratum labels in order of first appearance."""
    if ds.strata is None:
        return []
    return list(pd.unique(pd.Series(ds.strata, dtype=object)))


def group_level_table(ds: PanelDataset) -> Dict[str, np.ndarray]:
    """
    Per y_pre level: control count, treated count and control sum of y_post.

    Levels are the sorted pooled support of y_pre.
    """
    levels = np.unique(ds.y_pre)
    positions = np.searchsorted(levels, ds.y_pre)
    control, treated = ds.control, ds.treated
    return {
        "levels": levels,
        "n_control": np.bincount(positions[control], minlength=len(levels)),
        "n_treated": np.bincount(positions[treated], minlength=len(levels)),
        "sum_post_control": np.bincount(positions[control], weights=ds.y_post[control], minlength=len(levels)),
    }
