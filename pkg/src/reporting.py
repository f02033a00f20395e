"""
Report rendering: JSON envelope, markdown summary and plot-point CSV files.

JSON carries full precision with sorted keys. Markdown shows the same payload
values rounded for display and adds no numbers of its own.
"""
import json
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

import pandas as pd

from src import __version__
from src.config import config
from src.logger import logger
from src.models import (
    CDF_POINT_COLUMNS, CONDITIONAL_MEAN_COLUMNS, BaseReportPayload, ReportEnvelope,
)


def report_timestamp(source_date_epoch: Optional[str] = None) -> str:
    """UTC ISO-8601 timestamp; SOURCE_DATE_EPOCH pins it for reproducible reports."""
    source_date_epoch = source_date_epoch or config.SOURCE_DATE_EPOCH
    if source_date_epoch:
        moment = datetime.fromtimestamp(int(source_date_epoch), tz=timezone.utc)
    else:
        moment = datetime.now(timezone.utc).replace(microsecond=0)
    return moment.isoformat()


def build_envelope(
    command: str,
    flags: Dict[str, Any],
    payload: BaseReportPayload,
    input_digest: Optional[str] = None,
    timestamp: Optional[str] = None,
) -> ReportEnvelope:
    return ReportEnvelope(
        tool_version=__version__,
        input_digest=input_digest,
        command=command,
        flags=flags,
        timestamp=timestamp or report_timestamp(),
        payload=payload,
    )


# ============================================================================
# JSON
# ============================================================================

def _json_safe(value: Any) -> Any:
    """Non-finite floats become null; tuples become lists."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def render_json(envelope: ReportEnvelope) -> str:
    return json.dumps(_json_safe(envelope.to_dict()), sort_keys=True, indent=2, default=str) + "\n"


# ============================================================================
# Markdown
# ============================================================================

def _fmt(value: Any, decimals: int) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{decimals}f}" if math.isfinite(value) else "n/a"
    if isinstance(value, dict):
        return ", ".join(f"{k}={_fmt(v, decimals)}" for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return "; ".join(_fmt(v, decimals) for v in value)
    return str(value)


def _is_flat_row(value: Any) -> bool:
    return isinstance(value, dict) and not any(isinstance(v, list) and v and isinstance(v[0], dict) for v in value.values())


def _columns(rows: List[Dict[str, Any]]) -> List[str]:
    columns: List[str] = []
    for row in rows:
        columns.extend(c for c in row if c not in columns)
    return columns


def _table(rows: List[Dict[str, Any]], decimals: int, keys: Optional[List[Any]] = None) -> List[str]:
    """Markdown table; `keys` adds a leading name column."""
    columns = _columns(rows)
    header = (["name"] if keys is not None else []) + columns
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    for k, row in enumerate(rows):
        cells = [_fmt(row.get(c), decimals) for c in columns]
        if keys is not None:
            cells.insert(0, str(keys[k]))
        lines.append("| " + " | ".join(cells) + " |")
    return lines


def _section(title: str, value: Any, decimals: int, level: int) -> List[str]:
    heading = "#" * min(level, 6) + " " + title
    if isinstance(value, list) and value and all(_is_flat_row(v) for v in value):
        return [heading, ""] + _table(value, decimals) + [""]
    if isinstance(value, dict) and value and all(_is_flat_row(v) for v in value.values()):
        return [heading, ""] + _table(list(value.values()), decimals, keys=list(value.keys())) + [""]
    if isinstance(value, dict):
        lines = [heading, ""]
        nested = []
        for key, item in value.items():
            if isinstance(item, (dict, list)) and item and not (isinstance(item, list) and not isinstance(item[0], dict)):
                nested.append((key, item))
            else:
                lines.append(f"- **{key}**: {_fmt(item, decimals)}")
        lines.append("")
        for key, item in nested:
            lines.extend(_section(key, item, decimals, level + 1))
        return lines
    return [heading, "", _fmt(value, decimals), ""]


def render_markdown(envelope: ReportEnvelope, decimals: int = config.DISPLAY_DECIMALS) -> str:
    """Human-readable report of the same envelope, numbers rounded to `decimals`."""
    data = _json_safe(envelope.to_dict())
    payload = data["payload"]
    lines = [
        f"# {envelope.command} report",
        "",
        f"- **tool_version**: {data['tool_version']}",
        f"- **schema_version**: {data['schema_version']}",
        f"- **input_digest**: {_fmt(data['input_digest'], decimals)}",
        f"- **timestamp**: {data['timestamp']}",
        f"- **flags**: {_fmt(data['flags'], decimals)}",
        "",
    ]
    body = payload["data"]
    if isinstance(body, dict):
        for key, value in body.items():
            lines.extend(_section(key, value, decimals, level=2))
    else:
        lines.extend(_section(payload["type"], body, decimals, level=2))
    return "\n".join(lines).rstrip() + "\n"


# ============================================================================
# Plot points
# ============================================================================

def _write_csv(path: Path, rows: Iterable[Dict[str, Any]], columns: List[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(list(rows), columns=columns).to_csv(path, index=False)
    logger.debug(f"Wrote {path}")
    return path


def write_plot_points(
    directory: Path,
    cdf_rows: Optional[List[Dict[str, Any]]] = None,
    conditional_mean_rows: Optional[List[Dict[str, Any]]] = None,
) -> List[Path]:
    """Write cdf_points.csv and conditional_means.csv into `directory`."""
    directory = Path(directory)
    written = []
    if cdf_rows is not None:
        written.append(_write_csv(directory / "cdf_points.csv", cdf_rows, CDF_POINT_COLUMNS))
    if conditional_mean_rows is not None:
        written.append(_write_csv(directory / "conditional_means.csv", conditional_mean_rows, CONDITIONAL_MEAN_COLUMNS))
    logger.info(f"📊 Wrote {len(written)} plot-point file(s) to {directory}")
    return written


def write_rows(path: Path, rows: List[Dict[str, Any]]) -> Path:
    """Write arbitrary rows (e.g. Monte Carlo replications) with columns in first-seen order."""
    return _write_csv(Path(path), rows, _columns(rows))
