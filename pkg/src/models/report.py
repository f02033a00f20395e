"""Report payload models serialized by the CLI."""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from .enums import EstimatorMethod, PayloadType, REPORT_SCHEMA_VERSION
from .results import (
    BracketReport, ComparisonReport, EstimateResult, IntervalEstimate,
    LinearBracket,
    MonotonicityReport, MonteCarloSummary, StationarityReport,
)


class BaseReportPayload(ABC):
    """Abstract base class for all report payloads."""

    @property
    @abstractmethod
    def payload_type(self) -> PayloadType:
        """Payload type identifier."""
        pass

    @property
    @abstractmethod
    def data(self) -> Any:
        """Payload body."""
        pass

    def to_dict(self) -> Dict[str, Any]:
        """Convert payload to dictionary for JSON serialization."""
        return {"type": self.payload_type.value, "data": self.data}


@dataclass
class EstimatesPayload(BaseReportPayload):
    """Point estimates of one or more estimators."""
    dataset: Dict[str, Any]
    estimates: List[EstimateResult]
    unavailable: Dict[EstimatorMethod, str] = field(default_factory=dict)

    @property
    def payload_type(self) -> PayloadType:
        return PayloadType.ESTIMATES

    @property
    def data(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset,
            "estimates": [e.to_dict() for e in self.estimates],
            "unavailable": {m.value: reason for m, reason in self.unavailable.items()},
        }


@dataclass
class DiagnosticsPayload(BaseReportPayload):
    """Condition checks and the gap decomposition."""
    dataset: Dict[str, Any]
    stationarity: StationarityReport
    monotonicity: MonotonicityReport
    bracket: Optional[BracketReport]
    linear_bracket: Optional[LinearBracket] = None
    conditional_means: List[Dict[str, Any]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def payload_type(self) -> PayloadType:
        return PayloadType.DIAGNOSTICS

    @property
    def data(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset,
            "stationarity": self.stationarity.to_dict(),
            "monotonicity": self.monotonicity.to_dict(),
            "bracket": self.bracket.to_dict() if self.bracket else None,
            "linear_bracket": self.linear_bracket.to_dict() if self.linear_bracket else None,
            "conditional_means": list(self.conditional_means),
            "warnings": list(self.warnings),
        }


@dataclass
class BracketPayload(BaseReportPayload):
    """Full pipeline: estimators, diagnostics, prediction vs observation, intervals."""
    comparison: ComparisonReport

    @property
    def payload_type(self) -> PayloadType:
        return PayloadType.BRACKET

    @property
    def data(self) -> Dict[str, Any]:
        return self.comparison.to_dict()


@dataclass
class IntervalsPayload(BaseReportPayload):
    """Bootstrap intervals."""
    dataset: Dict[str, Any]
    intervals: List[IntervalEstimate]
    replicates: int
    seed: int
    level: float

    @property
    def payload_type(self) -> PayloadType:
        return PayloadType.INTERVALS

    @property
    def data(self) -> Dict[str, Any]:
        return {
            "dataset": self.dataset,
            "replicates": self.replicates,
            "seed": self.seed,
            "level": self.level,
            "intervals": [i.to_dict() for i in self.intervals],
        }


@dataclass
class MonteCarloPayload(BaseReportPayload):
    """Monte Carlo summary."""
    summary: MonteCarloSummary

    @property
    def payload_type(self) -> PayloadType:
        return PayloadType.MONTE_CARLO

    @property
    def data(self) -> Dict[str, Any]:
        return self.summary.to_dict()


@dataclass
class ReportEnvelope:
    """Versioned wrapper around one payload."""
    tool_version: str
    input_digest: Optional[str]
    command: str
    flags: Dict[str, Any]
    timestamp: str
    payload: BaseReportPayload

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "tool_version": self.tool_version,
            "input_digest": self.input_digest,
            "command": self.command,
            "flags": self.flags,
            "timestamp": self.timestamp,
            "payload": self.payload.to_dict(),
        }
