"""
Models package for the DID/LDV bracketing toolkit.

This package contains all data models organized by category:
- enums: Enumerations and constants
- panel: Panel data containers (units, datasets, contingency tables)
- results: Estimator, diagnostic, inference and simulation results
- report: Report payloads and the versioned envelope
"""

# Enums and constants
from .enums import (
    OutcomeKind,
    Layout,
    EstimatorMethod,
    DISCRETE_ONLY_METHODS,
    METHOD_ALIASES,
    LdvVariant,
    LDV_VARIANT_METHODS,
    PropensityModel,
    StationarityMethod,
    DominanceDirection,
    BracketOrder,
    Quantity,
    DgpFamily,
    ReportFormat,
    Subcommand,
    PayloadType,
    WIDE_COLUMNS,
    LONG_COLUMNS,
    CONTINGENCY_COLUMNS,
    STRATUM_COLUMN,
    CDF_POINT_COLUMNS,
    CONDITIONAL_MEAN_COLUMNS,
    REPORT_SCHEMA_VERSION,
)

# Panel data
from .panel import (
    PanelUnit,
    PanelDataset,
    ContingencyCell,
    ContingencyTable,
    ValidationReport,
)

# Results
from .results import (
    LeastSquaresFit,
    EstimateResult,
    StationarityReport,
    MonotonicityReport,
    BracketReport,
    LinearBracket,
    BootstrapSpec,
    BootstrapTarget,
    IntervalEstimate,
    ComparisonReport,
    DgpSpec,
    EstimatorMonteCarlo,
    MonteCarloSummary,
)

# Report payloads
from .report import (
    BaseReportPayload,
    EstimatesPayload,
    DiagnosticsPayload,
    BracketPayload,
    IntervalsPayload,
    MonteCarloPayload,
    ReportEnvelope,
)

__all__ = [
    # Enums
    "OutcomeKind",
    "Layout",
    "EstimatorMethod",
    "DISCRETE_ONLY_METHODS",
    "METHOD_ALIASES",
    "LdvVariant",
    "LDV_VARIANT_METHODS",
    "PropensityModel",
    "StationarityMethod",
    "DominanceDirection",
    "BracketOrder",
    "Quantity",
    "DgpFamily",
    "ReportFormat",
    "Subcommand",
    "PayloadType",
    "WIDE_COLUMNS",
    "LONG_COLUMNS",
    "CONTINGENCY_COLUMNS",
    "STRATUM_COLUMN",
    "CDF_POINT_COLUMNS",
    "CONDITIONAL_MEAN_COLUMNS",
    "REPORT_SCHEMA_VERSION",
    # Panel
    "PanelUnit",
    "PanelDataset",
    "ContingencyCell",
    "ContingencyTable",
    "ValidationReport",
    # Results
    "LeastSquaresFit",
    "EstimateResult",
    "StationarityReport",
    "MonotonicityReport",
    "BracketReport",
    "LinearBracket",
    "BootstrapSpec",
    "BootstrapTarget",
    "IntervalEstimate",
    "ComparisonReport",
    "DgpSpec",
    "EstimatorMonteCarlo",
    "MonteCarloSummary",
    # Report
    "BaseReportPayload",
    "EstimatesPayload",
    "DiagnosticsPayload",
    "BracketPayload",
    "IntervalsPayload",
    "MonteCarloPayload",
    "ReportEnvelope",
]
