"""
Command-line frontend.

    estimate   point estimates of one or more estimators
    diagnose   condition checks, gap decomposition and bracket prediction
    bracket    full pipeline: all estimators, diagnostics and optional bootstrap
    bootstrap  percentile intervals for the bracket pair
    simulate   Monte Carlo study under a synthetic data generating process

Reports go to standard output (or --output); logs go to standard error.
"""
import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional, Sequence, Tuple

from src import diagnostics, reporting
from src.config import config
from src.data import assign_single_stratum, dichotomize, load_panel_file
from src.errors import EXIT_OK, EXIT_UNEXPECTED, EXIT_USAGE, DataError, DidLdvError, EstimationError
from src.estimators import did_moment, estimate, stratified
from src.inference import (
    applicable_methods, bootstrap_estimates, bracket_ldv_method, bracket_targets,
    compare_estimators, default_propensity,
)
from src.logger import logger
from src.models import (
    METHOD_ALIASES, BaseReportPayload, BootstrapSpec, BracketPayload, DgpFamily, DgpSpec,
    DiagnosticsPayload, EstimateResult, EstimatesPayload, EstimatorMethod, IntervalsPayload,
    Layout, MonteCarloPayload, OutcomeKind, PanelDataset, PropensityModel, ReportFormat,
    Subcommand,
)
from src.simulate import monte_carlo, summary_rows


class UsageErrorParser(argparse.ArgumentParser):
    """ArgumentParser that exits with the usage code instead of 2."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ============================================================================
# Argument types
# ============================================================================

def _method(value: str) -> EstimatorMethod:
    if value in METHOD_ALIASES:
        return METHOD_ALIASES[value]
    try:
        return EstimatorMethod(value)
    except ValueError:
        choices = ", ".join(list(METHOD_ALIASES) + [m.value for m in EstimatorMethod])
        raise argparse.ArgumentTypeError(f"unknown method {value!r} (choose from {choices})")


def _level(value: str) -> float:
    level = float(value)
    if not 0.0 < level < 1.0:
        raise argparse.ArgumentTypeError(f"level must lie in (0, 1), got {value}")
    return level


def _positive_int(value: str) -> int:
    number = int(value)
    if number <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def _seed(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"seed must be a non-negative integer, got {value}")
    return number


def _non_negative(value: str) -> float:
    number = float(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {value}")
    return number


# ============================================================================
# Parser
# ============================================================================

def build_parser() -> UsageErrorParser:
    output = UsageErrorParser(add_help=False)
    output.add_argument("--format", type=ReportFormat, choices=list(ReportFormat), default=ReportFormat.JSON,
                        help="report format (default: json)")
    output.add_argument("--output", type=Path, help="write the report here instead of standard output")

    data = UsageErrorParser(add_help=False)
    data.add_argument("--input", type=Path, required=True, help="CSV file")
    data.add_argument("--layout", type=Layout, choices=list(Layout), default=Layout.WIDE)
    data.add_argument("--outcome", type=OutcomeKind, choices=list(OutcomeKind), default=OutcomeKind.CONTINUOUS)
    data.add_argument("--top-code", type=int, help="contingency level K meaning 'K or more'")
    data.add_argument("--dichotomize", type=float, nargs="?", const=1.0, metavar="THRESHOLD",
                      help="analyse 1{y >= THRESHOLD} (default threshold 1)")

    seeded = UsageErrorParser(add_help=False)
    seeded.add_argument("--seed", type=_seed, default=config.DEFAULT_SEED)
    seeded.add_argument("--level", type=_level, default=config.BOOTSTRAP_LEVEL)

    parser = UsageErrorParser(prog="did-ldv", description="Difference-in-differences vs lagged-dependent-variable bracketing.")
    commands = parser.add_subparsers(dest="command", required=True, metavar="{estimate,diagnose,bracket,bootstrap,simulate}")

    p = commands.add_parser(Subcommand.ESTIMATE.value, parents=[data, output], help="point estimates")
    p.add_argument("--method", type=_method, action="append", help="estimator (repeatable; default: all applicable)")
    p.add_argument("--propensity", type=PropensityModel, choices=list(PropensityModel))
    p.add_argument("--stratified", action="store_true", help="aggregate within strata weighted by treated share")

    p = commands.add_parser(Subcommand.DIAGNOSE.value, parents=[data, output], help="condition checks and bracket prediction")
    p.add_argument("--tolerance", type=_non_negative, default=config.DOMINANCE_TOLERANCE, help="CDF dominance slack")
    p.add_argument("--plots", type=Path, metavar="DIR", help="write plot-point CSV files here")

    p = commands.add_parser(Subcommand.BRACKET.value, parents=[data, output, seeded], help="full pipeline")
    p.add_argument("--tolerance", type=_non_negative, default=config.DOMINANCE_TOLERANCE)
    p.add_argument("--replicates", type=_positive_int, help="add bootstrap intervals with this many replicates")
    p.add_argument("--plots", type=Path, metavar="DIR")

    p = commands.add_parser(Subcommand.BOOTSTRAP.value, parents=[data, output, seeded], help="bootstrap intervals")
    p.add_argument("--method", type=_method, help="LDV estimator compared with did_moment")
    p.add_argument("--replicates", type=_positive_int, default=config.BOOTSTRAP_REPLICATES)
    p.add_argument("--no-stratify", action="store_true", help="resample units ignoring group")

    p = commands.add_parser(Subcommand.SIMULATE.value, parents=[output], help="Monte Carlo study")
    p.add_argument("--family", type=DgpFamily, choices=list(DgpFamily), required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.5)
    p.add_argument("--selection", type=float, default=0.0)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--baseline-mean", type=float, default=0.0)
    p.add_argument("--baseline-sd", type=float, default=1.0)
    p.add_argument("--intercept", type=float, default=0.0)
    p.add_argument("--time-shift", type=float, default=0.0)
    p.add_argument("--reps", type=_positive_int, default=500)
    p.add_argument("--seed", type=_seed, default=config.DEFAULT_SEED)
    p.add_argument("--replicates-csv", type=Path, help="write per-replication rows here")

    return parser


# ============================================================================
# Commands
# ============================================================================

def _flags(args: argparse.Namespace) -> Dict[str, Any]:
    """Echo of the parsed flags with JSON-friendly values."""
    echo = {}
    for key, value in sorted(vars(args).items()):
        if key == "command":
            continue
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, list):
            value = [getattr(v, "value", v) for v in value]
        else:
            value = getattr(value, "value", value)
        echo[key] = value
    return echo


def _load(args: argparse.Namespace) -> Tuple[PanelDataset, str]:
    try:
        ds, digest = load_panel_file(args.input, args.layout, args.outcome, top_code=args.top_code)
    except OSError as e:
        raise DataError(f"cannot read {args.input}: {e.strerror or e}")
    if args.dichotomize is not None:
        ds = dichotomize(ds, args.dichotomize)
    return ds, digest


def _run_estimate(args: argparse.Namespace, ds: PanelDataset) -> BaseReportPayload:
    propensity = args.propensity or default_propensity(ds)
    if args.stratified and ds.strata is None:
        logger.warning("⚠️ --stratified without a stratum column: using a single stratum")
        ds = assign_single_stratum(ds)

    def run_one(method: EstimatorMethod) -> EstimateResult:
        if args.stratified:
            return stratified(ds, method, propensity)
        return estimate(ds, method, propensity)

    results: List[EstimateResult] = []
    unavailable: Dict[EstimatorMethod, str] = {}
    if args.method:
        # explicitly requested estimators must succeed
        results = [run_one(m) for m in args.method]
    else:
        for method in applicable_methods(ds):
            try:
                results.append(run_one(method))
            except EstimationError as e:
                unavailable[method] = str(e)
                logger.warning(f"⚠️ {method.value} unavailable: {e}")

    for result in results:
        logger.info(f"📊 {result.method.value}: mu1={result.mu1:.4f} mu0={result.mu0:.4f} tau={result.tau:.4f}")
    return EstimatesPayload(dataset=ds.summary(), estimates=results, unavailable=unavailable)


def _run_diagnose(args: argparse.Namespace, ds: PanelDataset) -> BaseReportPayload:
    warnings = list(ds.notes)
    stationarity = diagnostics.check_stationarity(ds)
    monotonicity = diagnostics.check_monotonicity(ds, args.tolerance)

    report = None
    try:
        did = did_moment(ds)
        ldv = estimate(ds, bracket_ldv_method(ds), default_propensity(ds))
        delta_table, gap = diagnostics.lemma1_gap(ds)
        report = diagnostics.predict_bracket(
            stationarity, monotonicity, did, ldv,
            delta_table=delta_table, gap=gap, delta_description=diagnostics.delta_description(ds),
        )
    except EstimationError as e:
        warnings.append(f"bracket unavailable: {e}")

    linear = None
    if not ds.outcome_kind.is_discrete:
        try:
            linear = diagnostics.linear_bracket(ds)
        except EstimationError as e:
            warnings.append(f"linear bracket unavailable: {e}")

    for message in warnings:
        logger.warning(f"⚠️ {message}")
    conditional_means = diagnostics.conditional_mean_table(ds)
    if args.plots:
        reporting.write_plot_points(args.plots, diagnostics.cdf_points(monotonicity), conditional_means)
    return DiagnosticsPayload(
        dataset=ds.summary(),
        stationarity=stationarity,
        monotonicity=monotonicity,
        bracket=report,
        linear_bracket=linear,
        conditional_means=conditional_means,
        warnings=warnings + stationarity.warnings,
    )


def _run_bracket(args: argparse.Namespace, ds: PanelDataset) -> BaseReportPayload:
    spec = None
    if args.replicates is not None:
        spec = BootstrapSpec(replicates=args.replicates, seed=args.seed, level=args.level)
    comparison = compare_estimators(ds, spec, tolerance=args.tolerance)
    if args.plots and comparison.monotonicity is not None:
        reporting.write_plot_points(args.plots, diagnostics.cdf_points(comparison.monotonicity), comparison.conditional_means)
    if comparison.bracket is not None:
        logger.info(f"📊 Predicted {comparison.bracket.predicted_order.value}, observed {comparison.bracket.observed_order.value}")
    return BracketPayload(comparison=comparison)


def _run_bootstrap(args: argparse.Namespace, ds: PanelDataset) -> BaseReportPayload:
    propensity = default_propensity(ds)
    ldv_method = args.method or bracket_ldv_method(ds)
    if ldv_method == EstimatorMethod.DID_MOMENT:
        raise EstimationError("bootstrap compares did_moment with an LDV estimator; pick another --method")
    with_gamma = did_moment(ds).gamma is not None and estimate(ds, ldv_method, propensity).gamma is not None
    spec = BootstrapSpec(replicates=args.replicates, seed=args.seed, level=args.level, stratify_by_group=not args.no_stratify)
    intervals = bootstrap_estimates(ds, bracket_targets(ldv_method, propensity, gamma=with_gamma), spec)
    return IntervalsPayload(dataset=ds.summary(), intervals=intervals, replicates=spec.replicates, seed=spec.seed, level=spec.level)


def _run_simulate(args: argparse.Namespace) -> BaseReportPayload:
    spec = DgpSpec(
        family=args.family,
        n=args.n,
        tau_true=args.tau,
        beta=args.beta,
        selection=args.selection,
        noise_sd=args.noise_sd,
        baseline_mean=args.baseline_mean,
        baseline_sd=args.baseline_sd,
        intercept=args.intercept,
        time_shift=args.time_shift,
    )
    summary = monte_carlo(spec, args.reps, seed=args.seed)
    if args.replicates_csv:
        reporting.write_rows(args.replicates_csv, summary_rows(summary))
    return MonteCarloPayload(summary=summary)


_DATA_COMMANDS = {
    Subcommand.ESTIMATE.value: _run_estimate,
    Subcommand.DIAGNOSE.value: _run_diagnose,
    Subcommand.BRACKET.value: _run_bracket,
    Subcommand.BOOTSTRAP.value: _run_bootstrap,
}


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text, encoding="utf-8")
        logger.info(f"✅ Report written to {output}")


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse `argv`, run the subcommand and return the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        if args.command == Subcommand.SIMULATE.value:
            try:
                payload = _run_simulate(args)
            except ValueError as e:
                parser.print_usage(sys.stderr)
                sys.stderr.write(f"{parser.prog}: error: {e}\n")
                return EXIT_USAGE
            digest = None
        else:
            ds, digest = _load(args)
            payload = _DATA_COMMANDS[args.command](args, ds)

        envelope = reporting.build_envelope(args.command, _flags(args), payload, input_digest=digest)
        if args.format == ReportFormat.MARKDOWN:
            text = reporting.render_markdown(envelope)
        else:
            text = reporting.render_json(envelope)
        _emit(text, args.output)
        return EXIT_OK
    except DidLdvError as e:
        logger.error(f"❌ {args.command} failed: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"❌ Unexpected error in {args.command}: {e}")
        return EXIT_UNEXPECTED
