import typer
from typing import Annotated, Any, Callable, Dict, List, Optional

from szmk.protocol import TheoremId
from szmk.utils.config import OutputFormat

from src.console.runner._config import Command, RunConfig, parse_m_list, resolve_settings
from src.console.runner.runner import COLUMNS, BOUND_THEOREMS, SuiteRunner, figure_columns, write_rows
from src.console.utils import log

app = typer.Typer(add_completion=False, no_args_is_help=True)


def _check_m(value: Optional[str]) -> Optional[str]:
    if value is None:
        return value
    try:
        parse_m_list(value)
    except ValueError as e:
        raise typer.BadParameter(str(e))
    return value


FunctionOpt = Annotated[Optional[str], typer.Option("--function", "-f", help="Registered function, `name:param` for parameterized entries.")]
MOpt = Annotated[Optional[str], typer.Option("--m", callback=_check_m, help="Comma-separated operator indices, e.g. 10,25,100.")]
AOpt = Annotated[Optional[float], typer.Option("--a", help="Base a > 1.")]
XLoOpt = Annotated[Optional[float], typer.Option("--x-lo", help="Left end of the x grid.")]
XHiOpt = Annotated[Optional[float], typer.Option("--x-hi", help="Right end of the x grid.")]
PointsOpt = Annotated[Optional[int], typer.Option("--points", help="Uniform grid points.")]
OutOpt = Annotated[Optional[str], typer.Option("--out", "-o", help="Output file; stdout when omitted.")]
FormatOpt = Annotated[Optional[OutputFormat], typer.Option("--format", help="Output format.")]
TailTolOpt = Annotated[Optional[float], typer.Option("--tail-tol", help="Poisson mass the truncation may drop.")]
QuadOrderOpt = Annotated[Optional[int], typer.Option("--quad-order", help="Gauss-Legendre nodes per segment.")]
COpt = Annotated[Optional[float], typer.Option("--C", help="Constant of the DBV estimate.")]
ConfigOpt = Annotated[Optional[str], typer.Option("--config", help="JSON or key=value file; flags override it.")]
WorkersOpt = Annotated[Optional[int], typer.Option("--workers", help="Threads for grid rows.")]
LogLevelOpt = Annotated[Optional[str], typer.Option("--log-level", help="DEBUG, INFO, WARNING or ERROR.")]


def _execute(
    command: Command,
    out: Optional[str],
    config: Optional[str],
    produce: Callable[[SuiteRunner], List[Dict[str, Any]]],
    columns: Optional[Callable[[RunConfig], List[str]]] = None,
    perturb: float = 0.0,
    **flags: Any,
) -> SuiteRunner:
    """
    Resolves settings, builds the runner, writes the rows. Library and validation errors
    exit with code 2.
    """
    try:
        settings = resolve_settings(config, **flags)
        run_config = RunConfig.from_settings(command, settings, output_path=out)
        runner = SuiteRunner(settings, run_config, perturb=perturb)
        rows = produce(runner)
        header = columns(run_config) if columns else COLUMNS[command]
        write_rows(rows, header, run_config.output_path, run_config.format)
    except (ValueError, OSError) as e:
        log.error(f"{command.value}: {e}")
        raise typer.Exit(code=2)
    return runner


@app.command("eval")
def eval_operator(
    function: FunctionOpt = None, m: MOpt = None, a: AOpt = None,
    x_lo: XLoOpt = None, x_hi: XHiOpt = None, points: PointsOpt = None,
    out: OutOpt = None, format: FormatOpt = None, tail_tol: TailTolOpt = None,
    quad_order: QuadOrderOpt = None, config: ConfigOpt = None, workers: WorkersOpt = None,
    log_level: LogLevelOpt = None,
):
    """R_{m,a}(f; x) on the x grid with truncation bookkeeping."""
    _execute(
        Command.EVAL, out, config, SuiteRunner.eval_rows,
        function=function, m=m, a=a, x_lo=x_lo, x_hi=x_hi, points=points, format=format,
        tail_tol=tail_tol, quad_order=quad_order, workers=workers, log_level=log_level,
    )


@app.command("moments")
def moments(
    m: MOpt = None, a: AOpt = None,
    x_lo: XLoOpt = None, x_hi: XHiOpt = None, points: PointsOpt = None,
    out: OutOpt = None, format: FormatOpt = None, tail_tol: TailTolOpt = None,
    quad_order: QuadOrderOpt = None, config: ConfigOpt = None, workers: WorkersOpt = None,
    log_level: LogLevelOpt = None,
):
    """Raw and central moments along the closed, exact and kernel paths."""
    _execute(
        Command.MOMENTS, out, config, SuiteRunner.moment_rows,
        m=m, a=a, x_lo=x_lo, x_hi=x_hi, points=points, format=format,
        tail_tol=tail_tol, quad_order=quad_order, workers=workers, log_level=log_level,
    )


@app.command("verify")
def verify(
    out: OutOpt = None, format: FormatOpt = None, tail_tol: TailTolOpt = None,
    quad_order: QuadOrderOpt = None, config: ConfigOpt = None,
    verify_config: Annotated[Optional[str], typer.Option("--verify-config", help="JSON file with the verification grids.")] = None,
    perturb: Annotated[float, typer.Option("--perturb", hidden=True)] = 0.0,
    log_level: LogLevelOpt = None,
):
    """
    Moment identities, moment inequalities, asymptotics and kernel tail bounds.
    Exits 1 when any check fails.
    """
    runner = _execute(
        Command.VERIFY, out, config, SuiteRunner.verify_rows, perturb=perturb,
        format=format, tail_tol=tail_tol, quad_order=quad_order,
        verify_config=verify_config, log_level=log_level,
    )
    if runner.failures:
        raise typer.Exit(code=1)


@app.command("bounds")
def bounds(
    function: FunctionOpt = None, m: MOpt = None, a: AOpt = None,
    x_lo: XLoOpt = None, x_hi: XHiOpt = None, points: PointsOpt = None,
    out: OutOpt = None, format: FormatOpt = None, tail_tol: TailTolOpt = None,
    quad_order: QuadOrderOpt = None, C: COpt = None,
    theorem: Annotated[Optional[List[TheoremId]], typer.Option("--theorem", help="Repeat to select estimates; all by default.")] = None,
    alpha: Annotated[Optional[float], typer.Option("--alpha", help="Lipschitz order in (0, 1].")] = None,
    majorant_m: Annotated[Optional[float], typer.Option("--majorant-m", help="Constant replacing the K-functional.")] = None,
    config: ConfigOpt = None, workers: WorkersOpt = None, log_level: LogLevelOpt = None,
):
    """Every approximation estimate against the observed error."""
    theorems = theorem or list(BOUND_THEOREMS)
    _execute(
        Command.BOUNDS, out, config, lambda runner: runner.bound_rows(theorems),
        function=function, m=m, a=a, x_lo=x_lo, x_hi=x_hi, points=points, format=format,
        tail_tol=tail_tol, quad_order=quad_order, bv_constant=C, alpha=alpha,
        majorant_m=majorant_m, workers=workers, log_level=log_level,
    )


@app.command("voronovskaya")
def voronovskaya(
    function: FunctionOpt = None, m: MOpt = None, a: AOpt = None,
    x_lo: XLoOpt = None, x_hi: XHiOpt = None, points: PointsOpt = None,
    out: OutOpt = None, format: FormatOpt = None, tail_tol: TailTolOpt = None,
    quad_order: QuadOrderOpt = None, config: ConfigOpt = None, workers: WorkersOpt = None,
    log_level: LogLevelOpt = None,
):
    """Scaled second-order residual with Delta(f''; 1/sqrt(m)) and its majorant."""
    _execute(
        Command.VORONOVSKAYA, out, config, SuiteRunner.voronovskaya_rows,
        function=function, m=m, a=a, x_lo=x_lo, x_hi=x_hi, points=points, format=format,
        tail_tol=tail_tol, quad_order=quad_order, workers=workers, log_level=log_level,
    )


@app.command("gruss")
def gruss(
    function: FunctionOpt = None,
    nu: Annotated[Optional[str], typer.Option("--nu", help="Second function of the covariance.")] = None,
    m: MOpt = None, a: AOpt = None,
    x_lo: XLoOpt = None, x_hi: XHiOpt = None, points: PointsOpt = None,
    out: OutOpt = None, format: FormatOpt = None, tail_tol: TailTolOpt = None,
    quad_order: QuadOrderOpt = None, config: ConfigOpt = None, workers: WorkersOpt = None,
    log_level: LogLevelOpt = None,
):
    """m (R(f nu) - R(f) R(nu)) against its limit x f'(x) nu'(x)."""
    _execute(
        Command.GRUSS, out, config, SuiteRunner.gruss_rows,
        function=function, nu=nu, m=m, a=a, x_lo=x_lo, x_hi=x_hi, points=points, format=format,
        tail_tol=tail_tol, quad_order=quad_order, workers=workers, log_level=log_level,
    )


@app.command("figure")
def figure(
    example: Annotated[int, typer.Option("--example", min=1, max=2, help="1: x^2 e^x, 2: x cos(2x+1).")] = 1,
    m: MOpt = None, a: AOpt = None,
    x_lo: XLoOpt = None, x_hi: XHiOpt = None, points: PointsOpt = None,
    out: OutOpt = None, format: FormatOpt = None, tail_tol: TailTolOpt = None,
    quad_order: QuadOrderOpt = None, config: ConfigOpt = None, workers: WorkersOpt = None,
    log_level: LogLevelOpt = None,
):
    """Plot-ready table of f, R_m f and R_m f - f for the graphical examples."""
    _execute(
        Command.FIGURE, out, config, lambda runner: runner.figure_rows(example),
        columns=lambda run_config: figure_columns(run_config.m_list),
        m=m, a=a, x_lo=x_lo, x_hi=x_hi, points=points, format=format,
        tail_tol=tail_tol, quad_order=quad_order, workers=workers, log_level=log_level,
    )


@app.command("convergence")
def convergence(
    function: FunctionOpt = None, m: MOpt = None, a: AOpt = None,
    x_lo: XLoOpt = None, x_hi: XHiOpt = None, points: PointsOpt = None,
    out: OutOpt = None, format: FormatOpt = None, tail_tol: TailTolOpt = None,
    quad_order: QuadOrderOpt = None, config: ConfigOpt = None, workers: WorkersOpt = None,
    log_level: LogLevelOpt = None,
):
    """sup over the x grid of |R_{m,a} f - f|, one row per m."""
    _execute(
        Command.CONVERGENCE, out, config, SuiteRunner.convergence_rows,
        function=function, m=m, a=a, x_lo=x_lo, x_hi=x_hi, points=points, format=format,
        tail_tol=tail_tol, quad_order=quad_order, workers=workers, log_level=log_level,
    )


@app.command("registry")
def registry(out: OutOpt = None, format: FormatOpt = None, log_level: LogLevelOpt = None):
    """Registered function names."""
    _execute(Command.REGISTRY, out, None, SuiteRunner.registry_rows, format=format, log_level=log_level)


if __name__ == "__main__":
    app()
