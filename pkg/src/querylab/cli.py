import importlib
import sys
from typing import List, Optional

import typer
from rich.console import Console
from rich.table import Table

import querylab
from querylab import exceptions
from querylab.runner import emit, resolve_config, run_experiment

app = typer.Typer(
    rich_markup_mode="rich",
    no_args_is_help=True,
    help="Query-complexity simulator for search with wildcards and group testing.",
)

# Documents go to stdout untouched; everything meant for people goes to stderr.
console = Console(stderr=True)


def _exceptions_module():
    """The exceptions module of the click that typer runs on, vendored or not."""
    for cls in typer.Exit.__mro__:
        module = importlib.import_module(cls.__module__)
        if hasattr(module, "UsageError"):
            return module
    raise ImportError("typer exposes no click exception classes")


_click_exceptions = _exceptions_module()

## Shared options

N_OPTION = typer.Option(None, "--n", help="Length of the hidden string.")
N_MIN_OPTION = typer.Option(None, "--n-min", help="Smallest n of a sweep.")
N_MAX_OPTION = typer.Option(None, "--n-max", help="Largest n of a sweep.")
K_OPTION = typer.Option(None, "--k", help="Weight bound or subset size (repeatable).")
TRIALS_OPTION = typer.Option(None, "--trials", help="Monte Carlo trials per point.")
SEED_OPTION = typer.Option(None, "--seed", help="Master seed (default 0).")
FORMAT_OPTION = typer.Option(None, "--format", help="Output format: csv or json.")
OUT_OPTION = typer.Option(None, "--out", help="Write the document here, not stdout.")
STRICT_OPTION = typer.Option(
    False, "--strict", help="Exit with status 3 when a precision alarm fires."
)
TRACE_OPTION = typer.Option(
    False, "--trace", help="Echo every oracle query as a JSON line."
)
CONFIG_OPTION = typer.Option(
    None, "--config", help="YAML or JSON file of option defaults.", exists=True
)
MODE_OPTION = typer.Option(None, "--mode", help="Query accounting: trace or ledger.")
SUMMARY_OPTION = typer.Option(
    False, "--summary", help="One aggregate row per sweep point."
)
JOBS_OPTION = typer.Option(None, "--jobs", help="Worker processes for trials.")


def _version_callback(value: bool):
    if value:
        typer.echo(f"querylab v{querylab.__version__}")
        raise typer.Exit()


@app.callback()
def main_callback(
    version: Optional[bool] = typer.Option(
        None,
        "--version",
        "-v",
        callback=_version_callback,
        is_eager=True,
        help="Show the application's version and exit.",
    ),
):
    """
    Simulate quantum and classical query algorithms and emit their statistics.
    """


def _fail(error: Exception, code: int):
    console.print(f"Error: {error}", style="bold red", markup=False, soft_wrap=True)
    raise typer.Exit(code)


def _acceptance_table(records: List[dict]) -> Table:
    table = Table("#", "Criterion", "Result", title="Acceptance", expand=True)
    for record in records:
        result = "[green]passed[/green]" if record["passed"] else "[red]FAILED[/red]"
        table.add_row(str(record["criterion"]), record["name"], result)
    return table


def _execute(command: str, config_path: Optional[str], **options):
    """Resolves the config, runs the experiment and emits its document."""
    try:
        config = resolve_config(command, config_path, **options)
    except exceptions.ConfigurationError as e:
        _fail(e, 1)

    trace_handler = typer.echo if config.trace else None
    try:
        result = run_experiment(
            config, progress_handler=console.print, trace_handler=trace_handler
        )
        document = emit(result.records, config.format, config.out)
    except exceptions.QuerylabException as e:
        _fail(e, 2)

    if config.out is None:
        typer.echo(document, nl=False)

    for alarm in result.alarms:
        console.print(f"Warning: {alarm}", style="yellow", markup=False)
    if command == "all-acceptance":
        console.print(_acceptance_table(result.records))

    summary = result.summary_line()
    if config.out is not None:
        summary += f", wrote '{config.out}'"
    console.print(summary, markup=False, soft_wrap=True)

    if not result.passed:
        raise typer.Exit(2)
    if config.strict and result.alarms:
        raise typer.Exit(3)


## Spectra


@app.command("gram")
def gram(
    n: Optional[int] = N_OPTION,
    k: Optional[List[int]] = K_OPTION,
    format: Optional[str] = FORMAT_OPTION,
    out: Optional[str] = OUT_OPTION,
    strict: bool = STRICT_OPTION,
    brute_check: bool = typer.Option(
        False, "--brute-check", help="Compare against the full 2^n oracle (n <= 20)."
    ),
    precision_budget: Optional[float] = typer.Option(
        None, "--precision-budget", help="Largest tolerated error on each P(d)."
    ),
    config: Optional[str] = CONFIG_OPTION,
):
    """Gram eigenvalues, square-root entries and the distance law for (n, k)."""
    _execute(
        "gram",
        config,
        n=n,
        k=k,
        format=format,
        out=out,
        strict=strict,
        brute_check=brute_check,
        precision_budget=precision_budget,
    )


@app.command("dk-sweep")
def dk_sweep(
    n: Optional[int] = N_OPTION,
    n_min: Optional[int] = N_MIN_OPTION,
    n_max: Optional[int] = N_MAX_OPTION,
    format: Optional[str] = FORMAT_OPTION,
    out: Optional[str] = OUT_OPTION,
    strict: bool = STRICT_OPTION,
    config: Optional[str] = CONFIG_OPTION,
):
    """Expected distance and success bounds at k = n - ceil(sqrt n) for each n."""
    _execute(
        "dk-sweep",
        config,
        n=n,
        n_min=n_min,
        n_max=n_max,
        format=format,
        out=out,
        strict=strict,
    )


## Search with wildcards


@app.command("sww")
def sww(
    n: Optional[int] = N_OPTION,
    n_min: Optional[int] = N_MIN_OPTION,
    n_max: Optional[int] = N_MAX_OPTION,
    trials: Optional[int] = TRIALS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    format: Optional[str] = FORMAT_OPTION,
    out: Optional[str] = OUT_OPTION,
    strict: bool = STRICT_OPTION,
    trace: bool = TRACE_OPTION,
    mode: Optional[str] = MODE_OPTION,
    summary: bool = SUMMARY_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    config: Optional[str] = CONFIG_OPTION,
):
    """Staged quantum search with wildcards; n doubles from --n-min to --n-max."""
    _execute(
        "sww",
        config,
        n=n,
        n_min=n_min,
        n_max=n_max,
        trials=trials,
        seed=seed,
        format=format,
        out=out,
        strict=strict,
        trace=trace,
        mode=mode,
        summary=summary,
        jobs=jobs,
    )


## Group testing


@app.command("cgt")
def cgt(
    n: Optional[int] = N_OPTION,
    k: Optional[List[int]] = K_OPTION,
    trials: Optional[int] = TRIALS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    format: Optional[str] = FORMAT_OPTION,
    out: Optional[str] = OUT_OPTION,
    trace: bool = TRACE_OPTION,
    summary: bool = SUMMARY_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    max_cycles: Optional[int] = typer.Option(
        None, "--max-cycles", help="Cap on guess cycles per trial."
    ),
    config: Optional[str] = CONFIG_OPTION,
):
    """Quantum group testing on random inputs of weight exactly k."""
    _execute(
        "cgt",
        config,
        n=n,
        k=k,
        trials=trials,
        seed=seed,
        format=format,
        out=out,
        trace=trace,
        summary=summary,
        jobs=jobs,
        max_cycles=max_cycles,
    )


@app.command("cgt-classical")
def cgt_classical(
    n: Optional[int] = N_OPTION,
    k: Optional[List[int]] = K_OPTION,
    trials: Optional[int] = TRIALS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    format: Optional[str] = FORMAT_OPTION,
    out: Optional[str] = OUT_OPTION,
    trace: bool = TRACE_OPTION,
    summary: bool = SUMMARY_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    config: Optional[str] = CONFIG_OPTION,
):
    """Classical binary-splitting group testing baseline."""
    _execute(
        "cgt-classical",
        config,
        n=n,
        k=k,
        trials=trials,
        seed=seed,
        format=format,
        out=out,
        trace=trace,
        summary=summary,
        jobs=jobs,
    )


@app.command("reduce")
def reduce(
    k: Optional[List[int]] = K_OPTION,
    trials: Optional[int] = TRIALS_OPTION,
    seed: Optional[int] = SEED_OPTION,
    format: Optional[str] = FORMAT_OPTION,
    out: Optional[str] = OUT_OPTION,
    trace: bool = TRACE_OPTION,
    summary: bool = SUMMARY_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    config: Optional[str] = CONFIG_OPTION,
):
    """Search with wildcards on k bits solved through group testing on 2k bits."""
    _execute(
        "reduce",
        config,
        k=k,
        trials=trials,
        seed=seed,
        format=format,
        out=out,
        trace=trace,
        summary=summary,
        jobs=jobs,
    )


## Lower bounds and checks


@app.command("adversary")
def adversary(
    n: Optional[int] = N_OPTION,
    format: Optional[str] = FORMAT_OPTION,
    out: Optional[str] = OUT_OPTION,
    jobs: Optional[int] = JOBS_OPTION,
    config: Optional[str] = CONFIG_OPTION,
):
    """Adversary lower bound for search with wildcards by full enumeration (n <= 10)."""
    _execute("adversary", config, n=n, format=format, out=out, jobs=jobs)


@app.command("all-acceptance")
def all_acceptance(
    trials: Optional[int] = typer.Option(
        None, "--trials", help="Scales every Monte Carlo size (nominal 1000)."
    ),
    seed: Optional[int] = SEED_OPTION,
    format: Optional[str] = FORMAT_OPTION,
    out: Optional[str] = OUT_OPTION,
    strict: bool = STRICT_OPTION,
    config: Optional[str] = CONFIG_OPTION,
):
    """Run every acceptance criterion; exits with status 2 if any fails."""
    _execute(
        "all-acceptance",
        config,
        trials=trials,
        seed=seed,
        format=format,
        out=out,
        strict=strict,
    )


def run(argv: Optional[List[str]] = None) -> int:
    """
    Runs the CLI and returns its exit status instead of exiting.

    0 ok, 1 usage or configuration error, 2 runtime error or failed
    acceptance, 3 precision alarm under ``--strict``.
    """
    try:
        result = app(args=argv, prog_name="querylab", standalone_mode=False)
    except _click_exceptions.UsageError as e:
        e.show()
        return 1
    except _click_exceptions.Abort:
        return 1
    except _click_exceptions.Exit as e:
        return e.exit_code
    return result if isinstance(result, int) else 0


def main():
    sys.exit(run())
