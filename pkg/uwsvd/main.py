"""Command-line entry point: ``python -m uwsvd.main <command> [options]``."""
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from rich.console import Console
from rich.table import Table as RichTable

from uwsvd import __version__
from uwsvd.errors import ConfigError, UwSvdError
from uwsvd.experiments import ExperimentManager, ExperimentResult, Table
from uwsvd.experiments.outputs import format_cell
from uwsvd.infrastructure import configure_logging
from uwsvd.infrastructure.settings import apply_overrides, load_environment, read_raw_config, validate_config

app = typer.Typer(
    name="uwsvd",
    help="User-wise SVD preconditioning for iterative MIMO detection: Monte Carlo experiments.",
    no_args_is_help=True,
    add_completion=False,
)
console = Console()
err_console = Console(stderr=True)

DEFAULT_M = 256

ConfigOpt = typer.Option(None, "--config", "-c", help="YAML config or preset")
ModelOpt = typer.Option(None, "--model", min=1, max=4, help="Channel model 1-4")
RhoOpt = typer.Option(None, "--rho-corr", min=0.0, help="Closest-antenna correlation")
SnrOpt = typer.Option(None, "--snr", help="Comma-separated SNR grid in dB")
ModOpt = typer.Option(None, "--mod", help="QAM order: 4, 16 or 64")
SolversOpt = typer.Option(None, "--solvers", help="Comma-separated solvers, e.g. ssor,lbfgs")
CoordsOpt = typer.Option(None, "--coords", help="orig, uwsvd or both")
ModeOpt = typer.Option(None, "--mode", help="zf or lmmse")
TrialsOpt = typer.Option(None, "--trials", min=1, help="Monte Carlo trials")
SeedOpt = typer.Option(None, "--seed", min=0, help="Master seed")
OutOpt = typer.Option(None, "--out", help="Output directory")
MetricsOpt = typer.Option(None, "--metrics-file", help="Write Prometheus counters to this textfile")


def _floats(text: Optional[str]) -> Optional[List[float]]:
    if text is None:
        return None
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"not a comma-separated list of numbers: '{text}'") from exc


def _names(text: Optional[str]) -> Optional[List[str]]:
    return None if text is None else [part.strip().lower() for part in text.split(",") if part.strip()]


def render(table: Table, title: Optional[str] = None) -> RichTable:
    rich_table = RichTable(title=title or table.name, show_lines=False)
    for column in table.header:
        rich_table.add_column(column, justify="right" if column not in ("solver", "coords", "mode", "check_name", "algorithm", "metric") else "left")
    for row in table.rows:
        cells = [_short(cell) for cell in row]
        if table.name == "theory_check":
            cells[-1] = "[green]pass[/green]" if row[-1] else "[red]FAIL[/red]"
        rich_table.add_row(*cells)
    return rich_table


def _short(cell: Any) -> str:
    if isinstance(cell, float):
        return f"{cell:.4g}"
    return format_cell(cell)


def _execute(raw: Dict[str, Any], metrics_file: Optional[Path], **overrides: Any) -> ExperimentResult:
    env = load_environment()
    configure_logging(env.log_level, env.log_json)
    config = validate_config(apply_overrides(raw, **overrides))
    result = ExperimentManager().run(config, metrics_file=metrics_file)

    summary = result.summary
    if summary.name != "cond_cdf":
        console.print(render(summary))
    else:
        console.print(f"cond_cdf: {len(summary.rows)} rows written")
    if result.skipped_trials:
        console.print(f"[yellow]{len(result.skipped_trials)} trials skipped (degenerate or numerically failed)[/yellow]")
    console.print(f"outputs: {config.output.directory}")
    return result


def _guarded(experiment: str, config: Optional[Path], metrics_file: Optional[Path], **overrides: Any):
    try:
        raw = read_raw_config(config) if config is not None else {"system": {"m": DEFAULT_M}}
        overrides["snr"] = _floats(overrides.get("snr"))
        if "varpi" in overrides:
            overrides["varpi"] = _floats(overrides["varpi"])
        overrides["solvers"] = _names(overrides.get("solvers"))
        result = _execute(raw, metrics_file, experiment=experiment, **overrides)
    except ConfigError as exc:
        err_console.print(f"[red]config error:[/red] {exc}")
        raise typer.Exit(code=2)
    except UwSvdError as exc:
        err_console.print(f"[red]error:[/red] {exc}")
        raise typer.Exit(code=1)
    _exit_on_failed_checks(result)


def _exit_on_failed_checks(result: ExperimentResult):
    if result.summary.name == "theory_check" and not all(result.summary.column("pass")):
        raise typer.Exit(code=1)


@app.command("cond-cdf")
def cond_cdf(
    config: Optional[Path] = ConfigOpt, model: Optional[int] = ModelOpt, rho_corr: Optional[float] = RhoOpt,
    snr: Optional[str] = SnrOpt, mod: Optional[int] = ModOpt, solvers: Optional[str] = SolversOpt,
    coords: Optional[str] = CoordsOpt, mode: Optional[str] = ModeOpt, trials: Optional[int] = TrialsOpt,
    seed: Optional[int] = SeedOpt, out: Optional[Path] = OutOpt, metrics_file: Optional[Path] = MetricsOpt,
):
    """Condition-number CDFs of A and Phi."""
    _guarded("cond_cdf", config, metrics_file, model=model, rho_corr=rho_corr, snr=snr, qam_order=mod,
             solvers=solvers, coords=coords, mode=mode, trials=trials, seed=seed, out=out)


@app.command("ser-curve")
def ser_curve(
    config: Optional[Path] = ConfigOpt, model: Optional[int] = ModelOpt, rho_corr: Optional[float] = RhoOpt,
    snr: Optional[str] = SnrOpt, mod: Optional[int] = ModOpt, solvers: Optional[str] = SolversOpt,
    coords: Optional[str] = CoordsOpt, mode: Optional[str] = ModeOpt, trials: Optional[int] = TrialsOpt,
    seed: Optional[int] = SeedOpt, out: Optional[Path] = OutOpt, metrics_file: Optional[Path] = MetricsOpt,
):
    """SER against iteration for each solver, original and UW-SVD coordinates."""
    _guarded("ser_curve", config, metrics_file, model=model, rho_corr=rho_corr, snr=snr, qam_order=mod,
             solvers=solvers, coords=coords, mode=mode, trials=trials, seed=seed, out=out)


@app.command("est-error")
def est_error(
    config: Optional[Path] = ConfigOpt, model: Optional[int] = ModelOpt, rho_corr: Optional[float] = RhoOpt,
    snr: Optional[str] = SnrOpt, mod: Optional[int] = ModOpt, solvers: Optional[str] = SolversOpt,
    coords: Optional[str] = CoordsOpt, mode: Optional[str] = ModeOpt, trials: Optional[int] = TrialsOpt,
    seed: Optional[int] = SeedOpt, out: Optional[Path] = OutOpt, metrics_file: Optional[Path] = MetricsOpt,
    varpi: Optional[str] = typer.Option(None, "--varpi", help="Comma-separated channel-to-error ratios in dB"),
):
    """SER curves with a noisy channel estimate at the detector."""
    _guarded("est_error", config, metrics_file, model=model, rho_corr=rho_corr, snr=snr, qam_order=mod,
             solvers=solvers, coords=coords, mode=mode, trials=trials, seed=seed, out=out, varpi=varpi)


@app.command("theory-check")
def theory_check(
    config: Optional[Path] = ConfigOpt, model: Optional[int] = ModelOpt, rho_corr: Optional[float] = RhoOpt,
    snr: Optional[str] = SnrOpt, mod: Optional[int] = ModOpt, trials: Optional[int] = TrialsOpt,
    seed: Optional[int] = SeedOpt, out: Optional[Path] = OutOpt, metrics_file: Optional[Path] = MetricsOpt,
):
    """Numeric checks of the conditioning results; exits 1 if any check fails."""
    _guarded("theory_check", config, metrics_file, model=model, rho_corr=rho_corr, snr=snr, qam_order=mod,
             trials=trials, seed=seed, out=out)


@app.command("flops")
def flops(
    config: Optional[Path] = ConfigOpt, model: Optional[int] = ModelOpt, mode: Optional[str] = ModeOpt,
    seed: Optional[int] = SeedOpt, out: Optional[Path] = OutOpt,
):
    """Complexity table with measured counters and the UW-SVD overhead in iterations."""
    _guarded("flops", config, None, model=model, mode=mode, seed=seed, out=out)


@app.command("run")
def run_config(
    path: Path = typer.Argument(..., help="Config file naming its experiment"),
    metrics_file: Optional[Path] = MetricsOpt,
):
    """Run whatever experiment the config names."""
    try:
        raw = read_raw_config(path)
        result = _execute(raw, metrics_file)
    except ConfigError as exc:
        err_console.print(f"[red]config error:[/red] {exc}")
        raise typer.Exit(code=2)
    except UwSvdError as exc:
        err_console.print(f"[red]error:[/red] {exc}")
        raise typer.Exit(code=1)
    _exit_on_failed_checks(result)


@app.command("version")
def version():
    console.print(f"uwsvd {__version__}")


if __name__ == "__main__":
    app()
