from pathlib import Path
from typing import Callable, Optional

import pandas as pd
import typer
from pydantic import ValidationError
from tabulate import tabulate

from fockwalk.core.entities import ConfigError, TruncationFault, ValidationFailure
from fockwalk.handlers.on_fidelity_curve import on_fidelity_curve
from fockwalk.handlers.on_protocol import on_protocol
from fockwalk.handlers.on_validate import on_validate, raise_on_failure
from fockwalk.handlers.on_walk import on_walk
from fockwalk.utils.config.client import RunConfig, parse_overrides
from fockwalk.utils.event_logger import configure_logging
from fockwalk.utils.tables import render_summary, write_table

EXIT_CONFIG = 2
EXIT_TRUNCATION = 3
EXIT_VALIDATION = 4

epilog = "Any other --<param> <value> pair overrides the matching key of the config file."

typer_app = typer.Typer(epilog=epilog, add_completion=False)

OVERRIDES = {"allow_extra_args": True, "ignore_unknown_options": True}

ConfigOption = typer.Option(None, "--config", help="YAML file of parameters")
OutOption = typer.Option(None, "--out", help="Output file, stdout if omitted")
FormatOption = typer.Option(None, "--format", help="csv or json")
SeedOption = typer.Option(None, "--seed", help="Master seed of the trajectory ensemble")


def _run(
    mode: str,
    ctx: typer.Context,
    config: Optional[Path],
    out: Optional[Path],
    output_format: Optional[str],
    seed: Optional[int],
    compute: Callable[[RunConfig], tuple[pd.DataFrame, dict]],
):
    configure_logging()
    try:
        run_config = RunConfig.load(config, mode).with_overrides(parse_overrides(ctx.args))
        if seed is not None:
            run_config = run_config.with_overrides({"seed": seed})
        output_format = output_format or run_config.output_format
        if output_format not in ("csv", "json"):
            raise ConfigError(f"--format must be csv or json, got {output_format!r}")
        out = out or (Path(run_config.output_path) if run_config.output_path else None)
        table, summary = compute(run_config)
    except (ConfigError, ValidationError) as e:
        typer.echo(f"Configuration error: {e}", err=True)
        raise typer.Exit(EXIT_CONFIG)
    except TruncationFault as e:
        typer.echo(f"{e}. Increase n_max and rerun.", err=True)
        raise typer.Exit(EXIT_TRUNCATION)
    write_table(table, summary, out, output_format)
    typer.echo(render_summary(summary), err=True)


@typer_app.command(context_settings=OVERRIDES)
def walk(
    ctx: typer.Context,
    config: Optional[Path] = ConfigOption,
    out: Optional[Path] = OutOption,
    output_format: Optional[str] = FormatOption,
):
    """
    Walker distribution per step (columns step, n, probability)
    """
    _run("walk", ctx, config, out, output_format, None, lambda c: on_walk(c.walk_settings()))


@typer_app.command(context_settings=OVERRIDES)
def protocol(
    ctx: typer.Context,
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    output_format: Optional[str] = FormatOption,
):
    """
    Noisy preparation protocol: fidelity, leak and populations per step
    """
    _run("protocol", ctx, config, out, output_format, seed, lambda c: on_protocol(c.protocol_params()))


@typer_app.command("fidelity-curve", context_settings=OVERRIDES)
def fidelity_curve(
    ctx: typer.Context,
    config: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[Path] = OutOption,
    output_format: Optional[str] = FormatOption,
    analytic_only: bool = typer.Option(False, "--analytic-only", help="Skip the protocol runs"),
):
    """
    Analytic fidelity budget against simulated stationary fidelity per target
    """

    def compute(c: RunConfig):
        if analytic_only:
            c = c.with_overrides({"analytic_only": True})
        return on_fidelity_curve(c.curve_settings())

    _run("fidelity-curve", ctx, config, out, output_format, seed, compute)


@typer_app.command()
def validate(seed: int = typer.Option(0, "--seed", help="Seed of the random test states")):
    """
    Run the built-in invariant checks, exit 4 if any fails
    """
    configure_logging()
    results = on_validate(seed)
    typer.echo(tabulate([[r.name, "pass" if r.passed else "FAIL", r.detail] for r in results], headers=["Check", "Result", "Detail"], tablefmt="pipe"))
    try:
        raise_on_failure(results)
    except ValidationFailure as e:
        typer.echo(str(e), err=True)
        raise typer.Exit(EXIT_VALIDATION)


def app():
    typer_app()


if __name__ == "__main__":
    app()
