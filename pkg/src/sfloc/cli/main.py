"""Command-line entry point: sfloc map|localize|eval|report."""

import functools
from collections.abc import Callable
from pathlib import Path
from typing import Any, TypeVar

import click
from rich.console import Console

from ..core.config import Settings, load_settings
from ..core.errors import ConfigError, SfLocError
from ..core.logging import clear_context, configure_logging, get_logger
from ..fineloc import ErrorMode, FineMode
from .pipeline import RetrievalMode, cmd_eval, cmd_localize, cmd_map, cmd_report

logger = get_logger(__name__)

console = Console()

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2

F = TypeVar("F", bound=Callable[..., Any])


def exit_codes(fn: F) -> F:
    """Map ConfigError to exit 1 and any other pipeline or I/O failure to exit 2."""

    @functools.wraps(fn)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return fn(*args, **kwargs)
        except ConfigError as e:
            logger.error("config_error", error=str(e))
            raise SystemExit(EXIT_CONFIG) from e
        except (SfLocError, OSError) as e:
            logger.error("command_failed", error=str(e), error_type=type(e).__name__)
            raise SystemExit(EXIT_RUNTIME) from e
        finally:
            clear_context()

    return wrapper  # type: ignore[return-value]


def common_options(fn: F) -> F:
    fn = click.option(
        "--config",
        "config_path",
        type=click.Path(dir_okay=False, path_type=Path),
        default=None,
        help="key=value settings file.",
    )(fn)
    fn = click.option("--seed", type=click.IntRange(min=0), default=None, help="World seed.")(fn)
    fn = click.option("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR.")(fn)
    return fn


def settings_from(config_path: Path | None, **overrides: Any) -> Settings:
    settings = load_settings(config_path, **overrides)
    configure_logging(settings.log_level, settings.is_development)
    return settings


@click.group()
@click.version_option(package_name="sfloc")
def cli() -> None:
    """Sparse structure-frame mapping and coarse-to-fine localization."""


@cli.command("map")
@common_options
@click.option("--xi", type=float, default=None, help="Co-visibility threshold in (0, 1).")
@click.option("--sessions", type=click.IntRange(min=1), default=None, help="Mapping sessions.")
@click.option(
    "--out", "out_path", type=click.Path(dir_okay=False, path_type=Path), required=True
)
@exit_codes
def map_command(
    config_path: Path | None,
    seed: int | None,
    log_level: str | None,
    xi: float | None,
    sessions: int | None,
    out_path: Path,
) -> None:
    """Build a map file from the mapping sessions."""
    settings = settings_from(config_path, seed=seed, log_level=log_level, covis_xi=xi)
    result = cmd_map(settings, out_path, sessions=sessions, console=console)
    console.print(f"wrote {result.path} ({result.size_bytes} bytes)")


@cli.command("localize")
@common_options
@click.option(
    "--map", "map_path", type=click.Path(exists=True, dir_okay=False, path_type=Path), required=True
)
@click.option(
    "--mode", type=click.Choice([m.value for m in RetrievalMode]), default=RetrievalMode.SAS.value
)
@click.option("--fine", type=click.Choice([m.value for m in FineMode]), default=FineMode.FGO.value)
@click.option("--frames", type=click.IntRange(min=1), default=None, help="FGO window length.")
@click.option("--absolute", is_flag=True, help="Count map-frame pose error in the fine error.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@exit_codes
def localize_command(
    config_path: Path | None,
    seed: int | None,
    log_level: str | None,
    map_path: Path,
    mode: str,
    fine: str,
    frames: int | None,
    absolute: bool,
    out_dir: Path,
) -> None:
    """Localize the query session against a map file and write the result logs."""
    settings = settings_from(config_path, seed=seed, log_level=log_level)
    result = cmd_localize(
        settings,
        map_path,
        out_dir,
        mode=RetrievalMode(mode),
        fine_mode=FineMode(fine),
        frames=frames,
        error_mode=ErrorMode.ABSOLUTE if absolute else ErrorMode.RELATIVE,
    )
    console.print(f"{len(result.records)} queries logged to {out_dir}")


@cli.command("eval")
@common_options
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@exit_codes
def eval_command(
    config_path: Path | None, seed: int | None, log_level: str | None, out_dir: Path
) -> None:
    """Compute recall, availability and RMSE from the logs in --out; writes metrics.csv."""
    settings_from(config_path, seed=seed, log_level=log_level)
    cmd_eval(out_dir, out_dir, console=console)


@cli.command("report")
@common_options
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True)
@exit_codes
def report_command(
    config_path: Path | None, seed: int | None, log_level: str | None, out_dir: Path
) -> None:
    """Write CSV tables and SVG plots for the logs in --out."""
    settings_from(config_path, seed=seed, log_level=log_level)
    metrics, records = cmd_eval(out_dir)
    for path in cmd_report(metrics, records, out_dir):
        console.print(f"wrote {path}")


def main() -> None:
    cli()
