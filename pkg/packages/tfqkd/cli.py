# -*- coding: utf-8 -*-
# ------------------------------------------------------------------------------
#
#   Copyright 2024 Valory AG
#
#   Licensed under the Apache License, Version 2.0 (the "License");
#   you may not use this file except in compliance with the License.
#   You may obtain a copy of the License at
#
#       http://www.apache.org/licenses/LICENSE-2.0
#
#   Unless required by applicable law or agreed to in writing, software
#   distributed under the License is distributed on an "AS IS" BASIS,
#   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#   See the License for the specific language governing permissions and
#   limitations under the License.
#
# ------------------------------------------------------------------------------

"""This module contains the tfqkd command-line interface."""

import csv
import functools
import json
import logging
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple

import click

from packages.tfqkd.config import RunConfig, load_config, parse_config
from packages.tfqkd.exceptions import ConfigError, MissingSettingError, TFQKDError
from packages.tfqkd.keyrate import evaluate_intensities, observed_report
from packages.tfqkd.models import IntensitySet
from packages.tfqkd.optics import check_modulation_windows
from packages.tfqkd.payloads import (
    SCAN_HEADER,
    KeyRateReport,
    ObservedStats,
    X_SETTINGS,
    Z_SETTINGS,
)
from packages.tfqkd.simulation import simulate_run, tallies_to_observations
from packages.tfqkd.strategies import (
    StrategyKind,
    apply_strategy,
    fit_scaling_exponent,
    optimize_intensities,
    published_report,
    scan_losses,
    split_loss,
)


EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_CONFIG = 2
EXIT_IO = 3

TALLIES_FILE = "tallies.json"
OBSERVATIONS_FILE = "observations.json"
REPORT_FILE = "keyrate_report.json"
SCAN_FILE = "scan.csv"
TABLE_FILE = "published.json"

_logger = logging.getLogger(__name__)


class PathArgument(click.Path):
    """Path parameter for CLI."""

    def convert(
        self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]
    ) -> Optional[Path]:
        """Convert path string to `pathlib.Path`"""
        path_string = super().convert(value, param, ctx)
        return None if path_string is None else Path(path_string)


def exit_codes(command: Callable) -> Callable:
    """Map library errors of a command to its exit codes."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        """Run the command."""
        try:
            return command(*args, **kwargs)
        except (ConfigError, MissingSettingError) as e:
            click.echo(f"Configuration error: {e}", err=True)
            raise SystemExit(EXIT_CONFIG) from e
        except OSError as e:
            click.echo(f"I/O error: {e}", err=True)
            raise SystemExit(EXIT_IO) from e
        except TFQKDError as e:
            click.echo(f"Error: {e}", err=True)
            raise SystemExit(EXIT_DOMAIN) from e

    return wrapper


def _write_json(path: Path, data: Dict[str, Any]) -> None:
    """Write a JSON document deterministically."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    _logger.info(f"Wrote {path}")


def _load(
    config_path: Path, seed: Optional[int] = None, out: Optional[Path] = None
) -> RunConfig:
    """Load a configuration and apply the command-line overrides."""
    return load_config(config_path).with_overrides(seed=seed, output_dir=out)


def _intensities(config: RunConfig, objective: str = "infinite") -> IntensitySet:
    """Explicit intensities, or optimized ones for the configured strategy."""
    if config.intensities is not None:
        return config.intensities
    if not config.optimize:
        raise ConfigError("required block is missing", field="intensities")
    intensities, _ = optimize_intensities(
        config.require("channel"), config.strategy, config.protocol, objective
    )
    return intensities


def _print_observations(obs: ObservedStats) -> None:
    """Print a gain and QBER summary table."""
    click.echo(f"{'setting':<16}{'pulses':>16}{'clicks':>14}{'gain':>14}")
    click.echo(
        f"{'x':<16}{obs.x_pulses:>16}{obs.x_clicks:>14}"
        f"{_fmt(obs.q_x_hat):>14}"
    )
    labels = iter(Z_SETTINGS)
    for i in range(3):
        for j in range(3):
            click.echo(
                f"{next(labels):<16}{obs.z_pulses[i][j]:>16}{obs.z_clicks[i][j]:>14}"
                f"{_fmt(obs.q_z_hat[i][j]):>14}"
            )
    undefined = " (undefined)" if obs.e_x_undefined else ""
    click.echo(f"X-basis QBER: {_fmt(obs.e_x_hat)}{undefined}")


def _fmt(value: Optional[float]) -> str:
    """Format an optional estimate."""
    return "missing" if value is None else f"{value:.6g}"


def _print_rates(report: KeyRateReport) -> None:
    """Print the key rates of a report."""
    click.echo(f"Q_X = {report.q_x:.6g}, E_X = {report.e_x:.6g}")
    click.echo(f"phase error bound = {report.e_ph_up:.6g}")
    click.echo(f"infinite-data key rate = {report.r_inf:.6g}")
    if report.r_fin is not None:
        click.echo(f"finite-data key rate = {report.r_fin:.6g}")


@click.group(name="tfqkd")
@click.option(
    "--log-level",
    type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
    default="WARNING",
    show_default=True,
    help="Logging level.",
)
def cli(log_level: str) -> None:
    """Twin-field QKD over asymmetric channels: simulation and key rates."""
    logging.basicConfig(format="- %(levelname)s: %(message)s", level=log_level.upper())


config_option = click.option(
    "--config",
    "config_path",
    type=PathArgument(dir_okay=False),
    required=True,
    help="Run configuration (JSON or TOML).",
)
seed_option = click.option("--seed", type=int, help="Override the configured seed.")
out_option = click.option(
    "--out",
    type=PathArgument(file_okay=False),
    help="Override the configured output directory.",
)
workers_option = click.option(
    "--workers", type=int, help="Worker processes; results do not depend on it."
)


@cli.command(name="simulate")
@config_option
@seed_option
@out_option
@workers_option
@exit_codes
def simulate(
    config_path: Path,
    seed: Optional[int],
    out: Optional[Path],
    workers: Optional[int],
) -> None:
    """Simulate a run pulse by pulse and write tallies and observations."""
    config = _load(config_path, seed, out)
    setup = apply_strategy(config.require("channel"), config.strategy)
    tallies = simulate_run(
        config.protocol,
        setup.channel,
        _intensities(config),
        config.seed,
        workers=workers or config.workers,
    )
    obs = tallies_to_observations(tallies)
    _write_json(config.output_dir / TALLIES_FILE, tallies.to_json())
    _write_json(config.output_dir / OBSERVATIONS_FILE, obs.to_json())
    _print_observations(obs)


@cli.command(name="keyrate")
@config_option
@click.option(
    "--observations",
    "observations_path",
    type=PathArgument(dir_okay=False),
    help="Observations written by `tfqkd simulate`.",
)
@click.option(
    "--analytic", is_flag=True, help="Use the analytic model instead of observations."
)
@click.option(
    "--require-positive",
    is_flag=True,
    help="Exit with 1 when a key rate is zero.",
)
@out_option
@exit_codes
def keyrate(
    config_path: Path,
    observations_path: Optional[Path],
    analytic: bool,
    require_positive: bool,
    out: Optional[Path],
) -> None:
    """Compute infinite- and finite-data key rates."""
    if analytic == (observations_path is not None):
        raise click.UsageError("give exactly one of --observations or --analytic")
    config = _load(config_path, out=out)
    channel = config.require("channel")
    setup = apply_strategy(channel, config.strategy)
    if analytic:
        report = evaluate_intensities(
            setup.channel, _intensities(config), config.protocol
        )
    else:
        text = Path(observations_path).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError(f"cannot parse {observations_path}: {e}") from e
        obs = ObservedStats.from_json(data)
        report = observed_report(
            obs, config.require("intensities"), config.protocol, setup.channel
        )
    _write_json(config.output_dir / REPORT_FILE, report.to_json())
    _print_rates(report)
    if require_positive and (report.r_inf <= 0 or not report.r_fin):
        click.echo("Key rate is zero", err=True)
        raise SystemExit(EXIT_DOMAIN)


@cli.command(name="scan")
@config_option
@out_option
@workers_option
@exit_codes
def scan(config_path: Path, out: Optional[Path], workers: Optional[int]) -> None:
    """Optimize every strategy over a list of total losses and write a CSV."""
    config = _load(config_path, out=out)
    settings = config.require("scan")
    channel = config.channel
    rows = scan_losses(
        settings.losses_db,
        settings.strategies,
        config.protocol,
        split_rule=functools.partial(split_loss, asymmetry_db=settings.asymmetry_db),
        p_dark=channel.p_dark if channel else 7e-7,
        visibility=channel.visibility if channel else 0.998,
        objective=settings.objective,
        workers=workers or config.workers,
    )
    path = config.output_dir / SCAN_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(SCAN_HEADER)
        for row in rows:
            writer.writerow(row.csv_fields())
    _logger.info(f"Wrote {path}")
    click.echo(f"{len(rows)} rows written to {path}")
    for kind in StrategyKind:
        selected = [row for row in rows if row.strategy == kind.value]
        if sum(row.r_inf > 0 for row in selected) >= 4:
            slope = fit_scaling_exponent(selected)
            click.echo(f"{kind.value}: key rate ~ eta^{slope:.3f}")


@cli.command(name="timing")
@config_option
@exit_codes
def timing(config_path: Path) -> None:
    """Check that counter-propagating pulses never overlap at a modulator."""
    config = _load(config_path)
    report = check_modulation_windows(config.require("geometry"))
    for window in report.windows:
        status = "CONFLICT" if window.conflict else "ok"
        click.echo(
            f"{window.name:<16} cw={window.cw_ns:10.3f} ns"
            f"  ccw={window.ccw_ns:10.3f} ns"
            f"  margin={window.margin_ns:10.3f} ns  {status}"
        )
    if not report.passed:
        names = ", ".join(w.name for w in report.conflicts)
        click.echo(f"FAIL: pulses overlap at {names}", err=True)
        raise SystemExit(EXIT_DOMAIN)
    click.echo("PASS")


def _table_line(cells: Tuple[str, ...]) -> str:
    """Format one line of the published-vs-computed table."""
    widths = (10, 10, 12, 12, 12, 12)
    return "".join(f"{cell:>{width}}" for cell, width in zip(cells, widths))


@cli.command(name="table")
@click.option(
    "--config",
    "config_path",
    type=PathArgument(dir_okay=False),
    help="Configuration providing protocol and channel noise settings.",
)
@out_option
@exit_codes
def table(config_path: Optional[Path], out: Optional[Path]) -> None:
    """Evaluate the published operating points and compare the key rates."""
    if config_path is None:
        config = parse_config({}).with_overrides(output_dir=out)
    else:
        config = _load(config_path, out=out)
    channel = config.channel
    results = published_report(
        config.protocol,
        p_dark=channel.p_dark if channel else 7e-7,
        visibility=channel.visibility if channel else 0.998,
    )
    click.echo(
        _table_line(("loss dB", "strategy", "R_inf pub", "R_inf", "R_fin pub", "R_fin"))
    )
    documents = []
    for result in results:
        row, report = result.row, result.report
        click.echo(
            _table_line(
                (
                    f"{row.total_loss_db:g}",
                    row.strategy.label,
                    f"{row.r_inf:.4g}",
                    f"{report.r_inf:.4g}",
                    f"{row.r_fin:.4g}",
                    f"{report.r_fin or 0.0:.4g}",
                )
            )
        )
        documents.append(
            {
                "loss_db_a": row.loss_db_a,
                "loss_db_b": row.loss_db_b,
                "strategy": row.strategy.label,
                "published": {"r_inf": row.r_inf, "r_fin": row.r_fin},
                "report": report.to_json(),
            }
        )
    _write_json(config.output_dir / TABLE_FILE, {"rows": documents})


if __name__ == "__main__":
    cli()  # pylint: disable=no-value-for-parameter
