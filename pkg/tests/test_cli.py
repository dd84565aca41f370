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

"""Tests for the tfqkd command-line interface."""

import json
from pathlib import Path
from typing import Any, Dict, List

import pytest
from click.testing import CliRunner, Result

from packages.tfqkd.cli import (
    EXIT_CONFIG,
    EXIT_DOMAIN,
    EXIT_IO,
    EXIT_OK,
    OBSERVATIONS_FILE,
    REPORT_FILE,
    SCAN_FILE,
    TABLE_FILE,
    TALLIES_FILE,
    cli,
)
from packages.tfqkd.payloads import SCAN_HEADER
from packages.tfqkd.simulation import BLOCK_PULSES

from tests.conftest import CONFIGS_DIR


SMALL_RUN: Dict[str, Any] = {
    "channel": {"loss_db_a": 5, "loss_db_b": 2, "p_dark": 1e-6, "visibility": 0.99},
    "intensities": {"s_a": 0.2, "s_b": 0.1, "mu": 0.4, "nu": 0.1},
    "protocol": {"n_pulses": 20000, "deviation": "chernoff"},
    "seed": 11,
}
FILES = (TALLIES_FILE, OBSERVATIONS_FILE)


def _write_config(directory: Path, data: Dict[str, Any]) -> Path:
    """Write a configuration document."""
    path = directory / "run.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def _invoke(args: List[str]) -> Result:
    """Run the command line."""
    return CliRunner().invoke(cli, args, catch_exceptions=False)


def test_timing_passes_for_the_sagnac_loop() -> None:
    """Test the shipped Sagnac geometry."""
    result = _invoke(["timing", "--config", str(CONFIGS_DIR / "sagnac_timing.json")])
    assert result.exit_code == EXIT_OK, result.output
    assert "PASS" in result.output
    assert "CONFLICT" not in result.output


def test_timing_fails_for_a_symmetric_loop() -> None:
    """Test that both modulators of a symmetric loop are reported."""
    config = CONFIGS_DIR / "symmetric_timing.json"
    result = _invoke(["timing", "--config", str(config)])
    assert result.exit_code == EXIT_DOMAIN
    conflicts = [line for line in result.output.splitlines() if "CONFLICT" in line]
    assert len(conflicts) == 2
    assert "alice" in conflicts[0] and "bob" in conflicts[1]


def test_configuration_errors(tmp_path: Path) -> None:
    """Test the exit codes of invalid and unreadable configurations."""
    data = json.loads(json.dumps(SMALL_RUN))
    del data["channel"]["p_dark"]
    result = _invoke(["simulate", "--config", str(_write_config(tmp_path, data))])
    assert result.exit_code == EXIT_CONFIG
    assert "channel.p_dark" in result.output
    assert not (tmp_path / TALLIES_FILE).exists()

    result = _invoke(["timing", "--config", str(_write_config(tmp_path, SMALL_RUN))])
    assert result.exit_code == EXIT_CONFIG
    assert "geometry" in result.output

    result = _invoke(["timing", "--config", str(tmp_path / "absent.json")])
    assert result.exit_code == EXIT_IO

    data = json.loads(json.dumps(SMALL_RUN))
    data["protocol"]["n_pulses"] = float("inf")
    result = _invoke(["simulate", "--config", str(_write_config(tmp_path, data))])
    assert result.exit_code == EXIT_CONFIG
    assert "protocol.n_pulses" in result.output


def test_keyrate_needs_exactly_one_source(tmp_path: Path) -> None:
    """Test the usage error of the keyrate command."""
    config = str(_write_config(tmp_path, SMALL_RUN))
    assert _invoke(["keyrate", "--config", config]).exit_code == 2
    observations = str(tmp_path / OBSERVATIONS_FILE)
    args = ["keyrate", "--config", config, "--analytic", "--observations", observations]
    assert _invoke(args).exit_code == 2


def test_analytic_keyrate(tmp_path: Path) -> None:
    """Test the analytic key rate of the 40 dB operating point."""
    config = CONFIGS_DIR / "published_40db_asym.json"
    result = _invoke(
        [
            "keyrate",
            "--config",
            str(config),
            "--analytic",
            "--require-positive",
            "--out",
            str(tmp_path),
        ]
    )
    assert result.exit_code == EXIT_OK, result.output
    assert "infinite-data key rate" in result.output
    report = json.loads((tmp_path / REPORT_FILE).read_text(encoding="utf-8"))
    assert 1e-4 / 3 < report["r_inf"] < 3e-4
    assert 0 < report["r_fin"] < report["r_inf"]


def test_simulate_is_reproducible(tmp_path: Path) -> None:
    """Test that equal seeds write identical files whatever the worker count."""
    data = json.loads(json.dumps(SMALL_RUN))
    data["protocol"]["n_pulses"] = 3 * BLOCK_PULSES + 4096
    config = str(_write_config(tmp_path, data))
    outputs = []
    for workers in ("1", "4", "8"):
        out = tmp_path / f"workers_{workers}"
        args = ["simulate", "--config", config, "--out", str(out), "--workers", workers]
        result = _invoke(args)
        assert result.exit_code == EXIT_OK, result.output
        assert "X-basis QBER" in result.output
        outputs.append([(out / name).read_bytes() for name in FILES])
    assert outputs[0] == outputs[1] == outputs[2]

    other = tmp_path / "other"
    args = ["simulate", "--config", config, "--out", str(other), "--seed", "12"]
    assert _invoke(args).exit_code == EXIT_OK
    assert (other / TALLIES_FILE).read_bytes() != outputs[0][0]


def test_keyrate_from_simulated_observations(tmp_path: Path) -> None:
    """Test the key rate of a simulated run."""
    config = str(_write_config(tmp_path, SMALL_RUN))
    simulate = ["simulate", "--config", config, "--out", str(tmp_path)]
    assert _invoke(simulate).exit_code == EXIT_OK
    observations = str(tmp_path / OBSERVATIONS_FILE)
    args = ["keyrate", "--config", config, "--observations", observations]
    result = _invoke(args + ["--out", str(tmp_path)])
    assert result.exit_code == EXIT_OK, result.output
    report = json.loads((tmp_path / REPORT_FILE).read_text(encoding="utf-8"))
    assert report["r_inf"] >= 0
    assert report["q_x"] > 0


def test_zero_signals_have_no_key(tmp_path: Path) -> None:
    """Test --require-positive on a run without signal pulses."""
    data = json.loads(json.dumps(SMALL_RUN))
    data["intensities"].update(s_a=0.0, s_b=0.0)
    data["channel"]["p_dark"] = 0.0
    config = str(_write_config(tmp_path, data))
    simulate = ["simulate", "--config", config, "--out", str(tmp_path)]
    assert _invoke(simulate).exit_code == EXIT_OK
    observations = str(tmp_path / OBSERVATIONS_FILE)
    args = ["keyrate", "--config", config, "--observations", observations]
    result = _invoke(args + ["--out", str(tmp_path), "--require-positive"])
    assert result.exit_code == EXIT_DOMAIN


def test_malformed_observations(tmp_path: Path) -> None:
    """Test unparsable and missing observation files."""
    config = str(_write_config(tmp_path, SMALL_RUN))
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    args = ["keyrate", "--config", config, "--out", str(tmp_path)]
    assert _invoke(args + ["--observations", str(broken)]).exit_code == EXIT_CONFIG
    absent = str(tmp_path / "absent.json")
    assert _invoke(args + ["--observations", absent]).exit_code == EXIT_IO


def test_table(tmp_path: Path) -> None:
    """Test the published operating points with the default settings."""
    result = _invoke(["table", "--out", str(tmp_path)])
    assert result.exit_code == EXIT_OK, result.output
    document = json.loads((tmp_path / TABLE_FILE).read_text(encoding="utf-8"))
    assert document["rows"]
    assert "R_inf pub" in result.output
    assert {row["strategy"] for row in document["rows"]} >= {"asym", "add_loss"}


@pytest.mark.e2e
def test_scan_is_reproducible(tmp_path: Path) -> None:
    """Test that the scan CSV is identical for 1, 4 and 8 workers."""
    data = {
        "channel": SMALL_RUN["channel"],
        "protocol": {"lp_max_order": 4},
        "scan": {"losses_db": [40], "strategies": ["asym", "no_comp"]},
    }
    config = str(_write_config(tmp_path, data))
    tables = []
    for workers in ("1", "4", "8"):
        out = tmp_path / f"workers_{workers}"
        args = ["scan", "--config", config, "--out", str(out), "--workers", workers]
        result = _invoke(args)
        assert result.exit_code == EXIT_OK, result.output
        assert "2 rows written" in result.output
        tables.append((out / SCAN_FILE).read_bytes())
    assert tables[0] == tables[1] == tables[2]
    lines = tables[0].decode("utf-8").splitlines()
    assert lines[0] == ",".join(SCAN_HEADER)
    assert [line.split(",")[1] for line in lines[1:]] == ["asym", "no_comp"]
    assert [line.split(",")[-1] for line in lines[1:]] == ["true", "false"]
