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

"""Tests for the run configuration loader."""

import json
from pathlib import Path
from typing import Any, Dict

import pytest

from packages.tfqkd.config import RunConfig, load_config, parse_config
from packages.tfqkd.exceptions import ConfigError
from packages.tfqkd.models import DeviationBound
from packages.tfqkd.optics import check_modulation_windows, fiber_delay_ns
from packages.tfqkd.strategies import StrategyKind

from tests.conftest import CONFIGS_DIR


def _document(**overrides: Any) -> Dict[str, Any]:
    """A complete configuration document."""
    data: Dict[str, Any] = {
        "channel": {
            "loss_db_a": 25,
            "loss_db_b": 15,
            "p_dark": 7e-7,
            "visibility": 0.998,
        },
        "intensities": {"s_a": 0.0448, "s_b": 0.00529, "mu": 0.3, "nu": 0.12},
        "protocol": {"n_pulses": 1000000, "deviation": "chernoff"},
        "strategy": {"name": "asym"},
        "seed": 5,
    }
    data.update(overrides)
    return data


def _field_of(data: Dict[str, Any]) -> str:
    """The field named by the error of an invalid document."""
    with pytest.raises(ConfigError) as excinfo:
        parse_config(data)
    assert str(excinfo.value).startswith(f"{excinfo.value.field}: ")
    return excinfo.value.field


def test_parse_complete_document() -> None:
    """Test that every block is parsed."""
    config = parse_config(_document())
    assert config.channel.eta_total == pytest.approx(1e-4)
    assert config.intensities.s_a == 0.0448
    assert not config.optimize
    assert config.protocol.n_pulses == 1000000
    assert config.protocol.deviation == DeviationBound.CHERNOFF
    assert config.strategy.kind == StrategyKind.ASYMMETRIC_INTENSITIES
    assert config.seed == 5
    assert config.output_dir == Path("results")
    assert config.scan is None and config.geometry is None


def test_defaults_of_an_empty_document() -> None:
    """Test the defaults of every optional block."""
    config = parse_config({})
    assert config.channel is None
    assert config.protocol.n_pulses == 3 * 10**10
    assert config.strategy.kind == StrategyKind.ASYMMETRIC_INTENSITIES
    assert config.seed == 0
    with pytest.raises(ConfigError) as excinfo:
        config.require("channel")
    assert excinfo.value.field == "channel"


def test_channel_errors_name_their_field() -> None:
    """Test missing, conflicting and out-of-range channel fields."""
    channel = {"loss_db_a": 25, "loss_db_b": 15, "visibility": 0.998}
    assert _field_of(_document(channel=channel)) == "channel.p_dark"
    both = {"eta_a": 0.1, "eta_b": 0.1, "loss_db_a": 1, "p_dark": 0, "visibility": 1}
    assert _field_of(_document(channel=both)) == "channel"
    bad_eta = {"eta_a": 2.0, "eta_b": 0.1, "p_dark": 0, "visibility": 1}
    assert _field_of(_document(channel=bad_eta)) == "channel"
    wrong_type = {"eta_a": "high", "eta_b": 0.1, "p_dark": 0, "visibility": 1}
    assert _field_of(_document(channel=wrong_type)) == "channel.eta_a"


def test_intensities_block() -> None:
    """Test explicit, optimized and invalid intensities."""
    config = parse_config(_document(intensities="optimize"))
    assert config.optimize
    assert config.intensities is None
    assert _field_of(_document(intensities="maybe")) == "intensities"
    unordered = {"s_a": 0.04, "s_b": 0.005, "mu": 0.1, "nu": 0.3}
    assert _field_of(_document(intensities=unordered)) == "intensities"
    assert _field_of(_document(intensities={"s_a": 0.04})) == "intensities.s_b"


@pytest.mark.parametrize(
    "overrides, field",
    [
        ({"seed": True}, "seed"),
        ({"seed": -1}, "seed"),
        ({"seed": 1 << 64}, "seed"),
        ({"workers": 0}, "workers"),
        ({"protocol": {"deviation": "gauss"}}, "protocol.deviation"),
        ({"protocol": {"n_pulses": 1.5}}, "protocol.n_pulses"),
        ({"protocol": {"n_pulses": float("inf")}}, "protocol.n_pulses"),
        ({"protocol": {"n_pulses": float("nan")}}, "protocol.n_pulses"),
        ({"protocol": {"decoy_probs": ["a", 0.5, 0.5]}}, "protocol.decoy_probs"),
        ({"protocol": {"decoy_probs": [0.2, 0.2, 0.2]}}, "protocol.decoy_probs"),
        ({"strategy": {"name": "teleport"}}, "strategy.name"),
        ({"strategy": {}}, "strategy.name"),
        ({"scan": {"losses_db": []}}, "scan.losses_db"),
        ({"scan": {"losses_db": [40], "objective": "best"}}, "scan.objective"),
        ({"output": {"dir": 3}}, "output.dir"),
    ],
)
def test_invalid_fields(overrides: Dict[str, Any], field: str) -> None:
    """Test that each invalid field is named."""
    assert _field_of(_document(**overrides)) == field


def test_scan_block() -> None:
    """Test the loss sweep settings."""
    config = parse_config(_document(scan={"losses_db": [40, 50.5], "added_db": 6}))
    assert config.scan.losses_db == (40.0, 50.5)
    assert [s.label for s in config.scan.strategies] == ["asym", "add_loss", "no_comp"]
    assert config.scan.strategies[1].added_db == 6.0
    assert config.scan.asymmetry_db == 10.0


def test_geometry_block() -> None:
    """Test fiber lengths and direct delays."""
    geometry = {
        "elements": [
            {"name": "bs", "delay_ns": 0, "role": "beamsplitter"},
            {"name": "alice", "fiber_km": 0.05, "role": "modulator"},
        ],
        "loop_fiber_km": 7.2,
        "pulse_period_ns": 100,
        "pulse_width_ns": 0.9,
    }
    config = parse_config({"geometry": geometry})
    assert config.geometry.loop_delay_ns == pytest.approx(fiber_delay_ns(7.2))
    assert config.geometry.modulators[0].delay_ns == pytest.approx(
        fiber_delay_ns(0.05)
    )
    geometry["elements"][1]["delay_ns"] = 10
    assert _field_of({"geometry": geometry}) == "geometry.elements[1]"
    geometry["elements"][1] = {"name": "alice", "delay_ns": 10, "role": "mirror"}
    assert _field_of({"geometry": geometry}) == "geometry.elements[1].role"


def test_overrides() -> None:
    """Test the command-line overrides."""
    config = parse_config(_document())
    changed = config.with_overrides(seed=9, output_dir=Path("elsewhere"))
    assert changed.seed == 9
    assert changed.output_dir == Path("elsewhere")
    assert config.with_overrides() == config


def test_load_json_and_toml(tmp_path: Path) -> None:
    """Test both file formats."""
    json_path = tmp_path / "run.json"
    json_path.write_text(json.dumps(_document()), encoding="utf-8")
    toml_path = tmp_path / "run.toml"
    toml_path.write_text(
        'seed = 5\nintensities = "optimize"\n\n[channel]\neta_a = 0.01\n'
        "eta_b = 0.1\np_dark = 7e-7\nvisibility = 0.998\n",
        encoding="utf-8",
    )
    assert isinstance(load_config(json_path), RunConfig)
    config = load_config(toml_path)
    assert config.optimize
    assert config.channel.eta_b == 0.1


def test_load_errors(tmp_path: Path) -> None:
    """Test parse errors and unreadable files."""
    broken = tmp_path / "broken.json"
    broken.write_text("{", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(broken)
    listing = tmp_path / "list.json"
    listing.write_text("[]", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(listing)
    with pytest.raises(OSError):
        load_config(tmp_path / "absent.json")


def test_shipped_configurations() -> None:
    """Test that every example configuration loads."""
    paths = sorted(CONFIGS_DIR.glob("*.json")) + sorted(CONFIGS_DIR.glob("*.toml"))
    assert len(paths) >= 6
    configs = {path.name: load_config(path) for path in paths}
    assert configs["published_56db_optimize.toml"].optimize
    assert configs["scan.json"].scan.losses_db[0] == 40.0
    sagnac = check_modulation_windows(configs["sagnac_timing.json"].geometry)
    assert sagnac.passed
    symmetric = check_modulation_windows(configs["symmetric_timing.json"].geometry)
    assert not symmetric.passed
