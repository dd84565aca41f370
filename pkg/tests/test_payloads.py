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

"""Tests for the result records."""

import json
from dataclasses import replace

import numpy as np
import pytest

from packages.tfqkd.exceptions import ConfigError, DomainError, MissingSettingError
from packages.tfqkd.models import IntensitySet
from packages.tfqkd.payloads import (
    ALL_SETTINGS,
    CONVENTIONS,
    SCAN_HEADER,
    GainInterval,
    KeyRateReport,
    ModulatorWindow,
    ObservedStats,
    ScanRow,
    SettingTally,
    TallyMatrix,
    TimingReport,
    YieldBounds,
    z_setting,
)


INTENSITIES = IntensitySet(s_a=0.0448, s_b=0.00529, mu=0.3, nu=0.12)


def _observations(**overrides: object) -> ObservedStats:
    """Consistent observations of a 1900-pulse run."""
    data = {
        "q_x_hat": 0.01,
        "e_x_hat": 0.1,
        "x_pulses": 1000,
        "x_clicks": 10,
        "x_errors": 1,
        "q_z_hat": ((0.1,) * 3,) * 3,
        "z_pulses": ((100,) * 3,) * 3,
        "z_clicks": ((10,) * 3,) * 3,
        "n_total": 1900,
    }
    data.update(overrides)
    return ObservedStats(**data)


def test_setting_labels() -> None:
    """Test the fixed setting labels."""
    assert len(ALL_SETTINGS) == 11
    assert ALL_SETTINGS[:2] == ("x_0", "x_pi")
    assert z_setting(0, 2) == "z_mu_omega"


def test_setting_tally() -> None:
    """Test counts, single clicks and merging."""
    tally = SettingTally(
        pulses_sent=10, d0_only=3, d1_only=2, both=1, neither=4, error_count=2
    )
    assert tally.single_clicks == 5
    merged = tally + tally
    assert merged.pulses_sent == 20
    assert merged.error_count == 4


@pytest.mark.parametrize(
    "kwargs",
    [
        {"pulses_sent": 10, "d0_only": 3},
        {"pulses_sent": 1, "neither": 1, "error_count": 1},
        {"pulses_sent": -1, "neither": -1},
    ],
)
def test_setting_tally_rejects_inconsistent_counts(kwargs: dict) -> None:
    """Test the tally checks."""
    with pytest.raises(ConfigError):
        SettingTally(**kwargs)


def test_tally_matrix() -> None:
    """Test filling, totals, merging and serialization."""
    tally = TallyMatrix({"x_0": SettingTally(pulses_sent=5, neither=5)})
    assert set(tally.settings) == set(ALL_SETTINGS)
    assert tally.n_total == 5
    assert (tally + tally).n_total == 10
    assert TallyMatrix.empty().n_total == 0
    document = json.loads(json.dumps(tally.to_json()))
    assert TallyMatrix.from_json(document) == tally
    with pytest.raises(ConfigError):
        TallyMatrix({"y_0": SettingTally()})
    with pytest.raises(ConfigError):
        TallyMatrix.from_json({"counts": {}})


def test_observed_stats() -> None:
    """Test the consistency checks and serialization."""
    obs = _observations()
    obs.require_complete()
    assert ObservedStats.from_json(json.loads(json.dumps(obs.to_json()))) == obs
    with pytest.raises(ConfigError) as excinfo:
        _observations(n_total=2000)
    assert excinfo.value.field == "n_total"
    with pytest.raises(DomainError):
        _observations(q_x_hat=1.5)
    with pytest.raises(ConfigError):
        ObservedStats.from_json({"q_x_hat": 0.1})


def test_observed_stats_missing_setting() -> None:
    """Test that a missing setting is named."""
    obs = _observations(missing=("z_mu_nu",))
    with pytest.raises(MissingSettingError) as excinfo:
        obs.require_complete()
    assert excinfo.value.setting == "z_mu_nu"
    assert "z_mu_nu" in str(excinfo.value)


def test_gain_interval() -> None:
    """Test the interval checks."""
    assert GainInterval.exact(0.2).width == 0.0
    assert GainInterval(0.1, 0.3).width == pytest.approx(0.2)
    with pytest.raises(DomainError):
        GainInterval(0.3, 0.1)
    with pytest.raises(DomainError):
        GainInterval(0.1, 1.1)


def test_yield_bounds() -> None:
    """Test trivial bounds, the checks and serialization."""
    bounds = YieldBounds.trivial(4, infeasible=True)
    assert bounds.n_cut == 4
    assert bounds.infeasible
    assert np.all(bounds.y_up == 1.0)
    restored = YieldBounds.from_json(json.loads(json.dumps(bounds.to_json())))
    assert np.array_equal(restored.y_up, bounds.y_up)
    assert restored.infeasible
    with pytest.raises(DomainError):
        YieldBounds(np.ones((2, 2)), np.zeros((2, 2)))
    with pytest.raises(DomainError):
        YieldBounds(np.zeros((2, 3)), np.ones((2, 3)))


def test_key_rate_report_json() -> None:
    """Test that reports echo the conventions and serialize numpy values."""
    report = KeyRateReport(
        q_x=1e-4,
        e_x=0.01,
        e_ph_up=0.05,
        r_inf=5e-5,
        r_fin=None,
        intensities=INTENSITIES,
        channel={"eta_a": 0.1},
        protocol={"f_ec": 1.15},
        diagnostics={"even_sum": np.float64(0.5), "nan": float("nan")},
    )
    document = json.loads(json.dumps(report.to_json(), sort_keys=True))
    assert document["conventions"] == CONVENTIONS
    assert document["diagnostics"] == {"even_sum": 0.5, "nan": None}
    assert document["r_fin"] is None
    with pytest.raises(DomainError):
        KeyRateReport(
            q_x=1e-4,
            e_x=0.01,
            e_ph_up=0.05,
            r_inf=-1.0,
            r_fin=None,
            intensities=INTENSITIES,
            channel={},
            protocol={},
        )


def test_scan_row() -> None:
    """Test CSV formatting and the rate ordering check."""
    row = ScanRow(
        total_loss_db=40.0,
        eta_a=10**-2.5,
        eta_b=10**-1.5,
        strategy="asym",
        intensities=INTENSITIES,
        r_inf=1.0173e-4,
        r_fin=5.0e-5,
        plob=1.4427e-4,
    )
    fields = row.csv_fields()
    assert len(fields) == len(SCAN_HEADER)
    assert fields[:3] == ["40", "asym", "0.0448"]
    assert fields[6] == "0.00010173"
    assert fields[-1] == "true"
    zero = replace(row, r_inf=0.0, r_fin=0.0, informative=False)
    assert zero.csv_fields()[-1] == "false"
    assert row.eta_total == pytest.approx(1e-4)
    with pytest.raises(DomainError):
        ScanRow(40.0, 0.1, 0.1, "asym", INTENSITIES, 1e-5, 2e-5, 1e-4)


def test_timing_report() -> None:
    """Test conflict detection."""
    ok = ModulatorWindow("alice", 40.0, 60.0, 20.0, 19.1)
    bad = ModulatorWindow("bob", 50.0, 50.0, 0.0, -0.9)
    assert TimingReport((ok,)).passed
    report = TimingReport((ok, bad))
    assert not report.passed
    assert report.conflicts == (bad,)
    assert report.to_json()["windows"][1]["conflict"] is True
