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

"""This module contains the result records exchanged between the tfqkd modules."""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from packages.tfqkd.exceptions import ConfigError, DomainError, MissingSettingError
from packages.tfqkd.models import DECOY_LABELS, IntensitySet


X_SETTINGS: Tuple[str, str] = ("x_0", "x_pi")
Z_SETTINGS: Tuple[str, ...] = tuple(
    f"z_{a}_{b}" for a in DECOY_LABELS for b in DECOY_LABELS
)
ALL_SETTINGS: Tuple[str, ...] = X_SETTINGS + Z_SETTINGS

CONVENTIONS: Dict[str, str] = {
    "kept_events": "exactly one detector click; double clicks discarded",
    "x_basis_correct_detector": "D0 for relative phase 0, D1 for relative phase pi",
    "normalization": "per pulse pair, sifting probabilities not applied",
    "clamps": "phase error clamped to [0, 1], rates clamped to >= 0",
    "tail_yields": "yields outside the solved set are bounded by 1",
}


def z_setting(i: int, j: int) -> str:
    """Label of the Z-basis setting with decoy indices (i, j)."""
    return f"z_{DECOY_LABELS[i]}_{DECOY_LABELS[j]}"


def _check_probability(name: str, value: float) -> None:
    """Raise if value is not a probability."""
    if not 0 <= value <= 1:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class XBasisStats:
    """Expected X-basis gain and QBER."""

    q_x: float
    e_x: float
    undefined: bool = False

    def __post_init__(self) -> None:
        """Validate the statistics."""
        _check_probability("q_x", self.q_x)
        _check_probability("e_x", self.e_x)


@dataclass(frozen=True)
class SettingTally:
    """Click counts recorded for one basis/intensity setting."""

    pulses_sent: int = 0
    d0_only: int = 0
    d1_only: int = 0
    both: int = 0
    neither: int = 0
    error_count: int = 0

    def __post_init__(self) -> None:
        """Validate the counts."""
        counts = asdict(self)
        if any(int(v) != v or v < 0 for v in counts.values()):
            raise ConfigError(f"counts must be non-negative integers, got {counts}")
        if self.d0_only + self.d1_only + self.both + self.neither != self.pulses_sent:
            raise ConfigError(f"click outcomes do not add up to pulses_sent: {counts}")
        if self.error_count > self.single_clicks:
            raise ConfigError(f"more errors than single clicks: {counts}")

    @property
    def single_clicks(self) -> int:
        """Exactly-one-click events."""
        return self.d0_only + self.d1_only

    def __add__(self, other: "SettingTally") -> "SettingTally":
        """Merge two tallies of the same setting."""
        return SettingTally(
            **{key: getattr(self, key) + getattr(other, key) for key in _TALLY_KEYS}
        )


_TALLY_KEYS = (
    "pulses_sent",
    "d0_only",
    "d1_only",
    "both",
    "neither",
    "error_count",
)


@dataclass(frozen=True)
class TallyMatrix:
    """Raw counts of one simulated run, keyed by setting label."""

    settings: Dict[str, SettingTally]

    def __post_init__(self) -> None:
        """Fill absent settings with empty tallies and reject unknown ones."""
        unknown = set(self.settings) - set(ALL_SETTINGS)
        if unknown:
            raise ConfigError(f"unknown settings {sorted(unknown)}", field="settings")
        full = {
            label: self.settings.get(label, SettingTally()) for label in ALL_SETTINGS
        }
        object.__setattr__(self, "settings", full)

    @classmethod
    def empty(cls) -> "TallyMatrix":
        """A tally with no recorded pulses."""
        return cls({})

    @property
    def n_total(self) -> int:
        """Total number of pulse pairs."""
        return sum(t.pulses_sent for t in self.settings.values())

    def __getitem__(self, label: str) -> SettingTally:
        """Tally of one setting."""
        return self.settings[label]

    def __add__(self, other: "TallyMatrix") -> "TallyMatrix":
        """Merge two partial runs."""
        return TallyMatrix(
            {label: self[label] + other[label] for label in ALL_SETTINGS}
        )

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        return {
            "n_total": self.n_total,
            "settings": {label: asdict(self[label]) for label in ALL_SETTINGS},
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "TallyMatrix":
        """Deserialize from a dict produced by to_json."""
        try:
            settings = {
                label: SettingTally(**{k: int(v) for k, v in counts.items()})
                for label, counts in data["settings"].items()
            }
        except (KeyError, TypeError, AttributeError) as e:
            raise ConfigError(f"malformed tally document: {e}", field="settings") from e
        return cls(settings)


@dataclass(frozen=True)
class ObservedStats:
    """
    Gain and QBER estimates derived from a tally.

    Raw counts travel along for the finite-data analysis. Missing settings
    have ``None`` estimates and are listed in ``missing``.
    """

    q_x_hat: Optional[float]
    e_x_hat: Optional[float]
    x_pulses: int
    x_clicks: int
    x_errors: int
    q_z_hat: Tuple[Tuple[Optional[float], ...], ...]
    z_pulses: Tuple[Tuple[int, ...], ...]
    z_clicks: Tuple[Tuple[int, ...], ...]
    n_total: int
    e_x_undefined: bool = False
    missing: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        """Validate the estimates."""
        for value in (self.q_x_hat, self.e_x_hat):
            if value is not None:
                _check_probability("estimate", value)
        for row in self.q_z_hat:
            for value in row:
                if value is not None:
                    _check_probability("q_z_hat", value)
        counted = self.x_pulses + sum(sum(row) for row in self.z_pulses)
        if counted != self.n_total:
            raise ConfigError(
                f"setting pulses add up to {counted}, not n_total={self.n_total}",
                field="n_total",
            )

    def require_complete(self) -> None:
        """Raise MissingSettingError naming the first missing setting."""
        if self.missing:
            raise MissingSettingError(self.missing[0])

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        data = asdict(self)
        data["q_z_hat"] = [list(row) for row in self.q_z_hat]
        data["z_pulses"] = [list(row) for row in self.z_pulses]
        data["z_clicks"] = [list(row) for row in self.z_clicks]
        data["missing"] = list(self.missing)
        return data

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "ObservedStats":
        """Deserialize from a dict produced by to_json."""
        try:
            return cls(
                q_x_hat=data["q_x_hat"],
                e_x_hat=data["e_x_hat"],
                x_pulses=int(data["x_pulses"]),
                x_clicks=int(data["x_clicks"]),
                x_errors=int(data["x_errors"]),
                q_z_hat=tuple(tuple(row) for row in data["q_z_hat"]),
                z_pulses=tuple(tuple(int(v) for v in row) for row in data["z_pulses"]),
                z_clicks=tuple(tuple(int(v) for v in row) for row in data["z_clicks"]),
                n_total=int(data["n_total"]),
                e_x_undefined=bool(data.get("e_x_undefined", False)),
                missing=tuple(data.get("missing", ())),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"malformed observations document: {e}") from e


@dataclass(frozen=True)
class GainInterval:
    """Bracket [q_low, q_up] around a true gain."""

    q_low: float
    q_up: float

    def __post_init__(self) -> None:
        """Validate the interval."""
        _check_probability("q_low", self.q_low)
        _check_probability("q_up", self.q_up)
        if self.q_low > self.q_up:
            raise DomainError(f"empty interval [{self.q_low}, {self.q_up}]")

    @classmethod
    def exact(cls, q: float) -> "GainInterval":
        """Zero-width interval."""
        return cls(q, q)

    @property
    def width(self) -> float:
        """q_up - q_low."""
        return self.q_up - self.q_low


@dataclass(frozen=True, eq=False)
class YieldBounds:
    """Lower and upper bounds on the photon-number yields Y_nm."""

    y_low: np.ndarray
    y_up: np.ndarray
    infeasible: bool = False
    solved: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        """Validate the bounds."""
        y_low = np.asarray(self.y_low, dtype=float)
        y_up = np.asarray(self.y_up, dtype=float)
        if y_low.shape != y_up.shape or y_low.ndim != 2:
            raise DomainError("y_low and y_up must be square matrices of equal shape")
        if y_low.shape[0] != y_low.shape[1]:
            raise DomainError(f"yield matrices must be square, got {y_low.shape}")
        if np.any(y_low < 0) or np.any(y_up > 1) or np.any(y_low > y_up):
            raise DomainError("yield bounds must satisfy 0 <= y_low <= y_up <= 1")
        object.__setattr__(self, "y_low", y_low)
        object.__setattr__(self, "y_up", y_up)

    @classmethod
    def trivial(cls, n_cut: int, infeasible: bool = False) -> "YieldBounds":
        """Bounds carrying no information."""
        size = n_cut + 1
        return cls(np.zeros((size, size)), np.ones((size, size)), infeasible)

    @property
    def n_cut(self) -> int:
        """Largest photon number covered."""
        return int(self.y_low.shape[0]) - 1

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        return {
            "n_cut": self.n_cut,
            "infeasible": self.infeasible,
            "solved": [list(nm) for nm in self.solved],
            "y_low": self.y_low.tolist(),
            "y_up": self.y_up.tolist(),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "YieldBounds":
        """Deserialize from a dict produced by to_json."""
        return cls(
            y_low=np.array(data["y_low"], dtype=float),
            y_up=np.array(data["y_up"], dtype=float),
            infeasible=bool(data.get("infeasible", False)),
            solved=tuple((int(n), int(m)) for n, m in data.get("solved", ())),
        )


@dataclass(frozen=True)
class PhaseErrorBound:
    """Phase error upper bound with its parity contributions."""

    e_ph_up: float
    even_sum: float
    odd_sum: float
    tail_even: float
    tail_odd: float
    clamped: bool = False


@dataclass(frozen=True)
class KeyRateReport:
    """
    Key rates at one operating point.

    ``q_x``, ``e_x`` and ``e_ph_up`` are the point values behind ``r_inf``;
    the pessimistic values behind ``r_fin`` sit in ``diagnostics``.
    ``r_fin`` is None when no finite-data analysis was requested.
    """

    q_x: float
    e_x: float
    e_ph_up: float
    r_inf: float
    r_fin: Optional[float]
    intensities: IntensitySet
    channel: Dict[str, float]
    protocol: Dict[str, Any]
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    informative: bool = True

    def __post_init__(self) -> None:
        """Validate the rates."""
        if self.r_inf < 0 or (self.r_fin is not None and self.r_fin < 0):
            raise DomainError("key rates must be >= 0")
        _check_probability("e_ph_up", self.e_ph_up)

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dict, conventions included."""
        return {
            "q_x": self.q_x,
            "e_x": self.e_x,
            "e_ph_up": self.e_ph_up,
            "r_inf": self.r_inf,
            "r_fin": self.r_fin,
            "informative": self.informative,
            "intensities": self.intensities.to_json(),
            "channel": dict(self.channel),
            "protocol": dict(self.protocol),
            "diagnostics": _json_safe(self.diagnostics),
            "conventions": dict(CONVENTIONS),
        }


def _json_safe(value: Any) -> Any:
    """Recursively convert numpy scalars and non-finite floats for JSON."""
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


SCAN_HEADER: Tuple[str, ...] = (
    "total_loss_db",
    "strategy",
    "s_a",
    "s_b",
    "mu",
    "nu",
    "r_inf",
    "r_fin",
    "plob",
    "informative",
)


@dataclass(frozen=True)
class ScanRow:
    """Optimized operating point of one strategy at one total loss."""

    total_loss_db: float
    eta_a: float
    eta_b: float
    strategy: str
    intensities: IntensitySet
    r_inf: float
    r_fin: float
    plob: float
    informative: bool = True

    def __post_init__(self) -> None:
        """Validate the row."""
        if not self.r_inf >= self.r_fin >= 0:
            raise DomainError(
                f"expected r_inf >= r_fin >= 0, got {self.r_inf}, {self.r_fin}"
            )

    @property
    def eta_total(self) -> float:
        """End-to-end transmittance of the physical channel."""
        return 10 ** (-self.total_loss_db / 10)

    def csv_fields(self) -> List[str]:
        """Fields in SCAN_HEADER order; numbers get 6 significant digits."""
        values = (
            self.total_loss_db,
            self.strategy,
            self.intensities.s_a,
            self.intensities.s_b,
            self.intensities.mu,
            self.intensities.nu,
            self.r_inf,
            self.r_fin,
            self.plob,
        )
        fields = [v if isinstance(v, str) else f"{v:.6g}" for v in values]
        return fields + [str(self.informative).lower()]


@dataclass(frozen=True)
class ModulatorWindow:
    """Arrival times of both propagation directions at one modulator."""

    name: str
    cw_ns: float
    ccw_ns: float
    separation_ns: float
    margin_ns: float

    @property
    def conflict(self) -> bool:
        """Whether the two pulse trains overlap at this modulator."""
        return self.margin_ns <= 0


@dataclass(frozen=True)
class TimingReport:
    """Outcome of the Sagnac modulation window check."""

    windows: Tuple[ModulatorWindow, ...]

    @property
    def passed(self) -> bool:
        """True iff no modulator sees overlapping pulse trains."""
        return not self.conflicts

    @property
    def conflicts(self) -> Tuple[ModulatorWindow, ...]:
        """Modulators where the pulse trains overlap."""
        return tuple(w for w in self.windows if w.conflict)

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        return {
            "passed": self.passed,
            "windows": [
                {**asdict(w), "conflict": w.conflict} for w in self.windows
            ],
        }
