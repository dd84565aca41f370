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

"""This module contains the shared domain types of the twin-field QKD model."""

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Tuple

from packages.tfqkd.exceptions import ConfigError, DomainError


DECOY_LABELS: Tuple[str, str, str] = ("mu", "nu", "omega")
PROB_SUM_TOL = 1e-12

DEFAULT_N_PULSES = 3 * 10**10
DEFAULT_P_X_BASIS = 0.5
DEFAULT_DECOY_PROBS = (1 / 3, 1 / 3, 1 / 3)
DEFAULT_N_CUT = 10
DEFAULT_F_EC = 1.15
DEFAULT_EPS_EST = 1e-10
DEFAULT_LP_MAX_ORDER = 6


class DeviationBound(Enum):
    """Finite-data deviation bound applied to observed counts."""

    HOEFFDING = "hoeffding"
    CHERNOFF = "chernoff"


def _finite_non_negative(name: str, value: float) -> None:
    """Raise if value is not a finite non-negative number."""
    if not math.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class ChannelParams:
    """
    Arm transmittances and detector imperfections seen by Charlie.

    Detector efficiency is folded into eta_a and eta_b.
    """

    eta_a: float
    eta_b: float
    p_dark: float = 7e-7
    visibility: float = 0.998

    def __post_init__(self) -> None:
        """Validate the channel."""
        for name in ("eta_a", "eta_b"):
            value = getattr(self, name)
            if not 0 < value <= 1:
                raise DomainError(f"{name} must lie in (0, 1], got {value}")
        if not 0 <= self.p_dark < 1:
            raise DomainError(f"p_dark must lie in [0, 1), got {self.p_dark}")
        if not 0 <= self.visibility <= 1:
            raise DomainError(f"visibility must lie in [0, 1], got {self.visibility}")

    @classmethod
    def from_losses(
        cls,
        loss_db_a: float,
        loss_db_b: float,
        p_dark: float = 7e-7,
        visibility: float = 0.998,
    ) -> "ChannelParams":
        """Build a channel from per-arm losses in dB."""
        for name, value in (("loss_db_a", loss_db_a), ("loss_db_b", loss_db_b)):
            _finite_non_negative(name, value)
        return cls(
            eta_a=10 ** (-loss_db_a / 10),
            eta_b=10 ** (-loss_db_b / 10),
            p_dark=p_dark,
            visibility=visibility,
        )

    @property
    def eta_total(self) -> float:
        """End-to-end transmittance between Alice and Bob."""
        return self.eta_a * self.eta_b

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        return asdict(self)


@dataclass(frozen=True)
class IntensitySet:
    """
    Signal and decoy mean photon numbers.

    Signals may differ between the parties; decoys are shared. ``leak`` is the
    residual intensity of the nominal vacuum decoy caused by a finite modulator
    extinction ratio: it is added to omega on the physical side only, the decoy
    analysis keeps using the nominal omega.
    """

    s_a: float
    s_b: float
    mu: float
    nu: float
    omega: float = 0.0
    leak: float = 0.0

    def __post_init__(self) -> None:
        """Validate the intensities."""
        for name in ("s_a", "s_b", "mu", "nu", "omega", "leak"):
            _finite_non_negative(name, getattr(self, name))
        if not self.mu > self.nu > self.omega:
            raise ConfigError(
                f"decoys must satisfy mu > nu > omega, got {self.decoys}",
                field="intensities",
            )

    @property
    def decoys(self) -> Tuple[float, float, float]:
        """Nominal decoy intensities (mu, nu, omega)."""
        return (self.mu, self.nu, self.omega)

    @property
    def physical_decoys(self) -> Tuple[float, float, float]:
        """Decoy intensities actually emitted, including the vacuum leak."""
        return (self.mu, self.nu, self.omega + self.leak)

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        return asdict(self)


@dataclass(frozen=True)
class ProtocolConfig:
    """Protocol and post-processing parameters."""

    n_pulses: int = DEFAULT_N_PULSES
    p_x_basis: float = DEFAULT_P_X_BASIS
    decoy_probs: Tuple[float, float, float] = DEFAULT_DECOY_PROBS
    n_cut: int = DEFAULT_N_CUT
    f_ec: float = DEFAULT_F_EC
    eps_est: float = DEFAULT_EPS_EST
    deviation: DeviationBound = DeviationBound.HOEFFDING
    lp_max_order: int = DEFAULT_LP_MAX_ORDER

    def __post_init__(self) -> None:
        """Validate the configuration."""
        finite = math.isfinite(self.n_pulses)
        if not finite or int(self.n_pulses) != self.n_pulses or self.n_pulses < 1:
            raise ConfigError(
                f"must be an integer >= 1, got {self.n_pulses}", field="n_pulses"
            )
        if not 0 < self.p_x_basis < 1:
            raise ConfigError(
                f"must lie in (0, 1), got {self.p_x_basis}", field="p_x_basis"
            )
        probs = tuple(float(p) for p in self.decoy_probs)
        if len(probs) != 3 or any(p <= 0 for p in probs):
            raise ConfigError(
                f"needs three positive probabilities, got {probs}", field="decoy_probs"
            )
        if abs(sum(probs) - 1.0) > PROB_SUM_TOL:
            raise ConfigError(f"must sum to 1, got {sum(probs)}", field="decoy_probs")
        object.__setattr__(self, "decoy_probs", probs)
        if self.n_cut < 2:
            raise ConfigError(f"must be >= 2, got {self.n_cut}", field="n_cut")
        if self.f_ec < 1:
            raise ConfigError(f"must be >= 1, got {self.f_ec}", field="f_ec")
        if not 0 < self.eps_est < 1:
            raise ConfigError(
                f"must lie in (0, 1), got {self.eps_est}", field="eps_est"
            )
        if self.lp_max_order < 0:
            raise ConfigError(
                f"must be >= 0, got {self.lp_max_order}", field="lp_max_order"
            )
        if not isinstance(self.deviation, DeviationBound):
            object.__setattr__(self, "deviation", DeviationBound(self.deviation))

    def to_json(self) -> Dict[str, Any]:
        """Serialize to a JSON-compatible dict."""
        data = asdict(self)
        data["decoy_probs"] = list(self.decoy_probs)
        data["deviation"] = self.deviation.value
        return data


class ElementRole(Enum):
    """Role of an element placed on the Sagnac loop."""

    BEAMSPLITTER = "beamsplitter"
    MODULATOR = "modulator"
    PASSIVE = "passive"


@dataclass(frozen=True)
class LoopElement:
    """An element on the Sagnac loop at a clockwise propagation delay."""

    name: str
    delay_ns: float
    role: ElementRole = ElementRole.PASSIVE

    def __post_init__(self) -> None:
        """Validate the element."""
        if not isinstance(self.role, ElementRole):
            object.__setattr__(self, "role", ElementRole(self.role))
        if not math.isfinite(self.delay_ns) or self.delay_ns < 0:
            raise ConfigError(
                f"delay must be finite and >= 0, got {self.delay_ns}",
                field=f"geometry.elements.{self.name}.delay_ns",
            )


@dataclass(frozen=True)
class LoopGeometry:
    """
    Placement of Charlie's beamsplitter and the users' stations on the loop.

    Element delays are measured clockwise from an arbitrary origin; only the
    delays relative to the beamsplitter matter. ``loop_delay_ns`` is the time a
    pulse needs to travel once around the loop.
    """

    elements: Tuple[LoopElement, ...]
    loop_delay_ns: float
    pulse_period_ns: float = 100.0
    pulse_width_ns: float = 0.9
    name: str = field(default="loop", compare=False)

    def __post_init__(self) -> None:
        """Validate the geometry."""
        object.__setattr__(self, "elements", tuple(self.elements))
        if self.pulse_width_ns <= 0 or self.pulse_period_ns <= 0:
            raise ConfigError(
                "pulse period and width must be positive", field="geometry"
            )
        if self.pulse_width_ns >= self.pulse_period_ns:
            raise ConfigError(
                f"pulse width {self.pulse_width_ns} ns must be shorter than the "
                f"pulse period {self.pulse_period_ns} ns",
                field="geometry.pulse_width_ns",
            )
        if not math.isfinite(self.loop_delay_ns) or self.loop_delay_ns <= 0:
            raise ConfigError(
                f"must be finite and > 0, got {self.loop_delay_ns}",
                field="geometry.loop_delay_ns",
            )
        splitters = [e for e in self.elements if e.role == ElementRole.BEAMSPLITTER]
        if len(splitters) != 1:
            raise ConfigError(
                f"exactly one beamsplitter required, found {len(splitters)}",
                field="geometry.elements",
            )

    @property
    def beamsplitter(self) -> LoopElement:
        """Charlie's beamsplitter."""
        return next(e for e in self.elements if e.role == ElementRole.BEAMSPLITTER)

    @property
    def modulators(self) -> Tuple[LoopElement, ...]:
        """The users' modulators."""
        return tuple(e for e in self.elements if e.role == ElementRole.MODULATOR)

    def shifted(self, delay_ns: float) -> "LoopGeometry":
        """Return the same loop with every element moved by delay_ns."""
        return LoopGeometry(
            elements=tuple(
                LoopElement(e.name, e.delay_ns + delay_ns, e.role)
                for e in self.elements
            ),
            loop_delay_ns=self.loop_delay_ns,
            pulse_period_ns=self.pulse_period_ns,
            pulse_width_ns=self.pulse_width_ns,
            name=self.name,
        )
