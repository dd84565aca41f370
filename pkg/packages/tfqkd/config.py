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

"""This module contains the run configuration and its loader."""

import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type, Union

import toml

from packages.tfqkd.exceptions import ConfigError, DomainError
from packages.tfqkd.models import (
    ChannelParams,
    DeviationBound,
    ElementRole,
    IntensitySet,
    LoopElement,
    LoopGeometry,
    ProtocolConfig,
)
from packages.tfqkd.optics import fiber_delay_ns
from packages.tfqkd.strategies import (
    DEFAULT_ASYMMETRY_DB,
    OBJECTIVES,
    Strategy,
    StrategyKind,
)


OPTIMIZE = "optimize"
DEFAULT_OUTPUT_DIR = "results"

_logger = logging.getLogger(__name__)

Number = (int, float)
TypeSpec = Union[Type, Tuple[Type, ...]]
TYPE_NAMES: Dict[Any, str] = {
    Number: "number",
    int: "integer",
    str: "string",
    list: "list",
    dict: "table",
}


class Params:
    """A configuration block whose fields are checked against their dotted path."""

    def __init__(self, section: str, kwargs: Dict[str, Any]) -> None:
        """Initialize the block."""
        if not isinstance(kwargs, dict):
            raise ConfigError("must be a table of fields", field=section)
        self.section = section
        self.kwargs = kwargs

    def _path(self, key: str) -> str:
        """Dotted path of a field."""
        return f"{self.section}.{key}" if self.section else key

    def _check(self, key: str, value: Any, type_: TypeSpec) -> Any:
        """Type-check a value; booleans are never numbers."""
        if isinstance(value, bool) and type_ is not bool:
            value_ok = False
        else:
            value_ok = isinstance(value, type_)
        if not value_ok:
            expected = TYPE_NAMES.get(type_, str(type_))
            raise ConfigError(
                f"expected {expected}, got {type(value).__name__}",
                field=self._path(key),
            )
        return value

    def _delay(self, kwargs: Dict[str, Any], ns_key: str, km_key: str) -> float:
        """Delay given directly in ns or as a fiber length in km."""
        if (ns_key in kwargs) == (km_key in kwargs):
            raise ConfigError(
                f"give exactly one of {ns_key} or {km_key}", field=self.section
            )
        if ns_key in kwargs:
            return float(self._ensure(ns_key, kwargs, Number))
        try:
            return fiber_delay_ns(float(self._ensure(km_key, kwargs, Number)))
        except DomainError as e:
            raise ConfigError(str(e), field=self._path(km_key)) from e

    def _ensure(self, key: str, kwargs: Dict[str, Any], type_: TypeSpec) -> Any:
        """Get a required field and check its type."""
        if key not in kwargs:
            raise ConfigError("required field is missing", field=self._path(key))
        return self._check(key, kwargs[key], type_)

    def _get(
        self,
        key: str,
        kwargs: Dict[str, Any],
        type_: TypeSpec,
        default: Any,
    ) -> Any:
        """Get an optional field and check its type."""
        if key not in kwargs:
            return default
        return self._check(key, kwargs[key], type_)


class ChannelBlock(Params):
    """The ``channel`` block: losses in dB or transmittances."""

    def __init__(self, kwargs: Dict[str, Any]) -> None:
        """Parse the block."""
        super().__init__("channel", kwargs)
        has_db = "loss_db_a" in kwargs or "loss_db_b" in kwargs
        has_eta = "eta_a" in kwargs or "eta_b" in kwargs
        if has_db == has_eta:
            raise ConfigError(
                "give either loss_db_a/loss_db_b or eta_a/eta_b", field=self.section
            )
        self.p_dark = float(self._ensure("p_dark", kwargs, Number))
        self.visibility = float(self._ensure("visibility", kwargs, Number))
        try:
            if has_db:
                self.channel = ChannelParams.from_losses(
                    float(self._ensure("loss_db_a", kwargs, Number)),
                    float(self._ensure("loss_db_b", kwargs, Number)),
                    self.p_dark,
                    self.visibility,
                )
            else:
                self.channel = ChannelParams(
                    eta_a=float(self._ensure("eta_a", kwargs, Number)),
                    eta_b=float(self._ensure("eta_b", kwargs, Number)),
                    p_dark=self.p_dark,
                    visibility=self.visibility,
                )
        except DomainError as e:
            raise ConfigError(str(e), field=self.section) from e


class IntensitiesBlock(Params):
    """The ``intensities`` block: explicit values."""

    def __init__(self, kwargs: Dict[str, Any]) -> None:
        """Parse the block."""
        super().__init__("intensities", kwargs)
        try:
            self.intensities = IntensitySet(
                s_a=float(self._ensure("s_a", kwargs, Number)),
                s_b=float(self._ensure("s_b", kwargs, Number)),
                mu=float(self._ensure("mu", kwargs, Number)),
                nu=float(self._ensure("nu", kwargs, Number)),
                omega=float(self._get("omega", kwargs, Number, 0.0)),
                leak=float(self._get("leak", kwargs, Number, 0.0)),
            )
        except DomainError as e:
            raise ConfigError(str(e), field=self.section) from e


class ProtocolBlock(Params):
    """The ``protocol`` block; every field has a default."""

    def __init__(self, kwargs: Dict[str, Any]) -> None:
        """Parse the block."""
        super().__init__("protocol", kwargs)
        defaults = ProtocolConfig()
        deviation = self._get("deviation", kwargs, str, defaults.deviation.value)
        if deviation not in {d.value for d in DeviationBound}:
            raise ConfigError(
                f"unknown deviation bound {deviation!r}", field=self._path("deviation")
            )
        n_pulses = self._get("n_pulses", kwargs, Number, defaults.n_pulses)
        if not math.isfinite(n_pulses) or int(n_pulses) != n_pulses:
            raise ConfigError(
                f"must be an integer, got {n_pulses}", field=self._path("n_pulses")
            )
        decoy_probs = self._get("decoy_probs", kwargs, list, list(defaults.decoy_probs))
        for value in decoy_probs:
            self._check("decoy_probs", value, Number)
        values = {
            key: self._get(key, kwargs, type_, getattr(defaults, key))
            for key, type_ in (
                ("p_x_basis", Number),
                ("n_cut", int),
                ("f_ec", Number),
                ("eps_est", Number),
                ("lp_max_order", int),
            )
        }
        try:
            self.protocol = ProtocolConfig(
                n_pulses=int(n_pulses),
                decoy_probs=tuple(decoy_probs),
                deviation=DeviationBound(deviation),
                **values,
            )
        except ConfigError as e:
            raise ConfigError(e.message, field=self._path(e.field or "")) from e


def _strategy(name: str, added_db: float, field: str) -> Strategy:
    """Build a strategy from its short name."""
    try:
        kind = StrategyKind(name)
    except ValueError as e:
        names = ", ".join(k.value for k in StrategyKind)
        raise ConfigError(f"unknown strategy {name!r}, expected {names}", field) from e
    return Strategy(kind, added_db if kind == StrategyKind.ADD_LOSS else 0.0)


class StrategyBlock(Params):
    """The ``strategy`` block."""

    def __init__(self, kwargs: Dict[str, Any]) -> None:
        """Parse the block."""
        super().__init__("strategy", kwargs)
        self.strategy = _strategy(
            self._ensure("name", kwargs, str),
            float(self._get("added_db", kwargs, Number, DEFAULT_ASYMMETRY_DB)),
            self._path("name"),
        )


@dataclass(frozen=True)
class ScanSettings:
    """Loss sweep settings."""

    losses_db: Tuple[float, ...]
    strategies: Tuple[Strategy, ...]
    asymmetry_db: float = DEFAULT_ASYMMETRY_DB
    objective: str = "infinite"


class ScanBlock(Params):
    """The ``scan`` block."""

    def __init__(self, kwargs: Dict[str, Any]) -> None:
        """Parse the block."""
        super().__init__("scan", kwargs)
        losses = self._ensure("losses_db", kwargs, list)
        if not losses:
            raise ConfigError("needs at least one loss", field=self._path("losses_db"))
        for loss in losses:
            self._check("losses_db", loss, Number)
        added_db = float(self._get("added_db", kwargs, Number, DEFAULT_ASYMMETRY_DB))
        names: List[str] = self._get(
            "strategies", kwargs, list, [k.value for k in StrategyKind]
        )
        objective = self._get("objective", kwargs, str, "infinite")
        if objective not in OBJECTIVES:
            raise ConfigError(
                f"must be one of {OBJECTIVES}, got {objective!r}",
                field=self._path("objective"),
            )
        self.scan = ScanSettings(
            losses_db=tuple(float(v) for v in losses),
            strategies=tuple(
                _strategy(name, added_db, self._path("strategies")) for name in names
            ),
            asymmetry_db=float(
                self._get("asymmetry_db", kwargs, Number, DEFAULT_ASYMMETRY_DB)
            ),
            objective=objective,
        )


class ElementBlock(Params):
    """One entry of ``geometry.elements``."""

    def __init__(self, index: int, kwargs: Dict[str, Any]) -> None:
        """Parse the element."""
        super().__init__(f"geometry.elements[{index}]", kwargs)
        role = self._get("role", kwargs, str, ElementRole.PASSIVE.value)
        if role not in {r.value for r in ElementRole}:
            raise ConfigError(f"unknown role {role!r}", field=self._path("role"))
        self.element = LoopElement(
            name=self._ensure("name", kwargs, str),
            delay_ns=self._delay(kwargs, "delay_ns", "fiber_km"),
            role=ElementRole(role),
        )


class GeometryBlock(Params):
    """
    The ``geometry`` block of the Sagnac timing check.

    Delays are given in ns or, with ``fiber_km`` / ``loop_fiber_km``, as fiber
    lengths.
    """

    def __init__(self, kwargs: Dict[str, Any]) -> None:
        """Parse the block."""
        super().__init__("geometry", kwargs)
        elements = self._ensure("elements", kwargs, list)
        self.geometry = LoopGeometry(
            elements=tuple(
                ElementBlock(index, element).element
                for index, element in enumerate(elements)
            ),
            loop_delay_ns=self._delay(kwargs, "loop_delay_ns", "loop_fiber_km"),
            pulse_period_ns=float(self._ensure("pulse_period_ns", kwargs, Number)),
            pulse_width_ns=float(self._ensure("pulse_width_ns", kwargs, Number)),
        )


@dataclass(frozen=True)
class RunConfig:
    """
    A parsed run configuration.

    Blocks a command does not need may be absent; ``require`` raises a
    ConfigError naming the missing block.
    """

    protocol: ProtocolConfig
    strategy: Strategy
    channel: Optional[ChannelParams] = None
    intensities: Optional[IntensitySet] = None
    optimize: bool = False
    scan: Optional[ScanSettings] = None
    geometry: Optional[LoopGeometry] = None
    seed: int = 0
    output_dir: Path = Path(DEFAULT_OUTPUT_DIR)
    workers: Optional[int] = None

    def require(self, block: str) -> Any:
        """Return a block, raising if the configuration does not have it."""
        value = getattr(self, block)
        if value is None:
            raise ConfigError("required block is missing", field=block)
        return value

    def with_overrides(
        self, seed: Optional[int] = None, output_dir: Optional[Path] = None
    ) -> "RunConfig":
        """Apply command-line overrides."""
        changes: Dict[str, Any] = {}
        if seed is not None:
            changes["seed"] = seed
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        return replace(self, **changes)


class RunConfigBlock(Params):
    """The top level of a configuration document."""

    def __init__(self, kwargs: Dict[str, Any]) -> None:
        """Parse the document."""
        super().__init__("", kwargs)
        intensities: Optional[IntensitySet] = None
        optimize = False
        if "intensities" in kwargs:
            raw = kwargs["intensities"]
            if raw == OPTIMIZE:
                optimize = True
            elif isinstance(raw, dict):
                intensities = IntensitiesBlock(raw).intensities
            else:
                raise ConfigError(
                    f"expected a table of intensities or {OPTIMIZE!r}",
                    field="intensities",
                )
        seed = self._get("seed", kwargs, int, 0)
        if not 0 <= seed < 1 << 64:
            raise ConfigError(f"must be a 64-bit unsigned integer, got {seed}", "seed")
        workers = self._get("workers", kwargs, int, None)
        if workers is not None and workers < 1:
            raise ConfigError(f"must be >= 1, got {workers}", field="workers")
        output = OutputBlock(self._get("output", kwargs, dict, {}))
        default_strategy = {"name": StrategyKind.ASYMMETRIC_INTENSITIES.value}
        self.config = RunConfig(
            protocol=ProtocolBlock(self._get("protocol", kwargs, dict, {})).protocol,
            strategy=StrategyBlock(
                self._get("strategy", kwargs, dict, default_strategy)
            ).strategy,
            channel=self._block(ChannelBlock, "channel", "channel"),
            intensities=intensities,
            optimize=optimize,
            scan=self._block(ScanBlock, "scan", "scan"),
            geometry=self._block(GeometryBlock, "geometry", "geometry"),
            seed=seed,
            output_dir=output.output_dir,
            workers=workers,
        )

    def _block(self, block_cls: Type, key: str, attribute: str) -> Any:
        """Parse an optional block, None when absent."""
        if key not in self.kwargs:
            return None
        return getattr(block_cls(self.kwargs[key]), attribute)


class OutputBlock(Params):
    """The ``output`` block."""

    def __init__(self, kwargs: Dict[str, Any]) -> None:
        """Parse the block."""
        super().__init__("output", kwargs)
        self.output_dir = Path(self._get("dir", kwargs, str, DEFAULT_OUTPUT_DIR))


def parse_config(data: Dict[str, Any]) -> RunConfig:
    """Build a RunConfig from a parsed document."""
    return RunConfigBlock(data).config


def load_config(path: Path) -> RunConfig:
    """
    Read a JSON or TOML configuration file.

    :param path: the file; the suffix selects the format.
    :return: the configuration.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        if Path(path).suffix == ".toml":
            data = toml.loads(text)
        else:
            data = json.loads(text)
    except (json.JSONDecodeError, toml.TomlDecodeError) as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a table at the top level")
    _logger.debug(f"Loaded configuration from {path}")
    return parse_config(data)
