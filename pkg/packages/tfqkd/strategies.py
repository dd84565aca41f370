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

"""This module contains the loss compensation strategies and their optimization."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit
from scipy.stats import linregress, qmc

from packages.tfqkd.exceptions import ConfigError, InsufficientDataError
from packages.tfqkd.keyrate import (
    evaluate_intensities,
    expected_x_counts,
    finite_x_bounds,
    key_rate_margin,
    phase_error_bound,
    yield_upper_bounds,
)
from packages.tfqkd.maths import db_to_transmittance, plob_bound
from packages.tfqkd.models import ChannelParams, IntensitySet, ProtocolConfig
from packages.tfqkd.optics import x_basis_stats
from packages.tfqkd.payloads import KeyRateReport, ScanRow, YieldBounds


S_MIN, S_MAX = 1e-5, 1.0
MU_MIN, MU_MAX = 0.05, 1.5
NU_MIN = 0.005
NU_OVER_MU = 1 / 1.5

OUTER_STARTS = 8
OUTER_MAXFEV = 60
INNER_STARTS = 4
INNER_MAXFEV = 150
NM_XATOL = 1e-4
NM_FATOL = 1e-7
# fractions of the mu range and of the nu range below mu / 1.5
GRID_MU = (0.002, 0.03, 0.1, 0.2, 0.35)
GRID_NU = (0.1, 0.35, 0.7)

DEFAULT_ASYMMETRY_DB = 10.0
OBJECTIVES = ("infinite", "finite")

_logger = logging.getLogger(__name__)


class StrategyKind(Enum):
    """Compensation of unequal arm losses."""

    ASYMMETRIC_INTENSITIES = "asym"
    ADD_LOSS = "add_loss"
    NO_COMPENSATION = "no_comp"


@dataclass(frozen=True)
class Strategy:
    """A compensation strategy; ``added_db`` only applies to ADD_LOSS."""

    kind: StrategyKind
    added_db: float = 0.0

    def __post_init__(self) -> None:
        """Validate the strategy."""
        if not isinstance(self.kind, StrategyKind):
            object.__setattr__(self, "kind", StrategyKind(self.kind))
        if not math.isfinite(self.added_db) or self.added_db < 0:
            raise ConfigError(
                f"must be finite and >= 0, got {self.added_db}",
                field="strategy.added_db",
            )

    @classmethod
    def asymmetric(cls) -> "Strategy":
        """Asymmetric signal intensities."""
        return cls(StrategyKind.ASYMMETRIC_INTENSITIES)

    @classmethod
    def add_loss(cls, added_db: float = DEFAULT_ASYMMETRY_DB) -> "Strategy":
        """Extra attenuation on the less lossy arm."""
        return cls(StrategyKind.ADD_LOSS, added_db)

    @classmethod
    def no_compensation(cls) -> "Strategy":
        """Symmetric operation on an asymmetric channel."""
        return cls(StrategyKind.NO_COMPENSATION)

    @property
    def label(self) -> str:
        """Short name used in reports."""
        return self.kind.value

    @property
    def equal_signals(self) -> bool:
        """Whether the strategy forces s_a = s_b."""
        return self.kind != StrategyKind.ASYMMETRIC_INTENSITIES


@dataclass(frozen=True)
class EffectiveSetup:
    """Channel seen by the protocol under a strategy, with its signal constraint."""

    channel: ChannelParams
    equal_signals: bool


def apply_strategy(channel: ChannelParams, strategy: Strategy) -> EffectiveSetup:
    """
    Channel and signal constraint produced by a compensation strategy.

    :param channel: the physical channel.
    :param strategy: the strategy.
    :return: the effective setup.
    """
    if strategy.kind != StrategyKind.ADD_LOSS or channel.eta_a == channel.eta_b:
        return EffectiveSetup(channel, strategy.equal_signals)
    factor = db_to_transmittance(strategy.added_db)
    if channel.eta_a > channel.eta_b:
        eta_a, eta_b = channel.eta_a * factor, channel.eta_b
    else:
        eta_a, eta_b = channel.eta_a, channel.eta_b * factor
    if (eta_a - eta_b) * (channel.eta_a - channel.eta_b) < 0:
        _logger.warning(
            f"adding {strategy.added_db} dB reverses the channel asymmetry "
            f"(eta_a={eta_a:.3g}, eta_b={eta_b:.3g})"
        )
    effective = ChannelParams(
        eta_a=eta_a,
        eta_b=eta_b,
        p_dark=channel.p_dark,
        visibility=channel.visibility,
    )
    return EffectiveSetup(effective, True)


def _signals(u: np.ndarray, equal: bool) -> Tuple[float, float]:
    """Map unconstrained coordinates to signal intensities in [S_MIN, S_MAX]."""
    s = S_MIN * (S_MAX / S_MIN) ** expit(np.asarray(u, dtype=float))
    return (float(s[0]), float(s[0])) if equal else (float(s[0]), float(s[1]))


def _decoys(v: np.ndarray) -> Tuple[float, float]:
    """Map unconstrained coordinates to (mu, nu) within their bounds."""
    mu = MU_MIN + (MU_MAX - MU_MIN) * float(expit(v[0]))
    nu = NU_MIN + (mu * NU_OVER_MU - NU_MIN) * float(expit(v[1]))
    return mu, nu


def _starts(dims: int, count: int) -> np.ndarray:
    """Fixed quasi-random starting points in unconstrained coordinates."""
    points = qmc.Halton(d=dims, scramble=False).random(count + 1)[1:]
    return logit(points)


def _decoy_grid() -> np.ndarray:
    """Coarse (mu, nu) grid in unconstrained coordinates."""
    return logit(np.array([(a, b) for a in GRID_MU for b in GRID_NU]))


def _screened_starts(value: Callable[[np.ndarray], float]) -> List[np.ndarray]:
    """
    Outer starting points ranked by their key rate.

    The decoy grid and the quasi-random starts are evaluated once and the best
    OUTER_STARTS of them are kept; ties keep pool order.

    :param value: key rate at a point in unconstrained coordinates.
    :return: the starting points, best first.
    """
    pool = list(_decoy_grid()) + list(_starts(2, OUTER_STARTS))
    scores = [value(point) for point in pool]
    ranked = sorted(range(len(pool)), key=lambda k: -scores[k])
    return [pool[k] for k in ranked[:OUTER_STARTS]]


def _signal_margin(
    setup: EffectiveSetup,
    config: ProtocolConfig,
    yields: YieldBounds,
    finite: bool,
    s_a: float,
    s_b: float,
) -> float:
    """Unclamped key rate of the signal pair for fixed yield bounds."""
    x_stats = x_basis_stats(setup.channel, s_a, s_b)
    if finite:
        q_x, e_x = finite_x_bounds(*expected_x_counts(config, x_stats), config)
    else:
        q_x, e_x = x_stats.q_x, x_stats.e_x
    if q_x <= 0:
        return 0.0
    e_ph = phase_error_bound(s_a, s_b, yields, q_x)
    return key_rate_margin(q_x, e_x, e_ph, config.f_ec)


def _best_signals(
    setup: EffectiveSetup,
    config: ProtocolConfig,
    yields: YieldBounds,
    finite: bool,
    scale: float,
) -> Tuple[float, Tuple[float, float]]:
    """Multi-start simplex search over the signals for fixed decoys."""
    dims = 1 if setup.equal_signals else 2

    def objective(u: np.ndarray) -> float:
        s_a, s_b = _signals(u, setup.equal_signals)
        return -_signal_margin(setup, config, yields, finite, s_a, s_b) / scale

    best_value, best_u = math.inf, None
    for start in _starts(dims, INNER_STARTS):
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            options={"maxfev": INNER_MAXFEV, "xatol": NM_XATOL, "fatol": NM_FATOL},
        )
        if result.fun < best_value:
            best_value, best_u = float(result.fun), result.x
    return -best_value * scale, _signals(best_u, setup.equal_signals)


def optimize_intensities(
    channel: ChannelParams,
    strategy: Strategy,
    config: ProtocolConfig,
    objective: str = "infinite",
) -> Tuple[IntensitySet, KeyRateReport]:
    """
    Maximize the key rate of a strategy over signal and decoy intensities.

    A multi-start Nelder-Mead search over the decoys (mu, nu) wraps a second
    multi-start search over the signals; the yield bounds depend on the decoys
    only and are solved once per decoy pair. The outer starts are the best
    points of a coarse decoy grid and an unscrambled Halton sequence, so the
    result is deterministic.

    :param channel: the physical channel.
    :param strategy: the compensation strategy.
    :param config: protocol configuration.
    :param objective: "infinite" or "finite" key rate.
    :return: the best intensities and their report on the effective channel.
    """
    if objective not in OBJECTIVES:
        raise ConfigError(
            f"must be one of {OBJECTIVES}, got {objective!r}", field="objective"
        )
    finite = objective == "finite"
    setup = apply_strategy(channel, strategy)
    scale = math.sqrt(setup.channel.eta_total)
    cache: Dict[Tuple[float, float], Tuple[float, Tuple[float, float]]] = {}

    def inner(v: np.ndarray) -> Tuple[float, Tuple[float, float]]:
        mu, nu = _decoys(v)
        key = (mu, nu)
        if key not in cache:
            decoys = IntensitySet(s_a=0.0, s_b=0.0, mu=mu, nu=nu)
            yields = yield_upper_bounds(setup.channel, decoys, config, finite)
            cache[key] = _best_signals(setup, config, yields, finite, scale)
        return cache[key]

    best_value, best_v = -math.inf, None
    for start in _screened_starts(lambda v: inner(v)[0]):
        result = minimize(
            lambda v: -inner(v)[0] / scale,
            start,
            method="Nelder-Mead",
            options={"maxfev": OUTER_MAXFEV, "xatol": NM_XATOL, "fatol": NM_FATOL},
        )
        value = inner(result.x)[0]
        _logger.debug(f"start {start} -> margin {value:.4g} at {_decoys(result.x)}")
        if value > best_value:
            best_value, best_v = value, result.x

    mu, nu = _decoys(best_v)
    s_a, s_b = inner(best_v)[1]
    best = IntensitySet(s_a=s_a, s_b=s_b, mu=mu, nu=nu)
    report = evaluate_intensities(setup.channel, best, config, finite=True)
    if best_value <= 0:
        _logger.warning(
            f"no positive {objective} key rate found for strategy {strategy.label}; "
            "intensities are not informative"
        )
        report = _non_informative(report)
    _logger.info(
        f"{strategy.label}: s_a={s_a:.4g} s_b={s_b:.4g} mu={mu:.4g} nu={nu:.4g} "
        f"r_inf={report.r_inf:.4g} r_fin={report.r_fin:.4g}"
    )
    return best, report


def _non_informative(report: KeyRateReport) -> KeyRateReport:
    """Copy of a report flagged as carrying no optimum."""
    return replace(report, informative=False)


def split_loss(
    total_db: float, asymmetry_db: float = DEFAULT_ASYMMETRY_DB
) -> Tuple[float, float]:
    """
    Split a total loss so that arm A is asymmetry_db lossier than arm B.

    :param total_db: overall loss between Alice and Bob.
    :param asymmetry_db: loss difference between the arms.
    :return: (arm A dB, arm B dB)
    """
    loss_a = (total_db + asymmetry_db) / 2
    loss_b = (total_db - asymmetry_db) / 2
    if loss_a < 0 or loss_b < 0:
        raise ConfigError(
            f"total loss {total_db} dB cannot be split with a {asymmetry_db} dB "
            "asymmetry",
            field="scan.losses_db",
        )
    return loss_a, loss_b


SplitRule = Callable[[float], Tuple[float, float]]


def _scan_row(
    args: Tuple[float, SplitRule, Strategy, ProtocolConfig, float, float, str]
) -> ScanRow:
    """Optimize one (loss, strategy) cell of a scan."""
    total_db, split_rule, strategy, config, p_dark, visibility, objective = args
    loss_a, loss_b = split_rule(total_db)
    channel = ChannelParams.from_losses(loss_a, loss_b, p_dark, visibility)
    intensities, report = optimize_intensities(channel, strategy, config, objective)
    if not report.informative:
        _logger.warning(f"zero-rate row at {total_db} dB for {strategy.label}")
    return ScanRow(
        total_loss_db=total_db,
        eta_a=channel.eta_a,
        eta_b=channel.eta_b,
        strategy=strategy.label,
        intensities=intensities,
        r_inf=report.r_inf,
        r_fin=report.r_fin or 0.0,
        plob=plob_bound(channel.eta_total),
        informative=report.informative,
    )


def scan_losses(
    loss_db_list: Sequence[float],
    strategies: Sequence[Strategy],
    config: ProtocolConfig,
    split_rule: Optional[SplitRule] = None,
    p_dark: float = 7e-7,
    visibility: float = 0.998,
    objective: str = "infinite",
    workers: Optional[int] = None,
) -> List[ScanRow]:
    """
    Optimize every strategy at every total loss.

    :param loss_db_list: total losses between Alice and Bob in dB.
    :param strategies: strategies to compare.
    :param config: protocol configuration.
    :param split_rule: maps a total loss to per-arm losses, split_loss by default.
    :param p_dark: dark-count probability.
    :param visibility: interference visibility.
    :param objective: "infinite" or "finite" key rate.
    :param workers: worker processes; rows keep the input order.
    :return: one row per (loss, strategy), loss-major.
    """
    if not loss_db_list:
        raise ConfigError("needs at least one loss", field="scan.losses_db")
    rule = split_rule or partial(split_loss, asymmetry_db=DEFAULT_ASYMMETRY_DB)
    for total_db in loss_db_list:
        rule(total_db)
    jobs = [
        (total_db, rule, strategy, config, p_dark, visibility, objective)
        for total_db in loss_db_list
        for strategy in strategies
    ]
    if not jobs:
        return []
    _logger.info(f"Scanning {len(jobs)} (loss, strategy) cells")
    if workers is None or workers <= 1:
        return [_scan_row(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_scan_row, jobs))


def fit_scaling_exponent(rows: Sequence[ScanRow]) -> float:
    """
    Slope of log10(r_inf) against log10(eta_total).

    :param rows: scan rows of one strategy.
    :return: the least-squares slope.
    """
    positive = [row for row in rows if row.r_inf > 0]
    if len(positive) < 4:
        raise InsufficientDataError(
            "a scaling fit needs at least 4 rows with positive rate, "
            f"got {len(positive)}"
        )
    x = np.log10([row.eta_total for row in positive])
    y = np.log10([row.r_inf for row in positive])
    return float(linregress(x, y).slope)


@dataclass(frozen=True)
class PublishedRow:
    """A published operating point with its measured key rates."""

    loss_db_a: float
    loss_db_b: float
    strategy: Strategy
    intensities: IntensitySet
    r_inf: float
    r_fin: float

    @property
    def total_loss_db(self) -> float:
        """Overall loss between Alice and Bob."""
        return self.loss_db_a + self.loss_db_b


def _published(
    loss_db_a: float,
    loss_db_b: float,
    strategy: str,
    signals: Tuple[float, float],
    decoys: Tuple[float, float],
    rates: Tuple[float, float],
) -> PublishedRow:
    """Build a published row; the vacuum decoy is 0."""
    return PublishedRow(
        loss_db_a=loss_db_a,
        loss_db_b=loss_db_b,
        strategy=(
            Strategy.add_loss() if strategy == "add_loss" else Strategy(strategy)
        ),
        intensities=IntensitySet(*signals, *decoys),
        r_inf=rates[0],
        r_fin=rates[1],
    )


PUBLISHED_ROWS: Tuple[PublishedRow, ...] = (
    _published(25, 15, "asym", (0.0448, 0.00529), (0.300, 0.120), (1.017e-4, 5.013e-5)),
    _published(
        25, 15, "add_loss", (0.0213, 0.0213), (0.481, 0.146), (3.727e-5, 1.688e-5)
    ),
    _published(25, 15, "no_comp", (0.0036, 0.0036), (0.247, 0.0923), (7.163e-6, 0.0)),
    _published(30, 20, "asym", (0.030, 0.00373), (0.514, 0.108), (1.666e-5, 6.971e-6)),
    _published(
        30, 20, "add_loss", (0.0147, 0.0147), (0.444, 0.133), (2.382e-6, 2.677e-7)
    ),
    _published(33, 23, "asym", (0.0274, 0.0035), (0.401, 0.120), (2.918e-6, 3.174e-7)),
)


@dataclass(frozen=True)
class PublishedComparison:
    """Published and computed key rates of one operating point."""

    row: PublishedRow
    report: KeyRateReport


def published_report(
    config: ProtocolConfig, p_dark: float = 7e-7, visibility: float = 0.998
) -> List[PublishedComparison]:
    """
    Evaluate the published operating points with the analytic model.

    :param config: protocol configuration.
    :param p_dark: dark-count probability.
    :param visibility: interference visibility.
    :return: one result per published row.
    """
    results = []
    for row in PUBLISHED_ROWS:
        channel = ChannelParams.from_losses(
            row.loss_db_a, row.loss_db_b, p_dark, visibility
        )
        setup = apply_strategy(channel, row.strategy)
        report = evaluate_intensities(setup.channel, row.intensities, config)
        results.append(PublishedComparison(row=row, report=report))
    return results
