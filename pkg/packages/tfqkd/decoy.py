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

"""This module contains the decoy-state estimation of photon-number yields."""

import logging
import math
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from packages.tfqkd.exceptions import ConfigError, DomainError
from packages.tfqkd.maths import poisson_vector
from packages.tfqkd.models import DeviationBound
from packages.tfqkd.payloads import GainInterval, ObservedStats, YieldBounds


GainMatrix = Sequence[Sequence[GainInterval]]

LP_TOLERANCE = 1e-10
LP_ROW_FLOOR = 1e-15
LP_SENSES = ("both", "upper")

_logger = logging.getLogger(__name__)


def _check_counts(successes: int, trials: int, eps: float) -> None:
    """Validate the arguments of a deviation bound."""
    if trials < 1:
        raise DomainError(f"a deviation bound needs trials >= 1, got {trials}")
    if not 0 <= successes <= trials:
        raise DomainError(f"successes must lie in [0, {trials}], got {successes}")
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")


def finite_deviation(successes: int, trials: int, eps: float) -> GainInterval:
    """
    Two-sided Hoeffding interval around an observed frequency.

    :param successes: observed events.
    :param trials: pulses sent.
    :param eps: failure probability of the interval.
    :return: the interval, clamped to [0, 1].
    """
    _check_counts(successes, trials, eps)
    q_hat = successes / trials
    delta = math.sqrt(math.log(2.0 / eps) / (2.0 * trials))
    return GainInterval(max(0.0, q_hat - delta), min(1.0, q_hat + delta))


def chernoff_deviation(successes: int, trials: int, eps: float) -> GainInterval:
    """
    Multiplicative Chernoff interval around an observed count.

    The width scales with the square root of the count rather than of the
    number of trials, which keeps rare events informative.

    :param successes: observed events.
    :param trials: pulses sent.
    :param eps: failure probability of the interval.
    :return: the interval, clamped to [0, 1].
    """
    _check_counts(successes, trials, eps)
    beta = math.log(2.0 / eps)
    x = float(successes)
    upper = x + beta + math.sqrt(2 * beta * x + beta**2)
    lower = max(0.0, x - beta / 2 - math.sqrt(2 * beta * x + beta**2 / 4))
    return GainInterval(min(1.0, lower / trials), min(1.0, upper / trials))


def deviation(
    successes: int, trials: int, eps: float, method: DeviationBound
) -> GainInterval:
    """Interval of the selected deviation bound."""
    if method == DeviationBound.CHERNOFF:
        return chernoff_deviation(successes, trials, eps)
    return finite_deviation(successes, trials, eps)


def deviated_gains(
    obs: ObservedStats, eps: float, method: DeviationBound
) -> List[List[GainInterval]]:
    """Deviation intervals of the nine Z-basis gains."""
    obs.require_complete()
    return [
        [
            deviation(obs.z_clicks[i][j], obs.z_pulses[i][j], eps, method)
            for j in range(3)
        ]
        for i in range(3)
    ]


def exact_gains(q_z: np.ndarray, slack: float = 0.0) -> List[List[GainInterval]]:
    """
    Intervals around exactly known gains.

    :param q_z: 3x3 gain matrix.
    :param slack: relative half-width absorbing round-off.
    :return: the intervals.
    """
    return [
        [
            GainInterval(max(0.0, q * (1 - slack)), min(1.0, q * (1 + slack)))
            for q in row
        ]
        for row in np.asarray(q_z, dtype=float)
    ]


def _constraints(
    gains: GainMatrix, decoys: Tuple[float, float, float], n_cut: int
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Inequality rows A_ub Y <= b_ub of the decoy program.

    Each row is divided by the upper gain of its decoy pair.

    :param gains: gain intervals indexed [Alice][Bob].
    :param decoys: decoy intensities (mu, nu, omega).
    :param n_cut: photon-number truncation.
    :return: the pair (A_ub, b_ub).
    """
    probs = [poisson_vector(d, n_cut) for d in decoys]
    rows, bounds = [], []
    for i, a in enumerate(probs):
        for j, b in enumerate(probs):
            weights = np.outer(a, b).ravel()
            tail = max(0.0, 1.0 - float(weights.sum()))
            interval = gains[i][j]
            scale = max(interval.q_up, LP_ROW_FLOOR)
            rows.append(weights / scale)
            bounds.append(interval.q_up / scale)
            rows.append(-weights / scale)
            bounds.append(-(interval.q_low - tail) / scale)
    return np.array(rows), np.array(bounds)


def _solve(
    objective: np.ndarray, a_ub: np.ndarray, b_ub: np.ndarray
) -> Tuple[int, Optional[float]]:
    """Run HiGHS and return (status, optimum)."""
    result = linprog(
        objective,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=(0.0, 1.0),
        method="highs",
        options={
            "primal_feasibility_tolerance": LP_TOLERANCE,
            "dual_feasibility_tolerance": LP_TOLERANCE,
        },
    )
    if result.status != 0:
        _logger.debug(f"LP status {result.status}: {result.message}")
        return result.status, None
    return result.status, float(result.fun)


def yield_bounds_lp(
    gains: GainMatrix,
    decoys: Tuple[float, float, float],
    n_cut: int,
    targets: Optional[Iterable[Tuple[int, int]]] = None,
    sense: str = "both",
) -> YieldBounds:
    """
    Bound the yields Y_nm by linear programming over the decoy constraints.

    Yields above n_cut photons are only known to lie in [0, 1]; their Poisson
    mass widens every lower constraint. Entries outside ``targets`` keep the
    trivial bounds [0, 1]. With ``sense="upper"`` only upper bounds are solved.

    :param gains: 3x3 gain intervals indexed [Alice decoy][Bob decoy].
    :param decoys: intensities (mu, nu, omega).
    :param n_cut: largest photon number with its own variable.
    :param targets: (n, m) entries to bound, all entries by default.
    :param sense: "both" or "upper".
    :return: the yield bounds, flagged infeasible on solver failure.
    """
    mu, nu, omega = decoys
    if not mu > nu > omega >= 0:
        raise ConfigError(f"decoys must satisfy mu > nu > omega >= 0, got {decoys}")
    if len(gains) != 3 or any(len(row) != 3 for row in gains):
        raise ConfigError("gain intervals must form a 3x3 matrix")
    if sense not in LP_SENSES:
        raise ConfigError(f"sense must be one of {LP_SENSES}, got {sense!r}")
    size = n_cut + 1
    wanted = (
        [(n, m) for n in range(size) for m in range(size)]
        if targets is None
        else sorted(set(targets))
    )
    if any(not (0 <= n <= n_cut and 0 <= m <= n_cut) for n, m in wanted):
        raise DomainError(f"targets must lie within [0, {n_cut}]^2")

    a_ub, b_ub = _constraints(gains, decoys, n_cut)
    y_low = np.zeros((size, size))
    y_up = np.ones((size, size))
    for n, m in wanted:
        objective = np.zeros(size * size)
        objective[n * size + m] = -1.0
        status, optimum = _solve(objective, a_ub, b_ub)
        if optimum is None:
            _logger.warning(
                f"decoy LP failed with status {status} for Y_{n}{m}; "
                "falling back to trivial yield bounds"
            )
            return YieldBounds.trivial(n_cut, infeasible=True)
        y_up[n, m] = min(1.0, max(0.0, -optimum))
        if sense == "both":
            objective[n * size + m] = 1.0
            status, optimum = _solve(objective, a_ub, b_ub)
            if optimum is None:
                _logger.warning(
                    f"decoy LP failed with status {status} for Y_{n}{m}; "
                    "falling back to trivial yield bounds"
                )
                return YieldBounds.trivial(n_cut, infeasible=True)
            y_low[n, m] = min(y_up[n, m], max(0.0, optimum))
    return YieldBounds(y_low=y_low, y_up=y_up, solved=tuple(wanted))
