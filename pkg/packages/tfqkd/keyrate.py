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

"""This module contains the phase-error bound and the secret key rates."""

import logging
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from packages.tfqkd.decoy import (
    deviated_gains,
    deviation,
    exact_gains,
    yield_bounds_lp,
)
from packages.tfqkd.exceptions import DomainError
from packages.tfqkd.maths import binary_entropy, poisson_vector
from packages.tfqkd.models import ChannelParams, IntensitySet, ProtocolConfig
from packages.tfqkd.optics import x_basis_stats, z_gain_matrix
from packages.tfqkd.payloads import (
    KeyRateReport,
    ObservedStats,
    PhaseErrorBound,
    X_SETTINGS,
    XBasisStats,
    YieldBounds,
    z_setting,
)


# Poisson amplitudes beyond this order are below double precision for s <= 1.5
AMPLITUDE_ORDER = 40
EXACT_GAIN_SLACK = 1e-9

Counts = Tuple[Tuple[int, ...], ...]

_logger = logging.getLogger(__name__)


def phase_targets(n_cut: int, max_order: int) -> List[Tuple[int, int]]:
    """Yield entries entering the phase-error bound that get their own LP."""
    return [
        (n, m)
        for n in range(n_cut + 1)
        for m in range(n_cut + 1)
        if n % 2 == m % 2 and n + m <= max_order
    ]


def phase_error_terms(
    s_a: float, s_b: float, yields: YieldBounds, q_x: float
) -> PhaseErrorBound:
    """
    Phase-error upper bound split into its parity contributions.

    Yields beyond the bounded matrix are taken as 1.

    :param s_a: Alice's signal intensity.
    :param s_b: Bob's signal intensity.
    :param yields: yield bounds; only the upper bounds are used.
    :param q_x: X-basis gain normalizing the bound.
    :return: the bound with its even and odd sums and their tail parts.
    """
    if not q_x > 0:
        raise DomainError(f"the phase-error bound needs q_x > 0, got {q_x}")
    order = max(AMPLITUDE_ORDER, yields.n_cut)
    parity = np.arange(order + 1) % 2
    amp_a = np.sqrt(poisson_vector(s_a, order))
    amp_b = np.sqrt(poisson_vector(s_b, order))
    y_up = np.ones((order + 1, order + 1))
    size = yields.n_cut + 1
    y_up[:size, :size] = yields.y_up
    outside = np.ones_like(y_up, dtype=bool)
    outside[:size, :size] = False

    terms = np.outer(amp_a, amp_b) * np.sqrt(y_up)
    even_mask = np.outer(parity == 0, parity == 0)
    odd_mask = np.outer(parity == 1, parity == 1)
    even_sum = float(terms[even_mask].sum())
    odd_sum = float(terms[odd_mask].sum())
    value = (even_sum**2 + odd_sum**2) / q_x
    return PhaseErrorBound(
        e_ph_up=min(value, 1.0),
        even_sum=even_sum,
        odd_sum=odd_sum,
        tail_even=float(terms[even_mask & outside].sum()),
        tail_odd=float(terms[odd_mask & outside].sum()),
        clamped=value > 1.0,
    )


def phase_error_bound(s_a: float, s_b: float, yields: YieldBounds, q_x: float) -> float:
    """
    Upper bound on the phase error rate of the X-basis signals.

    :param s_a: Alice's signal intensity.
    :param s_b: Bob's signal intensity.
    :param yields: yield bounds.
    :param q_x: X-basis gain.
    :return: e_ph_up in [0, 1].
    """
    return phase_error_terms(s_a, s_b, yields, q_x).e_ph_up


def key_rate_margin(q_x: float, e_x: float, e_ph_up: float, f_ec: float) -> float:
    """
    Unclamped key rate, negative when no key can be extracted.

    Error rates above one half are evaluated at one half.

    :param q_x: X-basis gain.
    :param e_x: X-basis QBER.
    :param e_ph_up: phase-error bound.
    :param f_ec: error-correction inefficiency.
    :return: the key rate per pulse, possibly negative.
    """
    return q_x * (
        1
        - binary_entropy(min(e_ph_up, 0.5))
        - f_ec * binary_entropy(min(e_x, 0.5))
    )


def secret_key_rate_inf(q_x: float, e_x: float, e_ph_up: float, f_ec: float) -> float:
    """
    Asymptotic key rate per pulse pair.

    :param q_x: X-basis gain.
    :param e_x: X-basis QBER.
    :param e_ph_up: phase-error upper bound.
    :param f_ec: error-correction inefficiency.
    :return: max(0, q_x (1 - h(e_ph_up) - f_ec h(e_x)))
    """
    if not 0 <= q_x <= 1:
        raise DomainError(f"q_x must lie in [0, 1], got {q_x}")
    for name, value in (("e_x", e_x), ("e_ph_up", e_ph_up)):
        if not 0 <= value <= 1:
            raise DomainError(f"{name} must lie in [0, 1], got {value}")
    if f_ec < 1:
        raise DomainError(f"f_ec must be >= 1, got {f_ec}")
    return max(0.0, key_rate_margin(q_x, e_x, e_ph_up, f_ec))


def finite_x_bounds(
    x_pulses: int, x_clicks: int, x_errors: int, config: ProtocolConfig
) -> Tuple[float, float]:
    """
    Pessimistic X-basis gain and QBER.

    :param x_pulses: X-basis pulses sent.
    :param x_clicks: X-basis single clicks.
    :param x_errors: X-basis errors.
    :param config: protocol configuration.
    :return: the gain at its lower and the QBER at its upper deviation.
    """
    if x_pulses == 0:
        return 0.0, 0.5
    q_x_low = deviation(x_clicks, x_pulses, config.eps_est, config.deviation).q_low
    if x_clicks == 0:
        return q_x_low, 0.5
    e_x_up = deviation(x_errors, x_clicks, config.eps_est, config.deviation).q_up
    return q_x_low, min(e_x_up, 0.5)


def secret_key_rate_fin(
    obs: ObservedStats,
    yields_fin: YieldBounds,
    config: ProtocolConfig,
    intensities: IntensitySet,
) -> float:
    """
    Finite-data key rate per pulse pair.

    Same formula as the asymptotic rate with the X-basis gain at its lower and
    the QBER at its upper deviation.

    :param obs: observed counts.
    :param yields_fin: yield bounds from deviated Z-basis gains.
    :param config: protocol configuration.
    :param intensities: the signal intensities used.
    :return: the rate, 0 when the pessimistic value is negative.
    """
    obs.require_complete()
    q_x_low, e_x_up = finite_x_bounds(obs.x_pulses, obs.x_clicks, obs.x_errors, config)
    if q_x_low <= 0:
        return 0.0
    e_ph = phase_error_bound(intensities.s_a, intensities.s_b, yields_fin, q_x_low)
    return secret_key_rate_inf(q_x_low, e_x_up, e_ph, config.f_ec)


def expected_x_counts(
    config: ProtocolConfig, x_stats: XBasisStats
) -> Tuple[int, int, int]:
    """Expected X-basis pulses, single clicks and errors, rounded."""
    x_pulses = round(config.n_pulses * config.p_x_basis)
    x_clicks = round(x_pulses * x_stats.q_x)
    return x_pulses, x_clicks, min(round(x_clicks * x_stats.e_x), x_clicks)


def expected_z_counts(
    config: ProtocolConfig,
    channel: ChannelParams,
    physical_decoys: Tuple[float, float, float],
) -> Tuple[Counts, Counts]:
    """Expected Z-basis pulses and single clicks per decoy pair, rounded."""
    z_total = config.n_pulses - round(config.n_pulses * config.p_x_basis)
    probs = config.decoy_probs
    q_z = z_gain_matrix(channel, physical_decoys)
    pulses = tuple(
        tuple(round(z_total * probs[i] * probs[j]) for j in range(3)) for i in range(3)
    )
    clicks = tuple(
        tuple(min(round(pulses[i][j] * q_z[i, j]), pulses[i][j]) for j in range(3))
        for i in range(3)
    )
    return pulses, clicks


def expected_observations(
    config: ProtocolConfig, channel: ChannelParams, intensities: IntensitySet
) -> ObservedStats:
    """
    Observations an n_pulses run produces in expectation.

    Counts are rounded to integers.

    :param config: protocol configuration.
    :param channel: the channel.
    :param intensities: signal and decoy intensities.
    :return: expected observations.
    """
    x_stats = x_basis_stats(channel, intensities.s_a, intensities.s_b)
    x_pulses, x_clicks, x_errors = expected_x_counts(config, x_stats)
    z_pulses, z_clicks = expected_z_counts(config, channel, intensities.physical_decoys)
    missing = [label for label in X_SETTINGS if x_pulses == 0] + [
        z_setting(i, j) for i in range(3) for j in range(3) if z_pulses[i][j] == 0
    ]
    return ObservedStats(
        q_x_hat=x_clicks / x_pulses if x_pulses else None,
        e_x_hat=x_errors / x_clicks if x_clicks else 0.0,
        x_pulses=x_pulses,
        x_clicks=x_clicks,
        x_errors=x_errors,
        q_z_hat=tuple(
            tuple(c / p if p else None for c, p in zip(c_row, p_row))
            for c_row, p_row in zip(z_clicks, z_pulses)
        ),
        z_pulses=z_pulses,
        z_clicks=z_clicks,
        n_total=x_pulses + sum(sum(row) for row in z_pulses),
        e_x_undefined=x_clicks == 0,
        missing=tuple(missing),
    )


def yield_upper_bounds(
    channel: ChannelParams,
    intensities: IntensitySet,
    config: ProtocolConfig,
    finite: bool,
) -> YieldBounds:
    """
    Upper yield bounds entering the phase-error bound.

    Only the decoys of ``intensities`` matter. Infinite-data bounds use exact
    gains; finite-data bounds deviate the expected counts of an n_pulses run.

    :param channel: the channel.
    :param intensities: intensity set providing the decoys.
    :param config: protocol configuration.
    :param finite: whether to deviate the gains.
    :return: the yield bounds.
    """
    if finite:
        pulses, clicks = expected_z_counts(config, channel, intensities.physical_decoys)
        gains = [
            [
                deviation(clicks[i][j], pulses[i][j], config.eps_est, config.deviation)
                for j in range(3)
            ]
            for i in range(3)
        ]
    else:
        gains = exact_gains(
            z_gain_matrix(channel, intensities.physical_decoys), EXACT_GAIN_SLACK
        )
    return yield_bounds_lp(
        gains,
        intensities.decoys,
        config.n_cut,
        targets=phase_targets(config.n_cut, config.lp_max_order),
        sense="upper",
    )


def _report(
    intensities: IntensitySet,
    channel: Dict[str, Any],
    config: ProtocolConfig,
    x_values: Tuple[float, float, bool],
    yields: YieldBounds,
    finite: Optional[Tuple[ObservedStats, YieldBounds]],
) -> KeyRateReport:
    """Assemble a KeyRateReport from point values and yield bounds."""
    q_x, e_x, e_x_undefined = x_values
    diagnostics: Dict[str, Any] = {
        "yields_infeasible": yields.infeasible,
        "e_x_undefined": e_x_undefined,
    }
    if q_x > 0:
        terms = phase_error_terms(intensities.s_a, intensities.s_b, yields, q_x)
        if terms.clamped:
            _logger.warning("phase-error bound exceeds 1 and is clamped")
        e_ph = terms.e_ph_up
        r_inf = secret_key_rate_inf(q_x, e_x, e_ph, config.f_ec)
        diagnostics.update(
            even_sum=terms.even_sum,
            odd_sum=terms.odd_sum,
            tail_even=terms.tail_even,
            tail_odd=terms.tail_odd,
            e_ph_clamped=terms.clamped,
        )
    else:
        e_ph, r_inf = 1.0, 0.0
        diagnostics["e_ph_clamped"] = True

    r_fin = None
    if finite is not None:
        obs, yields_fin = finite
        q_x_low, e_x_up = finite_x_bounds(
            obs.x_pulses, obs.x_clicks, obs.x_errors, config
        )
        r_fin = secret_key_rate_fin(obs, yields_fin, config, intensities)
        diagnostics["finite"] = {
            "q_x_low": q_x_low,
            "e_x_up": e_x_up,
            "e_ph_up": (
                phase_error_bound(intensities.s_a, intensities.s_b, yields_fin, q_x_low)
                if q_x_low > 0
                else 1.0
            ),
            "yields_infeasible": yields_fin.infeasible,
            "deviation": config.deviation.value,
        }
    return KeyRateReport(
        q_x=q_x,
        e_x=e_x,
        e_ph_up=e_ph,
        r_inf=r_inf,
        r_fin=r_fin,
        intensities=intensities,
        channel=channel,
        protocol=config.to_json(),
        diagnostics=diagnostics,
        informative=r_inf > 0,
    )


def evaluate_intensities(
    channel: ChannelParams,
    intensities: IntensitySet,
    config: ProtocolConfig,
    finite: bool = True,
) -> KeyRateReport:
    """
    Key rates of the analytic model at fixed intensities.

    The infinite-data rate uses exact gains; the finite-data rate uses the
    expected counts of an n_pulses run with the configured deviation bound.

    :param channel: the channel.
    :param intensities: signal and decoy intensities.
    :param config: protocol configuration.
    :param finite: whether to compute the finite-data rate too.
    :return: the report.
    """
    x_stats = x_basis_stats(channel, intensities.s_a, intensities.s_b)
    yields = yield_upper_bounds(channel, intensities, config, finite=False)
    finite_inputs = None
    if finite:
        finite_inputs = (
            expected_observations(config, channel, intensities),
            yield_upper_bounds(channel, intensities, config, finite=True),
        )
    return _report(
        intensities,
        channel.to_json(),
        config,
        (x_stats.q_x, x_stats.e_x, x_stats.undefined),
        yields,
        finite_inputs,
    )


def observed_report(
    obs: ObservedStats,
    intensities: IntensitySet,
    config: ProtocolConfig,
    channel: Optional[ChannelParams] = None,
) -> KeyRateReport:
    """
    Key rates from observed counts.

    The infinite-data rate treats the point estimates as exact; the
    finite-data rate deviates every count.

    :param obs: observations of a run.
    :param intensities: the intensities the run used.
    :param config: protocol configuration.
    :param channel: the channel, echoed for provenance.
    :return: the report.
    """
    obs.require_complete()
    targets = phase_targets(config.n_cut, config.lp_max_order)
    yields = yield_bounds_lp(
        exact_gains(np.array(obs.q_z_hat, dtype=float), EXACT_GAIN_SLACK),
        intensities.decoys,
        config.n_cut,
        targets=targets,
        sense="upper",
    )
    yields_fin = yield_bounds_lp(
        deviated_gains(obs, config.eps_est, config.deviation),
        intensities.decoys,
        config.n_cut,
        targets=targets,
        sense="upper",
    )
    return _report(
        intensities,
        channel.to_json() if channel is not None else {},
        config,
        (obs.q_x_hat or 0.0, obs.e_x_hat or 0.0, obs.e_x_undefined),
        yields,
        (obs, yields_fin),
    )
