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

"""This module contains the closed-form optics of Charlie's interference measurement."""

import logging
import math
from functools import lru_cache
from typing import Any, Tuple

import numpy as np
from scipy.special import i0e
from scipy.stats import binom

from packages.tfqkd.exceptions import DomainError
from packages.tfqkd.models import DEFAULT_N_CUT, ChannelParams, LoopGeometry
from packages.tfqkd.payloads import ModulatorWindow, TimingReport, XBasisStats


QUADRATURE_POINTS = 256
QUADRATURE_MAX_POINTS = 1 << 16
QUADRATURE_RTOL = 1e-8
FIBER_LIGHT_SPEED_M_S = 2.04e8

_logger = logging.getLogger(__name__)


def _check_intensities(*values: float) -> None:
    """Raise a DomainError for negative or non-finite intensities."""
    for value in values:
        if not math.isfinite(value) or value < 0:
            raise DomainError(f"intensities must be finite and >= 0, got {value}")


def detector_intensities(
    channel: ChannelParams, s_a: float, s_b: float, delta_phi: float
) -> Tuple[float, float]:
    """
    Mean photon numbers reaching detectors D0 and D1.

    :param channel: the channel.
    :param s_a: Alice's emitted intensity.
    :param s_b: Bob's emitted intensity.
    :param delta_phi: relative phase in radians.
    :return: the pair (mu_d0, mu_d1).
    """
    _check_intensities(s_a, s_b)
    mu_d0, mu_d1 = detector_intensity_arrays(channel, s_a, s_b, np.asarray(delta_phi))
    return float(mu_d0), float(mu_d1)


def detector_intensity_arrays(
    channel: ChannelParams, s_a: Any, s_b: Any, delta_phi: Any
) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorised detector intensities, broadcasting over all arguments."""
    a = channel.eta_a * s_a
    b = channel.eta_b * s_b
    half = (a + b) / 2
    cross = channel.visibility * np.sqrt(a * b) * np.cos(delta_phi)
    return np.maximum(half + cross, 0.0), np.maximum(half - cross, 0.0)


def click_probability(channel: ChannelParams, mu: np.ndarray) -> np.ndarray:
    """Threshold detector click probability for incident mean photon number mu."""
    return 1.0 - (1.0 - channel.p_dark) * np.exp(-mu)


def _single_clicks(
    channel: ChannelParams, s_a: float, s_b: float, delta_phi: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Probabilities that only D0, respectively only D1, clicks."""
    mu_d0, mu_d1 = detector_intensity_arrays(channel, s_a, s_b, delta_phi)
    c0 = click_probability(channel, mu_d0)
    c1 = click_probability(channel, mu_d1)
    return c0 * (1 - c1), c1 * (1 - c0)


def x_basis_stats(channel: ChannelParams, s_a: float, s_b: float) -> XBasisStats:
    """
    Expected X-basis gain and QBER.

    The relative phase is 0 or pi with equal probability; D0 is the correct
    detector for phase 0 and D1 for phase pi.

    :param channel: the channel.
    :param s_a: Alice's signal intensity.
    :param s_b: Bob's signal intensity.
    :return: gain and QBER, flagged undefined when the gain is 0.
    """
    _check_intensities(s_a, s_b)
    only_d0, only_d1 = _single_clicks(channel, s_a, s_b, np.array([0.0, math.pi]))
    q_x = float((only_d0[0] + only_d1[0] + only_d0[1] + only_d1[1]) / 2)
    errors = float((only_d1[0] + only_d0[1]) / 2)
    if q_x <= 0:
        _logger.warning("X-basis gain is zero; QBER undefined and reported as 0")
        return XBasisStats(q_x=0.0, e_x=0.0, undefined=True)
    return XBasisStats(q_x=min(q_x, 1.0), e_x=min(errors / q_x, 1.0))


def _phase_averaged_gain(
    channel: ChannelParams, a_int: float, b_int: float, points: int
) -> float:
    """Periodic trapezoid rule over the relative phase."""
    phases = 2 * math.pi * np.arange(points) / points
    only_d0, only_d1 = _single_clicks(channel, a_int, b_int, phases)
    return float(np.mean(only_d0 + only_d1))


def z_basis_gain(channel: ChannelParams, a_int: float, b_int: float) -> float:
    """
    Exactly-one-click probability for phase-randomized pulses.

    The point count doubles from 256 until the relative change drops below
    1e-8.

    :param channel: the channel.
    :param a_int: Alice's decoy intensity.
    :param b_int: Bob's decoy intensity.
    :return: the Z-basis gain.
    """
    _check_intensities(a_int, b_int)
    points = QUADRATURE_POINTS
    gain = _phase_averaged_gain(channel, a_int, b_int, points)
    while points < QUADRATURE_MAX_POINTS:
        points *= 2
        refined = _phase_averaged_gain(channel, a_int, b_int, points)
        converged = abs(refined - gain) <= QUADRATURE_RTOL * abs(refined)
        gain = refined
        if converged:
            return gain
    _logger.warning(
        f"Z-basis gain quadrature not converged at {points} points "
        f"(a={a_int}, b={b_int})"
    )
    return gain


def z_gain_matrix(
    channel: ChannelParams, decoys: Tuple[float, float, float]
) -> np.ndarray:
    """Z-basis gains of all nine decoy pairs, indexed [Alice][Bob]."""
    return np.array([[z_basis_gain(channel, a, b) for b in decoys] for a in decoys])


def phase_averaged_no_click(
    channel: ChannelParams, a_int: float, b_int: float
) -> float:
    """
    Phase-averaged probability that one given detector stays silent.

    Closed form through the modified Bessel function I0.

    :param channel: the channel.
    :param a_int: Alice's intensity.
    :param b_int: Bob's intensity.
    :return: the no-click probability.
    """
    _check_intensities(a_int, b_int)
    a = channel.eta_a * a_int
    b = channel.eta_b * b_int
    x = channel.visibility * math.sqrt(a * b)
    # i0e(x) = exp(-x) * I0(x)
    return float((1 - channel.p_dark) * math.exp(-(a + b) / 2 + x) * i0e(x))


@lru_cache(maxsize=None)
def beamsplitter_output(k: int, r: int) -> Tuple[float, ...]:
    """
    Photon-number distribution at the output ports of a 50:50 beamsplitter.

    Input |k, r> is expanded with a -> (c + d)/sqrt2 and b -> (c - d)/sqrt2.

    :param k: photons entering from Alice's side.
    :param r: photons entering from Bob's side.
    :return: probabilities of j = 0 .. k + r photons leaving through port c.
    """
    if k < 0 or r < 0:
        raise DomainError(f"photon numbers must be >= 0, got ({k}, {r})")
    total = k + r
    norm = math.factorial(k) * math.factorial(r) * 2**total
    probs = []
    for j in range(total + 1):
        coeff = sum(
            math.comb(k, p) * math.comb(r, j - p) * (-1) ** (r - (j - p))
            for p in range(max(0, j - r), min(k, j) + 1)
        )
        probs.append(coeff**2 * math.factorial(j) * math.factorial(total - j) / norm)
    return tuple(probs)


def _fock_single_click(channel: ChannelParams, k: int, r: int) -> float:
    """Exactly-one-click probability for k and r photons reaching the beamsplitter."""
    p_dark = channel.p_dark
    total = k + r
    if total == 0:
        return 2 * p_dark * (1 - p_dark)
    coherent = beamsplitter_output(k, r)
    coherent_edges = coherent[0] + coherent[-1]
    random_edges = 2 * 0.5**total
    v2 = channel.visibility**2
    return (1 - p_dark) * (v2 * coherent_edges + (1 - v2) * random_edges)


def true_yield(
    channel: ChannelParams, n: int, m: int, n_cut: int = DEFAULT_N_CUT
) -> float:
    """
    Exact exactly-one-click probability for Fock inputs |n> and |m>.

    Photons are thinned binomially by each arm, interfere at the beamsplitter
    with probability V^2 and are otherwise routed at random.

    :param channel: the channel.
    :param n: photons sent by Alice.
    :param m: photons sent by Bob.
    :param n_cut: largest admitted photon number.
    :return: the yield Y_nm.
    """
    if not (0 <= n <= n_cut and 0 <= m <= n_cut):
        raise DomainError(f"photon numbers ({n}, {m}) outside [0, {n_cut}]")
    p_k = binom.pmf(np.arange(n + 1), n, channel.eta_a)
    p_r = binom.pmf(np.arange(m + 1), m, channel.eta_b)
    value = sum(
        p_k[k] * p_r[r] * _fock_single_click(channel, k, r)
        for k in range(n + 1)
        for r in range(m + 1)
    )
    return float(min(max(value, 0.0), 1.0))


def true_yield_matrix(channel: ChannelParams, n_cut: int = DEFAULT_N_CUT) -> np.ndarray:
    """All yields Y_nm for 0 <= n, m <= n_cut."""
    return np.array(
        [
            [true_yield(channel, n, m, n_cut) for m in range(n_cut + 1)]
            for n in range(n_cut + 1)
        ]
    )


def fiber_delay_ns(length_km: float) -> float:
    """Propagation delay of a fiber of the given length in nanoseconds."""
    if not math.isfinite(length_km) or length_km < 0:
        raise DomainError(f"fiber length must be finite and >= 0, got {length_km}")
    return length_km * 1e3 / FIBER_LIGHT_SPEED_M_S * 1e9


def check_modulation_windows(geometry: LoopGeometry) -> TimingReport:
    """
    Check that counter-propagating pulses never meet at a modulator.

    Both pulse trains leave the beamsplitter at the same instants, so at an
    element sitting ``d`` clockwise from it the clockwise train arrives at
    ``d`` and the counter-clockwise train at ``L - d`` (modulo the pulse
    period).

    :param geometry: the loop.
    :return: per-modulator arrival phases and margins.
    """
    period = geometry.pulse_period_ns
    origin = geometry.beamsplitter.delay_ns
    windows = []
    for element in geometry.modulators:
        offset = (element.delay_ns - origin) % geometry.loop_delay_ns
        cw = offset % period
        ccw = (geometry.loop_delay_ns - offset) % period
        gap = abs(cw - ccw) % period
        separation = min(gap, period - gap)
        window = ModulatorWindow(
            name=element.name,
            cw_ns=cw,
            ccw_ns=ccw,
            separation_ns=separation,
            margin_ns=separation - geometry.pulse_width_ns,
        )
        if window.conflict:
            _logger.warning(
                f"pulses overlap at {element.name}: separation {separation:.3f} ns "
                f"< width {geometry.pulse_width_ns} ns"
            )
        windows.append(window)
    return TimingReport(windows=tuple(windows))
