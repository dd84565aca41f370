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

"""This module contains the elementary mathematical functions of the model."""

import math

import numpy as np
from scipy.special import gammaln, xlogy

from packages.tfqkd.exceptions import DomainError


LN2 = math.log(2.0)


def _check_intensity(intensity: float) -> None:
    """Raise a DomainError for a negative or non-finite intensity."""
    if not math.isfinite(intensity) or intensity < 0:
        raise DomainError(f"intensity must be finite and >= 0, got {intensity}")


def poisson_pn(k: int, intensity: float) -> float:
    """
    Probability of k photons in a phase-randomized coherent state.

    Evaluated in log space so that large k neither overflows nor underflows
    prematurely.

    :param k: photon number.
    :param intensity: mean photon number.
    :return: e^-intensity * intensity^k / k!
    """
    _check_intensity(intensity)
    if k < 0:
        raise DomainError(f"photon number must be >= 0, got {k}")
    if intensity == 0:
        return 1.0 if k == 0 else 0.0
    return float(np.exp(-intensity + k * math.log(intensity) - gammaln(k + 1)))


def poisson_vector(intensity: float, n_max: int) -> np.ndarray:
    """
    Photon-number distribution p_0 .. p_n_max of a coherent state.

    :param intensity: mean photon number.
    :param n_max: largest photon number included.
    :return: array of length n_max + 1.
    """
    _check_intensity(intensity)
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    k = np.arange(n_max + 1)
    if intensity == 0:
        return (k == 0).astype(float)
    return np.exp(-intensity + k * math.log(intensity) - gammaln(k + 1))


def poisson_tail(intensity: float, n_max: int) -> float:
    """Probability mass above n_max photons."""
    return max(0.0, 1.0 - float(np.sum(poisson_vector(intensity, n_max))))


def binary_entropy(x: float) -> float:
    """
    Binary Shannon entropy in bits.

    :param x: probability.
    :return: h(x), with h(0) = h(1) = 0.
    """
    if not 0 <= x <= 1:
        raise DomainError(f"binary entropy needs x in [0, 1], got {x}")
    return float(-(xlogy(x, x) + xlogy(1 - x, 1 - x)) / LN2)


def plob_bound(eta_total: float) -> float:
    """
    Repeaterless secret-key capacity per channel use.

    :param eta_total: end-to-end transmittance.
    :return: -log2(1 - eta_total)
    """
    if not 0 < eta_total < 1:
        raise DomainError(f"eta_total must lie in (0, 1), got {eta_total}")
    return -math.log1p(-eta_total) / LN2


def db_to_transmittance(loss_db: float) -> float:
    """Convert a loss in dB to a transmittance."""
    if not math.isfinite(loss_db) or loss_db < 0:
        raise DomainError(f"loss must be finite and >= 0 dB, got {loss_db}")
    return 10 ** (-loss_db / 10)


def transmittance_to_db(eta: float) -> float:
    """Convert a transmittance in (0, 1] to a loss in dB."""
    if not 0 < eta <= 1:
        raise DomainError(f"transmittance must lie in (0, 1], got {eta}")
    return -10 * math.log10(eta)
