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

"""Tests for the elementary mathematical functions."""

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from packages.tfqkd.exceptions import DomainError
from packages.tfqkd.maths import (
    binary_entropy,
    db_to_transmittance,
    plob_bound,
    poisson_pn,
    poisson_tail,
    poisson_vector,
    transmittance_to_db,
)


def test_poisson_pn_values() -> None:
    """Test a few photon-number probabilities."""
    assert poisson_pn(0, 0.0) == 1.0
    assert poisson_pn(3, 0.0) == 0.0
    assert poisson_pn(2, 0.5) == pytest.approx(math.exp(-0.5) * 0.125, rel=1e-12)
    assert poisson_pn(150, 1.0) == pytest.approx(
        math.exp(-1.0 - math.lgamma(151)), rel=1e-10
    )


def test_poisson_pn_rejects_bad_arguments() -> None:
    """Test the domain checks."""
    with pytest.raises(DomainError):
        poisson_pn(1, -0.1)
    with pytest.raises(DomainError):
        poisson_pn(-1, 0.1)
    with pytest.raises(DomainError):
        poisson_pn(1, math.inf)


@given(
    intensity=st.floats(min_value=0.0, max_value=5.0),
    n_max=st.integers(min_value=0, max_value=40),
)
def test_poisson_vector_matches_scalar(intensity: float, n_max: int) -> None:
    """Test the vectorised distribution against the scalar one and its tail."""
    vector = poisson_vector(intensity, n_max)
    assert vector.shape == (n_max + 1,)
    assert vector[n_max] == pytest.approx(poisson_pn(n_max, intensity), rel=1e-9)
    assert float(np.sum(vector)) + poisson_tail(intensity, n_max) == pytest.approx(
        1.0, abs=1e-12
    )


def test_poisson_tail_is_tiny_for_high_cut() -> None:
    """Test that forty photons exhaust a weak pulse."""
    assert poisson_tail(0.5, 40) < 1e-15
    assert poisson_tail(0.5, 0) == pytest.approx(1 - math.exp(-0.5))


def test_binary_entropy_values() -> None:
    """Test the fixed points of the entropy."""
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == pytest.approx(1.0)
    assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-3)
    with pytest.raises(DomainError):
        binary_entropy(1.2)


@given(x=st.floats(min_value=0.0, max_value=1.0))
def test_binary_entropy_symmetry(x: float) -> None:
    """Test h(x) = h(1 - x) and 0 <= h <= 1."""
    assert binary_entropy(x) == pytest.approx(binary_entropy(1 - x), abs=1e-12)
    assert 0.0 <= binary_entropy(x) <= 1.0 + 1e-12


def test_plob_bound() -> None:
    """Test the repeaterless bound."""
    assert plob_bound(0.5) == pytest.approx(1.0)
    assert plob_bound(1e-5) == pytest.approx(1e-5 / math.log(2), rel=1e-5)
    for eta in (0.0, 1.0, -0.1):
        with pytest.raises(DomainError):
            plob_bound(eta)


@given(eta=st.floats(min_value=1e-9, max_value=0.999))
def test_plob_bound_is_monotone(eta: float) -> None:
    """Test that more transmittance never lowers the bound."""
    assert plob_bound(eta) <= plob_bound(min(eta * 1.001, 0.9999))


def test_db_conversions() -> None:
    """Test loss and transmittance conversions."""
    assert db_to_transmittance(30) == pytest.approx(1e-3)
    assert db_to_transmittance(0) == 1.0
    assert transmittance_to_db(1e-3) == pytest.approx(30)
    with pytest.raises(DomainError):
        db_to_transmittance(-1)
    with pytest.raises(DomainError):
        transmittance_to_db(0.0)
