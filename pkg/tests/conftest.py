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

"""Shared fixtures of the tfqkd test suite."""

from pathlib import Path

import pytest

from packages.tfqkd.models import ChannelParams, IntensitySet, ProtocolConfig


ROOT_DIR = Path(__file__).parents[1]
CONFIGS_DIR = ROOT_DIR / "configs"

P_DARK = 7e-7
VISIBILITY = 0.998


@pytest.fixture
def channel_40db() -> ChannelParams:
    """The 40 dB channel of the published operating points."""
    return ChannelParams.from_losses(25, 15, P_DARK, VISIBILITY)


@pytest.fixture
def channel_50db() -> ChannelParams:
    """The 50 dB channel of the published operating points."""
    return ChannelParams.from_losses(30, 20, P_DARK, VISIBILITY)


@pytest.fixture
def asym_40db() -> IntensitySet:
    """Asymmetric intensities published for 40 dB."""
    return IntensitySet(s_a=0.0448, s_b=0.00529, mu=0.3, nu=0.12)


@pytest.fixture
def protocol() -> ProtocolConfig:
    """Default protocol configuration."""
    return ProtocolConfig()


@pytest.fixture
def chernoff_protocol() -> ProtocolConfig:
    """Protocol configuration with the multiplicative deviation bound."""
    return ProtocolConfig(deviation="chernoff")
