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

"""This module contains the pulse-level Monte Carlo simulation of the protocol."""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Tuple

import numpy as np

from packages.tfqkd.exceptions import DomainError, EmptyTallyError
from packages.tfqkd.models import ChannelParams, IntensitySet, ProtocolConfig
from packages.tfqkd.optics import click_probability, detector_intensity_arrays
from packages.tfqkd.payloads import (
    ALL_SETTINGS,
    ObservedStats,
    SettingTally,
    TallyMatrix,
    X_SETTINGS,
    z_setting,
)


BLOCK_PULSES = 1 << 20
N_SETTINGS = len(ALL_SETTINGS)
# outcome code = d0_click + 2 * d1_click
NEITHER, D0_ONLY, D1_ONLY, BOTH = range(4)

_logger = logging.getLogger(__name__)


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Counter-mode random stream of one pulse block."""
    return np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,)))
    )


def _simulate_block(
    args: Tuple[ProtocolConfig, ChannelParams, IntensitySet, int, int, int]
) -> np.ndarray:
    """
    Simulate one block of pulses.

    :param args: config, channel, intensities, seed, block index and block size.
    :return: flat counts, 4 outcomes per setting followed by per-setting errors.
    """
    config, channel, intensities, seed, block, size = args
    rng = block_generator(seed, block)

    x_basis = rng.random(size) < config.p_x_basis
    phase_bits = rng.integers(0, 2, size=(size, 2))
    decoy_idx = rng.choice(3, size=(size, 2), p=config.decoy_probs)
    z_phase = rng.uniform(0.0, 2 * math.pi, size)

    x_flip = phase_bits[:, 0] ^ phase_bits[:, 1]
    delta_phi = np.where(x_basis, math.pi * x_flip, z_phase)
    decoys = np.array(intensities.physical_decoys)
    s_a = np.where(x_basis, intensities.s_a, decoys[decoy_idx[:, 0]])
    s_b = np.where(x_basis, intensities.s_b, decoys[decoy_idx[:, 1]])
    setting = np.where(x_basis, x_flip, 2 + 3 * decoy_idx[:, 0] + decoy_idx[:, 1])

    mu_d0, mu_d1 = detector_intensity_arrays(channel, s_a, s_b, delta_phi)
    d0 = rng.random(size) < click_probability(channel, mu_d0)
    d1 = rng.random(size) < click_probability(channel, mu_d1)
    outcome = d0.astype(np.int64) + 2 * d1.astype(np.int64)

    counts = np.bincount(setting * 4 + outcome, minlength=N_SETTINGS * 4)
    # phase 0 expects D0, phase pi expects D1
    wrong = x_basis & (outcome == np.where(x_flip == 0, D1_ONLY, D0_ONLY))
    errors = np.bincount(setting[wrong], minlength=N_SETTINGS)
    return np.concatenate([counts, errors])


def _block_plan(n_pulses: int) -> List[Tuple[int, int]]:
    """Fixed partition of the pulse index range into (block, size) pairs."""
    full, rest = divmod(n_pulses, BLOCK_PULSES)
    plan = [(block, BLOCK_PULSES) for block in range(full)]
    if rest:
        plan.append((full, rest))
    return plan


def _to_tally(flat: np.ndarray) -> TallyMatrix:
    """Build a TallyMatrix from merged flat counts."""
    counts = flat[: N_SETTINGS * 4].reshape(N_SETTINGS, 4)
    errors = flat[N_SETTINGS * 4 :]
    settings = {}
    for index, label in enumerate(ALL_SETTINGS):
        row = [int(v) for v in counts[index]]
        settings[label] = SettingTally(
            pulses_sent=sum(row),
            d0_only=row[D0_ONLY],
            d1_only=row[D1_ONLY],
            both=row[BOTH],
            neither=row[NEITHER],
            error_count=int(errors[index]),
        )
    return TallyMatrix(settings)


def simulate_run(
    config: ProtocolConfig,
    channel: ChannelParams,
    intensities: IntensitySet,
    seed: int,
    workers: Optional[int] = None,
    n_pulses: Optional[int] = None,
) -> TallyMatrix:
    """
    Simulate a protocol run pulse by pulse.

    The pulse range is cut into fixed-size blocks, each drawing from its own
    Philox stream keyed by (seed, block index), so the tally does not depend on
    how many workers process the blocks.

    :param config: protocol configuration.
    :param channel: the channel.
    :param intensities: signal and decoy intensities.
    :param seed: non-negative 64-bit seed.
    :param workers: number of worker processes, 1 or None runs in-process.
    :param n_pulses: overrides config.n_pulses.
    :return: the tally of the run.
    """
    total = config.n_pulses if n_pulses is None else n_pulses
    if total <= 0:
        raise EmptyTallyError("a run needs at least one pulse")
    if seed < 0 or seed >= 1 << 64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    plan = _block_plan(total)
    jobs = [(config, channel, intensities, seed, block, size) for block, size in plan]
    _logger.info(
        f"Simulating {total} pulses in {len(plan)} blocks with {workers or 1} worker(s)"
    )
    if workers is None or workers <= 1 or len(jobs) == 1:
        partials = map(_simulate_block, jobs)
        flat = sum(partials, np.zeros(N_SETTINGS * 5, dtype=np.int64))
    else:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            flat = sum(
                executor.map(_simulate_block, jobs),
                np.zeros(N_SETTINGS * 5, dtype=np.int64),
            )
    return _to_tally(flat)


def tallies_to_observations(tallies: TallyMatrix) -> ObservedStats:
    """
    Turn raw counts into gain and QBER estimates.

    :param tallies: the raw counts.
    :return: estimates with raw counts attached.
    """
    if tallies.n_total == 0:
        raise EmptyTallyError("the tally contains no pulses")
    missing = [label for label in ALL_SETTINGS if tallies[label].pulses_sent == 0]

    x_pulses = sum(tallies[label].pulses_sent for label in X_SETTINGS)
    x_clicks = sum(tallies[label].single_clicks for label in X_SETTINGS)
    x_errors = sum(tallies[label].error_count for label in X_SETTINGS)
    q_x_hat = x_clicks / x_pulses if x_pulses else None
    e_x_undefined = x_clicks == 0
    if e_x_undefined:
        _logger.warning("no X-basis single clicks; QBER undefined and reported as 0")
    e_x_hat = x_errors / x_clicks if x_clicks else 0.0

    pulses = [
        [tallies[z_setting(i, j)].pulses_sent for j in range(3)] for i in range(3)
    ]
    clicks = [
        [tallies[z_setting(i, j)].single_clicks for j in range(3)] for i in range(3)
    ]
    q_z_hat = tuple(
        tuple(c / p if p else None for c, p in zip(c_row, p_row))
        for c_row, p_row in zip(clicks, pulses)
    )
    if missing:
        _logger.warning(f"settings without pulses: {', '.join(missing)}")
    return ObservedStats(
        q_x_hat=q_x_hat,
        e_x_hat=e_x_hat,
        x_pulses=x_pulses,
        x_clicks=x_clicks,
        x_errors=x_errors,
        q_z_hat=q_z_hat,
        z_pulses=tuple(tuple(row) for row in pulses),
        z_clicks=tuple(tuple(row) for row in clicks),
        n_total=tallies.n_total,
        e_x_undefined=e_x_undefined,
        missing=tuple(missing),
    )
