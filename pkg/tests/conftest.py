"""Shared fixtures: one noiseless synthetic trial and its segmentation are
session-scoped because several suites reuse them read-only."""

import numpy as np
import pytest

from gaitug.domain import JointIndexTable
from gaitug.segmentation import segment_trial
from gaitug.synth import CohortConfig, SynthConfig, generate, generate_cohort

JOINTS = JointIndexTable()


@pytest.fixture(scope="session")
def default_synth():
    return generate(SynthConfig())


@pytest.fixture(scope="session")
def default_seg(default_synth):
    return segment_trial(default_synth.trial, JOINTS)


@pytest.fixture(scope="session")
def noisy_synth():
    return generate(SynthConfig(noise_sd_m=0.002, seed=5))


@pytest.fixture(scope="session")
def small_cohort():
    return generate_cohort(CohortConfig(n_participants=6, trials_per_participant=3,
                                        seed=11))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
