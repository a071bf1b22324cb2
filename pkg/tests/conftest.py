import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # tests/oracles.py

from melstill.frontend import SpectrogramConfig, Waveform
from melstill.teacher import TeacherSpec


@pytest.fixture(scope="session")
def frontend_cfg():
    return SpectrogramConfig()


@pytest.fixture(scope="session")
def teacher_spec():
    return TeacherSpec(embedding_dim=64, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_tone(duration_s=2.0, freq=440.0, sr=16000, amp=0.5):
    t = np.arange(int(round(duration_s * sr))) / sr
    return Waveform(amp * np.sin(2 * np.pi * freq * t), sr)


@pytest.fixture
def tone_clip():
    return make_tone()
