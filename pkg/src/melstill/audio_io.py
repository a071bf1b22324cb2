"""Mono 16-bit PCM WAV reading and writing.

The pipeline accepts exactly one on-disk audio format: mono PCM16 at the
run's sample rate. Anything else is rejected with a diagnostic; resampling
is out of scope.
"""

import wave

import numpy as np

from .errors import InvalidInputError
from .frontend import Waveform

_PCM16_SCALE = 32767.0


def read_wav(path, expected_rate=None) -> Waveform:
    try:
        with wave.open(str(path), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            n = fh.getnframes()
            raw = fh.readframes(n)
    except (wave.Error, EOFError, OSError) as exc:
        raise InvalidInputError(f"unreadable WAV file {path}: {exc}") from exc
    if channels != 1:
        raise InvalidInputError(f"{path}: expected mono audio, got {channels} channels")
    if width != 2:
        raise InvalidInputError(f"{path}: expected 16-bit PCM, got sample width {width}")
    if expected_rate is not None and rate != expected_rate:
        raise InvalidInputError(
            f"{path}: sample rate {rate} does not match the run rate {expected_rate}"
        )
    if n == 0:
        raise InvalidInputError(f"{path}: empty audio clip")
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / _PCM16_SCALE
    return Waveform(samples, rate)


def write_wav(path, w: Waveform) -> None:
    clipped = np.clip(w.samples, -1.0, 1.0)
    pcm = np.round(clipped * _PCM16_SCALE).astype("<i2")
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(w.sample_rate)
        fh.writeframes(pcm.tobytes())
