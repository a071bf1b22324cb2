"""Log-mel frontend: symmetric padding, spectrogram patches, patch framing.

Every model in the pipeline consumes fixed-context log-mel patches. A patch
covers exactly ``context_s`` seconds of audio (default 2 s); clips shorter
than the context are reflect-padded around both ends, longer clips are never
truncated here - framing decides coverage.

All sample arithmetic is integral: the context window is
``ceil(context_s * sample_rate)`` samples, the STFT window/hop are rounded
from milliseconds, and the number of frames per patch is

    num_frames = (context_samples - window_samples) // hop_samples + 1

which is 198 for the defaults (2 s at 16 kHz, 25 ms window, 10 ms hop).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, FramingError, InvalidInputError


@dataclass(frozen=True)
class Waveform:
    """Mono audio clip: float samples in [-1, 1] plus a sample rate in Hz."""

    samples: np.ndarray
    sample_rate: int = 16000

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        object.__setattr__(self, "samples", samples)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidInputError("waveform must be a non-empty 1-D sample array")
        if not np.all(np.isfinite(samples)):
            raise InvalidInputError("waveform contains non-finite samples")
        if self.sample_rate <= 0:
            raise InvalidInputError(f"sample_rate must be positive, got {self.sample_rate}")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class SpectrogramConfig:
    """Frontend parameters; defaults give 80-bin 125-7500 Hz patches of 2 s."""

    window_ms: float = 25.0
    hop_ms: float = 10.0
    num_mel_bins: int = 80
    fmin_hz: float = 125.0
    fmax_hz: float = 7500.0
    context_s: float = 2.0
    log_floor: float = 1e-6

    def __post_init__(self):
        if not (self.hop_ms > 0 and self.window_ms >= self.hop_ms):
            raise ConfigError("require window_ms >= hop_ms > 0")
        if self.num_mel_bins < 1:
            raise ConfigError("num_mel_bins must be >= 1")
        if not (0 < self.fmin_hz < self.fmax_hz):
            raise ConfigError("require 0 < fmin_hz < fmax_hz")
        if self.context_s <= 0:
            raise ConfigError("context_s must be positive")
        if self.log_floor <= 0:
            raise ConfigError("log_floor must be positive")

    def validate_rate(self, sample_rate: int) -> None:
        if self.fmax_hz > sample_rate / 2:
            raise ConfigError(
                f"fmax_hz {self.fmax_hz} exceeds Nyquist {sample_rate / 2} at {sample_rate} Hz"
            )

    def window_samples(self, sample_rate: int) -> int:
        return int(round(self.window_ms * sample_rate / 1000.0))

    def hop_samples(self, sample_rate: int) -> int:
        return int(round(self.hop_ms * sample_rate / 1000.0))

    def context_samples(self, sample_rate: int) -> int:
        return math.ceil(self.context_s * sample_rate)

    def num_frames(self, sample_rate: int) -> int:
        win = self.window_samples(sample_rate)
        hop = self.hop_samples(sample_rate)
        ctx = self.context_samples(sample_rate)
        if ctx < win:
            raise ConfigError("context window shorter than the analysis window")
        return (ctx - win) // hop + 1

    def patch_shape(self, sample_rate: int) -> tuple:
        return (self.num_frames(sample_rate), self.num_mel_bins)

    def to_dict(self) -> dict:
        return {
            "window_ms": self.window_ms,
            "hop_ms": self.hop_ms,
            "num_mel_bins": self.num_mel_bins,
            "fmin_hz": self.fmin_hz,
            "fmax_hz": self.fmax_hz,
            "context_s": self.context_s,
            "log_floor": self.log_floor,
        }


@dataclass(frozen=True)
class LogMelPatch:
    """One context window of log-mel features, shape (num_frames, num_mel_bins)."""

    values: np.ndarray
    start_offset_s: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2:
            raise InvalidInputError("patch values must be a 2-D matrix")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("patch contains non-finite values")

    @property
    def shape(self) -> tuple:
        return self.values.shape


@dataclass(frozen=True)
class FramingPlan:
    """Patch start offsets over a padded clip, spaced by ``frame_advance_s``."""

    frame_advance_s: float
    patch_offsets: tuple = field(default_factory=tuple)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_bin_centers(cfg: SpectrogramConfig) -> np.ndarray:
    """Center frequency in Hz of each triangular mel filter."""
    edges = np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.num_mel_bins + 2)
    return mel_to_hz(edges[1:-1])


def mel_filterbank(cfg: SpectrogramConfig, sample_rate: int, n_fft: int) -> np.ndarray:
    """Triangular peak-1 filters on mel-spaced corner points, (bins, n_fft//2+1)."""
    cfg.validate_rate(sample_rate)
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / sample_rate)
    corners = mel_to_hz(
        np.linspace(hz_to_mel(cfg.fmin_hz), hz_to_mel(cfg.fmax_hz), cfg.num_mel_bins + 2)
    )
    fb = np.zeros((cfg.num_mel_bins, freqs.size), dtype=np.float64)
    for m in range(cfg.num_mel_bins):
        lo, mid, hi = corners[m], corners[m + 1], corners[m + 2]
        rising = (freqs - lo) / (mid - lo)
        falling = (hi - freqs) / (hi - mid)
        fb[m] = np.clip(np.minimum(rising, falling), 0.0, None)
    return fb


def _hann_periodic(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def pad_symmetric(w: Waveform, target_s: float) -> Waveform:
    """Reflect-pad a short clip to ``ceil(target_s * sample_rate)`` samples.

    The deficit is split as evenly as possible between samples reflected
    before the start and after the end; an odd deficit puts the extra sample
    on the end side. Clips already long enough are returned unchanged.
    """
    if target_s <= 0:
        raise InvalidInputError("target_s must be positive")
    target = math.ceil(target_s * w.sample_rate)
    if len(w) >= target:
        return w
    deficit = target - len(w)
    left = deficit // 2
    right = deficit - left
    padded = np.pad(w.samples, (left, right), mode="reflect")
    return Waveform(padded, w.sample_rate)


def compute_log_mel(w: Waveform, cfg: SpectrogramConfig) -> LogMelPatch:
    """Log-magnitude mel spectrogram of exactly one context window.

    Hann-windowed magnitude STFT, triangular mel filters, then
    ``log(mel_energy + log_floor)``. Deterministic for fixed input/config.
    """
    cfg.validate_rate(w.sample_rate)
    ctx = cfg.context_samples(w.sample_rate)
    if len(w) != ctx:
        raise FramingError(
            f"clip of {len(w)} samples does not match the context window of {ctx}; pad first"
        )
    win = cfg.window_samples(w.sample_rate)
    hop = cfg.hop_samples(w.sample_rate)
    n_frames = cfg.num_frames(w.sample_rate)
    n_fft = 1 << (win - 1).bit_length()

    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = w.samples[idx] * _hann_periodic(win)[None, :]
    mag = np.abs(np.fft.rfft(frames, n=n_fft, axis=1))
    fb = mel_filterbank(cfg, w.sample_rate, n_fft)
    mel_energy = mag @ fb.T
    return LogMelPatch(np.log(mel_energy + cfg.log_floor), start_offset_s=0.0)


def plan_frames(w: Waveform, cfg: SpectrogramConfig, advance_s: float) -> FramingPlan:
    """Offsets 0, advance, 2*advance, ... fitting inside the padded clip."""
    if advance_s <= 0:
        raise FramingError("advance_s must be positive")
    padded_len = max(len(w), cfg.context_samples(w.sample_rate))
    ctx = cfg.context_samples(w.sample_rate)
    adv = int(round(advance_s * w.sample_rate))
    if adv < 1:
        raise FramingError(f"advance_s {advance_s} is below one sample at {w.sample_rate} Hz")
    count = (padded_len - ctx) // adv + 1
    offsets = tuple((k * adv) / w.sample_rate for k in range(count))
    return FramingPlan(frame_advance_s=advance_s, patch_offsets=offsets)


def frame_patches(w: Waveform, cfg: SpectrogramConfig, advance_s: float) -> list:
    """Pad to at least the context length, then one patch per plan offset."""
    padded = pad_symmetric(w, cfg.context_s)
    plan = plan_frames(padded, cfg, advance_s)
    ctx = cfg.context_samples(padded.sample_rate)
    patches = []
    for off_s in plan.patch_offsets:
        start = int(round(off_s * padded.sample_rate))
        piece = Waveform(padded.samples[start:start + ctx], padded.sample_rate)
        patch = compute_log_mel(piece, cfg)
        patches.append(LogMelPatch(patch.values, start_offset_s=off_s))
    return patches
