"""Seeded synthetic benchmark: WAV corpora plus task manifests.

Clips are tone mixtures with randomized envelopes and noise floors, spanning
sub-context (1 s and shorter) through 8 s durations so padding and framing
both get exercised. Task labels are deterministic functions of the synthetic
teacher's clip embedding: a coordinate is compared against the corpus median
after adding seeded label jitter, which keeps every class boundary real but
overlapping (no degenerate AUC of exactly 0 or 1).

Everything is a pure function of the root seed: rerunning writes
byte-identical WAVs and manifests.
"""

import json
import zlib
from pathlib import Path

import numpy as np

from ..audio_io import read_wav, write_wav
from ..frontend import SpectrogramConfig, Waveform
from ..teacher import TeacherSpec, teacher_embed_clip
from .manifest import ManifestRow, TaskSpec, write_manifest

_SPLIT_CYCLE = ("train", "train", "train", "dev", "test")


def synth_clip(rng, duration_s: float, sample_rate: int = 16000,
               max_tones: int = 3, noise_hi: float = 0.03) -> Waveform:
    """One random tone-mixture clip with envelope and noise floor."""
    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    x = np.zeros(n)
    for _ in range(rng.integers(1, max_tones + 1)):
        freq = np.exp(rng.uniform(np.log(100.0), np.log(4000.0)))
        amp = rng.uniform(0.1, 0.5)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        x += amp * np.sin(2.0 * np.pi * freq * t + phase)
    attack = rng.uniform(0.02, 0.4)
    decay = rng.uniform(0.0, 1.5)
    env = np.minimum(t / (attack * duration_s), 1.0) * np.exp(-decay * t / duration_s)
    x = x * env + rng.uniform(0.001, noise_hi) * rng.standard_normal(n)
    peak = np.abs(x).max()
    if peak > 0.9:
        x = x / peak * 0.9
    return Waveform(x, sample_rate)


def _corpus(out_dir: Path, name: str, seed: int, count: int, durations,
            sample_rate: int, max_tones: int = 3, noise_hi: float = 0.03,
            noise_only: bool = False) -> list:
    """Write WAVs for one corpus; returns (clip_id, relative path) pairs."""
    clip_dir = out_dir / "clips" / name
    clip_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(count):
        rng = np.random.default_rng([seed, zlib.crc32(name.encode()), i])
        dur = durations[i % len(durations)]
        if noise_only:
            n = int(round(dur * sample_rate))
            level = rng.uniform(0.05, 0.4)
            w = Waveform(level * np.clip(rng.standard_normal(n), -2.5, 2.5) / 2.5,
                         sample_rate)
        else:
            w = synth_clip(rng, dur, sample_rate, max_tones, noise_hi)
        clip_id = f"{name}-{i:04d}"
        rel = f"clips/{name}/{clip_id}.wav"
        write_wav(out_dir / rel, w)
        entries.append((clip_id, rel))
    return entries


TASK_DEFS = (
    # (name, metric, n_classes, teacher coordinate(s))
    ("bright2", "accuracy", 2, (0,)),
    ("quad4", "accuracy", 4, (1, 2)),
    ("terce3", "accuracy", 3, (3,)),
    ("spoof2", "eer", 2, (4,)),
)

# Label jitter relative to the coordinate spread: large enough that every
# task has class overlap (finite d-prime), small enough that probes on good
# embeddings score far above chance.
_JITTER_FRAC = 0.35


def _assign_labels(values: np.ndarray, n_classes: int, rng) -> list:
    """Quantile-bin a teacher coordinate after adding seeded jitter."""
    jitter = rng.standard_normal(values.shape) * _JITTER_FRAC * values.std(axis=0)
    noisy = values + jitter
    if noisy.ndim == 1:
        edges = np.quantile(noisy, np.linspace(0, 1, n_classes + 1)[1:-1])
        return [int(np.searchsorted(edges, v)) for v in noisy]
    # two coordinates -> quadrant labels around the medians
    med = np.median(noisy, axis=0)
    bits = (noisy > med).astype(int)
    return [int(2 * a + b) for a, b in bits]


def build_synthetic_benchmark(
    out_dir,
    seed: int,
    teacher: TeacherSpec,
    frontend: SpectrogramConfig | None = None,
    sample_rate: int = 16000,
    clips_per_task: int = 150,
    corpus_clips: int = 500,
    ab_clips: int = 200,
) -> dict:
    """Generate corpora, evaluation tasks, and the run config document.

    Returns a summary dict (also written as ``synth.json``) naming every
    manifest. Tasks key their labels to teacher clip embeddings; the
    distillation corpora are unlabeled. ``corpus_tones`` and ``corpus_noise``
    form the A/B pair: tone-trained students transfer to the tone-keyed
    tasks, noise-trained students do not.
    """
    frontend = frontend or SpectrogramConfig()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    corpora = {}
    corpora["distill_main"] = _corpus(
        out_dir, "distill_main", seed, corpus_clips,
        durations=(2.0, 2.0, 2.0, 4.0, 1.0), sample_rate=sample_rate)
    corpora["corpus_tones"] = _corpus(
        out_dir, "corpus_tones", seed + 1, ab_clips,
        durations=(2.0, 2.0, 4.0), sample_rate=sample_rate)
    corpora["corpus_noise"] = _corpus(
        out_dir, "corpus_noise", seed + 2, ab_clips,
        durations=(2.0, 2.0, 4.0), sample_rate=sample_rate, noise_only=True)

    manifests = {}
    for key, entries in corpora.items():
        task = TaskSpec(name=key, metric="none", num_classes=0, classes=(),
                        sample_rate=sample_rate)
        rows = [ManifestRow(cid, rel, "", "train", key) for cid, rel in entries]
        path = out_dir / f"{key}.jsonl"
        write_manifest(path, task, rows)
        manifests[key] = str(path)

    advance_s = frontend.context_s
    task_summaries = {}
    for t_idx, (name, metric, n_classes, coords) in enumerate(TASK_DEFS):
        entries = _corpus(
            out_dir, name, seed + 10 + t_idx, clips_per_task,
            durations=(2.0, 1.0, 4.0, 8.0, 0.6, 2.0), sample_rate=sample_rate)
        embs = []
        for cid, rel in entries:
            w = read_wav(out_dir / rel, expected_rate=sample_rate)
            embs.append(teacher_embed_clip(w, teacher, frontend, advance_s))
        embs = np.stack(embs)
        label_rng = np.random.default_rng([seed, 0x1A8E1, t_idx])
        values = embs[:, coords[0]] if len(coords) == 1 else embs[:, list(coords)]
        labels = _assign_labels(values, n_classes, label_rng)
        classes = tuple(f"c{k}" for k in range(n_classes))
        rows = [
            ManifestRow(cid, rel, classes[labels[i]], _SPLIT_CYCLE[i % len(_SPLIT_CYCLE)], name)
            for i, (cid, rel) in enumerate(entries)
        ]
        task = TaskSpec(name=name, metric=metric, num_classes=n_classes,
                        classes=classes, sample_rate=sample_rate)
        path = out_dir / f"task_{name}.jsonl"
        write_manifest(path, task, rows)
        manifests[f"task_{name}"] = str(path)
        task_summaries[name] = {
            "metric": metric,
            "num_classes": n_classes,
            "teacher_coords": list(coords),
            "clips": len(entries),
        }

    summary = {
        "root_seed": seed,
        "sample_rate": sample_rate,
        "frontend": frontend.to_dict(),
        "teacher": teacher.to_dict(),
        "advance_s": advance_s,
        "manifests": manifests,
        "tasks": task_summaries,
    }
    (out_dir / "synth.json").write_text(json.dumps(summary, sort_keys=True, indent=2))
    return summary
