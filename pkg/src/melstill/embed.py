"""Clip-level embeddings from a trained student, plus the frame-advance sweep.

A clip is framed into context windows at the chosen advance, each window is
run through the student, and the outputs are averaged with equal weight. The
advance is a post-training hyperparameter: the sweep embeds the train/dev
splits at each candidate advance and reports the dev score of the best probe,
never touching test data.
"""

import numpy as np

from .errors import InvalidInputError
from .frontend import SpectrogramConfig, Waveform, frame_patches
from .students import StudentModel, forward_batch


def student_embed_clip(
    m: StudentModel, w: Waveform, cfg: SpectrogramConfig, advance_s: float
) -> np.ndarray:
    """Unweighted mean of the student's outputs over all context windows."""
    patches = frame_patches(w, cfg, advance_s)
    xb = np.stack([p.values for p in patches])
    emb, _ = forward_batch(m, xb)
    return emb.astype(np.float64).mean(axis=0)


def embed_clips(model_fn, clips) -> np.ndarray:
    """Apply a clip-embedding callable over (clip_id, Waveform) pairs,
    returning a (n, dim) float32 matrix in input order."""
    rows = [model_fn(w) for _, w in clips]
    if not rows:
        raise InvalidInputError("no clips to embed")
    return np.stack(rows).astype(np.float32)


def sweep_frame_advance(m, load_split, advances, evaluate, cfg: SpectrogramConfig) -> list:
    """Dev-score table over candidate frame advances.

    ``load_split(split)`` yields (clip_id, Waveform, label) triples for the
    train and dev splits; ``evaluate(train_X, train_y, dev_X, dev_y)`` fits
    the probe variants and returns (dev_score, variant). Returns one row per
    advance: {"advance_s", "dev_metric", "probe_variant"}. Results depend on
    train+dev data only.
    """
    advances = list(advances)
    if not advances:
        raise InvalidInputError("advance sweep requires at least one advance")
    if any(a <= 0 for a in advances):
        raise InvalidInputError("all advances must be positive")
    train = list(load_split("train"))
    dev = list(load_split("dev"))
    if not train or not dev:
        raise InvalidInputError("advance sweep requires non-empty train and dev splits")
    rows = []
    for adv in advances:
        train_x = np.stack([student_embed_clip(m, w, cfg, adv) for _, w, _ in train])
        dev_x = np.stack([student_embed_clip(m, w, cfg, adv) for _, w, _ in dev])
        train_y = np.array([label for _, _, label in train])
        dev_y = np.array([label for _, _, label in dev])
        dev_score, variant = evaluate(train_x, train_y, dev_x, dev_y)
        rows.append({"advance_s": adv, "dev_metric": dev_score, "probe_variant": variant})
    return rows
