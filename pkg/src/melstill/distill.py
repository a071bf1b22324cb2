"""Distillation target generation and student training.

Two target paradigms exist for a clip chunked into context windows: with
``local`` matching each window regresses the teacher's output on that same
window; with ``global`` matching every window of a clip shares one target,
the average teacher embedding of the whole clip. For clips no longer than
one context window the two coincide exactly.

The training loop is plain seeded mini-batch optimization (adam-like by
default) over a fixed example pool, deterministic given the seed and example
order. Losses are mse or cosine; mse is the default so the
overfit-one-example oracle is exact.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateInputError, DivergenceError, InvalidInputError
from .frontend import LogMelPatch, SpectrogramConfig, Waveform, frame_patches
from .students import StudentModel, backward_batch, forward_batch
from .teacher import TeacherSpec, teacher_embed_clip, teacher_embed_patch

MATCHING_MODES = ("local", "global")
OPTIMIZERS = ("sgd", "sgd-momentum", "adam-like")
LOSSES = ("mse", "cosine")


@dataclass(frozen=True)
class DistillExample:
    patch: LogMelPatch
    target: np.ndarray
    clip_id: str = ""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 16
    steps: int = 1000
    optimizer: str = "adam-like"
    seed: int = 0
    loss: str = "mse"

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.steps < 1:
            raise ConfigError("batch_size and steps must be >= 1")
        if self.optimizer not in OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {self.optimizer!r}")
        if self.loss not in LOSSES:
            raise ConfigError(f"unknown loss {self.loss!r}")


def check_mode(mode: str) -> str:
    if mode not in MATCHING_MODES:
        raise ConfigError(f"matching mode must be one of {MATCHING_MODES}, got {mode!r}")
    return mode


def make_targets(
    w: Waveform,
    mode: str,
    spec: TeacherSpec,
    cfg: SpectrogramConfig,
    advance_s: float,
    clip_id: str = "",
    cache=None,
) -> list:
    """One DistillExample per context window of the clip.

    local: target = teacher output on the window itself.
    global: every window shares the clip-average teacher embedding.
    """
    check_mode(mode)
    patches = frame_patches(w, cfg, advance_s)
    if mode == "local":
        return [
            DistillExample(p, teacher_embed_patch(p, spec, cache=cache, clip_id=clip_id), clip_id)
            for p in patches
        ]
    target = teacher_embed_clip(w, spec, cfg, advance_s, cache=cache, clip_id=clip_id)
    return [DistillExample(p, target, clip_id) for p in patches]


def sample_training_examples(
    clips,
    mode: str,
    spec: TeacherSpec,
    cfg: SpectrogramConfig,
    seed: int,
    windows_per_clip: int = 2,
) -> list:
    """Build a training pool with context windows at random clip offsets.

    ``clips`` is a sequence of (clip_id, Waveform). Clips no longer than the
    context contribute their single padded window; longer clips contribute
    ``windows_per_clip`` windows at seeded random offsets. The frame advance
    stays an inference hyperparameter.
    """
    check_mode(mode)
    rng = np.random.default_rng([seed, 0xD15])
    pool = []
    for clip_id, w in clips:
        ctx = cfg.context_samples(w.sample_rate)
        if len(w) <= ctx:
            pool.extend(make_targets(w, mode, spec, cfg, cfg.context_s, clip_id=clip_id))
            continue
        clip_target = None
        if mode == "global":
            clip_target = teacher_embed_clip(w, spec, cfg, cfg.context_s, clip_id=clip_id)
        starts = rng.integers(0, len(w) - ctx + 1, size=windows_per_clip)
        for start in starts:
            piece = Waveform(w.samples[start:start + ctx], w.sample_rate)
            patch = frame_patches(piece, cfg, cfg.context_s)[0]
            patch = LogMelPatch(patch.values, start_offset_s=start / w.sample_rate)
            target = clip_target if clip_target is not None else teacher_embed_patch(patch, spec)
            pool.append(DistillExample(patch, target, clip_id))
    return pool


def distill_loss(pred: np.ndarray, target: np.ndarray, loss_kind: str = "mse") -> float:
    """mse -> mean squared error; cosine -> 1 - cosine similarity."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise InvalidInputError(f"prediction shape {pred.shape} != target shape {target.shape}")
    if loss_kind == "mse":
        return float(np.mean((pred - target) ** 2))
    if loss_kind == "cosine":
        np_ = np.linalg.norm(pred)
        nt = np.linalg.norm(target)
        if np_ == 0.0 or nt == 0.0:
            raise DegenerateInputError("cosine loss undefined for a zero vector")
        return float(1.0 - pred @ target / (np_ * nt))
    raise ConfigError(f"unknown loss {loss_kind!r}")


def _batch_loss_and_grad(pred: np.ndarray, target: np.ndarray, loss_kind: str):
    """Mean per-example loss over the batch and its gradient wrt pred."""
    if loss_kind == "mse":
        diff = pred - target
        loss = float(np.mean(diff.astype(np.float64) ** 2))
        grad = (2.0 / diff.size) * diff
        return loss, grad
    b = pred.shape[0]
    norms_p = np.linalg.norm(pred, axis=1, keepdims=True)
    norms_t = np.linalg.norm(target, axis=1, keepdims=True)
    if np.any(norms_p == 0.0) or np.any(norms_t == 0.0):
        raise DegenerateInputError("cosine loss undefined for a zero vector")
    cos = np.sum(pred * target, axis=1, keepdims=True) / (norms_p * norms_t)
    loss = float(np.mean(1.0 - cos))
    grad = -(target / (norms_p * norms_t) - cos * pred / norms_p**2) / b
    return loss, grad.astype(pred.dtype)


class _Optimizer:
    def __init__(self, tc: TrainConfig, n_params: int, dtype):
        self.tc = tc
        self.t = 0
        if tc.optimizer == "sgd-momentum":
            self.velocity = np.zeros(n_params, dtype=dtype)
        elif tc.optimizer == "adam-like":
            self.m = np.zeros(n_params, dtype=dtype)
            self.v = np.zeros(n_params, dtype=dtype)

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        lr = self.tc.learning_rate
        self.t += 1
        if self.tc.optimizer == "sgd":
            params -= lr * grad
        elif self.tc.optimizer == "sgd-momentum":
            self.velocity[:] = 0.9 * self.velocity + grad
            params -= lr * self.velocity
        else:
            b1, b2, eps = 0.9, 0.999, 1e-8
            self.m[:] = b1 * self.m + (1 - b1) * grad
            self.v[:] = b2 * self.v + (1 - b2) * grad * grad
            mhat = self.m / (1 - b1**self.t)
            vhat = self.v / (1 - b2**self.t)
            params -= lr * mhat / (np.sqrt(vhat) + eps)


def train_student(m: StudentModel, examples, tc: TrainConfig):
    """Run ``tc.steps`` mini-batch updates; returns (trained copy, loss curve).

    Deterministic given the seed and the example order. Aborts with a
    diagnostic if the loss or any parameter becomes non-finite.
    """
    examples = list(examples)
    if not examples:
        raise InvalidInputError("training requires at least one example")
    dim = m.config.embedding_dim
    for ex in examples:
        if ex.target.shape != (dim,):
            raise InvalidInputError(
                f"target shape {ex.target.shape} != ({dim},) for clip {ex.clip_id!r}"
            )
    model = m.clone()
    dtype = model.params.dtype
    patches = np.stack([ex.patch.values for ex in examples]).astype(dtype)
    targets = np.stack([ex.target for ex in examples]).astype(dtype)

    rng = np.random.default_rng([tc.seed, 0x0117])
    opt = _Optimizer(tc, model.params.size, dtype)
    order = np.arange(len(examples))
    cursor = len(examples)  # force an initial shuffle
    losses = []
    for step in range(tc.steps):
        if cursor + tc.batch_size > len(order):
            rng.shuffle(order)
            cursor = 0
        idx = order[cursor:cursor + tc.batch_size]
        if idx.size < tc.batch_size:  # dataset smaller than one batch
            idx = order[np.arange(tc.batch_size) % len(order)]
        cursor += tc.batch_size
        xb = patches[idx]
        tb = targets[idx]
        pred, fwd_cache = forward_batch(model, xb)
        loss, dpred = _batch_loss_and_grad(pred, tb, tc.loss)
        if not math.isfinite(loss):
            raise DivergenceError(f"non-finite loss {loss} at step {step}")
        grad = backward_batch(model, fwd_cache, dpred)
        opt.step(model.params, grad)
        if not np.all(np.isfinite(model.params)):
            raise DivergenceError(f"non-finite parameters after step {step}")
        losses.append(loss)
    return model, losses
