"""Teacher-embedding interface plus deterministic synthetic reference teachers.

The production teacher this pipeline targets is a large pretrained network
that is not publicly available, so the default teachers here are synthetic:
seeded random projections of the flattened log-mel patch pushed through tanh.
They are smooth (rows are low-pass filtered over time and frequency), bounded,
and fully reproducible from ``TeacherSpec.seed``, which makes every
downstream contract testable. ``external-precomputed`` swaps computation for
lookups in the embedding cache, for callers that bring real teacher vectors.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import CacheMissError, ConfigError, ShapeMismatchError
from .frontend import LogMelPatch, SpectrogramConfig, Waveform, frame_patches

KINDS = ("synthetic-linear", "synthetic-mlp", "external-precomputed")

# Input shift so an all-silence patch (log of the default floor) maps to zero
# projection input; row norm of the stored projection, which is also the
# per-coordinate Lipschitz constant of the tanh output. The norm is sized so
# tanh pre-activations on typical audio have roughly unit spread.
INPUT_SHIFT = math.log(1e-6)
PROJECTION_ROW_NORM = 0.11
_SMOOTH_TIME = 31
_SMOOTH_FREQ = 9


@dataclass(frozen=True)
class TeacherSpec:
    embedding_dim: int = 64
    seed: int = 0
    kind: str = "synthetic-linear"

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise ConfigError("embedding_dim must be >= 1")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown teacher kind {self.kind!r}; expected one of {KINDS}")

    def to_dict(self) -> dict:
        return {"embedding_dim": self.embedding_dim, "seed": self.seed, "kind": self.kind}

    @property
    def model_id(self) -> str:
        return f"teacher-{self.kind}-d{self.embedding_dim}-s{self.seed}"


def _smooth_unit_rows(raw: np.ndarray, shape: tuple) -> np.ndarray:
    """Low-pass each row over (time, freq), remove its mean, and scale to
    PROJECTION_ROW_NORM. Zero-sum rows make the projection respond to patch
    structure rather than the global level, keeping tanh unsaturated."""
    t, f = shape
    rows = raw.reshape(raw.shape[0], t, f)
    rows = uniform_filter1d(rows, size=min(_SMOOTH_TIME, t), axis=1, mode="nearest")
    rows = uniform_filter1d(rows, size=min(_SMOOTH_FREQ, f), axis=2, mode="nearest")
    flat = rows.reshape(raw.shape[0], t * f)
    flat = flat - flat.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(flat, axis=1, keepdims=True)
    return flat / norms * PROJECTION_ROW_NORM


@lru_cache(maxsize=16)
def _linear_weights(dim: int, seed: int, shape: tuple) -> np.ndarray:
    rng = np.random.default_rng([seed, 0x7EAC, shape[0], shape[1]])
    raw = rng.standard_normal((dim, shape[0] * shape[1]))
    return _smooth_unit_rows(raw, shape)


@lru_cache(maxsize=16)
def _mlp_weights(dim: int, seed: int, shape: tuple):
    hidden = 2 * dim
    rng = np.random.default_rng([seed, 0x7EAC, shape[0], shape[1]])
    raw1 = rng.standard_normal((hidden, shape[0] * shape[1]))
    w1 = _smooth_unit_rows(raw1, shape)
    w2 = rng.standard_normal((dim, hidden)) / math.sqrt(hidden)
    return w1, w2


def projection_matrix(spec: TeacherSpec, patch_shape: tuple) -> np.ndarray:
    """First-layer projection of the synthetic teacher, (dim_or_hidden, T*F).

    Row norms bound the per-coordinate sensitivity of the first tanh layer.
    """
    shape = (int(patch_shape[0]), int(patch_shape[1]))
    if spec.kind == "synthetic-linear":
        return _linear_weights(spec.embedding_dim, spec.seed, shape)
    if spec.kind == "synthetic-mlp":
        return _mlp_weights(spec.embedding_dim, spec.seed, shape)[0]
    raise ConfigError("external-precomputed teachers have no projection matrix")


def teacher_embed_patch(p: LogMelPatch, spec: TeacherSpec, cache=None, clip_id=None) -> np.ndarray:
    """Deterministic embedding of one patch; bounded in (-1, 1) by tanh."""
    if spec.kind == "external-precomputed":
        return _external_lookup(spec, cache, clip_id)
    x = p.values.reshape(-1) - INPUT_SHIFT
    if spec.kind == "synthetic-linear":
        w = _linear_weights(spec.embedding_dim, spec.seed, p.shape)
        if w.shape[1] != x.size:
            raise ShapeMismatchError(f"patch shape {p.shape} does not match teacher weights")
        return np.tanh(w @ x)
    w1, w2 = _mlp_weights(spec.embedding_dim, spec.seed, p.shape)
    if w1.shape[1] != x.size:
        raise ShapeMismatchError(f"patch shape {p.shape} does not match teacher weights")
    return np.tanh(w2 @ np.tanh(w1 @ x))


def teacher_embed_clip(
    w: Waveform,
    spec: TeacherSpec,
    cfg: SpectrogramConfig,
    advance_s: float,
    cache=None,
    clip_id=None,
) -> np.ndarray:
    """Unweighted mean of patch embeddings over the framed clip."""
    if spec.kind == "external-precomputed":
        return _external_lookup(spec, cache, clip_id)
    patches = frame_patches(w, cfg, advance_s)
    embs = np.stack([teacher_embed_patch(p, spec) for p in patches])
    return embs.mean(axis=0)


def _external_lookup(spec: TeacherSpec, cache, clip_id) -> np.ndarray:
    if cache is None or clip_id is None:
        raise CacheMissError(
            "external-precomputed teacher requires an embedding cache and a clip_id"
        )
    vector = cache.lookup_clip(spec.model_id, clip_id)
    if vector is None:
        raise CacheMissError(f"no cached embedding for clip {clip_id!r} under {spec.model_id}")
    if vector.shape != (spec.embedding_dim,):
        raise ShapeMismatchError(
            f"cached vector has dim {vector.shape}, expected ({spec.embedding_dim},)"
        )
    return np.asarray(vector, dtype=np.float64)
