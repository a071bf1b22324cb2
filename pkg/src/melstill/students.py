"""Small fixed-context student models mapping one log-mel patch to one
embedding vector.

Three families stand in for the usual audio-classification backbones at desk
scale, each with depth and width knobs so a size ladder can be built:

* ``conv-resnet-like``   - stem conv + residual 3x3 conv blocks;
* ``conv-scaled-like``   - stem conv + depthwise-separable residual blocks;
* ``attention-like``     - 16x16 spectrogram patch tokens + self-attention
                           blocks with sinusoidal positions.

Inputs are standardized per patch; conv families see two extra coordinate
ramp channels (time, frequency) so position-dependent targets stay
learnable under global average pooling. Every family ends with global
average pooling followed by a linear projection to ``embedding_dim``; the
output range is unbounded.

Parameters live in one flat vector with a name -> (shape, offset) table;
``student_backward`` returns the exact reverse-mode gradient in the same
layout, which keeps optimizers and finite-difference checks trivial.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeMismatchError
from .frontend import LogMelPatch
from .kernels import conv2d, conv2d_grads, depthwise_conv2d, depthwise_conv2d_grads

FAMILIES = ("conv-resnet-like", "conv-scaled-like", "attention-like")

TOKEN_PATCH = 16          # attention-like: spectrogram patch edge, tokens are 16x16
_INPUT_SCALE = 4.0
_MIN_POOL_DIM = 4


@dataclass(frozen=True)
class StudentConfig:
    family: str
    depth: int
    width: int
    embedding_dim: int
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.depth < 1 or self.width < 1:
            raise ConfigError("depth and width must be >= 1")
        if self.embedding_dim < 1:
            raise ConfigError("embedding_dim must be >= 1")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "depth": self.depth,
            "width": self.width,
            "embedding_dim": self.embedding_dim,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StudentConfig":
        return cls(d["family"], d["depth"], d["width"], d["embedding_dim"], d.get("seed", 0))


def _param_table(cfg: StudentConfig):
    """Ordered (name, shape) pairs; the order fixes init draws and offsets."""
    w, d, e = cfg.width, cfg.depth, cfg.embedding_dim
    table = []
    if cfg.family == "conv-resnet-like":
        table += [("stem.w", (w, 3, 3, 3)), ("stem.b", (w,))]
        for i in range(d):
            table += [
                (f"block{i}.conv1.w", (w, w, 3, 3)), (f"block{i}.conv1.b", (w,)),
                (f"block{i}.conv2.w", (w, w, 3, 3)), (f"block{i}.conv2.b", (w,)),
            ]
    elif cfg.family == "conv-scaled-like":
        table += [("stem.w", (w, 3, 3, 3)), ("stem.b", (w,))]
        for i in range(d):
            table += [
                (f"block{i}.dw.w", (w, 3, 3)), (f"block{i}.dw.b", (w,)),
                (f"block{i}.pw.w", (w, w, 1, 1)), (f"block{i}.pw.b", (w,)),
            ]
    else:
        tok = TOKEN_PATCH * TOKEN_PATCH
        table += [("embed.w", (tok, w)), ("embed.b", (w,))]
        for i in range(d):
            table += [
                (f"block{i}.wq", (w, w)), (f"block{i}.bq", (w,)),
                (f"block{i}.wk", (w, w)), (f"block{i}.bk", (w,)),
                (f"block{i}.wv", (w, w)), (f"block{i}.bv", (w,)),
                (f"block{i}.wo", (w, w)), (f"block{i}.bo", (w,)),
                (f"block{i}.mlp1.w", (w, 2 * w)), (f"block{i}.mlp1.b", (2 * w,)),
                (f"block{i}.mlp2.w", (2 * w, w)), (f"block{i}.mlp2.b", (w,)),
            ]
    table += [("neck.w", (w, 4 * w)), ("neck.b", (4 * w,))]
    table += [("head.w", (e, 4 * w)), ("head.b", (e,))]
    return table


def param_count(cfg: StudentConfig) -> int:
    """Total parameter count; pure shape arithmetic."""
    return sum(int(np.prod(shape)) for _, shape in _param_table(cfg))


def size_mb(cfg: StudentConfig) -> float:
    """Model size convention: 4 bytes per parameter, reported in MiB."""
    return 4.0 * param_count(cfg) / 2**20


@dataclass
class StudentModel:
    config: StudentConfig
    params: np.ndarray
    table: list = field(repr=False)

    def view(self, name: str) -> np.ndarray:
        shape, offset = self._index[name]
        return self.params[offset:offset + int(np.prod(shape))].reshape(shape)

    def __post_init__(self):
        index = {}
        offset = 0
        for name, shape in self.table:
            index[name] = (shape, offset)
            offset += int(np.prod(shape))
        self._index = index
        if self.params.shape != (offset,):
            raise ShapeMismatchError(
                f"parameter vector has length {self.params.shape}, expected ({offset},)"
            )

    def clone(self) -> "StudentModel":
        return StudentModel(self.config, self.params.copy(), list(self.table))

    def astype(self, dtype) -> "StudentModel":
        return StudentModel(self.config, self.params.astype(dtype), list(self.table))


_INIT_STREAM = 0x57DE


def init_student(cfg: StudentConfig) -> StudentModel:
    """Seeded fan-in-scaled initialization; bit-identical per (config, seed)."""
    rng = np.random.default_rng([cfg.seed, _INIT_STREAM])
    table = _param_table(cfg)
    chunks = []
    for name, shape in table:
        n = int(np.prod(shape))
        leaf = name.split(".")[-1]
        if leaf.startswith("b"):
            chunks.append(np.zeros(n))
            continue
        draw = rng.standard_normal(n)
        if name == "head.w":
            std = 0.01
        elif leaf == "dw" or name.endswith("dw.w"):
            std = math.sqrt(2.0 / 9.0)
        elif leaf == "wo" or name.endswith("mlp2.w"):
            std = 0.5 / math.sqrt(shape[0])  # damp residual branches at init
        elif leaf in ("wq", "wk", "wv") or name == "embed.w":
            std = 1.0 / math.sqrt(shape[0])
        elif name.endswith("mlp1.w") or name == "neck.w":
            std = math.sqrt(2.0 / shape[0])
        else:  # dense conv weights
            fan_in = int(np.prod(shape[1:]))
            std = math.sqrt(2.0 / fan_in)
        chunks.append(draw * std)
    params = np.concatenate(chunks).astype(np.float32)
    return StudentModel(cfg, params, table)


# ---------------------------------------------------------------------------
# shared ops
# ---------------------------------------------------------------------------

def _standardize(xb: np.ndarray) -> np.ndarray:
    # Mean-center per patch but keep contrast: a fixed divisor preserves the
    # scale information that patch-relative std normalization would erase.
    mean = xb.mean(axis=(1, 2), keepdims=True)
    return (xb - mean) / _INPUT_SCALE


def _conv_input(xb: np.ndarray, dtype) -> np.ndarray:
    """Standardize, 2x2 mean-pool, then stack [values, time ramp, freq ramp]."""
    z = _standardize(xb)
    b, t, f = z.shape
    t2, f2 = t // 2, f // 2
    if t2 >= 1 and f2 >= 1:
        z = z[:, :t2 * 2, :f2 * 2].reshape(b, t2, 2, f2, 2).mean(axis=(2, 4))
    t2, f2 = z.shape[1], z.shape[2]
    tr = np.linspace(-1.0, 1.0, t2)[None, :, None]
    fr = np.linspace(-1.0, 1.0, f2)[None, None, :]
    out = np.empty((b, 3, t2, f2), dtype=dtype)
    out[:, 0] = z
    out[:, 1] = np.broadcast_to(tr, (b, t2, f2))
    out[:, 2] = np.broadcast_to(fr, (b, t2, f2))
    return out


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _silu(x):
    return x * _sigmoid(x)


def _silu_grad(x):
    sig = _sigmoid(x)
    return sig * (1.0 + x * (1.0 - sig))


def _avgpool2(x):
    b, c, h, w = x.shape
    h2, w2 = h // 2, w // 2
    y = x[:, :, :h2 * 2, :w2 * 2].reshape(b, c, h2, 2, w2, 2).mean(axis=(3, 5))
    return y


def _avgpool2_back(dy, in_shape):
    b, c, h, w = in_shape
    h2, w2 = h // 2, w // 2
    dx = np.zeros(in_shape, dtype=dy.dtype)
    dx[:, :, :h2 * 2, :w2 * 2] = np.repeat(np.repeat(dy, 2, axis=2), 2, axis=3) * 0.25
    return dx


def _sin_positions(n_tokens: int, width: int, dtype) -> np.ndarray:
    pos = np.arange(n_tokens, dtype=np.float64)[:, None]
    half = (width + 1) // 2
    freqs = np.exp(-math.log(10000.0) * np.arange(half) / max(half, 1))
    table = np.zeros((n_tokens, 2 * half))
    table[:, 0::2] = np.sin(pos * freqs)
    table[:, 1::2] = np.cos(pos * freqs)
    return table[:, :width].astype(dtype)


def _tokenize(xb: np.ndarray, dtype) -> np.ndarray:
    """Standardize and cut into TOKEN_PATCH^2 tokens, zero-padding partials."""
    z = _standardize(xb).astype(dtype)
    b, t, f = z.shape
    nt = -(-t // TOKEN_PATCH)
    nf = -(-f // TOKEN_PATCH)
    padded = np.zeros((b, nt * TOKEN_PATCH, nf * TOKEN_PATCH), dtype=dtype)
    padded[:, :t, :f] = z
    tokens = padded.reshape(b, nt, TOKEN_PATCH, nf, TOKEN_PATCH)
    tokens = tokens.transpose(0, 1, 3, 2, 4).reshape(b, nt * nf, TOKEN_PATCH * TOKEN_PATCH)
    return tokens


def _softmax(s):
    m = s.max(axis=-1, keepdims=True)
    e = np.exp(s - m)
    return e / e.sum(axis=-1, keepdims=True)


# ---------------------------------------------------------------------------
# conv families
# ---------------------------------------------------------------------------

def _forward_conv(model: StudentModel, xb: np.ndarray):
    cfg = model.config
    v = model.view
    separable = cfg.family == "conv-scaled-like"
    x0 = _conv_input(xb, model.params.dtype)
    z0 = conv2d(x0, v("stem.w"), v("stem.b"), stride=(2, 2), pad=(1, 1))
    h = _silu(z0)
    blocks = []
    for i in range(cfg.depth):
        if separable:
            z1 = depthwise_conv2d(h, v(f"block{i}.dw.w"), v(f"block{i}.dw.b"), (1, 1), (1, 1))
            a1 = _silu(z1)
            z2 = conv2d(a1, v(f"block{i}.pw.w"), v(f"block{i}.pw.b"), (1, 1), (0, 0))
        else:
            z1 = conv2d(h, v(f"block{i}.conv1.w"), v(f"block{i}.conv1.b"), (1, 1), (1, 1))
            a1 = _silu(z1)
            z2 = conv2d(a1, v(f"block{i}.conv2.w"), v(f"block{i}.conv2.b"), (1, 1), (1, 1))
        s = h + z2
        r = _silu(s)
        do_pool = min(r.shape[2], r.shape[3]) >= _MIN_POOL_DIM
        out = _avgpool2(r) if do_pool else r
        blocks.append({"h_in": h, "z1": z1, "a1": a1, "s": s, "r": r, "pooled": do_pool})
        h = out
    pooled = h.mean(axis=(2, 3))
    n1 = pooled @ v("neck.w") + v("neck.b")
    feat = _silu(n1)
    emb = feat @ v("head.w").T + v("head.b")
    cache = {"x0": x0, "z0": z0, "blocks": blocks, "feat_in": h,
             "pooled": pooled, "n1": n1, "feat": feat}
    return emb, cache


def _backward_conv(model: StudentModel, cache, dout: np.ndarray, grads):
    cfg = model.config
    v = model.view
    separable = cfg.family == "conv-scaled-like"
    feat = cache["feat"]
    grads["head.w"][...] += dout.T @ feat
    grads["head.b"][...] += dout.sum(axis=0)
    dfeat = dout @ v("head.w")
    dn1 = dfeat * _silu_grad(cache["n1"])
    grads["neck.w"][...] += cache["pooled"].T @ dn1
    grads["neck.b"][...] += dn1.sum(axis=0)
    dpooled = dn1 @ v("neck.w").T
    h_last = cache["feat_in"]
    area = h_last.shape[2] * h_last.shape[3]
    dh = np.broadcast_to(
        (dpooled / area)[:, :, None, None], h_last.shape
    ).astype(model.params.dtype).copy()
    for i in reversed(range(cfg.depth)):
        blk = cache["blocks"][i]
        if blk["pooled"]:
            dh = _avgpool2_back(dh, blk["r"].shape)
        ds = dh * _silu_grad(blk["s"])
        if separable:
            da1, dpw, dpb = conv2d_grads(blk["a1"], v(f"block{i}.pw.w"), ds, (1, 1), (0, 0))
            grads[f"block{i}.pw.w"][...] += dpw
            grads[f"block{i}.pw.b"][...] += dpb
            dz1 = da1 * _silu_grad(blk["z1"])
            dhin, ddw, ddb = depthwise_conv2d_grads(
                blk["h_in"], v(f"block{i}.dw.w"), dz1, (1, 1), (1, 1)
            )
            grads[f"block{i}.dw.w"][...] += ddw
            grads[f"block{i}.dw.b"][...] += ddb
        else:
            da1, dw2, db2 = conv2d_grads(blk["a1"], v(f"block{i}.conv2.w"), ds, (1, 1), (1, 1))
            grads[f"block{i}.conv2.w"][...] += dw2
            grads[f"block{i}.conv2.b"][...] += db2
            dz1 = da1 * _silu_grad(blk["z1"])
            dhin, dw1, db1 = conv2d_grads(
                blk["h_in"], v(f"block{i}.conv1.w"), dz1, (1, 1), (1, 1)
            )
            grads[f"block{i}.conv1.w"][...] += dw1
            grads[f"block{i}.conv1.b"][...] += db1
        dh = dhin + ds
    dz0 = dh * _silu_grad(cache["z0"])
    _, dsw, dsb = conv2d_grads(cache["x0"], v("stem.w"), dz0, (2, 2), (1, 1))
    grads["stem.w"][...] += dsw
    grads["stem.b"][...] += dsb


# ---------------------------------------------------------------------------
# attention family
# ---------------------------------------------------------------------------

def _forward_attention(model: StudentModel, xb: np.ndarray):
    cfg = model.config
    v = model.view
    dtype = model.params.dtype
    tok = _tokenize(xb, dtype)
    n = tok.shape[1]
    pos = _sin_positions(n, cfg.width, dtype)
    h = tok @ v("embed.w") + v("embed.b") + pos[None]
    scale = 1.0 / math.sqrt(cfg.width)
    blocks = []
    for i in range(cfg.depth):
        q = h @ v(f"block{i}.wq") + v(f"block{i}.bq")
        k = h @ v(f"block{i}.wk") + v(f"block{i}.bk")
        val = h @ v(f"block{i}.wv") + v(f"block{i}.bv")
        att = _softmax(np.einsum("bnd,bmd->bnm", q, k) * scale)
        ctx = att @ val
        h1 = h + ctx @ v(f"block{i}.wo") + v(f"block{i}.bo")
        m1 = h1 @ v(f"block{i}.mlp1.w") + v(f"block{i}.mlp1.b")
        a1 = _silu(m1)
        h2 = h1 + a1 @ v(f"block{i}.mlp2.w") + v(f"block{i}.mlp2.b")
        blocks.append(
            {"h_in": h, "q": q, "k": k, "v": val, "att": att, "ctx": ctx,
             "h1": h1, "m1": m1, "a1": a1}
        )
        h = h2
    pooled = h.mean(axis=1)
    n1 = pooled @ v("neck.w") + v("neck.b")
    feat = _silu(n1)
    emb = feat @ v("head.w").T + v("head.b")
    cache = {"tok": tok, "blocks": blocks, "h_out": h, "pooled": pooled,
             "n1": n1, "feat": feat, "scale": scale}
    return emb, cache


def _backward_attention(model: StudentModel, cache, dout: np.ndarray, grads):
    cfg = model.config
    v = model.view
    feat = cache["feat"]
    grads["head.w"][...] += dout.T @ feat
    grads["head.b"][...] += dout.sum(axis=0)
    dfeat = dout @ v("head.w")
    dn1 = dfeat * _silu_grad(cache["n1"])
    grads["neck.w"][...] += cache["pooled"].T @ dn1
    grads["neck.b"][...] += dn1.sum(axis=0)
    dpooled = dn1 @ v("neck.w").T
    n = cache["h_out"].shape[1]
    dh = np.broadcast_to((dpooled / n)[:, None, :], cache["h_out"].shape).astype(
        model.params.dtype
    ).copy()
    scale = cache["scale"]
    for i in reversed(range(cfg.depth)):
        blk = cache["blocks"][i]
        # h2 = h1 + silu(h1 W1 + b1) W2 + b2
        grads[f"block{i}.mlp2.w"][...] += np.einsum("bnk,bnw->kw", blk["a1"], dh)
        grads[f"block{i}.mlp2.b"][...] += dh.sum(axis=(0, 1))
        da1 = dh @ v(f"block{i}.mlp2.w").T
        dm1 = da1 * _silu_grad(blk["m1"])
        grads[f"block{i}.mlp1.w"][...] += np.einsum("bnw,bnk->wk", blk["h1"], dm1)
        grads[f"block{i}.mlp1.b"][...] += dm1.sum(axis=(0, 1))
        dh1 = dh + dm1 @ v(f"block{i}.mlp1.w").T
        # h1 = h + (att @ v) Wo + bo
        grads[f"block{i}.wo"][...] += np.einsum("bnw,bnv->wv", blk["ctx"], dh1)
        grads[f"block{i}.bo"][...] += dh1.sum(axis=(0, 1))
        dctx = dh1 @ v(f"block{i}.wo").T
        datt = np.einsum("bnd,bmd->bnm", dctx, blk["v"])
        dv = np.einsum("bnm,bnd->bmd", blk["att"], dctx)
        ds = blk["att"] * (datt - (datt * blk["att"]).sum(axis=-1, keepdims=True))
        dq = np.einsum("bnm,bmd->bnd", ds, blk["k"]) * scale
        dk = np.einsum("bnm,bnd->bmd", ds, blk["q"]) * scale
        h_in = blk["h_in"]
        for mat, dg in (("wq", dq), ("wk", dk), ("wv", dv)):
            grads[f"block{i}.{mat}"][...] += np.einsum("bnw,bnv->wv", h_in, dg)
            grads[f"block{i}.b{mat[1]}"][...] += dg.sum(axis=(0, 1))
        dh = (
            dh1
            + dq @ v(f"block{i}.wq").T
            + dk @ v(f"block{i}.wk").T
            + dv @ v(f"block{i}.wv").T
        )
    grads["embed.w"][...] += np.einsum("bnp,bnw->pw", cache["tok"], dh)
    grads["embed.b"][...] += dh.sum(axis=(0, 1))


# ---------------------------------------------------------------------------
# public ops
# ---------------------------------------------------------------------------

def forward_batch(model: StudentModel, xb: np.ndarray):
    """Embed a batch of patches (B, T, F) -> (B, embedding_dim) plus cache."""
    xb = np.asarray(xb)
    if xb.ndim != 3:
        raise ShapeMismatchError(f"expected a (batch, frames, bins) array, got {xb.shape}")
    if model.config.family == "attention-like":
        return _forward_attention(model, xb)
    return _forward_conv(model, xb)


def backward_batch(model: StudentModel, cache, dout: np.ndarray) -> np.ndarray:
    """Parameter gradient of sum(emb * dout) in the flat layout."""
    dout = np.asarray(dout, dtype=model.params.dtype)
    flat = np.zeros_like(model.params)
    grads = {}
    offset = 0
    for name, shape in model.table:
        n = int(np.prod(shape))
        grads[name] = flat[offset:offset + n].reshape(shape)
        offset += n
    if model.config.family == "attention-like":
        _backward_attention(model, cache, dout, grads)
    else:
        _backward_conv(model, cache, dout, grads)
    return flat


def student_forward(m: StudentModel, p: LogMelPatch) -> np.ndarray:
    """Deterministic forward pass on one patch."""
    emb, _ = forward_batch(m, p.values[None])
    return emb[0]


def student_backward(m: StudentModel, p: LogMelPatch, grad_out: np.ndarray) -> np.ndarray:
    """Exact reverse-mode parameter gradient contracted with ``grad_out``."""
    grad_out = np.asarray(grad_out)
    if grad_out.shape != (m.config.embedding_dim,):
        raise ShapeMismatchError(
            f"grad_out shape {grad_out.shape} != ({m.config.embedding_dim},)"
        )
    _, cache = forward_batch(m, p.values[None])
    return backward_batch(m, cache, grad_out[None])


def default_ladder(embedding_dim: int, seed: int = 0) -> list:
    """Five-rung size ladder spanning the three families, strictly increasing
    parameter counts."""
    rungs = [
        StudentConfig("conv-resnet-like", 1, 8, embedding_dim, seed),
        StudentConfig("conv-scaled-like", 2, 16, embedding_dim, seed),
        StudentConfig("conv-scaled-like", 2, 28, embedding_dim, seed),
        StudentConfig("attention-like", 1, 32, embedding_dim, seed),
        StudentConfig("attention-like", 2, 48, embedding_dim, seed),
    ]
    return rungs
