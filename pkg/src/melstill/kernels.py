"""2-D convolution kernels used by the student forward/backward passes.

Each kernel has a numba ``@njit`` loop variant and a pure numpy variant
(kernel-offset accumulation over the k*k taps). ``conv2d``/``conv2d_grads``
and the depthwise pair alias whichever path :mod:`melstill.accel` selected.
Both variants accept float32 or float64 and agree to numerical tolerance;
they are not bit-identical because summation order differs.

Layouts: activations ``(B, C, H, W)``, dense weights ``(O, C, kh, kw)``,
depthwise weights ``(C, kh, kw)``.
"""

import numpy as np

from .accel import USE_NUMBA, njit


def _pad_input(x, ph, pw):
    if ph == 0 and pw == 0:
        return x
    return np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))


def _out_dim(n, k, s, p):
    return (n + 2 * p - k) // s + 1


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------

@njit(cache=True)
def _conv2d_fwd_njit(xp, w, bias, sh, sw, ho, wo):
    bsz, cin, _, _ = xp.shape
    cout, _, kh, kw = w.shape
    y = np.empty((bsz, cout, ho, wo), dtype=xp.dtype)
    for b in range(bsz):
        for o in range(cout):
            acc = np.full((ho, wo), bias[o], dtype=xp.dtype)
            for c in range(cin):
                for p in range(kh):
                    for q in range(kw):
                        wv = w[o, c, p, q]
                        for i in range(ho):
                            row = xp[b, c, i * sh + p]
                            for j in range(wo):
                                acc[i, j] += row[j * sw + q] * wv
            y[b, o] = acc
    return y


@njit(cache=True)
def _conv2d_bwd_njit(xp, w, dy, sh, sw):
    bsz, cin, hp, wp = xp.shape
    cout, _, kh, kw = w.shape
    _, _, ho, wo = dy.shape
    dxp = np.zeros((bsz, cin, hp, wp), dtype=xp.dtype)
    dw = np.zeros_like(w)
    db = np.zeros(cout, dtype=xp.dtype)
    for b in range(bsz):
        for o in range(cout):
            g2 = dy[b, o]
            s = xp.dtype.type(0.0)
            for i in range(ho):
                for j in range(wo):
                    s += g2[i, j]
            db[o] += s
            for c in range(cin):
                for p in range(kh):
                    for q in range(kw):
                        wv = w[o, c, p, q]
                        acc = xp.dtype.type(0.0)
                        for i in range(ho):
                            xrow = xp[b, c, i * sh + p]
                            drow = dxp[b, c, i * sh + p]
                            grow = g2[i]
                            for j in range(wo):
                                jq = j * sw + q
                                drow[jq] += grow[j] * wv
                                acc += grow[j] * xrow[jq]
                        dw[o, c, p, q] += acc
    return dxp, dw, db


@njit(cache=True)
def _dwconv2d_fwd_njit(xp, w, bias, sh, sw, ho, wo):
    bsz, ch, _, _ = xp.shape
    _, kh, kw = w.shape
    y = np.empty((bsz, ch, ho, wo), dtype=xp.dtype)
    for b in range(bsz):
        for c in range(ch):
            acc = np.full((ho, wo), bias[c], dtype=xp.dtype)
            for p in range(kh):
                for q in range(kw):
                    wv = w[c, p, q]
                    for i in range(ho):
                        row = xp[b, c, i * sh + p]
                        for j in range(wo):
                            acc[i, j] += row[j * sw + q] * wv
            y[b, c] = acc
    return y


@njit(cache=True)
def _dwconv2d_bwd_njit(xp, w, dy, sh, sw):
    bsz, ch, hp, wp = xp.shape
    _, kh, kw = w.shape
    _, _, ho, wo = dy.shape
    dxp = np.zeros((bsz, ch, hp, wp), dtype=xp.dtype)
    dw = np.zeros_like(w)
    db = np.zeros(ch, dtype=xp.dtype)
    for b in range(bsz):
        for c in range(ch):
            g2 = dy[b, c]
            s = xp.dtype.type(0.0)
            for i in range(ho):
                for j in range(wo):
                    s += g2[i, j]
            db[c] += s
            for p in range(kh):
                for q in range(kw):
                    wv = w[c, p, q]
                    acc = xp.dtype.type(0.0)
                    for i in range(ho):
                        xrow = xp[b, c, i * sh + p]
                        drow = dxp[b, c, i * sh + p]
                        grow = g2[i]
                        for j in range(wo):
                            jq = j * sw + q
                            drow[jq] += grow[j] * wv
                            acc += grow[j] * xrow[jq]
                    dw[c, p, q] += acc
    return dxp, dw, db


# ---------------------------------------------------------------------------
# public API, numba variants
# ---------------------------------------------------------------------------

def conv2d_numba(x, w, bias, stride=(1, 1), pad=(1, 1)):
    sh, sw = stride
    ph, pw = pad
    xp = np.ascontiguousarray(_pad_input(x, ph, pw))
    ho = _out_dim(x.shape[2], w.shape[2], sh, ph)
    wo = _out_dim(x.shape[3], w.shape[3], sw, pw)
    return _conv2d_fwd_njit(xp, np.ascontiguousarray(w), bias, sh, sw, ho, wo)


def conv2d_grads_numba(x, w, dy, stride=(1, 1), pad=(1, 1)):
    sh, sw = stride
    ph, pw = pad
    xp = np.ascontiguousarray(_pad_input(x, ph, pw))
    dxp, dw, db = _conv2d_bwd_njit(xp, np.ascontiguousarray(w), np.ascontiguousarray(dy), sh, sw)
    dx = dxp[:, :, ph:xp.shape[2] - ph, pw:xp.shape[3] - pw] if (ph or pw) else dxp
    return np.ascontiguousarray(dx), dw, db


def depthwise_conv2d_numba(x, w, bias, stride=(1, 1), pad=(1, 1)):
    sh, sw = stride
    ph, pw = pad
    xp = np.ascontiguousarray(_pad_input(x, ph, pw))
    ho = _out_dim(x.shape[2], w.shape[1], sh, ph)
    wo = _out_dim(x.shape[3], w.shape[2], sw, pw)
    return _dwconv2d_fwd_njit(xp, np.ascontiguousarray(w), bias, sh, sw, ho, wo)


def depthwise_conv2d_grads_numba(x, w, dy, stride=(1, 1), pad=(1, 1)):
    sh, sw = stride
    ph, pw = pad
    xp = np.ascontiguousarray(_pad_input(x, ph, pw))
    dxp, dw, db = _dwconv2d_bwd_njit(xp, np.ascontiguousarray(w), np.ascontiguousarray(dy), sh, sw)
    dx = dxp[:, :, ph:xp.shape[2] - ph, pw:xp.shape[3] - pw] if (ph or pw) else dxp
    return np.ascontiguousarray(dx), dw, db


# ---------------------------------------------------------------------------
# public API, numpy variants (kernel-offset accumulation)
# ---------------------------------------------------------------------------

def conv2d_numpy(x, w, bias, stride=(1, 1), pad=(1, 1)):
    sh, sw = stride
    ph, pw = pad
    xp = _pad_input(x, ph, pw)
    kh, kw = w.shape[2], w.shape[3]
    ho = _out_dim(x.shape[2], kh, sh, ph)
    wo = _out_dim(x.shape[3], kw, sw, pw)
    y = np.zeros((x.shape[0], w.shape[0], ho, wo), dtype=x.dtype)
    for p in range(kh):
        for q in range(kw):
            sl = xp[:, :, p:p + ho * sh:sh, q:q + wo * sw:sw]
            y += np.einsum("bchw,oc->bohw", sl, w[:, :, p, q])
    return y + bias[None, :, None, None]


def conv2d_grads_numpy(x, w, dy, stride=(1, 1), pad=(1, 1)):
    sh, sw = stride
    ph, pw = pad
    xp = _pad_input(x, ph, pw)
    kh, kw = w.shape[2], w.shape[3]
    _, _, ho, wo = dy.shape
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    db = dy.sum(axis=(0, 2, 3)).astype(w.dtype)
    for p in range(kh):
        for q in range(kw):
            sl = xp[:, :, p:p + ho * sh:sh, q:q + wo * sw:sw]
            dw[:, :, p, q] = np.tensordot(dy, sl, axes=([0, 2, 3], [0, 2, 3]))
            dxp[:, :, p:p + ho * sh:sh, q:q + wo * sw:sw] += np.einsum(
                "bohw,oc->bchw", dy, w[:, :, p, q]
            )
    dx = dxp[:, :, ph:xp.shape[2] - ph, pw:xp.shape[3] - pw] if (ph or pw) else dxp
    return np.ascontiguousarray(dx), dw, db


def depthwise_conv2d_numpy(x, w, bias, stride=(1, 1), pad=(1, 1)):
    sh, sw = stride
    ph, pw = pad
    xp = _pad_input(x, ph, pw)
    kh, kw = w.shape[1], w.shape[2]
    ho = _out_dim(x.shape[2], kh, sh, ph)
    wo = _out_dim(x.shape[3], kw, sw, pw)
    y = np.zeros((x.shape[0], x.shape[1], ho, wo), dtype=x.dtype)
    for p in range(kh):
        for q in range(kw):
            sl = xp[:, :, p:p + ho * sh:sh, q:q + wo * sw:sw]
            y += sl * w[None, :, p, q, None, None]
    return y + bias[None, :, None, None]


def depthwise_conv2d_grads_numpy(x, w, dy, stride=(1, 1), pad=(1, 1)):
    sh, sw = stride
    ph, pw = pad
    xp = _pad_input(x, ph, pw)
    kh, kw = w.shape[1], w.shape[2]
    _, _, ho, wo = dy.shape
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    db = dy.sum(axis=(0, 2, 3)).astype(w.dtype)
    for p in range(kh):
        for q in range(kw):
            sl = xp[:, :, p:p + ho * sh:sh, q:q + wo * sw:sw]
            dw[:, p, q] = (dy * sl).sum(axis=(0, 2, 3))
            dxp[:, :, p:p + ho * sh:sh, q:q + wo * sw:sw] += dy * w[None, :, p, q, None, None]
    dx = dxp[:, :, ph:xp.shape[2] - ph, pw:xp.shape[3] - pw] if (ph or pw) else dxp
    return np.ascontiguousarray(dx), dw, db


if USE_NUMBA:
    conv2d = conv2d_numba
    conv2d_grads = conv2d_grads_numba
    depthwise_conv2d = depthwise_conv2d_numba
    depthwise_conv2d_grads = depthwise_conv2d_grads_numba
else:
    conv2d = conv2d_numpy
    conv2d_grads = conv2d_grads_numpy
    depthwise_conv2d = depthwise_conv2d_numpy
    depthwise_conv2d_grads = depthwise_conv2d_grads_numpy
