"""1-D/2-D convolutions, transposed 1-D convolution and adaptive average pooling.

All kernels accept an optional leading batch axis: ``conv1d`` takes ``[C, T]``
or ``[B, C, T]`` and returns the same rank.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import Tensor, as_tensor, make_node


def conv1d_out_len(T: int, K: int, stride: int = 1, dilation: int = 1, padding: int = 0) -> int:
    return (T + 2 * padding - dilation * (K - 1) - 1) // stride + 1


def _batched(x: Tensor, rank: int, op: str) -> tuple[np.ndarray, bool]:
    if x.ndim == rank - 1:
        return x.data[None], True
    if x.ndim == rank:
        return x.data, False
    raise ValueError(f"{op}: expected a {rank - 1}-D or {rank}-D input, got shape {x.shape}")


def conv1d(x, w, stride: int = 1, dilation: int = 1, padding: int = 0, groups: int = 1, bias=None) -> Tensor:
    """Cross-correlation of ``x`` ``[B?, C_in, T]`` with ``w`` ``[C_out, C_in/groups, K]``.

    ``bias`` (optional) has ``C_out`` entries. Only ``groups=1`` and fully
    depthwise (``groups == C_in == C_out``) layouts are supported.
    """
    x, w = as_tensor(x), as_tensor(w)
    xd, squeeze = _batched(x, 3, "conv1d")
    if w.ndim != 3:
        raise ValueError(f"conv1d: kernel must be [C_out, C_in, K], got {w.shape}")
    if stride < 1 or dilation < 1 or padding < 0:
        raise ValueError(f"conv1d: bad stride/dilation/padding {stride}/{dilation}/{padding}")
    B, C, T = xd.shape
    O, Cg, K = w.shape
    if Cg * groups != C or O % groups:
        raise ValueError(f"conv1d: input shape {x.shape} does not match kernel shape {w.shape} (groups={groups})")
    depthwise = groups > 1
    if depthwise and not (groups == C == O and Cg == 1):
        raise NotImplementedError("conv1d: grouped convolution is only supported in the depthwise layout")
    span = dilation * (K - 1) + 1
    if T + 2 * padding < span:
        raise ValueError(f"conv1d: input shape {x.shape} shorter than kernel span {span} of {w.shape}")
    parents = [x, w]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.size != O:
            raise ValueError(f"conv1d: bias needs {O} entries, got shape {bias.shape}")
        parents.append(bias)
    Tout = conv1d_out_len(T, K, stride, dilation, padding)
    xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding))) if padding else xd
    wd = w.data
    reach = stride * (Tout - 1) + 1

    def tap(k):
        return slice(k * dilation, k * dilation + reach, stride)

    pointwise = K == 1 and stride == 1 and not depthwise
    cols = None
    if depthwise:
        out = wd[None, :, 0, 0, None] * xp[:, :, tap(0)]
        for k in range(1, K):
            out += wd[None, :, 0, k, None] * xp[:, :, tap(k)]
    elif pointwise:
        out = np.matmul(wd[:, :, 0], xp)
    else:
        # im2col, channel-major: [C*K, B*Tout]
        win = sliding_window_view(xp, span, axis=2)[:, :, ::stride, ::dilation][:, :, :Tout]
        cols = win.transpose(1, 3, 0, 2).reshape(C * K, B * Tout)
        out = (wd.reshape(O, C * K) @ cols).reshape(O, B, Tout).transpose(1, 0, 2)
    if bias is not None:
        out = out + bias.data.reshape(O, 1)

    def bw(g):
        if squeeze:
            g = g[None]
        need_x = x.requires_grad
        gx = None
        if depthwise:
            gw = np.empty_like(wd)
            gxp = np.zeros_like(xp) if need_x else None
            for k in range(K):
                gw[:, 0, k] = np.einsum("bct,bct->c", g, xp[:, :, tap(k)])
                if need_x:
                    gxp[:, :, tap(k)] += wd[None, :, 0, k, None] * g
        elif pointwise:
            gw = np.matmul(g, xp.transpose(0, 2, 1)).sum(axis=0)[:, :, None]
            gxp = np.matmul(wd[:, :, 0].T, g) if need_x else None
        else:
            w2 = wd.reshape(O, C * K)
            g2 = g.transpose(1, 0, 2).reshape(O, B * Tout)
            gw = (g2 @ cols.T).reshape(wd.shape)
            gxp = None
            if need_x:
                gcols = (w2.T @ g2).reshape(C, K, B, Tout)
                gxp_cm = np.zeros((C, B, xp.shape[-1]))
                for k in range(K):
                    gxp_cm[:, :, tap(k)] += gcols[:, k]
                gxp = gxp_cm.transpose(1, 0, 2)
        if need_x:
            gx = gxp[:, :, padding : padding + T] if padding else gxp
            if squeeze:
                gx = gx[0]
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2)).reshape(bias.shape))
        return grads

    return make_node(out[0] if squeeze else out, parents, bw)


def conv_transpose1d(x, w, stride: int = 1) -> Tensor:
    """Transposed convolution (overlap-add) of ``x`` ``[B?, C_in, T]`` with ``w`` ``[C_in, C_out, K]``.

    For a fixed kernel array ``w`` this is the linear adjoint of
    ``conv1d(., w, stride)``, which reads the same array as ``[C_out, C_in, K]``.
    """
    x, w = as_tensor(x), as_tensor(w)
    xd, squeeze = _batched(x, 3, "conv_transpose1d")
    if w.ndim != 3:
        raise ValueError(f"conv_transpose1d: kernel must be [C_in, C_out, K], got {w.shape}")
    B, C, T = xd.shape
    Ci, O, K = w.shape
    if Ci != C:
        raise ValueError(f"conv_transpose1d: input shape {x.shape} does not match kernel shape {w.shape}")
    if not K >= stride >= 1:
        raise ValueError(f"conv_transpose1d: need K >= stride >= 1, got K={K}, stride={stride}")
    Tout = (T - 1) * stride + K
    wd = w.data
    w2 = wd.reshape(C, O * K)
    frames = np.matmul(w2.T, xd).reshape(B, O, K, T)
    out = np.zeros((B, O, Tout))
    reach = stride * (T - 1) + 1
    for k in range(K):
        out[:, :, k : k + reach : stride] += frames[:, :, k]

    def bw(g):
        if squeeze:
            g = g[None]
        gf = np.stack([g[:, :, k : k + reach : stride] for k in range(K)], axis=2).reshape(B, O * K, T)
        gx = np.matmul(w2, gf)
        gw = np.tensordot(xd, gf, axes=([0, 2], [0, 2])).reshape(wd.shape)
        return (gx[0] if squeeze else gx), gw

    return make_node(out[0] if squeeze else out, (x, w), bw)


def conv2d(x, w, stride: int = 1, padding: int = 0, bias=None) -> Tensor:
    """2-D cross-correlation of ``x`` ``[B?, C_in, H, W]`` with square ``w`` ``[C_out, C_in, K, K]``."""
    x, w = as_tensor(x), as_tensor(w)
    xd, squeeze = _batched(x, 4, "conv2d")
    if w.ndim != 4 or w.shape[2] != w.shape[3]:
        raise ValueError(f"conv2d: kernel must be [C_out, C_in, K, K], got {w.shape}")
    B, C, H, W = xd.shape
    O, Ci, K, _ = w.shape
    if Ci != C:
        raise ValueError(f"conv2d: input shape {x.shape} does not match kernel shape {w.shape}")
    if H + 2 * padding < K or W + 2 * padding < K:
        raise ValueError(f"conv2d: input shape {x.shape} smaller than kernel shape {w.shape}")
    parents = [x, w]
    if bias is not None:
        bias = as_tensor(bias)
        if bias.size != O:
            raise ValueError(f"conv2d: bias needs {O} entries, got shape {bias.shape}")
        parents.append(bias)
    Ho = (H + 2 * padding - K) // stride + 1
    Wo = (W + 2 * padding - K) // stride + 1
    xp = np.pad(xd, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else xd
    win = sliding_window_view(xp, (K, K), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :Ho, :Wo]
    # im2col, channel-major: [C*K*K, B*Ho*Wo]
    cols = win.transpose(1, 4, 5, 0, 2, 3).reshape(C * K * K, B * Ho * Wo)
    wd = w.data
    w2 = wd.reshape(O, C * K * K)
    out = (w2 @ cols).reshape(O, B, Ho, Wo).transpose(1, 0, 2, 3)
    if bias is not None:
        out = out + bias.data.reshape(O, 1, 1)

    def bw(g):
        g2 = g.reshape(B, O, Ho * Wo).transpose(1, 0, 2).reshape(O, B * Ho * Wo)
        gw = (g2 @ cols.T).reshape(wd.shape)
        gb = g2.sum(axis=1).reshape(bias.shape) if bias is not None else None
        if not x.requires_grad:
            return None, gw, gb
        gcols = (w2.T @ g2).reshape(C, K, K, B, Ho, Wo)
        gxp = _col2im2d(gcols, stride, xp.shape[2:]).transpose(1, 0, 2, 3)
        gx = gxp[:, :, padding : padding + H, padding : padding + W] if padding else gxp
        return (gx[0] if squeeze else gx), gw, gb

    return make_node(out[0] if squeeze else out, parents, bw)


def _col2im2d(gcols: np.ndarray, stride: int, padded_hw: tuple[int, int]) -> np.ndarray:
    """Scatter-add ``[C, K, K, B, Ho, Wo]`` columns back onto a ``[C, B, Hp, Wp]`` grid.

    Taps are grouped by stride phase so every add is a unit-stride slice.
    """
    C, K, _, B, Ho, Wo = gcols.shape
    n = (K + stride - 1) // stride
    phases = np.zeros((stride, stride, C, B, Ho + n - 1, Wo + n - 1))
    for i in range(K):
        a, pi = divmod(i, stride)
        for j in range(K):
            b, pj = divmod(j, stride)
            phases[pi, pj, :, :, a : a + Ho, b : b + Wo] += gcols[:, i, j]
    full = np.empty((C, B, stride * (Ho + n - 1), stride * (Wo + n - 1)))
    for pi in range(stride):
        for pj in range(stride):
            full[:, :, pi::stride, pj::stride] = phases[pi, pj]
    Hp, Wp = padded_hw
    out = np.zeros((C, B, Hp, Wp))
    h, w = min(Hp, full.shape[2]), min(Wp, full.shape[3])
    out[:, :, :h, :w] = full[:, :, :h, :w]
    return out


def adaptive_pool_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Row i averages input bins ``floor(i*n_in/n_out) .. ceil((i+1)*n_in/n_out)``."""
    P = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo = (i * n_in) // n_out
        hi = -((-(i + 1) * n_in) // n_out)
        P[i, lo:hi] = 1.0 / (hi - lo)
    return P


def adaptive_avg_pool2d(x, out_hw: tuple[int, int]) -> Tensor:
    x = as_tensor(x)
    if x.ndim not in (3, 4):
        raise ValueError(f"adaptive_avg_pool2d: expected [B?, C, H, W], got {x.shape}")
    H, W = x.shape[-2:]
    Ph = adaptive_pool_matrix(H, out_hw[0])
    Pw = adaptive_pool_matrix(W, out_hw[1])
    out = np.einsum("ih,...hw,jw->...ij", Ph, x.data, Pw)
    return make_node(out, (x,), lambda g: (np.einsum("ih,...ij,jw->...hw", Ph, g, Pw),))
