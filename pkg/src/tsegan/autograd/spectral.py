"""Spectral normalization by power iteration with persistent singular vectors."""
from __future__ import annotations

import logging

import numpy as np

from .tensor import Tensor, as_tensor, make_node

log = logging.getLogger(__name__)

EPS = 1e-8


def _unit(v: np.ndarray) -> np.ndarray:
    return v / max(np.linalg.norm(v), EPS)


class SpectralNormState:
    """Left/right singular-vector estimates for one weight, reshaped to ``[rows, -1]``."""

    def __init__(self, rows: int, cols: int, rng: np.random.Generator):
        self.u = _unit(rng.standard_normal(rows))
        self.v = _unit(rng.standard_normal(cols))

    def power_iterate(self, w2: np.ndarray, iters: int = 1) -> None:
        for _ in range(iters):
            self.v[:] = _unit(w2.T @ self.u)
            self.u[:] = _unit(w2 @ self.v)

    def converge(self, w2: np.ndarray, max_iters: int = 5000, tol: float = 1e-6, warn: bool = True) -> int:
        """Iterate until ``|W^T u - sigma v| <= tol * sigma``; returns the iteration count.

        That residual bounds ``sigma_max^2 - sigma^2`` by about ``tol * sigma^2``
        even when the top two singular values are close, which a test on the
        change in sigma between iterations does not.
        """
        for i in range(1, max_iters + 1):
            self.power_iterate(w2, 1)
            back = w2.T @ self.u
            sig = float(back @ self.v)
            if np.linalg.norm(back - sig * self.v) <= tol * abs(sig):
                return i
        (log.warning if warn else log.debug)("power iteration did not converge in %d steps for %s matrix",
                                             max_iters, w2.shape)
        return max_iters

    def sigma(self, w2: np.ndarray) -> float:
        return float(self.u @ w2 @ self.v)


def spectral_normalize(weight, state: SpectralNormState, iters: int = 1) -> Tensor:
    """Return ``weight / sigma`` with ``sigma = u^T W v`` after ``iters`` power iterations.

    ``u`` and ``v`` are updated in place and treated as constants for the
    gradient, so ``d sigma / dW = u v^T``. Pass ``iters=0`` to reuse the current
    vectors unchanged (needed for finite-difference checks).
    """
    weight = as_tensor(weight)
    wd = weight.data
    w2 = wd.reshape(wd.shape[0], -1)
    if not np.any(w2):
        log.warning("spectral_normalize: zero weight matrix %s left unnormalized", wd.shape)
        return weight
    state.power_iterate(w2, iters)
    u, v = state.u.copy(), state.v.copy()
    sigma = max(state.sigma(w2), EPS)
    out = wd / sigma

    def bw(g):
        inner = float(np.sum(g * wd))
        return (g / sigma - (inner / sigma**2) * np.outer(u, v).reshape(wd.shape),)

    return make_node(out, (weight,), bw)


def largest_singular_value(matrix: np.ndarray) -> float:
    """Exact top singular value via the eigen-decomposition of ``M^T M``."""
    m = np.asarray(matrix, dtype=np.float64)
    m = m.reshape(m.shape[0], -1)
    gram = m.T @ m if m.shape[1] <= m.shape[0] else m @ m.T
    return float(np.sqrt(max(np.linalg.eigvalsh(gram)[-1], 0.0)))
