"""Discrete convolutions and Hankel matrix-vector products.

The convolution used throughout is the correlation

    c_i = sum_j a_{i+j} b_j,   i = -(m-1), ..., k-1,

with ``a`` zero outside ``0..k-1``. Results are stored 0-based, so entry ``i``
of the convolution lives at position ``i + m - 1`` of the returned array.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft


@dataclass(frozen=True)
class HankelSpec:
    """Hankel matrix ``[row^T, col]_H`` of size ``k x k``.

    Entry ``(i, j)`` is ``row[i+j]`` when ``i+j < k`` and ``col[i+j-k]``
    otherwise, so ``row`` is the top row and ``col`` the right column below
    the top-right corner.
    """

    row: np.ndarray
    col: np.ndarray

    def __post_init__(self):
        row = np.asarray(self.row, dtype=float)
        col = np.asarray(self.col, dtype=float)
        if row.ndim != 1 or col.ndim != 1 or col.size != row.size - 1:
            raise ValueError(
                f"generators must have sizes k and k-1, got {row.size} and {col.size}")
        object.__setattr__(self, "row", row)
        object.__setattr__(self, "col", col)

    @property
    def size(self) -> int:
        return self.row.size

    def generator(self) -> np.ndarray:
        """The anti-diagonal values ``(row, col)`` of length ``2k-1``."""
        return np.concatenate([self.row, self.col])

    def dense(self) -> np.ndarray:
        k = self.size
        g = self.generator()
        return g[np.add.outer(np.arange(k), np.arange(k))]

    def scaled(self, alpha: float) -> "HankelSpec":
        return HankelSpec(alpha * self.row, alpha * self.col)

    def __add__(self, other: "HankelSpec") -> "HankelSpec":
        return HankelSpec(self.row + other.row, self.col + other.col)


def fft_length(n: int) -> int:
    """Smallest power of two that is at least ``n``."""
    return 1 << max(0, int(n) - 1).bit_length()


def convolve_full(a, b) -> np.ndarray:
    """Full correlation ``c_i = sum_j a_{i+j} b_j`` of length ``m+k-1``, via FFT.

    Position ``q`` of the result holds ``c_{q-(m-1)}``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError("convolve_full expects one-dimensional vectors")
    if a.size == 0 or b.size == 0:
        raise ValueError("convolve_full needs non-empty vectors")
    if a.size < b.size:
        raise ValueError(f"first vector must be at least as long as the second "
                         f"({a.size} < {b.size})")
    size = a.size + b.size - 1
    nfft = fft_length(size)
    spec = sfft.rfft(a, nfft) * sfft.rfft(b[::-1], nfft)
    return sfft.irfft(spec, nfft)[:size]


def convolve_direct(a, b) -> np.ndarray:
    """O(km) double loop for :func:`convolve_full`; test oracle."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    k, m = a.size, b.size
    out = np.zeros(k + m - 1)
    for q in range(k + m - 1):
        i = q - (m - 1)
        acc = 0.0
        for j in range(m):
            if 0 <= i + j < k:
                acc += a[i + j] * b[j]
        out[q] = acc
    return out


def hankel_matvec_direct(h: HankelSpec, x) -> np.ndarray:
    """``y_i = sum_j A_ij x_j`` by explicit summation over the generators."""
    x = np.asarray(x, dtype=float)
    k = h.size
    if x.shape != (k,):
        raise ValueError(f"vector of length {k} expected, got shape {x.shape}")
    y = np.zeros(k)
    for i in range(k):
        acc = 0.0
        for j in range(k):
            s = i + j
            acc += (h.row[s] if s < k else h.col[s - k]) * x[j]
        y[i] = acc
    return y


def hankel_matvec(h: HankelSpec, x) -> np.ndarray:
    """Fast ``[row^T, col]_H @ x`` through one FFT correlation."""
    x = np.asarray(x, dtype=float)
    k = h.size
    if x.shape != (k,):
        raise ValueError(f"vector of length {k} expected, got shape {x.shape}")
    c = convolve_full(h.generator(), x)
    return c[k - 1:2 * k - 1]


@dataclass(frozen=True)
class BasisConvolutions:
    """``k_i = U_i p`` and ``t_i = W_i p`` for every basis column ``u_i``.

    ``U_i = [u_i^T, 0]_H`` and ``W_i = [0^T, w_i]_H`` with ``w_i = u_i[:-1]``.
    Arrays are stored column-wise, shape ``(M, r)``.
    """

    k_vecs: np.ndarray
    t_vecs: np.ndarray

    @property
    def rank(self) -> int:
        return self.k_vecs.shape[1]

    def g(self, i: int) -> np.ndarray:
        """Stacked ``(t_i, k_i)`` of length ``2M``."""
        return np.concatenate([self.t_vecs[:, i], self.k_vecs[:, i]])


def basis_convolutions(basis_cols, kernel) -> BasisConvolutions:
    """Products of the anti-triangular Hankel blocks of every column with ``p``.

    One length-``2M-1`` correlation per column gives both products:
    ``k_i[l] = c_l`` and ``t_i[l] = c_{l-M}`` (so ``t_i[0] = 0``).
    """
    p = kernel.p if hasattr(kernel, "p") else np.asarray(kernel, dtype=float)
    B = np.asarray(basis_cols, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    M = p.size
    if B.shape[0] != M:
        raise ValueError(f"basis columns have length {B.shape[0]}, kernel has {M}")
    nfft = fft_length(2 * M - 1)
    # batched correlation of every column with p
    spec = sfft.rfft(B, nfft, axis=0) * sfft.rfft(p[::-1], nfft)[:, None]
    c = sfft.irfft(spec, nfft, axis=0)[:2 * M - 1]
    k_vecs = np.ascontiguousarray(c[M - 1:])
    t_vecs = np.empty_like(k_vecs)
    t_vecs[0] = 0.0
    t_vecs[1:] = c[:M - 1]
    return BasisConvolutions(k_vecs=k_vecs, t_vecs=t_vecs)
