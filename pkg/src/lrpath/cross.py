"""Adaptive cross approximation with maxvol pivoting.

A matrix that is only available through an entry oracle is approximated by a
skeleton ``A ~ C Ahat^{-1} R`` built from a few rows and columns. The skeleton is
brought to the orthogonal dyadic form ``X Y^T`` (QR of both sides and an SVD of
the small core). The rank is chosen by the tail-energy rule

    zeta(s) = sqrt(sum_{i>s} s_i^2 / sum_i s_i^2) < eps

and the sampled subspace is doubled until two successive core spectra agree to
``eps`` in relative 2-norm.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg.blas import dger as _ger

log = logging.getLogger(__name__)

MAXVOL_TOL = 1e-2
MAXVOL_MAX_SWAPS = 100
PINV_RTOL = 1e-14


class DegeneracyError(ArithmeticError):
    """Pivot block is (numerically) singular."""

    def __init__(self, msg, rows=None, cols=None):
        super().__init__(msg)
        self.rows = None if rows is None else np.asarray(rows)
        self.cols = None if cols is None else np.asarray(cols)


class LazyMatrix:
    """Matrix given by an entry oracle.

    ``block(I, J)`` must return the ``len(I) x len(J)`` submatrix for integer index
    arrays; vectorised oracles are what make the cross method fast in numpy.
    The number of entries requested is tallied in :attr:`evaluations`.
    """

    def __init__(self, nrows, ncols, block):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self._block = block
        self.evaluations = 0

    @property
    def shape(self):
        return (self.nrows, self.ncols)

    @classmethod
    def from_entry(cls, nrows, ncols, entry):
        """Wrap a scalar ``entry(i, j)`` function."""
        def block(I, J):
            return np.array([[entry(i, j) for j in J] for i in I], dtype=float)
        return cls(nrows, ncols, block)

    @classmethod
    def from_array(cls, A):
        A = np.asarray(A, dtype=float)
        return cls(A.shape[0], A.shape[1], lambda I, J: A[np.ix_(I, J)])

    def block(self, I, J) -> np.ndarray:
        I = np.asarray(I, dtype=np.intp)
        J = np.asarray(J, dtype=np.intp)
        self.evaluations += I.size * J.size
        out = np.asarray(self._block(I, J), dtype=float)
        if out.shape != (I.size, J.size):
            raise ValueError(f"oracle returned shape {out.shape}, "
                             f"expected {(I.size, J.size)}")
        return out

    def eval(self, i, j) -> float:
        return float(self.block([i], [j])[0, 0])

    def rows(self, I):
        return self.block(I, np.arange(self.ncols))

    def cols(self, J):
        return self.block(np.arange(self.nrows), J)


@dataclass
class LowRankFactors:
    """``A ~ B @ V.T`` with ``B = Q_B U sqrt(S)`` and ``V = Q_C V_A sqrt(S)``."""

    B: np.ndarray
    V: np.ndarray
    eps_c: float
    sv: np.ndarray
    spectrum: np.ndarray = field(default=None, repr=False)
    converged: bool = True
    regularized: bool = False
    rows: np.ndarray = field(default=None, repr=False)
    cols: np.ndarray = field(default=None, repr=False)
    evaluations: int = 0
    rounds: int = 0

    @property
    def r(self) -> int:
        return self.B.shape[1]

    def full(self) -> np.ndarray:
        return self.B @ self.V.T

    def truncated(self, r: int) -> "LowRankFactors":
        return LowRankFactors(
            B=self.B[:, :r], V=self.V[:, :r], eps_c=self.eps_c, sv=self.sv[:r],
            spectrum=self.spectrum, converged=self.converged,
            regularized=self.regularized, rows=self.rows, cols=self.cols,
            evaluations=self.evaluations, rounds=self.rounds)


def zeta(sv) -> np.ndarray:
    """``zeta(s)`` for ``s = 1..len(sv)``; the last entry is exactly zero."""
    sq = np.square(np.asarray(sv, dtype=float))
    total = sq.sum()
    # tail[s-1] = sum_{i>s} sv_i^2, accumulated from the small end
    tail = np.concatenate([np.cumsum(sq[::-1])[::-1][1:], [0.0]])
    if total == 0.0:
        return np.zeros_like(sq)
    return np.sqrt(tail / total)


def zeta_rank(sv, eps: float) -> int:
    """Smallest ``s >= 1`` with ``zeta(s) < eps``."""
    z = zeta(sv)
    if z.size == 0:
        return 0
    return int(np.flatnonzero(z < eps)[0]) + 1


def maxvol_indices(tall, tol: float = MAXVOL_TOL, max_swaps: int = MAXVOL_MAX_SWAPS,
                   rank_tol: float | None = 1e-12) -> np.ndarray:
    """Rows of a ``p x q`` matrix spanning a submatrix of locally maximal volume.

    Starts from the LU pivot rows and swaps rows while some entry of
    ``tall @ inv(tall[I])`` exceeds ``1 + tol`` in modulus. Ties go to the
    lowest index. ``rank_tol=None`` skips the full-column-rank check, for inputs
    with orthonormal columns.
    """
    A = np.asarray(tall, dtype=float)
    if A.ndim != 2:
        raise ValueError("maxvol needs a matrix")
    p, q = A.shape
    if q > p:
        raise ValueError(f"maxvol needs a tall matrix, got {p}x{q}")
    if q == 0:
        return np.empty(0, dtype=np.intp)
    if rank_tol is not None:
        s = np.linalg.svd(A, compute_uv=False)
        if not np.all(np.isfinite(s)) or s[-1] <= rank_tol * s[0] or s[0] == 0.0:
            raise DegeneracyError("maxvol input is rank deficient", rows=np.arange(p))

    _, piv = sla.lu_factor(A, check_finite=False)
    perm = np.arange(p)
    for i, j in enumerate(piv):
        perm[[i, j]] = perm[[j, i]]
    idx = perm[:q].copy()

    try:
        coef = np.asfortranarray(A @ np.linalg.inv(A[idx]))
    except np.linalg.LinAlgError:
        raise DegeneracyError("maxvol pivot block is singular", rows=idx) from None
    for _ in range(max_swaps):
        flat = int(np.argmax(np.abs(coef)))
        i, j = divmod(flat, q)
        if abs(coef[i, j]) <= 1.0 + tol:
            break
        idx[j] = i
        # rank-one update of tall @ inv(tall[idx]) after replacing row j by row i
        bj = coef[:, j].copy()
        ri = coef[i].copy()
        ri[j] -= 1.0
        coef = _ger(-1.0 / coef[i, j], bj, ri, a=coef, overwrite_a=True)
    return idx


def _pinv_core(core, rtol=PINV_RTOL):
    u, s, vt = np.linalg.svd(core)
    keep = s > rtol * s[0]
    inv = (vt[keep].T / s[keep]) @ u[:, keep].T
    return inv, bool(not keep.all())


def recompress(B_raw, C_raw, core, eps_c: float = 0.0, rows=None) -> LowRankFactors:
    """Orthogonal dyadic form of the skeleton ``B_raw @ inv(core) @ C_raw.T``.

    ``B_raw`` holds the selected columns (``nrows x q``), ``C_raw`` the selected
    rows transposed (``ncols x q``). With QR factors ``B_raw = Q_B R_B`` and
    ``C_raw = Q_C R_C`` the ``q x q`` matrix ``R_B inv(core) R_C^T`` is split by SVD.

    When the pivot rows ``rows`` of ``B_raw`` are known, ``R_B inv(core)`` is
    formed as ``inv(Q_B[rows])``, which is the same matrix but stays well
    conditioned when ``core`` is nearly singular. Otherwise the core is inverted
    through its SVD with singular values below ``1e-14 * s_max`` dropped, and
    ``regularized`` reports whether anything was dropped. All ``q`` singular
    values are returned in ``sv``; truncation is left to the caller.
    """
    B_raw = np.asarray(B_raw, dtype=float)
    C_raw = np.asarray(C_raw, dtype=float)
    core = np.asarray(core, dtype=float)
    if B_raw.shape[1] != core.shape[1] or C_raw.shape[1] != core.shape[0]:
        raise ValueError(f"shapes {B_raw.shape}, {C_raw.shape}, {core.shape} do not conform")
    if not np.any(core):
        raise DegeneracyError("cross core is identically zero", rows=rows)
    Qb, Rb = np.linalg.qr(B_raw)
    Qc, Rc = np.linalg.qr(C_raw)
    regularized = False
    if rows is not None:
        left = np.linalg.solve(Qb[np.asarray(rows)], np.eye(Qb.shape[1]))
    else:
        inv, regularized = _pinv_core(core)
        left = Rb @ inv
    u, s, vt = np.linalg.svd(left @ Rc.T)
    root = np.sqrt(s)
    X = Qb @ (u * root)
    Y = Qc @ (vt.T * root)
    return LowRankFactors(B=X, V=Y, eps_c=eps_c, sv=s, spectrum=s,
                          regularized=regularized)


class _Sampler:
    """Caches full rows and columns fetched during one factorization."""

    def __init__(self, m: LazyMatrix):
        self.m = m
        self._rows = {}
        self._cols = {}

    def rows(self, I):
        missing = [i for i in dict.fromkeys(int(i) for i in I) if i not in self._rows]
        if missing:
            for i, row in zip(missing, self.m.rows(missing)):
                self._rows[i] = row
        return np.array([self._rows[int(i)] for i in I])

    def cols(self, J):
        missing = [j for j in dict.fromkeys(int(j) for j in J) if j not in self._cols]
        if missing:
            block = self.m.cols(missing)
            for j, col in zip(missing, block.T):
                self._cols[j] = col
        return np.array([self._cols[int(j)] for j in J]).T


def _spread(n, k):
    return np.unique(np.linspace(0, n - 1, k).round().astype(np.intp))


def _extend(idx, n, size, rng):
    """Append ``size - len(idx)`` distinct random indices from ``range(n)``."""
    extra = size - idx.size
    if extra <= 0:
        return idx
    pool = np.setdiff1d(np.arange(n), idx, assume_unique=False)
    pick = rng.choice(pool, size=min(extra, pool.size), replace=False)
    return np.concatenate([idx, np.sort(pick)])


def cross_approximate(m: LazyMatrix, eps_c: float, r0: int = 4, r_max: int | None = None,
                      seed: int = 0, init_rows=None, max_rounds: int = 12) -> LowRankFactors:
    """Rank-adaptive cross approximation of ``m`` to relative accuracy ``eps_c``.

    Each round doubles the current row set with random rows, picks columns by
    maxvol on the sampled rows, re-picks rows by maxvol on those columns and
    recompresses the skeleton. The new rank is the ``zeta`` rank of the core
    spectrum. Iteration stops once successive spectra agree to ``eps_c``.
    If ``r_max`` is hit first the best factors come back with
    ``converged=False``.
    """
    if not 0.0 < eps_c < 1.0:
        raise ValueError(f"eps_c must lie in (0, 1), got {eps_c}")
    nrows, ncols = m.shape
    full = min(nrows, ncols)
    r_max = full if r_max is None else int(r_max)
    if not 1 <= r0 <= r_max <= full:
        raise ValueError(f"need 1 <= r0 <= r_max <= {full}, got r0={r0}, r_max={r_max}")
    rng = np.random.default_rng(seed)
    sample = _Sampler(m)
    start_evals = m.evaluations

    I = _spread(nrows, r0) if init_rows is None else np.unique(np.asarray(init_rows, dtype=np.intp))[:r0]
    prev_sv = None
    best = None
    rounds = 0
    while True:
        rounds += 1
        size = min(2 * I.size, r_max)
        I = _extend(I, nrows, size, rng)
        R = sample.rows(I)
        if not np.any(R):
            raise DegeneracyError("sampled rows are identically zero", rows=I)
        Qr, _ = np.linalg.qr(R.T)
        J = np.sort(maxvol_indices(Qr, rank_tol=None))
        C = sample.cols(J)
        Qc, _ = np.linalg.qr(C)
        I = maxvol_indices(Qc, rank_tol=None)
        R = sample.rows(I)
        core = C[I]
        if not np.any(core):
            raise DegeneracyError("cross core is identically zero", rows=I, cols=J)
        f = recompress(C, R.T, core, eps_c, rows=I)
        sv = f.sv
        r_new = zeta_rank(sv, eps_c)

        exact = size == full
        agree = False
        if prev_sv is not None:
            n = max(prev_sv.size, sv.size)
            a = np.pad(prev_sv, (0, n - prev_sv.size))
            b = np.pad(sv, (0, n - sv.size))
            agree = np.linalg.norm(a - b) < eps_c * np.linalg.norm(b)
        best = f.truncated(r_new)
        best.rows, best.cols = I, J
        best.rounds = rounds
        done = exact or (agree and r_new < size)
        log.debug("cross round %d: size=%d rank=%d agree=%s", rounds, size, r_new, agree)
        if done:
            best.converged = True
            break
        if size >= r_max and r_new >= size or rounds >= max_rounds:
            best.converged = False
            log.warning("cross approximation stopped unconverged at rank %d", r_new)
            break
        prev_sv = sv
        # keep the pivot rows that carry the retained rank, then double again
        if r_new < size:
            I = np.sort(I[maxvol_indices(best.B[I], rank_tol=None)])
    best.evaluations = m.evaluations - start_evals
    return best
