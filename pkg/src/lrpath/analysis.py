"""Error metrics, convergence-order estimates and the Hermite rank diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class UndefinedOrderError(ArithmeticError):
    pass


def relative_error(u_approx, u_ref, ord=2) -> float:
    """``||u_approx - u_ref|| / ||u_ref||`` (2-norm unless ``ord`` says otherwise)."""
    a = np.asarray(u_approx, dtype=float)
    b = np.asarray(u_ref, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    ref = np.linalg.norm(b.ravel(), ord)
    if ref == 0.0:
        raise ZeroDivisionError("reference vector has zero norm")
    return float(np.linalg.norm((a - b).ravel(), ord) / ref)


def runge_order(u_n, u_n2, u_n4, ord=2) -> float:
    """Observed order ``log2(||u_{n/2} - u_{n/4}|| / ||u_n - u_{n/2}||)``.

    The three solutions must live on the same mesh and come from ``n``,
    ``n/2`` and ``n/4`` time steps.
    """
    u_n, u_n2, u_n4 = (np.asarray(u, dtype=float) for u in (u_n, u_n2, u_n4))
    num = np.linalg.norm((u_n2 - u_n4).ravel(), ord)
    den = np.linalg.norm((u_n - u_n2).ravel(), ord)
    if den == 0.0 or num == 0.0:
        raise UndefinedOrderError("successive differences vanish; order is undefined")
    return float(math.log2(num / den))


def richardson(u_n, u_n2, order: int = 2):
    """``(2^order u_n - u_{n/2}) / (2^order - 1)``."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    f = 2.0**order
    return (f * np.asarray(u_n, dtype=float) - np.asarray(u_n2, dtype=float)) / (f - 1.0)


def richardson_error(u_n, u_n2, order: int = 2, ord=2) -> float:
    """Relative error of ``u_n`` estimated from its difference with ``u_{n/2}``."""
    u_n = np.asarray(u_n, dtype=float)
    diff = np.linalg.norm((u_n - np.asarray(u_n2, dtype=float)).ravel(), ord)
    return float(diff / ((2.0**order - 1.0) * np.linalg.norm(u_n.ravel(), ord)))


@dataclass
class ConvergenceRow:
    n: int
    dt: float
    p2: float | None = None
    eps2: float | None = None
    p4: float | None = None
    eps4: float | None = None
    rank: int | None = None
    wall_seconds: float | None = None


@dataclass
class ConvergenceTable:
    T: float
    rows: list = field(default_factory=list)


def convergence_table(T: float, ns, solutions, ranks=None, times=None) -> ConvergenceTable:
    """Order and error columns for a doubling sweep of solutions on one mesh.

    ``p2``/``eps2`` come from the raw solutions, ``p4``/``eps4`` from their
    Richardson extrapolations. A column stays ``None`` where the sweep is too
    short to fill it.
    """
    ns = [int(n) for n in ns]
    if any(b != 2 * a for a, b in zip(ns, ns[1:])):
        raise ValueError(f"n-sweep must double from entry to entry, got {ns}")
    u = [np.asarray(s, dtype=float) for s in solutions]
    if len(u) != len(ns):
        raise ValueError("one solution per n is required")
    ext = [None] + [richardson(u[i], u[i - 1], 2) for i in range(1, len(u))]
    rows = []
    for i, n in enumerate(ns):
        row = ConvergenceRow(n=n, dt=T / n)
        if i >= 1:
            row.eps2 = richardson_error(u[i], u[i - 1], 2)
        if i >= 2:
            row.p2 = _order_or_none(u[i], u[i - 1], u[i - 2])
            row.eps4 = richardson_error(ext[i], ext[i - 1], 4)
        if i >= 3:
            row.p4 = _order_or_none(ext[i], ext[i - 1], ext[i - 2])
        if ranks is not None:
            row.rank = ranks[i]
        if times is not None:
            row.wall_seconds = times[i]
        rows.append(row)
    return ConvergenceTable(T=T, rows=rows)


def _order_or_none(a, b, c):
    try:
        return runge_order(a, b, c)
    except UndefinedOrderError:
        return None


# Hermite functions

def hermite_functions(l_max: int, x) -> np.ndarray:
    """Orthonormal Hermite functions ``phi_0..phi_{l_max}`` at ``x``, shape ``(l_max+1, *x.shape)``.

    Uses ``phi_{l+1} = x sqrt(2/(l+1)) phi_l - sqrt(l/(l+1)) phi_{l-1}`` so
    no factorial ever appears.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((l_max + 1,) + x.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * x * x)
    if l_max >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for l in range(1, l_max):
        out[l + 1] = x * math.sqrt(2.0 / (l + 1)) * out[l] - math.sqrt(l / (l + 1)) * out[l - 1]
    return out


def hermite_function(l: int, x) -> np.ndarray:
    return hermite_functions(l, x)[l]


def eps_rank(sv, eps: float) -> int:
    """Number of singular values above ``eps * sv[0]``."""
    sv = np.asarray(sv, dtype=float)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > eps * sv[0]))


@dataclass
class HermiteRankRow:
    l: int
    sv: np.ndarray
    rank: int

    @property
    def relative(self) -> np.ndarray:
        return self.sv / self.sv[0]


def hermite_rank_study(l_max: int = 32, nrows: int = 8000, ncols: int = 1024,
                       eps: float = 1e-8, a_x: float = 2.0, n_sv: int = 9) -> list:
    """Singular values of the reshaped Hermite functions ``(Phi_l)_ij = phi_l(x_{i+j*nrows})``.

    The mesh is the level-``ncols`` mesh on ``[-ncols*a_x, ncols*a_x)`` with
    ``nrows`` points per block. Columns that are exactly zero do not change
    the singular values and are dropped before the SVD.
    """
    if l_max < 0:
        raise ValueError("l_max must be non-negative")
    h = 2.0 * a_x / nrows
    x = (-ncols * a_x + np.arange(nrows * ncols) * h).reshape(ncols, nrows).T
    out = []
    # phi_l vanishes in double precision beyond |x| ~ 40 + sqrt(2 l)
    live = np.flatnonzero(np.abs(x).min(axis=0) < 60.0 + math.sqrt(2 * l_max + 1))
    phis = hermite_functions(l_max, x[:, live])
    for l in range(l_max + 1):
        mat = phis[l]
        mat = mat[:, np.any(mat != 0.0, axis=0)]
        sv = np.linalg.svd(mat, compute_uv=False)
        out.append(HermiteRankRow(l=l, sv=sv[:n_sv].copy(), rank=eps_rank(sv, eps)))
    return out


@dataclass
class HermiteExpansion:
    coefficients: np.ndarray
    norm2: float
    l0: int | None

    def chi(self) -> np.ndarray:
        """``chi(l) = sum_{j>l} c_j^2`` via Parseval, for ``l = 0..l_max``."""
        return np.maximum(self.norm2 - np.cumsum(self.coefficients**2), 0.0)


def hermite_coefficients(t, l_max: int, eps1: float = 1e-6, half_width: float = 40.0,
                         npts: int = 2**15 + 1) -> HermiteExpansion:
    """Coefficients ``c_l = int t(x) phi_l(x) dx`` by the trapezoid rule on a wide window.

    ``l0`` is the smallest ``l`` with ``chi(l) < eps1 * chi(0)``, where the
    tail energy ``chi`` is taken from Parseval with the quadrature norm of ``t``;
    it is ``None`` when no ``l <= l_max`` qualifies.
    """
    x = np.linspace(-half_width, half_width, npts)
    w = np.full(npts, x[1] - x[0])
    w[0] *= 0.5
    w[-1] *= 0.5
    tv = np.asarray(t(x), dtype=float)
    wt = w * tv
    # run the recurrence without storing every phi_l on the grid
    c = np.empty(l_max + 1)
    prev, cur = np.zeros_like(x), np.pi**-0.25 * np.exp(-0.5 * x * x)
    for l in range(l_max + 1):
        c[l] = cur @ wt
        prev, cur = cur, x * math.sqrt(2.0 / (l + 1)) * cur - math.sqrt(l / (l + 1)) * prev
    norm2 = float(np.dot(w, tv * tv))
    chi = np.maximum(norm2 - np.cumsum(c**2), 0.0)
    hit = np.flatnonzero(chi < eps1 * chi[0]) if chi[0] > 0 else np.array([0])
    l0 = int(hit[0]) if hit.size else None
    return HermiteExpansion(coefficients=c, norm2=norm2, l0=l0)
