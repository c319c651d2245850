"""Backward convolution iteration for the discretised Feynman-Kac integral.

Starting from ``F_{n+1} = f`` on the level-(n+1) mesh, every step

    Phi_{k+1}(x) = F_{k+1}(x) * exp(-w_k V(x, tau_{n-k}) dt)
    F_k(x_i)     = sum_j Phi_{k+1}(x_{i+j}) p_j

shrinks the mesh by one level, and ``u(x, T) = F_1(x) exp(-w_0 V(x, T) dt)``.

In low-rank mode the level-(k+1) values are reshaped into the ``M x (k+1)``
matrix whose column ``m`` is the block ``[m*M, (m+1)*M)``. That matrix is
cross-approximated as ``B V^T`` and every column of ``B`` is convolved once
with ``p``. Any ``F_k`` value then costs ``O(r)``:

    s_{mM+l} = sum_i V[m, i] k_i[l] + V[m+1, i] t_i[l].

Below ``dense_switch_k`` the full array is materialised and convolved directly.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from .convolution import BasisConvolutions, basis_convolutions
from .cross import LazyMatrix, LowRankFactors, cross_approximate, zeta
from .mesh import (RECTANGLE, TRAPEZOID, CapacityError, ConvolutionKernel, GridStack,
                   TimeGrid, build_grid_stack, build_kernel, build_time_grid)
from .problems import ProblemSpec

log = logging.getLogger(__name__)

DEFAULT_MEMORY_BUDGET = 2**30  # bytes for the dense (n+1)*M array


class CrossNotConvergedError(ArithmeticError):
    def __init__(self, k, rank, accuracy):
        super().__init__(f"cross approximation did not converge at step k={k} "
                         f"(rank {rank}, achieved zeta {accuracy:.3g})")
        self.k = k
        self.rank = rank
        self.accuracy = accuracy


class DataError(ValueError):
    """Non-finite initial condition or exponential factor."""

    def __init__(self, what, x, t=None):
        where = f"x={x!r}" if t is None else f"x={x!r}, t={t!r}"
        super().__init__(f"non-finite {what} at {where}")
        self.x = x
        self.t = t


@dataclass
class StepRecord:
    k: int
    mode: str
    rank: int | None
    seconds: float
    evaluations: int = 0
    rounds: int = 0


@dataclass
class SolveReport:
    u_final: np.ndarray
    x: np.ndarray
    steps: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    wall_seconds: float = 0.0

    @property
    def ranks(self) -> list:
        return [s.rank for s in self.steps if s.mode == "lowrank"]

    @property
    def max_rank(self) -> int | None:
        r = self.ranks
        return max(r) if r else None

    def at(self, x0: float) -> float:
        """Solution value at the mesh point nearest to ``x0``."""
        return float(self.u_final[int(np.argmin(np.abs(self.x - x0)))])


class IterationState:
    """Implicit ``F_k`` on the level-k mesh, from the factors of ``Phi^(k+1)``.

    ``factors.V`` has ``k+1`` rows; ``alpha = V[:-1]`` and ``beta = V[1:]`` are
    the coefficients of the ``k_i`` and ``t_i`` vectors for blocks ``0..k-1``.
    """

    def __init__(self, k: int, factors: LowRankFactors, conv: BasisConvolutions):
        self.k = k
        self.factors = factors
        self.conv = conv
        self.M = conv.k_vecs.shape[0]
        if factors.V.shape[0] != k + 1:
            raise ValueError(f"factors of Phi^(k+1) need {k + 1} rows in V, "
                             f"got {factors.V.shape[0]}")

    @property
    def rank(self) -> int:
        return self.factors.r

    @property
    def alpha(self) -> np.ndarray:
        return self.factors.V[:-1]

    @property
    def beta(self) -> np.ndarray:
        return self.factors.V[1:]

    def block(self, rows, cols) -> np.ndarray:
        """``F_k`` at global indices ``rows[a] + cols[b]*M`` as a matrix."""
        V = self.factors.V
        K, Tv = self.conv.k_vecs, self.conv.t_vecs
        rows = np.asarray(rows, dtype=np.intp)
        cols = np.asarray(cols, dtype=np.intp)
        return K[rows] @ V[cols].T + Tv[rows] @ V[cols + 1].T

    def values(self, j) -> np.ndarray:
        """``F_k`` at global indices ``j`` (any shape)."""
        j = np.asarray(j, dtype=np.intp)
        if j.size and (j.min() < 0 or j.max() >= self.k * self.M):
            raise IndexError(f"global index out of range [0, {self.k * self.M})")
        m, l = np.divmod(j, self.M)
        V = self.factors.V
        K, Tv = self.conv.k_vecs, self.conv.t_vecs
        # i-ascending accumulation order
        out = np.zeros(j.shape)
        for i in range(self.rank):
            out += V[m, i] * K[l, i] + V[m + 1, i] * Tv[l, i]
        return out

    def full(self) -> np.ndarray:
        """All ``k*M`` values of ``F_k`` in mesh order."""
        V = self.factors.V
        blocks = self.conv.k_vecs @ V[:-1].T + self.conv.t_vecs @ V[1:].T
        return blocks.reshape(-1, order="F")


def eval_f_k(state: IterationState, j: int) -> float:
    """Single value ``s_j`` of the implicit ``F_k`` in ``O(r)`` flops."""
    j = int(j)
    if not 0 <= j < state.k * state.M:
        raise IndexError(f"index {j} outside [0, {state.k * state.M})")
    return float(state.values(j))


class _Problem:
    """Problem callables bound to the time grid with finiteness checks."""

    def __init__(self, problem: ProblemSpec, tg: TimeGrid):
        self.problem = problem
        self.tg = tg

    def factor(self, k, x):
        """``exp(-w_k V(x, tau_{n-k}) dt)``."""
        t = self.tg.tau(self.tg.n - k)
        with np.errstate(over="ignore", invalid="ignore"):
            e = np.exp(-self.tg.w[k] * np.asarray(self.problem.V(x, t), dtype=float)
                       * self.tg.dt)
        if not np.all(np.isfinite(e)):
            bad = np.asarray(x)[~np.isfinite(e)].flat[0]
            raise DataError("potential factor", float(bad), t)
        return e

    def initial(self, x):
        v = np.asarray(self.problem.f(x), dtype=float)
        v = np.broadcast_to(v, np.shape(x))
        if not np.all(np.isfinite(v)):
            bad = np.asarray(x)[~np.isfinite(v)].flat[0]
            raise DataError("initial condition", float(bad))
        return v


def _check_inputs(grids, tg, kernel):
    if kernel.M != grids.M:
        raise ValueError(f"kernel has {kernel.M} points, mesh has M={grids.M}")
    if grids.n < tg.n:
        raise ValueError(f"grid stack built for n={grids.n} < time steps {tg.n}")


def _phi_matrix(prob: _Problem, grids: GridStack, k: int, f_block) -> LazyMatrix:
    """Lazy ``Phi^(k+1)``: ``M x (k+1)`` entries ``F_{k+1}(y) exp(-w_k V dt)``."""
    M = grids.M

    def block(I, J):
        g = I[:, None] + J[None, :] * M
        y = grids.points(k + 1, g)
        return f_block(I, J, y) * prob.factor(k, y)

    return LazyMatrix(M, k + 1, block)


def _dense_step(f_next, factor, kernel, k, M, chunk_segments=8):
    """``F_k`` on ``k*M`` points from ``F_{k+1}`` on ``(k+1)*M`` points.

    ``F_k[i] = sum_j Phi_{k+1}[i+j] p_j`` with ``Phi_{k+1} = F_{k+1} * factor``,
    where ``factor(lo, hi)`` gives the exponential factor at level-(k+1)
    indices ``lo..hi-1``. The sum is done by overlap-save with a fixed FFT
    length ``L ~ 4M``, a few segments at a time so the working set stays
    small; one step costs ``O(k M log M)``.
    """
    L = sfft.next_fast_len(4 * M, real=True)
    S = L - M + 1
    kern = np.conj(sfft.rfft(kernel.p, L))
    nout = k * M
    out = np.empty(nout)
    step = S * chunk_segments
    for o0 in range(0, nout, step):
        o1 = min(o0 + step, nout)
        hi = min(o1 + M - 1, f_next.size)
        nb = -(-(o1 - o0) // S)
        padded = np.zeros(nb * S + M - 1)
        padded[:hi - o0] = f_next[o0:hi] * factor(o0, hi)
        segs = np.lib.stride_tricks.sliding_window_view(padded, L)[::S]
        res = sfft.irfft(sfft.rfft(segs, axis=1) * kern, L, axis=1)[:, :S]
        out[o0:o1] = res.reshape(-1)[:o1 - o0]
    return out


def _level_factor(prob, grids, k):
    def factor(lo, hi):
        return prob.factor(k, grids.points(k + 1, np.arange(lo, hi)))
    return factor


def solve(problem: ProblemSpec, grids: GridStack, tg: TimeGrid, kernel: ConvolutionKernel,
          eps_c: float = 1e-10, dense_switch_k: int = 20, r0: int = 4, r_max: int | None = None,
          rank_switch: bool = False, seed: int = 0, callback=None) -> SolveReport:
    """Low-rank solve; returns ``u^(n)(x_i, T)`` on the level-1 mesh.

    Steps with ``k > dense_switch_k`` use cross approximation, the rest the
    full array. With ``rank_switch`` the switch also happens as soon as the
    cross rank reaches the number of columns. ``callback(state)`` is called
    after each low-rank step.
    """
    _check_inputs(grids, tg, kernel)
    if dense_switch_k < 0:
        raise ValueError("dense_switch_k must be non-negative")
    n, M = tg.n, grids.M
    prob = _Problem(problem, tg)
    t_start = time.perf_counter()
    steps = []

    state = None
    dense = None  # F_{k+1} as an array once in dense mode
    rank_guess = r0
    rows_guess = None
    switched = False
    for k in range(n, 0, -1):
        t0 = time.perf_counter()
        if k > dense_switch_k and not switched:
            if state is None:
                def f_block(I, J, y):
                    return prob.initial(y)
            else:
                def f_block(I, J, y, st=state):
                    return st.block(I, J)
            phi = _phi_matrix(prob, grids, k, f_block)
            ncols = k + 1
            rmax = min(M, ncols) if r_max is None else min(r_max, M, ncols)
            factors = cross_approximate(phi, eps_c, r0=min(rank_guess, rmax), r_max=rmax,
                                        seed=seed + k, init_rows=rows_guess)
            if not factors.converged:
                acc = float(zeta(factors.spectrum)[factors.r - 1])
                raise CrossNotConvergedError(k, factors.r, acc)
            conv = basis_convolutions(factors.B, kernel)
            state = IterationState(k, factors, conv)
            rank_guess, rows_guess = max(factors.r, 1), factors.rows
            steps.append(StepRecord(k, "lowrank", factors.r, time.perf_counter() - t0,
                                    factors.evaluations, factors.rounds))
            if callback is not None:
                callback(state)
            if rank_switch and factors.r >= ncols:
                switched = True
            continue

        if dense is None:
            dense = prob.initial(grids.points(k + 1)) if state is None else state.full()
        dense = _dense_step(dense, _level_factor(prob, grids, k), kernel, k, M)
        state = None
        steps.append(StepRecord(k, "dense", None, time.perf_counter() - t0))

    x = grids.points(1)
    F1 = dense if dense is not None else state.full()
    u = F1 * prob.factor(0, x)
    report = SolveReport(
        u_final=u, x=x, steps=steps, wall_seconds=time.perf_counter() - t_start,
        config=dict(problem=problem.name, sigma=problem.sigma, T=tg.T, n=n, a_x=grids.a_x,
                    N_x=grids.N_x, eps_c=eps_c, dense_switch_k=dense_switch_k, r0=r0,
                    r_max=r_max, time_rule=tg.rule, mode="lowrank"))
    return report


def solve_dense_reference(problem: ProblemSpec, grids: GridStack, tg: TimeGrid,
                          kernel: ConvolutionKernel,
                          memory_budget: int = DEFAULT_MEMORY_BUDGET) -> SolveReport:
    """Plain FFT iteration on the whole extended array, ``O(n^2 M log M)``."""
    _check_inputs(grids, tg, kernel)
    n, M = tg.n, grids.M
    need = (n + 1) * M * 8
    if need > memory_budget:
        raise CapacityError(f"dense reference needs {need} bytes, budget is {memory_budget}")
    prob = _Problem(problem, tg)
    t_start = time.perf_counter()
    steps = []
    a = prob.initial(grids.points(n + 1))
    for k in range(n, 0, -1):
        t0 = time.perf_counter()
        a = _dense_step(a, _level_factor(prob, grids, k), kernel, k, M)
        steps.append(StepRecord(k, "dense", None, time.perf_counter() - t0))
    x = grids.points(1)
    u = a * prob.factor(0, x)
    return SolveReport(
        u_final=u, x=x, steps=steps, wall_seconds=time.perf_counter() - t_start,
        config=dict(problem=problem.name, sigma=problem.sigma, T=tg.T, n=n, a_x=grids.a_x,
                    N_x=grids.N_x, time_rule=tg.rule, mode="dense"))


def run(problem: ProblemSpec, n: int, a_x: float = 2.0, N_x: int = 4000, *,
        method: str = "lowrank", time_rule: str = TRAPEZOID, spatial_rule: str = RECTANGLE,
        **kwargs) -> SolveReport:
    """Build the grids and kernel for ``problem`` and solve with ``n`` steps."""
    tg = build_time_grid(problem.T, n, time_rule)
    grids = build_grid_stack(a_x, N_x, n)
    kernel = build_kernel(problem.sigma, tg.dt, grids, spatial_rule)
    if method == "lowrank":
        return solve(problem, grids, tg, kernel, **kwargs)
    if method == "dense":
        return solve_dense_reference(problem, grids, tg, kernel, **kwargs)
    raise ValueError(f"unknown method {method!r}")
