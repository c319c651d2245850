"""Monte Carlo estimate of the time-discretised path integral at a single point."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mesh import TimeGrid
from .problems import ProblemSpec

DEFAULT_CHUNK = 1 << 15


@dataclass(frozen=True)
class McConfig:
    K: int
    seed: int = 0
    x0: float = 0.0
    antithetic: bool = False

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")


@dataclass(frozen=True)
class _Moments:
    """Shifted power sums of one shard: ``count``, ``sum(y-c)``, ``sum((y-c)^2)``."""

    count: int
    s1: float
    s2: float


def _path_values(problem: ProblemSpec, tg: TimeGrid, x0: float, z: np.ndarray) -> np.ndarray:
    """Integrand for standard normal increments ``z`` of shape ``(n, paths)``."""
    scale = math.sqrt(2.0 * problem.sigma * tg.dt)
    n = tg.n
    xi = np.full(z.shape[1], float(x0))
    expo = tg.w[0] * np.asarray(problem.V(xi, tg.tau(n)), dtype=float) * tg.dt
    for i in range(1, n + 1):
        xi = xi + scale * z[i - 1]
        if tg.w[i] != 0.0:
            expo = expo + tg.w[i] * np.asarray(problem.V(xi, tg.tau(n - i)), dtype=float) * tg.dt
    with np.errstate(over="ignore", invalid="ignore"):
        return np.asarray(problem.f(xi), dtype=float) * np.exp(-expo)


def _shard_moments(problem, tg, cfg: McConfig, count: int, seq: np.random.SeedSequence,
                   chunk: int, shift: float | None) -> tuple[_Moments, float]:
    rng = np.random.default_rng(seq)
    s1, s2 = [], []
    done = 0
    while done < count:
        m = min(chunk, count - done)
        z = rng.standard_normal((tg.n, m))
        y = _path_values(problem, tg, cfg.x0, z)
        if cfg.antithetic:
            y = 0.5 * (y + _path_values(problem, tg, cfg.x0, -z))
        if not np.all(np.isfinite(y)):
            raise ArithmeticError("non-finite path weight; the potential may be unbounded below")
        if shift is None:
            shift = float(y[0])
        d = y - shift
        s1.append(float(np.sum(d)))
        s2.append(float(np.dot(d, d)))
        done += m
    return _Moments(count, math.fsum(s1), math.fsum(s2)), shift


def mc_estimate(problem: ProblemSpec, tg: TimeGrid, cfg: McConfig, *, shards: int = 1,
                chunk: int = DEFAULT_CHUNK) -> tuple[float, float]:
    """Sample mean and standard error of ``f(xi(n)) prod_i exp(-w_i V(xi(i), tau_{n-i}) dt)``.

    Paths start at ``cfg.x0`` and take ``n`` independent ``N(0, 2 sigma dt)``
    increments. Each shard draws from its own child of ``SeedSequence(seed)``;
    the result depends on ``shards`` but not on the order shards finish in.
    With ``antithetic`` every sample is the average over a path and its
    mirror image, so ``K`` counts such pairs.
    """
    if shards < 1:
        raise ValueError("shards must be >= 1")
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    K = int(cfg.K)
    shards = min(shards, K)
    counts = [K // shards + (s < K % shards) for s in range(shards)]
    seqs = np.random.SeedSequence(cfg.seed).spawn(shards)
    shift = None
    parts = []
    for count, seq in zip(counts, seqs):
        mom, shift = _shard_moments(problem, tg, cfg, count, seq, chunk, shift)
        parts.append(mom)
    s1 = math.fsum(p.s1 for p in parts)
    s2 = math.fsum(p.s2 for p in parts)
    mean_d = s1 / K
    estimate = shift + mean_d
    if K == 1:
        return estimate, math.inf
    var = max(0.0, (s2 - s1 * mean_d) / (K - 1))
    return estimate, math.sqrt(var / K)
