"""Benchmark problems for ``u_t = sigma*u_xx - V(x,t)*u``, ``u(x,0) = f(x)``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .mesh import TimeGrid, gaussian_density


@dataclass(frozen=True)
class ProblemSpec:
    """Potential ``V(x, t)`` (bounded below), initial density ``f(x) >= 0``.

    Both callables take numpy arrays and broadcast. ``exact`` is the closed-form
    solution ``u(x, t)`` of the continuous problem when one is known.
    """

    V: Callable
    f: Callable
    sigma: float
    T: float
    name: str = "custom"
    exact: Optional[Callable] = field(default=None, compare=False)
    params: dict = field(default_factory=dict, compare=False)

    def with_horizon(self, T: float) -> "ProblemSpec":
        return ProblemSpec(self.V, self.f, self.sigma, T, self.name, self.exact, self.params)


def harmonic_problem(sigma: float = 0.25, T: float = 10.0, beta: float = 1.0) -> ProblemSpec:
    """``f = p(beta, x)``, ``V = x^2/(t+1)``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")

    def V(x, t):
        return np.square(x) / (np.asarray(t) + 1.0)

    def f(x):
        return gaussian_density(beta, x)

    return ProblemSpec(V, f, sigma, T, "harmonic", params={"beta": beta})


@dataclass(frozen=True)
class OscillatorRecurrence:
    """Gaussian parameters of the discrete harmonic-oscillator iterates.

    ``beta_seq[k]`` is ``beta_k`` for ``k = 0..n`` and ``gamma_seq[k]`` is
    ``gamma_k`` for ``k = 1..n`` (``gamma_seq[0]`` is unused and set to nan).
    ``Gamma[k]`` is ``prod_{j=k..n} sqrt(beta_j/gamma_j)``.
    """

    beta_seq: np.ndarray
    gamma_seq: np.ndarray
    Gamma: np.ndarray
    lam: float


def oscillator_recurrence(tg: TimeGrid, sigma: float, beta: float) -> OscillatorRecurrence:
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    n, dt, w = tg.n, tg.dt, tg.w
    lam = 1.0 / (4.0 * sigma * dt)
    b = np.empty(n + 1)
    g = np.full(n + 1, np.nan)
    G = np.ones(n + 2)
    b[n] = beta
    for k in range(n, 0, -1):
        g[k] = b[k] + w[k] * dt / (1.0 + (n - k) * dt)
        b[k - 1] = lam * g[k] / (lam + g[k])
        G[k] = G[k + 1] * np.sqrt(b[k] / g[k])
    return OscillatorRecurrence(beta_seq=b, gamma_seq=g, Gamma=G[:n + 1], lam=lam)


def oscillator_exact(x, tg: TimeGrid, sigma: float, beta: float = 1.0) -> np.ndarray:
    """Exact value of the n-step discretised harmonic-oscillator solution at time T."""
    rec = oscillator_recurrence(tg, sigma, beta)
    x = np.asarray(x, dtype=float)
    b0 = rec.beta_seq[0]
    psi = rec.Gamma[1] * gaussian_density(b0, x)
    return psi * np.exp(-tg.w[0] * np.square(x) / (tg.T + 1.0) * tg.dt)


def cauchy_exact(x, t):
    """``u_c(x, t) = (t+1) / (pi*(x^2+1))``."""
    return (np.asarray(t) + 1.0) / (np.pi * (np.square(x) + 1.0))


def cauchy_problem(sigma: float = 0.5, T: float = 1.0) -> ProblemSpec:
    def V(x, t):
        x2 = np.square(x)
        return -1.0 / (np.asarray(t) + 1.0) + 2.0 * sigma * (3.0 * x2 - 1.0) / np.square(x2 + 1.0)

    def f(x):
        return 1.0 / (np.pi * (np.square(x) + 1.0))

    return ProblemSpec(V, f, sigma, T, "cauchy", exact=cauchy_exact)


def impurity_problem(sigma: float = 0.25, T: float = 20.0, a: float = 0.5,
                     beta: float = 0.5) -> ProblemSpec:
    """Non-periodic potential with an impurity; ``V`` does not depend on time."""

    def V(x, t=0.0):
        s = np.asarray(x) / a + 1.0
        s2 = s * s
        s4 = s2 * s2
        v = a + np.square(np.sin(np.pi * s)) - 1.0 / (1.0 + s4 * s4)
        return np.broadcast_to(v, np.broadcast_shapes(np.shape(v), np.shape(t))).copy() \
            if np.ndim(t) else v

    def f(x):
        return gaussian_density(beta, np.asarray(x) - a)

    return ProblemSpec(V, f, sigma, T, "impurity", params={"a": a, "beta": beta})


PROBLEMS = {
    "harmonic": harmonic_problem,
    "cauchy": cauchy_problem,
    "impurity": impurity_problem,
}


def get_problem(name: str, **kwargs) -> ProblemSpec:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None
    return factory(**kwargs)
