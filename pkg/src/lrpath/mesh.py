"""Time grid, nested spatial meshes and the Gaussian convolution kernel.

Level-k meshes are never stored: the point ``x^(k)_i = -k*a_x + i*h_x``
(``0 <= i < k*M``) is produced on demand by :meth:`GridStack.points`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TRAPEZOID = "trapezoid"
RECTANGLE = "rectangle"
RULES = (TRAPEZOID, RECTANGLE)

# refuse meshes that could not be indexed by a signed 64-bit integer
_MAX_POINTS = 2**62


class CapacityError(MemoryError):
    """Raised when a requested mesh or array exceeds the allowed size."""


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n: int
    dt: float
    w: np.ndarray
    rule: str = TRAPEZOID

    def tau(self, k):
        """Time node ``k*dt``."""
        return k * self.dt


def build_time_grid(T: float, n: int, rule: str = TRAPEZOID) -> TimeGrid:
    """Uniform time grid on ``[0, T]`` with ``n`` steps and quadrature weights.

    The trapezoid rule gives ``w = (1/2, 1, ..., 1, 1/2)``. The rectangle rule
    gives ``w_i = 1`` except ``w_n = 0``.
    """
    if not T > 0:
        raise ValueError(f"T must be positive, got {T}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    n = int(n)
    if rule not in RULES:
        raise ValueError(f"unknown time quadrature rule {rule!r}")
    w = np.ones(n + 1)
    if rule == TRAPEZOID:
        w[0] = w[-1] = 0.5
    else:
        w[-1] = 0.0
    w.setflags(write=False)
    return TimeGrid(T=float(T), n=n, dt=float(T) / n, w=w, rule=rule)


@dataclass(frozen=True)
class GridStack:
    """Family of nested uniform meshes on ``[-k*a_x, k*a_x)``.

    ``M = 2*N_x`` points per unit level and spacing ``h_x = a_x/N_x``.
    """

    a_x: float
    N_x: int
    n: int

    @property
    def h_x(self) -> float:
        return self.a_x / self.N_x

    @property
    def M(self) -> int:
        return 2 * self.N_x

    def size(self, k: int) -> int:
        """Number of points ``k*M`` of the level-k mesh."""
        return k * self.M

    def points(self, k: int, idx=None) -> np.ndarray:
        """Coordinates of the level-k mesh, all of them or at indices ``idx``."""
        if idx is None:
            idx = np.arange(self.size(k))
        idx = np.asarray(idx)
        return -k * self.a_x + idx * self.h_x

    def xi(self) -> np.ndarray:
        """Integration nodes ``xi_j = -a_x + j*h_x``, ``0 <= j < M``."""
        return self.points(1)

    def domain(self, k: int) -> tuple[float, float]:
        return (-k * self.a_x, k * self.a_x)


def build_grid_stack(a_x: float, N_x: int, n: int) -> GridStack:
    if not a_x > 0:
        raise ValueError(f"a_x must be positive, got {a_x}")
    if int(N_x) != N_x or N_x < 1:
        raise ValueError(f"N_x must be a positive integer, got {N_x}")
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    # the first iteration reads level n+1
    if (int(n) + 1) * 2 * int(N_x) > _MAX_POINTS:
        raise CapacityError(f"level-{n + 1} mesh with M={2 * N_x} is not addressable")
    return GridStack(a_x=float(a_x), N_x=int(N_x), n=int(n))


@dataclass(frozen=True)
class ConvolutionKernel:
    lam: float
    p: np.ndarray
    mu: np.ndarray
    p_rev: np.ndarray = field(repr=False)

    @property
    def M(self) -> int:
        return self.p.size


def gaussian_density(lam, x):
    """``p(lam, x) = sqrt(lam/pi) * exp(-lam*x^2)``."""
    return np.sqrt(lam / np.pi) * np.exp(-lam * np.square(x))


def build_kernel(sigma: float, dt: float, grid: GridStack,
                 spatial_rule: str = RECTANGLE) -> ConvolutionKernel:
    """Weighted Gaussian samples ``p_j = mu_j * p(lam, xi_j)``, ``lam = 1/(4*sigma*dt)``.

    With the rectangle rule every ``mu_j = h_x``. The trapezoid option halves the
    weight at both ends of ``[-a_x, a_x - h_x]``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if spatial_rule not in RULES:
        raise ValueError(f"unknown spatial quadrature rule {spatial_rule!r}")
    lam = 1.0 / (4.0 * sigma * dt)
    mu = np.full(grid.M, grid.h_x)
    if spatial_rule == TRAPEZOID and grid.M > 1:
        mu[0] *= 0.5
        mu[-1] *= 0.5
    p = mu * gaussian_density(lam, grid.xi())
    for arr in (p, mu):
        arr.setflags(write=False)
    p_rev = p[::-1].copy()
    p_rev.setflags(write=False)
    return ConvolutionKernel(lam=lam, p=p, mu=mu, p_rev=p_rev)
