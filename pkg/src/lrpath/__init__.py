"""Low-rank path-integral solver for ``u_t = sigma*u_xx - V(x,t)*u`` on the line."""

from .analysis import (ConvergenceTable, UndefinedOrderError, convergence_table,
                       hermite_coefficients, hermite_functions, hermite_rank_study,
                       relative_error, richardson, richardson_error, runge_order)
from .convolution import (BasisConvolutions, HankelSpec, basis_convolutions, convolve_full,
                          hankel_matvec)
from .cross import (DegeneracyError, LazyMatrix, LowRankFactors, cross_approximate,
                    maxvol_indices, zeta, zeta_rank)
from .mesh import (RECTANGLE, TRAPEZOID, CapacityError, ConvolutionKernel, GridStack,
                   TimeGrid, build_grid_stack, build_kernel, build_time_grid)
from .monte_carlo import McConfig, mc_estimate
from .problems import (PROBLEMS, ProblemSpec, cauchy_exact, cauchy_problem, get_problem,
                       harmonic_problem, impurity_problem, oscillator_exact)
from .solver import (CrossNotConvergedError, DataError, IterationState, SolveReport,
                     eval_f_k, run, solve, solve_dense_reference)

__version__ = "0.1.0"
