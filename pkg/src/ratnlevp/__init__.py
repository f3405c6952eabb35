"""Nonlinear eigenvalue problems through contour-based rational approximation.

A split-form problem T(z) = -B0 + z A0 + sum_j f_j(z) A_j is replaced by a
rational surrogate whose poles are quadrature nodes on a contour; the
surrogate is linearized implicitly and solved by shift-invert methods.
"""
import os as _os

# RATNLEVP_THREADS caps BLAS threads; it must be read before numpy loads
_threads = _os.environ.get("RATNLEVP_THREADS")
if _threads and _threads.isdigit() and int(_threads) > 0:
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .errors import *  # noqa: E402,F401,F403
from .contour import (Circle, Ellipse, Rectangle, RationalApprox, approx_error,  # noqa: E402
                      build_rational_approx, gauss_legendre, quadrature_rule, trapezoid_rule)
from .functions import ScalarFunction, exp, expm1, parse_descriptor, poly, recip  # noqa: E402
from .nlevp import (SplitProblem, Surrogate, build_surrogate, evaluate_surrogate,  # noqa: E402
                    evaluate_T, residual_norm, scaled_residual_sum)
from .linop import (BlockVector, apply_A, apply_M, apply_shift_invert, factor_shifted,  # noqa: E402
                    lift_eigvec, materialize, schur_matrix)
from .solvers import (EigenPair, EigenReport, SolveConfig, solve, solve_dense_linearization,  # noqa: E402
                      solve_full_arnoldi, solve_full_subspace, solve_reduced_subspace)
from .baseline import BeynConfig, beyn_solve  # noqa: E402
from .analysis import (HaloLabel, classify_halo, condition_number, det_identity_check,  # noqa: E402
                       left_eigvec, prop1_bound_check)
from .gallery import (load_problem, make_delay, make_exact_fem_linearization,  # noqa: E402
                      make_fem_string, make_hadeler, make_problem, make_quadratic_halo,
                      save_problem)

__version__ = "0.1.0"
