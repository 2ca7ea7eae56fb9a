"""Fixed relaxation-factor iterative solvers, the classical comparison baselines."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .linsys import (
    JacobiOperator,
    LinearSystem,
    _check_norm,
    as_linear_system,
    gauss_seidel_sweep,
    jacobi_sweep,
    residual_error,
)

CONVERGED = "converged"
DIVERGED = "diverged"
ITERATION_LIMIT = "iteration_limit"


@dataclass
class SolveResult:
    """Outcome of one solver run.

    ``trace``, when recorded, holds ``(iteration, error)`` pairs starting at
    iteration 0 (the error of the start vector), so it has ``iterations + 1``
    entries.
    """

    x: np.ndarray
    iterations: int
    final_error: float
    status: str
    trace: Optional[list[tuple[int, float]]] = None


def _check_solve_params(eta: float, max_iter: int, divergence_cap: float) -> None:
    if not eta > 0:
        raise ValueError("eta must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if not divergence_cap > eta:
        raise ValueError("divergence_cap must exceed eta")


def _initial_vector(n, x0, init_low, init_high, random_state):
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (n,):
            raise ValueError(f"x0 has shape {x0.shape}, expected ({n},)")
        return np.array(x0)
    rng = np.random.default_rng(random_state)
    return rng.uniform(init_low, init_high, n)


def _iterate(op, x0, omega, sweep, eta, max_iter, norm, divergence_cap, record_trace):
    x = np.array(x0, dtype=float)
    err = residual_error(op.system, x, norm)
    trace = [(0, err)] if record_trace else None
    if err < eta:
        return SolveResult(x, 0, err, CONVERGED, trace)
    if not np.isfinite(err) or err >= divergence_cap:
        return SolveResult(x, 0, err, DIVERGED, trace)
    for k in range(1, max_iter + 1):
        x = sweep(op, x, omega)
        err = residual_error(op.system, x, norm)
        if record_trace:
            trace.append((k, err))
        if err < eta:
            return SolveResult(x, k, err, CONVERGED, trace)
        if not np.isfinite(err) or err >= divergence_cap:
            return SolveResult(x, k, err, DIVERGED, trace)
    return SolveResult(x, max_iter, err, ITERATION_LIMIT, trace)


def relaxation_solve(
    system,
    x0=None,
    *,
    omega: float = 1.0,
    sweep: Callable = jacobi_sweep,
    eta: float = 1e-6,
    max_iter: int = 50_000,
    norm: str = "l2",
    divergence_cap: float = 1e12,
    record_trace: bool = False,
    init_low: float = -30.0,
    init_high: float = 30.0,
    random_state=None,
) -> SolveResult:
    """Iterate a fixed-omega sweep until the residual drops below ``eta``.

    One iteration is one sweep followed by one residual evaluation.  The run
    stops as converged (residual < eta), diverged (residual at or above
    ``divergence_cap``, or non-finite), or at the iteration limit.  When ``x0``
    is omitted the start vector is drawn uniformly from
    ``(init_low, init_high)`` using ``random_state``.
    """
    if not isinstance(system, LinearSystem):
        raise TypeError("system must be a LinearSystem; use as_linear_system(a, b)")
    _check_norm(norm)
    _check_solve_params(eta, max_iter, divergence_cap)
    if not np.isfinite(omega):
        raise ValueError("omega must be finite")
    x0 = _initial_vector(system.n, x0, init_low, init_high, random_state)
    op = JacobiOperator(system)
    return _iterate(op, x0, omega, sweep, eta, max_iter, norm, divergence_cap, record_trace)


def jacobi_solve(system, x0=None, **kwargs) -> SolveResult:
    """Relaxed Jacobi (simultaneous-update) solve; see :func:`relaxation_solve`."""
    return relaxation_solve(system, x0, sweep=jacobi_sweep, **kwargs)


def gauss_seidel_solve(system, x0=None, **kwargs) -> SolveResult:
    """Relaxed Gauss-Seidel (SOR) solve; see :func:`relaxation_solve`."""
    return relaxation_solve(system, x0, sweep=gauss_seidel_sweep, **kwargs)


class _RelaxationSolverBase(BaseEstimator):
    """Shared fit logic for the fixed-omega estimators."""

    _sweep = None

    def __init__(
        self,
        omega=1.0,
        eta=1e-6,
        max_iter=50_000,
        norm="l2",
        divergence_cap=1e12,
        record_trace=False,
        init_low=-30.0,
        init_high=30.0,
        random_state=None,
    ):
        self.omega = omega
        self.eta = eta
        self.max_iter = max_iter
        self.norm = norm
        self.divergence_cap = divergence_cap
        self.record_trace = record_trace
        self.init_low = init_low
        self.init_high = init_high
        self.random_state = random_state

    def fit(self, A, b, x0=None):
        """Solve ``A x = b``; the solution lands in ``x_``.

        Also sets ``n_iter_``, ``final_error_``, ``status_`` and (when
        ``record_trace``) ``trace_``.
        """
        A = check_array(A, dtype=np.float64)
        b = check_array(b, dtype=np.float64, ensure_2d=False).ravel()
        system = LinearSystem(A, b)
        result = relaxation_solve(
            system,
            x0,
            omega=self.omega,
            sweep=type(self)._sweep,
            eta=self.eta,
            max_iter=self.max_iter,
            norm=self.norm,
            divergence_cap=self.divergence_cap,
            record_trace=self.record_trace,
            init_low=self.init_low,
            init_high=self.init_high,
            random_state=self.random_state,
        )
        self.x_ = result.x
        self.n_iter_ = result.iterations
        self.final_error_ = result.final_error
        self.status_ = result.status
        self.trace_ = result.trace
        return self

    def predict(self, A=None):
        """Return the fitted solution vector (ignores ``A``; sklearn glue)."""
        check_is_fitted(self, "x_")
        return self.x_


class JacobiSolver(_RelaxationSolverBase):
    """Relaxed Jacobi solver with a fixed relaxation factor ``omega``."""

    _sweep = staticmethod(jacobi_sweep)


class GaussSeidelSolver(_RelaxationSolverBase):
    """Relaxed Gauss-Seidel (SOR) solver with a fixed relaxation factor."""

    _sweep = staticmethod(gauss_seidel_sweep)
