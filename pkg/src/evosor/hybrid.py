"""Population-based relaxed-Jacobi solver with self-adapting relaxation factors.

Each generation runs recombination (blend toward the current best candidate),
mutation (one relaxed Jacobi sweep per individual, each with its own omega),
pairwise omega adaptation, and selection (keep the best half, duplicate to
restore the population).  Adaptation comes in three modes:

* ``"tva"``  - perturbation magnitudes shrink over generations by the
  time-variant factor ``lam * ln(1 + 1/(t + lam))``, favouring coarse moves
  early and fine local tuning late;
* ``"ua"``   - uniform adaptation: the same rule with the time-variant factor
  held at 1, so perturbation magnitudes stay constant;
* ``"frozen"`` - omegas are never adapted (ablation support).

All randomness is drawn from substreams keyed on
``(seed, stream-tag, generation, index)`` so results are reproducible and
independent of any scheduling of per-individual work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .linsys import (
    JacobiOperator,
    LinearSystem,
    _check_norm,
    jacobi_sweep,
    residual_error,
)
from .solvers import CONVERGED, DIVERGED, ITERATION_LIMIT, SolveResult

ADAPTATION_MODES = ("tva", "ua", "frozen")
PAIRINGS = ("best_worst", "adjacent")

# Adapted omegas are clamped into [lo + OMEGA_MARGIN, hi - OMEGA_MARGIN],
# keeping them strictly inside the configured open interval.
OMEGA_MARGIN = 1e-6

_INIT_STREAM = 0
_ADAPT_STREAM = 1


def initial_omegas(pop_size: int, omega_lo: float, omega_hi: float) -> np.ndarray:
    """Evenly spread relaxation factors over (omega_lo, omega_hi).

    The first individual sits half a step in from the lower bound and the rest
    follow at full-step spacing, e.g. pop_size=2 on (0, 2) gives (0.5, 1.5).
    """
    step = (omega_hi - omega_lo) / pop_size
    omegas = np.empty(pop_size)
    omegas[0] = omega_lo + step / 2.0
    for i in range(1, pop_size):
        omegas[i] = omegas[i - 1] + step
    return omegas


def time_variant_factor(t: int, lam: float) -> float:
    """Decay factor ``lam * ln(1 + 1/(t + lam))`` applied to adaptation steps.

    Strictly positive, strictly decreasing in ``t``, and below 1 for every
    ``t >= 0`` once ``lam > 10``.
    """
    return lam * math.log1p(1.0 / (t + lam))


def recombine(xs: np.ndarray, errors: np.ndarray) -> np.ndarray:
    """Multiply the population by a row-stochastic blend-toward-best matrix.

    The best candidate passes through unchanged; every other row mixes
    ``0.99 * best + 0.01 * self``.  For a two-individual population the matrix
    is exactly ``[[1, 0], [0.99, 0.01]]`` when the first individual is
    strictly better, else ``[[0.01, 0.99], [0, 1]]`` (so an error tie keeps
    the second).  Omegas are untouched by recombination.
    """
    n_pop = len(xs)
    if n_pop == 2:
        best = 0 if errors[0] < errors[1] else 1
    else:
        best = int(np.argmin(errors))
    mix = np.zeros((n_pop, n_pop))
    mix[:, best] = 0.99
    for i in range(n_pop):
        if i != best:
            mix[i, i] = 0.01
    mix[best, best] = 1.0
    return mix @ xs


def mutate_population(op: JacobiOperator, xs: np.ndarray, omegas: np.ndarray, norm: str):
    """One relaxed Jacobi sweep per individual, each with its own omega.

    Returns the swept population and its recomputed errors; individuals whose
    sweep produced non-finite values get an ``inf`` error sentinel so selection
    deterministically discards them.
    """
    out = np.empty_like(xs)
    errors = np.empty(len(xs))
    for i in range(len(xs)):
        out[i] = jacobi_sweep(op, xs[i], omegas[i])
        if not np.isfinite(out[i]).all():
            errors[i] = float("inf")
        else:
            errors[i] = residual_error(op.system, out[i], norm)
    return out, errors


def _clamp_omega(value: float, omega_lo: float, omega_hi: float) -> float:
    return min(max(value, omega_lo + OMEGA_MARGIN), omega_hi - OMEGA_MARGIN)


def adapt_pair(
    err_a: float,
    omega_a: float,
    err_b: float,
    omega_b: float,
    t: int,
    rng,
    *,
    ex: float,
    ey: float,
    lam: float,
    omega_lo: float,
    omega_hi: float,
    mode: str = "tva",
):
    """Adapt one pair of relaxation factors based on which error is worse.

    The worse individual's omega moves toward the better one's:
    ``(0.5 + p_x) * (omega_worse + omega_better)`` with
    ``p_x = ex * N(0, 0.25) * T``; the better one's omega moves away toward the
    nearer bound by ``p_y * (bound - omega_better)`` with
    ``p_y = |ey * N(0, 0.25) * T|``.  ``T`` is the time-variant factor in
    ``"tva"`` mode and 1 in ``"ua"`` mode.  Exactly two Gaussian draws are
    consumed, worse first.  Both outputs are clamped strictly inside the
    bounds.  Bit-equal errors adapt nothing and consume no draws.

    Returns the adapted ``(omega_a, omega_b)`` in input order.
    """
    if mode == "frozen" or err_a == err_b:
        return omega_a, omega_b
    if err_a > err_b:
        omega_x, omega_y = omega_a, omega_b
    else:
        omega_x, omega_y = omega_b, omega_a
    g_x = rng.normal(0.0, 0.25)
    g_y = rng.normal(0.0, 0.25)
    factor = time_variant_factor(t, lam) if mode == "tva" else 1.0
    p_x = ex * g_x * factor
    p_y = abs(ey * g_y * factor)
    new_x = (0.5 + p_x) * (omega_x + omega_y)
    if omega_y > omega_x:
        new_y = omega_y + p_y * (omega_hi - omega_y)
    elif omega_y < omega_x:
        new_y = omega_y + p_y * (omega_lo - omega_y)
    else:
        new_y = omega_y
    new_x = _clamp_omega(new_x, omega_lo, omega_hi)
    new_y = _clamp_omega(new_y, omega_lo, omega_hi)
    if err_a > err_b:
        return new_x, new_y
    return new_y, new_x


def make_pairs(errors: np.ndarray, scheme: str = "best_worst"):
    """Pair individuals for adaptation: best-with-worst (default) or adjacent.

    Ordering is by (error, index) so ties are deterministic.
    """
    if scheme not in PAIRINGS:
        raise ValueError(f"pairing must be one of {PAIRINGS}, got {scheme!r}")
    order = np.argsort(errors, kind="stable")
    half = len(errors) // 2
    if scheme == "best_worst":
        return [(int(order[k]), int(order[-1 - k])) for k in range(half)]
    return [(int(order[2 * k]), int(order[2 * k + 1])) for k in range(half)]


def select_reproduce(
    xs: np.ndarray,
    errors: np.ndarray,
    omegas: np.ndarray,
    partners: np.ndarray,
):
    """Keep the best half of the offspring and duplicate each survivor.

    Survivors are ranked by (error, index).  Each survivor contributes two
    copies of its solution vector; the copies carry the adapted omegas of the
    survivor's adaptation pair, ordered by original slot index.  For a
    two-individual population this preserves both omegas in their slots while
    both copies take the winning vector.
    """
    order = np.argsort(errors, kind="stable")
    survivors = order[: len(xs) // 2]
    new_xs = np.empty_like(xs)
    new_errors = np.empty_like(errors)
    new_omegas = np.empty_like(omegas)
    for k, s in enumerate(survivors):
        p = int(partners[s])
        lo_slot, hi_slot = (int(s), p) if int(s) < p else (p, int(s))
        new_xs[2 * k] = xs[s]
        new_xs[2 * k + 1] = xs[s]
        new_errors[2 * k] = errors[s]
        new_errors[2 * k + 1] = errors[s]
        new_omegas[2 * k] = omegas[lo_slot]
        new_omegas[2 * k + 1] = omegas[hi_slot]
    return new_xs, new_errors, new_omegas


@dataclass
class GenerationTrace:
    """Per-generation record: best error, all omegas, and the decay factor."""

    generation: int
    best_error: float
    omegas: np.ndarray
    t_omega: float


def _check_evolution_params(
    pop_size, omega_lo, omega_hi, ex, ey, lam, mode, eta, max_iter,
    divergence_cap, pairing, init_low, init_high,
):
    if pop_size < 2 or pop_size % 2 != 0:
        raise ValueError("pop_size must be an even integer >= 2")
    if not omega_lo < omega_hi:
        raise ValueError("omega_lo must be below omega_hi")
    if not ex > 0 or not ey > 0:
        raise ValueError("ex and ey must be positive")
    if not lam > 10:
        raise ValueError("lam must exceed 10")
    if mode not in ADAPTATION_MODES:
        raise ValueError(f"adaptation must be one of {ADAPTATION_MODES}, got {mode!r}")
    if pairing not in PAIRINGS:
        raise ValueError(f"pairing must be one of {PAIRINGS}, got {pairing!r}")
    if not eta > 0:
        raise ValueError("eta must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if not divergence_cap > eta:
        raise ValueError("divergence_cap must exceed eta")
    if not init_low < init_high:
        raise ValueError("init_low must be below init_high")


def _resolve_seed(random_state):
    if random_state is None:
        return int(np.random.default_rng().integers(0, 2**63))
    seed = int(random_state)
    if seed < 0:
        raise ValueError("random_state must be a non-negative integer")
    return seed


def _trace_factor(generation: int, lam: float, mode: str) -> float:
    if mode == "tva":
        return time_variant_factor(generation, lam)
    if mode == "ua":
        return 1.0
    return 0.0


def evolve(
    system: LinearSystem,
    *,
    pop_size: int = 2,
    omega_lo: float = 0.0,
    omega_hi: float = 2.0,
    ex: float = 0.125,
    ey: float = 0.03125,
    lam: float = 50.0,
    adaptation: str = "tva",
    eta: float = 1e-6,
    max_iter: int = 50_000,
    norm: str = "l2",
    init_low: float = -30.0,
    init_high: float = 30.0,
    divergence_cap: float = 1e12,
    pairing: str = "best_worst",
    record_trace: bool = True,
    random_state=None,
):
    """Run the population solver; returns ``(SolveResult, traces)``.

    One generation applies recombination, one mutation sweep per individual,
    pairwise omega adaptation, and selection.  ``SolveResult.iterations``
    counts generations; the trace (when recorded) has one entry per generation
    plus the initial state, so ``iterations + 1`` rows.  Termination mirrors
    the fixed-omega solvers: best error below ``eta`` converges, best error at
    or above ``divergence_cap`` (or non-finite across the population)
    diverges, otherwise the generation limit applies.
    """
    if not isinstance(system, LinearSystem):
        raise TypeError("system must be a LinearSystem; use as_linear_system(a, b)")
    _check_norm(norm)
    _check_evolution_params(
        pop_size, omega_lo, omega_hi, ex, ey, lam, adaptation, eta, max_iter,
        divergence_cap, pairing, init_low, init_high,
    )
    seed = _resolve_seed(random_state)
    op = JacobiOperator(system)
    n = system.n

    xs = np.empty((pop_size, n))
    for i in range(pop_size):
        rng = np.random.default_rng([seed, _INIT_STREAM, i])
        xs[i] = rng.uniform(init_low, init_high, n)
    omegas = initial_omegas(pop_size, omega_lo, omega_hi)
    errors = np.array([residual_error(system, xs[i], norm) for i in range(pop_size)])

    traces: list[GenerationTrace] = []

    def record(generation):
        if record_trace:
            traces.append(
                GenerationTrace(
                    generation=generation,
                    best_error=float(errors.min()),
                    omegas=omegas.copy(),
                    t_omega=_trace_factor(generation, lam, adaptation),
                )
            )

    def result(status, generations):
        best = int(np.argmin(errors))
        return SolveResult(
            x=xs[best].copy(),
            iterations=generations,
            final_error=float(errors[best]),
            status=status,
            trace=None,
        )

    record(0)
    best_err = float(errors.min())
    if best_err < eta:
        return result(CONVERGED, 0), traces
    if not np.isfinite(best_err) or best_err >= divergence_cap:
        return result(DIVERGED, 0), traces

    partners = np.empty(pop_size, dtype=int)
    for t in range(max_iter):
        xs = recombine(xs, errors)
        xs, errors = mutate_population(op, xs, omegas, norm)
        for pair_index, (i, j) in enumerate(make_pairs(errors, pairing)):
            partners[i] = j
            partners[j] = i
            if adaptation != "frozen":
                rng = np.random.default_rng([seed, _ADAPT_STREAM, t, pair_index])
                omegas[i], omegas[j] = adapt_pair(
                    errors[i], omegas[i], errors[j], omegas[j], t, rng,
                    ex=ex, ey=ey, lam=lam,
                    omega_lo=omega_lo, omega_hi=omega_hi, mode=adaptation,
                )
        xs, errors, omegas = select_reproduce(xs, errors, omegas, partners)
        generation = t + 1
        record(generation)
        best_err = float(errors.min())
        if best_err < eta:
            return result(CONVERGED, generation), traces
        if not np.isfinite(best_err) or best_err >= divergence_cap:
            return result(DIVERGED, generation), traces
    return result(ITERATION_LIMIT, max_iter), traces


class HybridSolver(BaseEstimator):
    """Population solver adapting relaxation factors across generations.

    ``adaptation="tva"`` decays perturbation magnitudes over generations,
    ``"ua"`` keeps them constant, ``"frozen"`` disables adaptation.  After
    ``fit(A, b)`` the best candidate lands in ``x_`` with ``n_iter_``
    (generations), ``final_error_``, ``status_``, the final ``omegas_`` and the
    per-generation ``trace_``.
    """

    def __init__(
        self,
        pop_size=2,
        omega_lo=0.0,
        omega_hi=2.0,
        ex=0.125,
        ey=0.03125,
        lam=50.0,
        adaptation="tva",
        eta=1e-6,
        max_iter=50_000,
        norm="l2",
        init_low=-30.0,
        init_high=30.0,
        divergence_cap=1e12,
        pairing="best_worst",
        record_trace=True,
        random_state=None,
    ):
        self.pop_size = pop_size
        self.omega_lo = omega_lo
        self.omega_hi = omega_hi
        self.ex = ex
        self.ey = ey
        self.lam = lam
        self.adaptation = adaptation
        self.eta = eta
        self.max_iter = max_iter
        self.norm = norm
        self.init_low = init_low
        self.init_high = init_high
        self.divergence_cap = divergence_cap
        self.pairing = pairing
        self.record_trace = record_trace
        self.random_state = random_state

    def fit(self, A, b):
        A = check_array(A, dtype=np.float64)
        b = check_array(b, dtype=np.float64, ensure_2d=False).ravel()
        system = LinearSystem(A, b)
        result, traces = evolve(
            system,
            pop_size=self.pop_size,
            omega_lo=self.omega_lo,
            omega_hi=self.omega_hi,
            ex=self.ex,
            ey=self.ey,
            lam=self.lam,
            adaptation=self.adaptation,
            eta=self.eta,
            max_iter=self.max_iter,
            norm=self.norm,
            init_low=self.init_low,
            init_high=self.init_high,
            divergence_cap=self.divergence_cap,
            pairing=self.pairing,
            record_trace=self.record_trace,
            random_state=self.random_state,
        )
        self.x_ = result.x
        self.n_iter_ = result.iterations
        self.final_error_ = result.final_error
        self.status_ = result.status
        self.trace_ = traces if self.record_trace else None
        self.omegas_ = traces[-1].omegas.copy() if traces else None
        return self

    def predict(self, A=None):
        """Return the fitted solution vector (ignores ``A``; sklearn glue)."""
        check_is_fitted(self, "x_")
        return self.x_
