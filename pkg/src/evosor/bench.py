"""Repeated seeded solver trials with aggregate reporting.

Each trial reruns the solver on the same problem instance with seed
``trial_seed_base + i``, varying the start vectors and the adaptation
randomness but never the problem.  Trials are self-contained, so they may run
concurrently; records and traces are assembled in trial order, which keeps
reports byte-identical whatever the worker count.  Wall-clock timings are
inherently nondeterministic and are therefore only included on request.
"""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .hybrid import evolve
from .linsys import LinearSystem
from .solvers import CONVERGED, gauss_seidel_solve, jacobi_solve

ALGORITHMS = ("jacobi", "gauss_seidel", "jbua", "jbtva")

CLASSICAL = ("jacobi", "gauss_seidel")
HYBRID_MODES = {"jbtva": "tva", "jbua": "ua"}


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: an algorithm, its parameters, and the trial protocol."""

    algorithm: str
    trials: int = 10
    trial_seed_base: int = 0
    eta: float = 1e-6
    max_iter: int = 50_000
    norm: str = "l2"
    divergence_cap: float = 1e12
    init_low: float = -30.0
    init_high: float = 30.0
    omega: float = 1.0
    pop_size: int = 2
    omega_lo: float = 0.0
    omega_hi: float = 2.0
    ex: float = 0.125
    ey: float = 0.03125
    lam: float = 50.0
    pairing: str = "best_worst"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")

    def echo(self) -> dict:
        """Config section of the report: shared keys plus the relevant solver keys."""
        out = {
            "algorithm": self.algorithm,
            "trials": self.trials,
            "trial_seed_base": self.trial_seed_base,
            "eta": self.eta,
            "max_iters": self.max_iter,
            "norm": self.norm,
            "divergence_cap": self.divergence_cap,
            "init_low": self.init_low,
            "init_high": self.init_high,
        }
        if self.algorithm in CLASSICAL:
            out["omega"] = self.omega
        else:
            out.update(
                pop=self.pop_size,
                omega_lo=self.omega_lo,
                omega_hi=self.omega_hi,
                ex=self.ex,
                ey=self.ey,
                lam=self.lam,
                pairing=self.pairing,
            )
        return out


def _fmt(value) -> str:
    return repr(float(value))


def classical_trace_lines(result, omega) -> list[str]:
    lines = ["iteration,error,omega"]
    for k, err in result.trace or []:
        lines.append(f"{k},{_fmt(err)},{_fmt(omega)}")
    return lines


def hybrid_trace_lines(traces) -> list[str]:
    pop = len(traces[0].omegas) if traces else 0
    header = ",".join(
        ["generation", "best_error"]
        + [f"omega_{i + 1}" for i in range(pop)]
        + ["t_omega"]
    )
    lines = [header]
    for rec in traces:
        fields = [str(rec.generation), _fmt(rec.best_error)]
        fields.extend(_fmt(w) for w in rec.omegas)
        fields.append(_fmt(rec.t_omega))
        lines.append(",".join(fields))
    return lines


def run_trial(system: LinearSystem, config: ExperimentConfig, seed: int, want_trace: bool):
    """One seeded solve; returns the trial record and optional trace CSV lines."""
    if config.algorithm in CLASSICAL:
        solve = jacobi_solve if config.algorithm == "jacobi" else gauss_seidel_solve
        result = solve(
            system,
            omega=config.omega,
            eta=config.eta,
            max_iter=config.max_iter,
            norm=config.norm,
            divergence_cap=config.divergence_cap,
            record_trace=want_trace,
            init_low=config.init_low,
            init_high=config.init_high,
            random_state=seed,
        )
        trace_lines = classical_trace_lines(result, config.omega) if want_trace else None
    else:
        result, traces = evolve(
            system,
            pop_size=config.pop_size,
            omega_lo=config.omega_lo,
            omega_hi=config.omega_hi,
            ex=config.ex,
            ey=config.ey,
            lam=config.lam,
            adaptation=HYBRID_MODES[config.algorithm],
            eta=config.eta,
            max_iter=config.max_iter,
            norm=config.norm,
            init_low=config.init_low,
            init_high=config.init_high,
            divergence_cap=config.divergence_cap,
            pairing=config.pairing,
            record_trace=want_trace,
            random_state=seed,
        )
        trace_lines = hybrid_trace_lines(traces) if want_trace else None
    record = {
        "status": result.status,
        "iterations": result.iterations,
        "final_error": result.final_error,
    }
    return record, trace_lines


def aggregate(records: list[dict]) -> dict:
    """Summary statistics over converged trials plus the convergence fraction."""
    iterations = [r["iterations"] for r in records if r["status"] == CONVERGED]
    out = {
        "converged_trials": len(iterations),
        "convergence_fraction": len(iterations) / len(records),
    }
    if iterations:
        out.update(
            iterations_mean=sum(iterations) / len(iterations),
            iterations_median=statistics.median(iterations),
            iterations_min=min(iterations),
            iterations_max=max(iterations),
        )
    else:
        out.update(
            iterations_mean=None,
            iterations_median=None,
            iterations_min=None,
            iterations_max=None,
        )
    return out


def run_experiment(
    system: LinearSystem,
    config: ExperimentConfig,
    *,
    jobs: int = 1,
    timings: bool = False,
    record_traces: bool = False,
    problem_meta: dict | None = None,
):
    """Run every trial, deterministically ordered; returns (report, traces).

    A failing trial aborts the experiment with a RuntimeError naming the
    trial index.
    """

    def one(index: int):
        seed = config.trial_seed_base + index
        start = time.perf_counter()
        record, trace_lines = run_trial(system, config, seed, record_traces)
        elapsed = time.perf_counter() - start
        row = {"trial": index, "seed": seed, **record}
        if timings:
            row["wall_clock_sec"] = elapsed
        return row, trace_lines

    outcomes = []
    if jobs <= 1:
        for i in range(config.trials):
            try:
                outcomes.append(one(i))
            except Exception as exc:
                raise RuntimeError(f"trial {i} failed: {exc}") from exc
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(one, i) for i in range(config.trials)]
            for i, fut in enumerate(futures):
                try:
                    outcomes.append(fut.result())
                except Exception as exc:
                    raise RuntimeError(f"trial {i} failed: {exc}") from exc
    rows = [row for row, _ in outcomes]
    traces = [trace for _, trace in outcomes]
    echo = dict(problem_meta or {})
    echo.update(config.echo())
    report = {"config": echo, "trials": rows, "aggregates": aggregate(rows)}
    return report, traces
