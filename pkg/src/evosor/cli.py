"""Command-line interface: generate | solve | bench | spectra."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .bench import (
    ALGORITHMS,
    CLASSICAL,
    ExperimentConfig,
    classical_trace_lines,
    hybrid_trace_lines,
    run_experiment,
    _fmt,
)
from .hybrid import evolve
from .linsys import SpectralEstimationError, operator_norm_inf, spectral_radius
from .problems import PRESETS, ProblemFamily, generate, load_problem, save_problem
from .solvers import gauss_seidel_solve, jacobi_solve

DEFAULTS = {
    "preset": "p2",
    "algorithm": "jbtva",
    "omega": 1.0,
    "eta": 1e-6,
    "max_iters": 50_000,
    "pop": 2,
    "omega_lo": 0.0,
    "omega_hi": 2.0,
    "ex": 0.125,
    "ey": 0.03125,
    "lam": 50.0,
    "pairing": "best_worst",
    "norm": "l2",
    "seed": 0,
    "divergence_cap": 1e12,
    "init_low": -30.0,
    "init_high": 30.0,
    "trials": 10,
    "trial_seed_base": 0,
    "problem_seed": 0,
    "jobs": 1,
    "enforce_dd": False,
    "timings": False,
}

# Keys accepted in a bench config file, with their parsers.  "lambda" is the
# file-side spelling of the lam parameter.
_CONFIG_KEYS = {
    "problem": str,
    "preset": str,
    "n": int,
    "problem_seed": int,
    "enforce_dd": bool,
    "min_diag": float,
    "diag_low": float,
    "diag_high": float,
    "offdiag_low": float,
    "offdiag_high": float,
    "rhs_low": float,
    "rhs_high": float,
    "algorithm": str,
    "omega": float,
    "eta": float,
    "max_iters": int,
    "pop": int,
    "omega_lo": float,
    "omega_hi": float,
    "ex": float,
    "ey": float,
    "lambda": float,
    "pairing": str,
    "norm": str,
    "divergence_cap": float,
    "init_low": float,
    "init_high": float,
    "trials": int,
    "trial_seed_base": int,
    "jobs": int,
    "out": str,
    "trace_dir": str,
    "timings": bool,
}

_HYBRID_ONLY = ("pop", "omega_lo", "omega_hi", "ex", "ey", "lam", "pairing")


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_config_file(path) -> dict:
    """Flat ``key = value`` config; '#' lines are comments; CLI flags override."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: expected 'key = value' (line {lineno})")
            key, _, text = line.partition("=")
            key = key.strip()
            text = text.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}: unknown key {key!r} (line {lineno})")
            kind = _CONFIG_KEYS[key]
            try:
                value = _parse_bool(text) if kind is bool else kind(text)
            except ValueError:
                raise ValueError(
                    f"{path}: bad value {text!r} for {key!r} (line {lineno})"
                ) from None
            values["lam" if key == "lambda" else key] = value
    return values


def _effective(ns, file_values: dict, key: str):
    cli = getattr(ns, key, None)
    if cli is not None:
        return cli
    if key in file_values:
        return file_values[key]
    return DEFAULTS.get(key)


def _add_family_flags(p):
    p.add_argument("--preset", choices=sorted(PRESETS), help="named range preset")
    for name in ("diag-low", "diag-high", "offdiag-low", "offdiag-high", "rhs-low", "rhs-high"):
        p.add_argument(f"--{name}", type=float, help=f"{name.replace('-', ' ')} sampling bound")
    p.add_argument("--min-diag", type=float, help="minimum |a_ii|; smaller draws are resampled")
    p.add_argument(
        "--enforce-dd",
        action="store_true",
        default=None,
        help="rescale diagonals for strict diagonal dominance",
    )


def _build_family(values: dict) -> ProblemFamily:
    base = PRESETS[values.get("preset") or "p2"]
    overrides = {}
    for field in (
        "diag_low", "diag_high", "offdiag_low", "offdiag_high",
        "rhs_low", "rhs_high", "min_diag",
    ):
        if values.get(field) is not None:
            overrides[field] = values[field]
    if values.get("enforce_dd"):
        overrides["enforce_dd"] = True
    return replace(base, **overrides) if overrides else base


def _add_solver_flags(p):
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--omega", type=float, help="relaxation factor (classical algorithms only)")
    p.add_argument("--eta", type=float, help="threshold error declaring convergence")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--pop", type=int, help="population size (hybrid algorithms)")
    p.add_argument("--omega-lo", dest="omega_lo", type=float)
    p.add_argument("--omega-hi", dest="omega_hi", type=float)
    p.add_argument("--ex", type=float, help="perturbation amplitude, worse pair member")
    p.add_argument("--ey", type=float, help="perturbation amplitude, better pair member")
    p.add_argument("--lambda", dest="lam", type=float, help="time-variant decay scale")
    p.add_argument("--pairing", choices=("best_worst", "adjacent"))
    p.add_argument("--divergence-cap", dest="divergence_cap", type=float)
    p.add_argument("--init-low", dest="init_low", type=float)
    p.add_argument("--init-high", dest="init_high", type=float)
    p.add_argument("--norm", choices=("l2", "linf"))


def _check_algorithm_flags(parser, ns, algorithm):
    if algorithm in CLASSICAL:
        for key in _HYBRID_ONLY:
            if getattr(ns, key, None) is not None:
                flag = "--lambda" if key == "lam" else "--" + key.replace("_", "-")
                parser.error(f"{flag} is only valid with --algorithm jbtva/jbua")
    else:
        if getattr(ns, "omega", None) is not None:
            parser.error("--omega is only valid with --algorithm jacobi/gauss_seidel")


def _write_lines(path, lines):
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_generate(ns, parser) -> int:
    values = {k: getattr(ns, k, None) for k in _CONFIG_KEYS if k != "lambda"}
    family = _build_family(values)
    system = generate(family, ns.n, ns.seed)
    comments = [
        "evosor problem file",
        f"n={ns.n} seed={ns.seed}",
        f"diag=({family.diag_low},{family.diag_high}) "
        f"offdiag=({family.offdiag_low},{family.offdiag_high}) "
        f"rhs=({family.rhs_low},{family.rhs_high}) "
        f"enforce_dd={str(family.enforce_dd).lower()}",
    ]
    save_problem(system, ns.out, comments)
    print(f"wrote {ns.out} (n={system.n})")
    return 0


def cmd_solve(ns, parser) -> int:
    system = load_problem(ns.problem)
    algorithm = ns.algorithm or DEFAULTS["algorithm"]
    _check_algorithm_flags(parser, ns, algorithm)
    get = lambda key: _effective(ns, {}, key)
    want_trace = ns.trace is not None
    if algorithm in CLASSICAL:
        solve = jacobi_solve if algorithm == "jacobi" else gauss_seidel_solve
        result = solve(
            system,
            omega=get("omega"),
            eta=get("eta"),
            max_iter=get("max_iters"),
            norm=get("norm"),
            divergence_cap=get("divergence_cap"),
            record_trace=want_trace,
            init_low=get("init_low"),
            init_high=get("init_high"),
            random_state=get("seed"),
        )
        if want_trace:
            _write_lines(ns.trace, classical_trace_lines(result, get("omega")))
    else:
        result, traces = evolve(
            system,
            pop_size=get("pop"),
            omega_lo=get("omega_lo"),
            omega_hi=get("omega_hi"),
            ex=get("ex"),
            ey=get("ey"),
            lam=get("lam"),
            adaptation="tva" if algorithm == "jbtva" else "ua",
            eta=get("eta"),
            max_iter=get("max_iters"),
            norm=get("norm"),
            init_low=get("init_low"),
            init_high=get("init_high"),
            divergence_cap=get("divergence_cap"),
            pairing=get("pairing"),
            record_trace=want_trace,
            random_state=get("seed"),
        )
        if want_trace:
            _write_lines(ns.trace, hybrid_trace_lines(traces))
    print(
        f"status={result.status} iterations={result.iterations} "
        f"final_error={_fmt(result.final_error)}"
    )
    return 0


def cmd_bench(ns, parser) -> int:
    file_values = parse_config_file(ns.config) if ns.config else {}
    get = lambda key: _effective(ns, file_values, key)
    algorithm = get("algorithm")
    _check_algorithm_flags(parser, ns, algorithm)

    problem_path = get("problem")
    if problem_path:
        system = load_problem(problem_path)
        meta = {"problem": str(problem_path)}
    else:
        n = get("n")
        if n is None:
            parser.error("bench needs either a problem file or --preset/--n/--problem-seed")
        family = _build_family({k: get(k) for k in _CONFIG_KEYS if k != "lambda"})
        problem_seed = get("problem_seed")
        system = generate(family, n, problem_seed)
        meta = {
            "preset": get("preset") or "p2",
            "n": n,
            "problem_seed": problem_seed,
            "enforce_dd": family.enforce_dd,
            "diag_low": family.diag_low,
            "diag_high": family.diag_high,
            "offdiag_low": family.offdiag_low,
            "offdiag_high": family.offdiag_high,
            "rhs_low": family.rhs_low,
            "rhs_high": family.rhs_high,
        }

    config = ExperimentConfig(
        algorithm=algorithm,
        trials=get("trials"),
        trial_seed_base=get("trial_seed_base"),
        eta=get("eta"),
        max_iter=get("max_iters"),
        norm=get("norm"),
        divergence_cap=get("divergence_cap"),
        init_low=get("init_low"),
        init_high=get("init_high"),
        omega=get("omega"),
        pop_size=get("pop"),
        omega_lo=get("omega_lo"),
        omega_hi=get("omega_hi"),
        ex=get("ex"),
        ey=get("ey"),
        lam=get("lam"),
        pairing=get("pairing"),
    )
    trace_dir = get("trace_dir")
    report, traces = run_experiment(
        system,
        config,
        jobs=get("jobs"),
        timings=bool(get("timings")),
        record_traces=trace_dir is not None,
        problem_meta=meta,
    )
    payload = json.dumps(report, indent=2) + "\n"
    out = get("out")
    if out:
        Path(out).write_text(payload)
    else:
        sys.stdout.write(payload)
    if trace_dir is not None:
        directory = Path(trace_dir)
        directory.mkdir(parents=True, exist_ok=True)
        for i, lines in enumerate(traces):
            _write_lines(directory / f"trial_{i:03d}.csv", lines)
    return 0


def _spectra_grid(ns, parser):
    if ns.omegas:
        try:
            grid = [float(tok) for tok in ns.omegas.split(",") if tok.strip()]
        except ValueError:
            parser.error(f"--omegas must be a comma-separated float list, got {ns.omegas!r}")
        if not grid:
            parser.error("--omegas produced an empty grid")
        return grid
    points = ns.points if ns.points is not None else 40
    lo = ns.omega_min if ns.omega_min is not None else 0.05
    hi = ns.omega_max if ns.omega_max is not None else 1.95
    if points < 1 or not lo < hi:
        parser.error("need --points >= 1 and --omega-min < --omega-max")
    if points == 1:
        return [lo]
    step = (hi - lo) / (points - 1)
    return [lo + k * step for k in range(points)]


def cmd_spectra(ns, parser) -> int:
    system = load_problem(ns.problem)
    if system.n > 500:
        parser.error(f"spectra oracle is dense-only (n <= 500), got n={system.n}")
    grid = _spectra_grid(ns, parser)
    seed = ns.seed if ns.seed is not None else DEFAULTS["seed"]
    max_iters = ns.max_iters if ns.max_iters is not None else 10_000
    tol = ns.tol if ns.tol is not None else 1e-10

    def one(omega):
        norm_inf = operator_norm_inf(system, omega)
        try:
            rho = spectral_radius(system, omega, tol=tol, max_iter=max_iters, seed=seed)
            status = "ok"
        except SpectralEstimationError as exc:
            rho = exc.best_estimate
            status = "estimate_failed"
        return f"{_fmt(omega)},{_fmt(rho)},{_fmt(norm_inf)},{status}"

    jobs = ns.jobs if ns.jobs is not None else 1
    if jobs <= 1:
        rows = [one(w) for w in grid]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, grid))
    lines = ["omega,rho,norm_inf,status"] + rows
    if ns.out:
        _write_lines(ns.out, lines)
    else:
        sys.stdout.write("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evosor",
        description="Relaxed Jacobi/Gauss-Seidel solvers with evolutionary "
        "relaxation-factor adaptation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a seeded random problem file")
    _add_family_flags(p_gen)
    p_gen.add_argument("--n", type=int, required=True, help="system dimension")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", required=True, help="output problem file")
    p_gen.set_defaults(handler=cmd_generate)

    p_solve = sub.add_parser("solve", help="run one solver on a problem file")
    p_solve.add_argument("problem", help="problem file path")
    _add_solver_flags(p_solve)
    p_solve.add_argument("--seed", type=int, help="start-vector / evolution seed")
    p_solve.add_argument("--trace", help="write the convergence trace CSV here")
    p_solve.set_defaults(handler=cmd_solve)

    p_bench = sub.add_parser(
        "bench", help="run repeated seeded trials and report aggregates"
    )
    p_bench.add_argument("config", nargs="?", help="flat key=value config file")
    p_bench.add_argument("--problem", help="problem file path")
    _add_family_flags(p_bench)
    p_bench.add_argument("--n", type=int, help="dimension for an inline-generated problem")
    p_bench.add_argument("--problem-seed", dest="problem_seed", type=int)
    _add_solver_flags(p_bench)
    p_bench.add_argument("--trials", type=int)
    p_bench.add_argument("--trial-seed-base", dest="trial_seed_base", type=int)
    p_bench.add_argument("--jobs", type=int, help="concurrent trials")
    p_bench.add_argument("--out", help="report JSON path (default: stdout)")
    p_bench.add_argument("--trace-dir", dest="trace_dir", help="write per-trial trace CSVs here")
    p_bench.add_argument(
        "--timings",
        action="store_true",
        default=None,
        help="include per-trial wall-clock (makes reports nondeterministic)",
    )
    p_bench.set_defaults(handler=cmd_bench)

    p_spec = sub.add_parser(
        "spectra", help="spectral radius and row-sum norm over an omega grid"
    )
    p_spec.add_argument("problem", help="problem file path")
    p_spec.add_argument("--omegas", help="explicit comma-separated omega grid")
    p_spec.add_argument("--omega-min", dest="omega_min", type=float)
    p_spec.add_argument("--omega-max", dest="omega_max", type=float)
    p_spec.add_argument("--points", type=int)
    p_spec.add_argument("--tol", type=float, help="power-iteration tolerance")
    p_spec.add_argument("--max-iters", dest="max_iters", type=int)
    p_spec.add_argument("--seed", type=int, help="power-iteration start seed")
    p_spec.add_argument("--jobs", type=int)
    p_spec.add_argument("--out", help="CSV path (default: stdout)")
    p_spec.set_defaults(handler=cmd_spectra)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.handler(ns, parser)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
