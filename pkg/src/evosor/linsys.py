"""Dense linear systems and the relaxed-iteration kernels built on them.

A :class:`LinearSystem` holds ``A x = b`` with a nonzero diagonal.  The update
kernels are the relaxed Jacobi sweep (simultaneous update, the mutation step of
the population solvers) and the relaxed Gauss-Seidel sweep (in-place update,
the sequential baseline).  Both are written in component form

    x'_i = x_i + (omega / a_ii) * (b_i - sum_j a_ij x_j)

so the n x n iteration matrix ``H = I - omega * D^-1 A`` is never materialised
for the sweeps; the desk-scale oracles (``spectral_radius``,
``operator_norm_inf``) do materialise it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORMS = ("l2", "linf")


class SingularSystemError(ValueError):
    """Elimination hit a numerically zero pivot."""


class SpectralEstimationError(RuntimeError):
    """Power iteration did not settle within its budget.

    Carries ``best_estimate``, the estimate with the smallest relative
    residual seen across all restarts.
    """

    def __init__(self, message: str, best_estimate: float):
        super().__init__(message)
        self.best_estimate = best_estimate


def _check_norm(norm: str) -> str:
    if norm not in NORMS:
        raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")
    return norm


@dataclass(frozen=True)
class LinearSystem:
    """Immutable square dense system ``a @ x = b``.

    Entries must be finite and every diagonal entry nonzero (the sweeps divide
    by ``a_ii``).  Arrays are copied and marked read-only so a system can be
    shared freely across threads.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        b = np.array(self.b, dtype=float).ravel()
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"coefficient matrix must be square, got shape {a.shape}")
        if a.shape[0] == 0:
            raise ValueError("empty system")
        if b.shape != (a.shape[0],):
            raise ValueError(
                f"right-hand side has length {b.shape[0]}, expected {a.shape[0]}"
            )
        if not np.isfinite(a).all() or not np.isfinite(b).all():
            raise ValueError("system entries must be finite")
        diag = np.diag(a)
        if np.any(diag == 0.0):
            bad = int(np.flatnonzero(diag == 0.0)[0])
            raise ValueError(f"zero diagonal entry at row {bad}")
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.shape[0]


def as_linear_system(a, b=None) -> LinearSystem:
    """Coerce ``(a, b)`` (or pass through an existing system) to a LinearSystem."""
    if isinstance(a, LinearSystem):
        if b is not None:
            raise ValueError("b must be None when passing a LinearSystem")
        return a
    return LinearSystem(np.asarray(a), np.asarray(b))


class JacobiOperator:
    """A system plus its precomputed inverse diagonal ``1 / a_ii``."""

    def __init__(self, system: LinearSystem):
        self.system = system
        self.inv_diag = 1.0 / np.diag(system.a)
        self.inv_diag.flags.writeable = False


def _check_vector(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (n,):
        raise ValueError(f"vector has shape {x.shape}, expected ({n},)")
    return x


def residual_error(system: LinearSystem, x, norm: str = "l2") -> float:
    """Residual norm ``||A x - b||``, the fitness of a candidate solution.

    Returns ``inf`` when the residual overflows or ``x`` carries non-finite
    entries, which downstream divergence checks rely on.
    """
    _check_norm(norm)
    x = _check_vector(x, system.n)
    with np.errstate(over="ignore", invalid="ignore"):
        r = system.a @ x - system.b
        if norm == "l2":
            val = float(np.linalg.norm(r))
        else:
            val = float(np.abs(r).max())
    if np.isnan(val):
        return float("inf")
    return val


def jacobi_sweep(op: JacobiOperator, x, omega: float) -> np.ndarray:
    """One relaxed Jacobi step; every component reads the old vector.

    Equivalent to ``H x + V`` with ``H = I - omega D^-1 A`` and
    ``V = omega D^-1 b``.  The input is not modified, so sweeps on distinct
    vectors can run concurrently against a shared system.
    """
    x = _check_vector(x, op.system.n)
    with np.errstate(over="ignore", invalid="ignore"):
        return x + omega * op.inv_diag * (op.system.b - op.system.a @ x)


def gauss_seidel_sweep(op: JacobiOperator, x, omega: float) -> np.ndarray:
    """One relaxed Gauss-Seidel (SOR) step; rows i use updated values for j < i."""
    x = _check_vector(x, op.system.n)
    a = op.system.a
    b = op.system.b
    inv_diag = op.inv_diag
    out = x.copy()
    for i in range(op.system.n):
        # a[i] @ out reads updated entries for j < i and old ones for j >= i.
        out[i] = out[i] + omega * inv_diag[i] * (b[i] - a[i] @ out)
    return out


def direct_solve(system: LinearSystem) -> np.ndarray:
    """Ground-truth solve by Gaussian elimination with partial pivoting.

    Raises :class:`SingularSystemError` when a pivot is numerically zero at
    desk scale.
    """
    a = np.array(system.a)
    b = np.array(system.b)
    n = system.n
    tiny = np.finfo(float).eps * n * max(1.0, float(np.abs(a).max()))
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) <= tiny:
            raise SingularSystemError(
                f"numerically singular matrix (pivot {a[p, k]!r} in column {k})"
            )
        if p != k:
            a[[k, p]] = a[[p, k]]
            b[[k, p]] = b[[p, k]]
        factors = a[k + 1 :, k] / a[k, k]
        a[k + 1 :, k:] -= factors[:, None] * a[k, k:]
        b[k + 1 :] -= factors * b[k]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - a[i, i + 1 :] @ x[i + 1 :]) / a[i, i]
    return x


def iteration_matrix(system: LinearSystem, omega: float) -> np.ndarray:
    """Materialise ``H = I - omega * D^-1 A`` (desk-scale oracle helper)."""
    diag = np.diag(system.a)
    h = -omega * (system.a / diag[:, None])
    h[np.diag_indices(system.n)] += 1.0
    return h


def operator_norm_inf(system: LinearSystem, omega: float) -> float:
    """Max absolute row sum of the iteration matrix; < 1 certifies contraction."""
    h = iteration_matrix(system, omega)
    return float(np.abs(h).sum(axis=1).max())


def _arnoldi_cycle(h, start, m, breakdown_tol):
    """One m-step Arnoldi pass from ``start``.

    Returns (ritz values, ritz vectors in the Krylov basis, beta, V) where
    ``beta`` is the final subdiagonal entry; ``beta * |last component|`` bounds
    the residual of each Ritz pair.  A subdiagonal below ``breakdown_tol``
    means the Krylov space closed, so the Ritz values are the roots of the
    minimal polynomial along ``start`` and the estimate is exact.
    """
    n = h.shape[0]
    v = np.zeros((n, m + 1))
    t = np.zeros((m + 1, m))
    v[:, 0] = start / np.linalg.norm(start)
    size = m
    closed = False
    for j in range(m):
        w = h @ v[:, j]
        for i in range(j + 1):
            t[i, j] = v[:, i] @ w
            w -= t[i, j] * v[:, i]
        beta = float(np.linalg.norm(w))
        t[j + 1, j] = beta
        if beta <= breakdown_tol:
            size = j + 1
            closed = True
            break
        v[:, j + 1] = w / beta
    square = t[:size, :size]
    values, vectors = np.linalg.eig(square)
    beta = 0.0 if closed else float(t[size, size - 1])
    return values, vectors, beta, v[:, :size]


def spectral_radius(
    system: LinearSystem,
    omega: float,
    tol: float = 1e-9,
    max_iter: int = 10_000,
    restarts: int = 6,
    seed: int = 0,
    krylov_dim: int | None = None,
) -> float:
    """Spectral radius of the iteration matrix, by restarted power iteration.

    Each cycle runs ``krylov_dim`` power steps, kept orthonormal (Arnoldi),
    and reads eigenvalue estimates off the projected matrix; the cycle
    restarts from the dominant estimate's vector, or from a fresh random
    vector on stagnation.  Plain one-vector power iteration stalls whenever
    the dominant modulus is shared (conjugate pairs, clustered spectra near
    ``omega = 0``); the projected extraction handles those, and for
    ``n <= krylov_dim`` the space closes and the result is exact.  Raises
    :class:`SpectralEstimationError` carrying the best estimate if the
    matvec budget is exhausted, which can happen for large systems with many
    near-tied dominant eigenvalues.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    h = iteration_matrix(system, omega)
    n = system.n
    m = min(n, krylov_dim or 24)
    hscale = float(np.linalg.norm(h))
    if hscale == 0.0:
        return 0.0
    breakdown_tol = 1e-13 * hscale
    rng = np.random.default_rng(seed)
    best_estimate = 0.0
    best_resid = float("inf")
    matvecs = 0
    for _ in range(restarts):
        start = rng.normal(size=n)
        while matvecs < max_iter:
            values, vectors, beta, basis = _arnoldi_cycle(h, start, m, breakdown_tol)
            matvecs += m
            top = int(np.argmax(np.abs(values)))
            estimate = float(abs(values[top]))
            residual = beta * float(abs(vectors[-1, top]))
            if residual <= tol * max(estimate, tol):
                return estimate
            if residual / max(estimate, 1e-300) < best_resid:
                best_resid = residual / max(estimate, 1e-300)
                best_estimate = estimate
            restart = basis @ np.real(vectors[:, top])
            scale = float(np.linalg.norm(restart))
            if scale < 1e-12:
                break
            start = restart / scale
    raise SpectralEstimationError(
        f"power iteration did not settle within {max_iter} matvecs over "
        f"{restarts} restarts (best relative residual {best_resid:.3e})",
        best_estimate=best_estimate,
    )
