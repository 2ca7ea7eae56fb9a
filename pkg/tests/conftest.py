import numpy as np

from evosor.problems import ProblemFamily, generate


def dd_system(n, seed, **family_kwargs):
    """Strictly diagonally dominant random system (certified-convergent Jacobi)."""
    family = ProblemFamily(enforce_dd=True, **family_kwargs)
    return generate(family, n, seed)


def constant_diag_symmetric_system(n, seed, target_c):
    """Symmetric off-diagonal part with one shared diagonal value.

    With a constant diagonal the residual propagates through the same
    iteration matrix as the error, so the per-sweep residual contraction rate
    is bounded by the matrix's row-sum norm ``c`` exactly.
    """
    rng = np.random.default_rng(seed)
    off = rng.uniform(-1.0, 1.0, (n, n))
    off = np.triu(off, 1)
    off = off + off.T
    d = np.abs(off).sum(axis=1).max() / target_c
    a = off + np.eye(n) * d
    b = rng.uniform(-5.0, 5.0, n)
    from evosor.linsys import LinearSystem

    return LinearSystem(a, b)
