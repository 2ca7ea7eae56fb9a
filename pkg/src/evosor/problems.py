"""Seeded random test problems and the text problem-file format."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linsys import LinearSystem

FORMAT_VERSION = "linsys 1"


class ProblemFormatError(ValueError):
    """Problem file could not be parsed; the message names the line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


@dataclass(frozen=True)
class ProblemFamily:
    """Uniform sampling ranges for diagonal, off-diagonal and rhs entries.

    Defaults are the dense benchmark family: diagonal in (-70, 70),
    off-diagonal in (0, 7), rhs in (0, 70).  ``enforce_dd`` rescales every
    diagonal to dominate its row strictly, which guarantees convergent Jacobi
    iteration; raw draws from the default ranges do not.  Diagonal entries
    smaller in magnitude than ``min_diag`` are resampled so the inverse
    diagonal stays well defined.
    """

    diag_low: float = -70.0
    diag_high: float = 70.0
    offdiag_low: float = 0.0
    offdiag_high: float = 7.0
    rhs_low: float = 0.0
    rhs_high: float = 70.0
    enforce_dd: bool = False
    min_diag: float = 1e-3

    def __post_init__(self):
        for name in ("diag", "offdiag", "rhs"):
            low = getattr(self, f"{name}_low")
            high = getattr(self, f"{name}_high")
            if not low < high:
                raise ValueError(f"{name} range must satisfy low < high, got ({low}, {high})")
        if not self.min_diag > 0:
            raise ValueError("min_diag must be positive")
        if -self.min_diag <= self.diag_low and self.diag_high <= self.min_diag:
            raise ValueError(
                "diagonal range lies entirely inside the excluded zero band"
            )


PRESETS = {"p2": ProblemFamily()}


def generate(family: ProblemFamily, n: int, seed: int) -> LinearSystem:
    """Sample a dense system from the family; deterministic in (family, n, seed).

    Draw order: the full matrix from the off-diagonal range, the diagonal
    (resampling entries below ``min_diag`` in magnitude), the rhs, and finally
    the dominance slack when ``enforce_dd`` is set.  Dominance rescaling sets
    each diagonal to ``sign(a_ii) * (s_i + u_i)`` where ``s_i`` is the row's
    off-diagonal absolute sum and ``u_i`` is uniform in ``(0.1, 1.0) * s_i``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    a = rng.uniform(family.offdiag_low, family.offdiag_high, (n, n))
    diag = rng.uniform(family.diag_low, family.diag_high, n)
    while True:
        mask = np.abs(diag) < family.min_diag
        if not mask.any():
            break
        diag[mask] = rng.uniform(family.diag_low, family.diag_high, int(mask.sum()))
    b = rng.uniform(family.rhs_low, family.rhs_high, n)
    np.fill_diagonal(a, diag)
    if family.enforce_dd:
        offsum = np.abs(a).sum(axis=1) - np.abs(diag)
        slack = rng.uniform(0.1, 1.0, n) * offsum
        magnitude = np.maximum(offsum + slack, family.min_diag)
        np.fill_diagonal(a, np.where(offsum > 0, np.sign(diag) * magnitude, diag))
    return LinearSystem(a, b)


def _format_row(values) -> str:
    return " ".join(f"{v:.17g}" for v in values)


def save_problem(system: LinearSystem, path, comments=()) -> None:
    """Write a system as text; round-trips through :func:`load_problem` bit-exactly.

    Layout: optional ``#`` comment lines, the format version, the dimension,
    one line per matrix row, then the rhs line.  Entries use 17 significant
    digits, enough to reproduce every float64 exactly.
    """
    lines = [f"# {c}" for c in comments]
    lines.append(FORMAT_VERSION)
    lines.append(str(system.n))
    lines.extend(_format_row(row) for row in system.a)
    lines.append(_format_row(system.b))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _content_lines(path):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, stripped


def _parse_values(text: str, lineno: int, expected: int) -> list[float]:
    tokens = text.split()
    if len(tokens) != expected:
        raise ProblemFormatError(
            f"expected {expected} values, found {len(tokens)}", lineno
        )
    values = []
    for tok in tokens:
        try:
            values.append(float(tok))
        except ValueError:
            raise ProblemFormatError(f"non-numeric token {tok!r}", lineno) from None
    return values


def load_problem(path) -> LinearSystem:
    """Read a problem file written by :func:`save_problem`."""
    lines = _content_lines(path)
    lineno = 0
    try:
        lineno, version = next(lines)
    except StopIteration:
        raise ProblemFormatError("empty problem file", lineno + 1) from None
    if version != FORMAT_VERSION:
        raise ProblemFormatError(
            f"unsupported format version {version!r}, expected {FORMAT_VERSION!r}",
            lineno,
        )
    try:
        lineno, n_text = next(lines)
    except StopIteration:
        raise ProblemFormatError("missing dimension line", lineno) from None
    try:
        n = int(n_text)
    except ValueError:
        raise ProblemFormatError(f"non-integer dimension {n_text!r}", lineno) from None
    if n < 1:
        raise ProblemFormatError(f"dimension must be positive, got {n}", lineno)
    rows = []
    for _ in range(n):
        try:
            lineno, text = next(lines)
        except StopIteration:
            raise ProblemFormatError(
                f"matrix ended after {len(rows)} of {n} rows", lineno
            ) from None
        rows.append(_parse_values(text, lineno, n))
    try:
        lineno, text = next(lines)
    except StopIteration:
        raise ProblemFormatError("missing right-hand-side line", lineno) from None
    b = _parse_values(text, lineno, n)
    try:
        lineno, text = next(lines)
    except StopIteration:
        return LinearSystem(np.array(rows), np.array(b))
    raise ProblemFormatError("unexpected trailing content", lineno)
