"""Closed-form nonnegative least squares for 1, 2 and 3 columns.

Each kernel solves ``min |G y - b|`` subject to ``y >= 0`` for a full
column rank ``G``, where the solution can be written with nested
nonnegative clamps ``[x]_+ = max(x, 0)``.  The clamps are order dependent:
the last unknown is resolved first and feeds the earlier ones, so the
evaluation order below is part of the contract, not an implementation
detail.

``nnls_recursive`` lifts any rank-k solver to rank k+1 by projecting the
problem off the final column, and ``nnls_oracle`` is a deliberately slow
exhaustive active-set check used to validate all of the above.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "NnlsSolution",
    "RankDeficiencyError",
    "nnls_rank1",
    "nnls_rank2",
    "nnls_rank3",
    "nnls_recursive",
    "nnls_oracle",
    "RANK_EPS",
]

# Relative cutoff deciding when a Gram determinant counts as zero.
RANK_EPS = 1e-12


class RankDeficiencyError(ValueError):
    """Coefficient columns are (numerically) linearly dependent."""


@dataclass
class NnlsSolution:
    """Nonnegative solution vector plus its worst KKT violation.

    ``kkt_residual`` is the max over coordinates of ``|g_j|`` where the
    entry is positive and ``max(0, -g_j)`` where it is zero, with
    ``g = G^T (G y - b)``.  It is diagnostic only.
    """

    y: np.ndarray
    kkt_residual: float


def _kkt_residual(G: np.ndarray, b: np.ndarray, y: np.ndarray) -> float:
    grad = G.T @ (G @ y - b)
    viol = np.where(y > 0.0, np.abs(grad), np.maximum(0.0, -grad))
    return float(viol.max()) if viol.size else 0.0


def _as_column_vector(g) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.ndim == 2 and g.shape[1] == 1:
        g = g[:, 0]
    if g.ndim != 1:
        raise ValueError("expected a single column")
    return g


def nnls_rank1(g, b) -> NnlsSolution:
    """Single-column case: ``y = [g.b]_+ / |g|^2``."""
    g = _as_column_vector(g)
    b = np.asarray(b, dtype=np.float64)
    if g.shape != b.shape:
        raise ValueError("g and b must have the same length")
    n2 = float(g @ g)
    if n2 <= 0.0:
        raise RankDeficiencyError("rank-1 problem with a zero column")
    y = np.array([max(float(g @ b), 0.0) / n2])
    return NnlsSolution(y=y, kkt_residual=_kkt_residual(g[:, None], b, y))


def nnls_rank2(G, b) -> NnlsSolution:
    """Two-column case.

    With Gram entries ``n1 = |g1|^2``, ``n2 = |g2|^2``, ``c = g2.g1`` and
    ``d12 = n1 n2 - c^2``::

        y2 = [ b.g2 - c [ (n2 b.g1 - b.g2 c) / d12 ]_+ ]_+ / n2
        y1 = [ b.g1 - c y2 ]_+ / n1
    """
    G = np.asarray(G, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if G.ndim != 2 or G.shape[1] != 2 or b.shape != (G.shape[0],):
        raise ValueError("G must be m x 2 and b of length m")
    n1 = float(G[:, 0] @ G[:, 0])
    n2 = float(G[:, 1] @ G[:, 1])
    c = float(G[:, 1] @ G[:, 0])
    d12 = n1 * n2 - c * c
    if d12 <= RANK_EPS * n1 * n2:
        raise RankDeficiencyError("rank-2 problem with dependent columns")
    t1 = float(b @ G[:, 0])
    t2 = float(b @ G[:, 1])
    inner = max((n2 * t1 - t2 * c) / d12, 0.0)
    y2 = max(t2 - c * inner, 0.0) / n2
    y1 = max(t1 - c * y2, 0.0) / n1
    y = np.array([y1, y2])
    return NnlsSolution(y=y, kkt_residual=_kkt_residual(G, b, y))


def _det3(a11, a12, a13, a21, a22, a23, a31, a32, a33) -> float:
    # Cofactor expansion along the first row; branch free on purpose.
    return (
        a11 * (a22 * a33 - a23 * a32)
        - a12 * (a21 * a33 - a23 * a31)
        + a13 * (a21 * a32 - a22 * a31)
    )


def nnls_rank3(G, b) -> NnlsSolution:
    """Three-column case, resolved in the order y3, y2, y1.

    The intermediate ``p`` needs the ratio of two 3x3 determinants: the
    Gram matrix of the columns, and the same matrix with the first row
    replaced by ``(b.g1, b.g2, b.g3)``.
    """
    G = np.asarray(G, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if G.ndim != 2 or G.shape[1] != 3 or b.shape != (G.shape[0],):
        raise ValueError("G must be m x 3 and b of length m")
    g1, g2, g3 = G[:, 0], G[:, 1], G[:, 2]
    n1, n2, n3 = float(g1 @ g1), float(g2 @ g2), float(g3 @ g3)
    c12 = float(g2 @ g1)
    c13 = float(g3 @ g1)
    c23 = float(g3 @ g2)
    det_gram = _det3(n1, c12, c13, c12, n2, c23, c13, c23, n3)
    if det_gram <= RANK_EPS * n1 * n2 * n3:
        raise RankDeficiencyError("rank-3 problem with dependent columns")
    d12 = n1 * n2 - c12 * c12
    d13 = n1 * n3 - c13 * c13
    d23 = n2 * n3 - c23 * c23
    t1, t2, t3 = float(b @ g1), float(b @ g2), float(b @ g3)

    det_mixed = _det3(t1, t2, t3, c12, n2, c23, c13, c23, n3)
    ratio = max(det_mixed / det_gram, 0.0)
    a = c12 * n3 - c23 * c13
    p = max((t2 * n3 - t3 * c23) / d23 - (a / d23) * ratio, 0.0)
    p_tilde = max((t1 * n3 - t3 * c13) / d13 - (a / d13) * p, 0.0)
    y3 = max(t3 - c23 * p - c13 * p_tilde, 0.0) / n3
    inner = max(((t1 * n2 - t2 * c12) - (c13 * n2 - c23 * c12) * y3) / d12, 0.0)
    y2 = max(t2 - c23 * y3 - c12 * inner, 0.0) / n2
    y1 = max(t1 - c13 * y3 - c12 * y2, 0.0) / n1
    y = np.array([y1, y2, y3])
    return NnlsSolution(y=y, kkt_residual=_kkt_residual(G, b, y))


def nnls_recursive(
    G, b, base_solver: Callable[[np.ndarray, np.ndarray], NnlsSolution]
) -> NnlsSolution:
    """Rank-(k+1) solution built from two calls to a rank-k solver.

    Split ``G = [Gk | g]`` on its last column.  The last unknown is::

        y_last = [ g . (b - Gk s(Gt, bt)) ]_+ / |g|^2

    where ``Gt`` and ``bt`` are ``Gk`` and ``b`` with their components
    along ``g`` projected out, and ``s`` denotes the base solver.  The
    remaining unknowns then solve the rank-k problem against
    ``b - g y_last``.
    """
    G = np.asarray(G, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if G.ndim != 2 or G.shape[1] < 2 or b.shape != (G.shape[0],):
        raise ValueError("G must be m x (k+1) with k >= 1 and b of length m")
    gramG = G.T @ G
    if np.linalg.det(gramG) <= RANK_EPS * float(np.prod(np.diag(gramG))):
        raise RankDeficiencyError("recursive problem with dependent columns")
    head_cols = G[:, :-1]
    g = G[:, -1]
    n2 = float(g @ g)
    proj = np.outer(g, g @ head_cols) / n2
    head_proj = head_cols - proj
    b_proj = b - g * (float(g @ b) / n2)
    shifted = base_solver(head_proj, b_proj).y
    y_last = max(float(g @ (b - head_cols @ shifted)), 0.0) / n2
    y_head = base_solver(head_cols, b - g * y_last).y
    y = np.concatenate([y_head, [y_last]])
    return NnlsSolution(y=y, kkt_residual=_kkt_residual(G, b, y))


def _accepted_candidates(G, b, dual_tol=1e-9):
    """All active sets passing primal and dual feasibility.

    Yields ``(residual_norm, solution_norm, subset, y)`` tuples.  For each
    subset the unconstrained problem restricted to those columns is solved
    through its normal equations; the complement is pinned at zero.
    """
    G = np.asarray(G, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, k = G.shape
    gram_full = G.T @ G
    gtb = G.T @ b
    for mask in range(1 << k):
        subset = tuple(j for j in range(k) if mask >> j & 1)
        y = np.zeros(k)
        if subset:
            idx = list(subset)
            try:
                y[idx] = np.linalg.solve(gram_full[np.ix_(idx, idx)], gtb[idx])
            except np.linalg.LinAlgError:
                continue
            if np.any(y[idx] < 0.0):
                continue
        grad = gram_full @ y - gtb
        off = [j for j in range(k) if j not in subset]
        if off and np.any(grad[off] < -dual_tol):
            continue
        resid = float(np.linalg.norm(G @ y - b))
        yield resid, float(np.linalg.norm(y)), subset, y


def nnls_oracle(G, b) -> NnlsSolution:
    """Exhaustive reference solver enumerating all 2^k active sets.

    Among accepted candidates the smallest residual wins; exact ties fall
    back to the smallest solution norm and then the lexicographically
    smallest subset, so the oracle is deterministic even on degenerate
    fuzz inputs.  Intended for k <= 12.
    """
    G = np.asarray(G, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if G.ndim != 2 or b.shape != (G.shape[0],):
        raise ValueError("G must be m x k and b of length m")
    if G.shape[1] > 12:
        raise ValueError("oracle enumeration limited to k <= 12")
    best = None
    for cand in _accepted_candidates(G, b):
        if best is None or cand[:3] < best[:3]:
            best = cand
    if best is None:
        raise RankDeficiencyError("no KKT-feasible active set found")
    y = best[3]
    return NnlsSolution(y=y, kkt_residual=_kkt_residual(G, b, y))
