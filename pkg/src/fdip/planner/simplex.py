"""Dense-tableau primal simplex with Bland's anti-cycling rule.

Solves ``max c.x  s.t.  A x <= b, x >= 0`` for ``b >= 0``, which is the only
shape the relaxation produces (the slack basis is feasible, so no phase one).
"""

from __future__ import annotations

import numpy as np

EPS = 1e-11


class UnboundedLP(ArithmeticError):
    pass


def simplex_max(c, A, b, max_iter: int = 1_000_000) -> tuple[float, np.ndarray]:
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float)
    n = c.size
    m = b.size
    if m == 0:
        if np.any(c > EPS):
            raise UnboundedLP("no constraints and a positive objective")
        return 0.0, np.zeros(n)
    if A.shape != (m, n):
        raise ValueError(f"A has shape {A.shape}, expected {(m, n)}")
    if np.any(b < -EPS):
        raise ValueError("simplex_max needs b >= 0")

    T = np.zeros((m + 1, n + m + 1))
    T[1:, :n] = A
    T[1:, n:n + m] = np.eye(m)
    T[1:, -1] = np.maximum(b, 0.0)
    T[0, :n] = -c
    basis = list(range(n, n + m))

    for _ in range(max_iter):
        obj = T[0, :-1]
        entering = np.flatnonzero(obj < -EPS)
        if entering.size == 0:
            break
        j = int(entering[0])
        col = T[1:, j]
        pos = np.flatnonzero(col > EPS)
        if pos.size == 0:
            raise UnboundedLP(f"column {j} is unbounded")
        ratios = T[1:, -1][pos] / col[pos]
        best = ratios.min()
        ties = pos[ratios <= best + EPS * max(1.0, abs(best))]
        r = int(min(ties, key=lambda i: basis[i]))
        prow = r + 1
        T[prow] /= T[prow, j]
        colj = T[:, j].copy()
        colj[prow] = 0.0
        rows = np.flatnonzero(colj)  # the tableau stays sparse; skip untouched rows
        T[rows] -= np.outer(colj[rows], T[prow])
        basis[r] = j
    else:
        raise RuntimeError("simplex iteration limit reached")

    x = np.zeros(n + m)
    x[basis] = T[1:, -1]
    return float(T[0, -1]), x[:n]
