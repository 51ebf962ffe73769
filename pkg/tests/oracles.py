"""Slow reference implementations used only by the tests."""

from __future__ import annotations


def _count_below(g, lam) -> int:
    """Eigenvalues of symmetric ``g`` below ``lam``, by Sylvester inertia of an LDL' factorization."""
    n = len(g)
    a = [[g[i][j] - (lam if i == j else 0.0) for j in range(n)] for i in range(n)]
    neg = 0
    tiny = 1e-300
    for k in range(n):
        piv = a[k][k]
        if piv == 0.0:
            piv = tiny
        if piv < 0:
            neg += 1
        for i in range(k + 1, n):
            m = a[i][k] / piv
            for j in range(k + 1, n):
                a[i][j] -= m * a[k][j]
    return neg


def gram_top_eigenvalue(m, rel_tol: float = 1e-15) -> float:
    """Largest eigenvalue of M'M by bisection on the inertia count."""
    rows, cols = len(m), len(m[0])
    g = [[sum(m[r][i] * m[r][j] for r in range(rows)) for j in range(cols)] for i in range(cols)]
    hi = max(sum(abs(x) for x in row) for row in g)  # Gershgorin
    lo = 0.0
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _count_below(g, mid) == cols:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
