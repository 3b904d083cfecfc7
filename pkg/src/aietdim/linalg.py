"""Small exact linear-algebra helpers over integers and fractions.

Matrices are tuples of tuples (rows), vectors are tuples.  Everything is
exact: entries are Python ints or fractions.Fraction.  Dimensions here are
tiny (d <= 10 in practice), so plain Gaussian elimination is adequate.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd


def identity(d: int):
    return tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d))


def elementary(d: int, i: int, j: int):
    """Identity plus a single 1 at position (i, j)."""
    return tuple(
        tuple((1 if r == c else 0) + (1 if (r, c) == (i, j) else 0) for c in range(d))
        for r in range(d)
    )


def mat_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    assert len(a[0]) == k
    return tuple(
        tuple(sum(a[i][t] * b[t][j] for t in range(k)) for j in range(m))
        for i in range(n)
    )


def mat_vec(a, v):
    return tuple(sum(row[j] * v[j] for j in range(len(v))) for row in a)


def vec_mat(v, a):
    return tuple(sum(v[i] * a[i][j] for i in range(len(v))) for j in range(len(a[0])))


def transpose(a):
    return tuple(zip(*a))


def solve(a, b):
    """Solve a @ x = b exactly; raises ValueError if a is singular."""
    n = len(a)
    m = [[Fraction(a[i][j]) for j in range(n)] + [Fraction(b[i])] for i in range(n)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            raise ValueError("singular matrix")
        m[col], m[pivot] = m[pivot], m[col]
        inv = 1 / m[col][col]
        m[col] = [x * inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return tuple(m[i][n] for i in range(n))


def rref(rows):
    """Reduced row echelon form over the rationals. Returns list of tuples."""
    m = [list(map(Fraction, row)) for row in rows]
    if not m:
        return []
    ncols = len(m[0])
    lead = 0
    for r in range(len(m)):
        if lead >= ncols:
            break
        pivot = next((i for i in range(r, len(m)) if m[i][lead] != 0), None)
        while pivot is None:
            lead += 1
            if lead >= ncols:
                return [tuple(row) for row in m if any(row)]
            pivot = next((i for i in range(r, len(m)) if m[i][lead] != 0), None)
        m[r], m[pivot] = m[pivot], m[r]
        inv = 1 / m[r][lead]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][lead] != 0:
                f = m[i][lead]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        lead += 1
    return [tuple(row) for row in m if any(row)]


def _clear_denominators(row):
    den = 1
    for x in row:
        den = den * x.denominator // gcd(den, x.denominator)
    ints = [int(x * den) for x in row]
    content = 0
    for x in ints:
        content = gcd(content, abs(x))
    if content > 1:
        ints = [x // content for x in ints]
    lead = next((x for x in ints if x != 0), 1)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(ints)


def nullspace_int(a):
    """Integer basis of the rational kernel of ``a``.

    The basis is the RREF of a spanning set, with denominators cleared,
    content removed, leading entries positive, rows sorted
    lexicographically.  This makes the output canonical.
    """
    n = len(a)
    ncols = len(a[0]) if n else 0
    echelon = rref(a)
    pivots = []
    for row in echelon:
        pivots.append(next(j for j, x in enumerate(row) if x != 0))
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for j in free:
        v = [Fraction(0)] * ncols
        v[j] = Fraction(1)
        for row, p in zip(echelon, pivots):
            v[p] = -row[j]
        basis.append(tuple(v))
    if not basis:
        return []
    reduced = rref(basis)
    rows = sorted(_clear_denominators(r) for r in reduced)
    return rows


def dot(u, v):
    return sum(x * y for x, y in zip(u, v))
