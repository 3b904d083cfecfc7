"""Shared constructions for the test suite.

Everything here is deterministic given the caller's RNG; RNGs are seeded
with strings or ints only (stable across processes, unlike tuples that
contain strings).
"""

from fractions import Fraction

from mpmath import mp, mpf

from aietdim.affine import AIET
from aietdim.perms import canonical_rotation_perm


def rand_lam(rng, bits, d=3):
    """Lebesgue-like random rational length vector at dyadic resolution."""
    den = 1 << bits
    while True:
        cuts = sorted(rng.randrange(1, den) for _ in range(d - 1))
        pts = [0] + cuts + [den]
        lam = [Fraction(b - a, den) for a, b in zip(pts, pts[1:])]
        if all(x > 0 for x in lam):
            return lam


def omega_ecs(lam, u):
    """Exact rational log-slope vector orthogonal to lam with a nonzero
    component in the kernel of the translation structure (d = 3 rotation
    alphabet); scaled by u."""
    kv = (Fraction(0), Fraction(1), Fraction(-1))
    c = sum(k * l for k, l in zip(kv, lam)) / sum(l * l for l in lam)
    u = Fraction(u)
    return tuple(u * (k - c * l) for k, l in zip(kv, lam))


def omega_es(lam, u):
    """Exact rational log-slope vector in the one-dimensional contracting
    direction for the d = 3 rotation alphabet, sup-normalized then scaled
    by u."""
    v = (-(lam[1] + lam[2]), lam[0], lam[0])
    m = max(abs(x) for x in v)
    u = Fraction(u)
    return tuple(u * x / m for x in v)


def make_tiled_aiet(rng, d, bits=256, scale=0.05, perm=None) -> AIET:
    """Random affine exchange: random lengths and small random log-slopes,
    with an exact two-coordinate length adjustment restoring the image
    tiling constraint."""
    if perm is None:
        perm = canonical_rotation_perm(d)
    while True:
        with mp.workprec(bits):
            raw = [mpf(rng.randrange(1, 1 << 30)) for _ in range(d)]
            total = sum(raw)
            ell = [x / total for x in raw]
            omega = [mpf(scale) * (2 * mpf(rng.random()) - 1) for _ in range(d)]
            expw = [mp.e ** w for w in omega]
            residual = sum(l * e for l, e in zip(ell, expw)) - 1
            i_hi = max(range(d), key=lambda i: expw[i])
            i_lo = min(range(d), key=lambda i: expw[i])
            if expw[i_hi] == expw[i_lo]:
                continue
            shift = -residual / (expw[i_hi] - expw[i_lo])
            ell[i_hi] += shift
            ell[i_lo] -= shift
            if any(x <= 0 for x in ell):
                continue
            return AIET(ell, omega, perm, precision_bits=bits)


def subtractive_euclid(a: int, b: int):
    """Block sizes of the subtractive Euclid algorithm on (a, b), stopping
    at the first tie.  Independent oracle for d = 2 induction over the
    rotation datum AB / BA.

    ``a`` is the first length (its letter closes the bottom row), ``b`` the
    second (closing the top row); a run in which ``a`` wins is therefore of
    bottom type.
    """
    zs, kinds = [], []
    while a != b:
        if a > b:
            q, r = divmod(a, b)
            if r == 0:
                q, r = q - 1, b
            zs.append(q)
            kinds.append("bottom")
            a = r
        else:
            q, r = divmod(b, a)
            if r == 0:
                q, r = q - 1, a
            zs.append(q)
            kinds.append("top")
            b = r
    return zs, kinds


def fibonacci(n: int):
    """[F_1 .. F_n] = [1, 1, 2, 3, 5, ...]."""
    out = [1, 1]
    while len(out) < n:
        out.append(out[-1] + out[-2])
    return out[:n]
