"""Circle homeomorphisms: continued fractions, PL maps, dynamical partitions.

Numerics in this module use mpmath arbitrary-precision floats; every object
records the working precision it was built with.  The continued-fraction
convention has no integer part: alpha = 1/(a1 + 1/(a2 + ...)) for
0 < alpha < 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mp, mpf

from .errors import PrecisionExhausted, ResourceGuardExceeded

DEFAULT_PRECISION = 256


def _to_mp(x):
    """mpf conversion that also accepts Fraction and 'p/q' strings."""
    if isinstance(x, Fraction):
        return mpf(x.numerator) / x.denominator
    if isinstance(x, str) and "/" in x:
        f = Fraction(x)
        return mpf(f.numerator) / f.denominator
    return mpf(x)


@dataclass
class CFExpansion:
    quotients: list  # a_1 .. a_n, positive ints
    convergents: list  # (p_k, q_k) big-int pairs, k = 1..n
    exact: bool  # True when the input was rational and fully expanded

    def denominators(self):
        return [q for _, q in self.convergents]


def continued_fraction(alpha, n: int, precision_bits: int = DEFAULT_PRECISION) -> CFExpansion:
    """First ``n`` partial quotients and convergents of ``alpha`` in (0, 1).

    Rational input expands exactly (possibly terminating before n terms);
    mpf/float input expands at the given precision and raises
    PrecisionExhausted (carrying the trusted prefix) if the remainder can no
    longer be resolved.
    """
    if isinstance(alpha, (Fraction, int)) or (
        isinstance(alpha, str) and "/" in alpha
    ):
        alpha = Fraction(alpha)
        if not 0 < alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        quotients = []
        num, den = alpha.denominator, alpha.numerator  # Euclid on 1/alpha
        while den != 0 and len(quotients) < n:
            quotients.append(num // den)
            num, den = den, num % den
        return CFExpansion(quotients, _convergents(quotients), den == 0)
    with mp.workprec(precision_bits):
        x = mpf(alpha)
        if not 0 < x < 1:
            raise ValueError("alpha must be in (0, 1)")
        eps = mpf(2) ** (-(precision_bits - 16))
        # quotients are trusted only while the convergent denominator
        # squared fits the working precision (the perturbation of alpha by
        # one ulp moves the CF tail once q_k^2 ~ 1/ulp)
        q_budget = 1 << ((precision_bits - 16) // 2)
        q_prev, q_cur = 0, 1
        quotients = []
        while len(quotients) < n:
            if x < eps:
                raise PrecisionExhausted(
                    f"only {len(quotients)} quotients trusted at "
                    f"{precision_bits} bits: {quotients}"
                )
            inv = 1 / x
            a = int(mp.floor(inv))
            frac = inv - a
            if frac < eps * inv or a < 1:
                raise PrecisionExhausted(
                    f"only {len(quotients)} quotients trusted at "
                    f"{precision_bits} bits: {quotients}"
                )
            q_prev, q_cur = q_cur, a * q_cur + q_prev
            if q_cur > q_budget:
                raise PrecisionExhausted(
                    f"only {len(quotients)} quotients trusted at "
                    f"{precision_bits} bits: {quotients}"
                )
            quotients.append(a)
            x = frac
        return CFExpansion(quotients, _convergents(quotients), False)


def _convergents(quotients):
    out = []
    p_prev, p = 1, 0  # p_{-1}, p_0
    q_prev, q = 0, 1  # q_{-1}, q_0
    for a in quotients:
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        out.append((p, q))
    return out


class PLCircleMap:
    """Orientation-preserving piecewise-linear circle homeomorphism.

    Defined by break points (strictly increasing, containing 0), one
    positive slope per arc, and the image of 0.  Image arcs must tile the
    circle: sum(slope * arc length) = 1.
    """

    def __init__(self, breaks, slopes, offset, precision_bits: int = DEFAULT_PRECISION):
        self.precision_bits = precision_bits
        with mp.workprec(precision_bits):
            self.breaks = [_to_mp(b) for b in breaks]
            self.slopes = [_to_mp(s) for s in slopes]
            self.offset = _to_mp(offset) % 1
            if len(self.breaks) != len(self.slopes):
                raise ValueError("need one slope per arc")
            if self.breaks[0] != 0:
                raise ValueError("break-point list must contain 0 first")
            if any(b >= c for b, c in zip(self.breaks, self.breaks[1:])):
                raise ValueError("break points must be strictly increasing")
            if any(s <= 0 for s in self.slopes):
                raise ValueError("slopes must be positive")
            arcs = self.arc_lengths()
            total = sum(s * l for s, l in zip(self.slopes, arcs))
            if abs(total - 1) > mpf(2) ** (-(precision_bits - 8)):
                raise ValueError(f"image arcs do not tile the circle: sum = {total}")
            # cumulative values of the lift at the break points
            self._values = [self.offset]
            for s, l in zip(self.slopes, arcs):
                self._values.append(self._values[-1] + s * l)

    @property
    def n_breaks(self):
        return len(self.breaks)

    def arc_lengths(self):
        pts = self.breaks + [mpf(1)]
        return [b - a for a, b in zip(pts, pts[1:])]

    def _arc_index(self, x):
        for i in range(len(self.breaks) - 1, -1, -1):
            if x >= self.breaks[i]:
                return i
        raise ValueError("point outside [0, 1)")

    def lift(self, x):
        """Monotone lift F with F(0) = offset and F(x + 1) = F(x) + 1."""
        with mp.workprec(self.precision_bits):
            x = _to_mp(x)
            k = mp.floor(x)
            frac = x - k
            i = self._arc_index(frac)
            return k + self._values[i] + self.slopes[i] * (frac - self.breaks[i])

    def __call__(self, x):
        with mp.workprec(self.precision_bits):
            return self.lift(_to_mp(x) % 1) % 1

    def iterate(self, x, n: int):
        with mp.workprec(self.precision_bits):
            y = _to_mp(x) % 1
            for _ in range(n):
                y = self(y)
            return y

    def slope_at(self, x):
        return self.slopes[self._arc_index(_to_mp(x) % 1)]

    def to_json(self):
        return {
            "breaks": [mp.nstr(b, 40) for b in self.breaks],
            "slopes": [mp.nstr(s, 40) for s in self.slopes],
            "offset": mp.nstr(self.offset, 40),
            "precision_bits": self.precision_bits,
        }


def rigid_rotation(alpha, precision_bits: int = DEFAULT_PRECISION) -> PLCircleMap:
    """Rotation by alpha, with the artificial break at 0 required by the class."""
    return PLCircleMap([0], [1], alpha, precision_bits)


def rotation_number(f: PLCircleMap, n_iter: int):
    """(F^n(0)/n mod 1, 1/n): the classical estimate with its error bound."""
    if n_iter < 1:
        raise ValueError("need at least one iterate")
    with mp.workprec(f.precision_bits):
        x = mpf(0)
        for _ in range(n_iter):
            x = f.lift(x)
        return x / n_iter % 1, mpf(1) / n_iter


@dataclass
class CircleArc:
    """Positively-oriented arc [start, end) with orbit-index bookkeeping."""

    start: object  # mpf position in [0, 1)
    end: object
    start_iter: int  # endpoints are f^k(x0); these are the k's
    end_iter: int

    def length(self):
        span = (self.end - self.start) % 1
        return span

    def contains(self, x):
        return (_to_mp(x) - self.start) % 1 < self.length()


@dataclass
class DynamicalPartition:
    base_point: object
    level: int
    q: list  # q_0 .. q_n (return times, q_0 = 1)
    long_arcs: list  # f^i(I_{n-1}), i < q_n
    short_arcs: list  # f^i(I_n), i < q_{n-1}

    @property
    def arcs(self):
        return self.long_arcs + self.short_arcs


def map_partial_quotients(f: PLCircleMap, x0, count: int, max_time: int = 1_000_000):
    """First ``count`` partial quotients of the rotation number of ``f``.

    Counts maximal runs of one-sided best approximations of the orbit of
    x0.  Only same-side arc comparisons are used, so the result depends on
    the cyclic order of the orbit alone and is conjugacy invariant.
    """
    with mp.workprec(f.precision_bits):
        x0 = _to_mp(x0) % 1
        y1 = f(x0)
        y2 = f(y1)
        # a_1 = 1 iff x0, f(x0), f^2(x0) fail to be in positive cyclic order
        first_alone = (y2 - x0) % 1 < (y1 - x0) % 1
        best_left = (x0 - y1) % 1
        best_right = (y1 - x0) % 1
        quotients = []
        run_side = None
        run_len = 1  # current group already contains time j=1
        if first_alone:
            quotients.append(1)
            run_len = 0
        y = y1
        j = 1
        while len(quotients) < count:
            if j >= max_time:
                raise ResourceGuardExceeded(
                    f"orbit budget {max_time} exhausted after "
                    f"{len(quotients)} quotients: {quotients}"
                )
            y = f(y)
            j += 1
            left = (x0 - y) % 1
            right = (y - x0) % 1
            if left < best_left:
                side = "L"
                best_left = left
            elif right < best_right:
                side = "R"
                best_right = right
            else:
                continue
            if run_side is None or side == run_side:
                run_side = side
                run_len += 1
            else:
                quotients.append(run_len)
                run_side = side
                run_len = 1
        return quotients[:count]


def _return_times(f: PLCircleMap, x0, n: int, max_time: int):
    """q_0..q_n of the rotation number of f, via combinatorial quotients."""
    a = map_partial_quotients(f, x0, n, max_time)
    q = [1]
    q_prev = 0
    for k in range(n):
        q_prev, q_next = q[-1], a[k] * q[-1] + q_prev
        q.append(q_next)
    return q


def dynamical_partition(
    f: PLCircleMap, x0, n: int, max_time: int = 1_000_000
) -> DynamicalPartition:
    """Level-``n`` dynamical partition of ``f`` with base point ``x0``.

    Arc sides follow the parity convention: even levels give [x0, f^{q_m}(x0)),
    odd levels give [f^{q_m}(x0), x0).  Disjointness and covering are checked.
    """
    if n < 1:
        raise ValueError("level must be >= 1")
    with mp.workprec(f.precision_bits):
        x0 = _to_mp(x0) % 1
        q = _return_times(f, x0, n, max_time)

        orbit_pts = [x0]
        y = x0
        for _ in range(q[n] + q[n - 1]):
            y = f(y)
            orbit_pts.append(y)

        def fundamental(m):
            qm_pt = orbit_pts[q[m]]
            if m % 2 == 0:
                return CircleArc(x0, qm_pt, 0, q[m])
            return CircleArc(qm_pt, x0, q[m], 0)

        def push(arc: CircleArc, i):
            return CircleArc(
                orbit_pts[arc.start_iter + i],
                orbit_pts[arc.end_iter + i],
                arc.start_iter + i,
                arc.end_iter + i,
            )

        long0 = fundamental(n - 1)
        short0 = fundamental(n)
        long_arcs = [push(long0, i) for i in range(q[n])]
        short_arcs = [push(short0, i) for i in range(q[n - 1])]

        part = DynamicalPartition(x0, n, q[: n + 1], long_arcs, short_arcs)
        _check_partition(part, f.precision_bits)
        return part


def _check_partition(part: DynamicalPartition, precision_bits):
    tol = mpf(2) ** (-(precision_bits // 2))
    arcs = sorted(part.arcs, key=lambda a: a.start)
    total = sum(a.length() for a in arcs)
    if abs(total - 1) > tol:
        raise AssertionError(f"partition arcs do not cover the circle: {total}")
    for a, b in zip(arcs, arcs[1:]):
        if abs((b.start - a.end) % 1) > tol and abs((a.end - b.start) % 1) > tol:
            raise AssertionError("partition arcs are not contiguous")


@dataclass
class RenormalizedMap:
    """Two-branch first-return descriptor on I_{n-1}(x0) u I_n(x0)."""

    long_arc: CircleArc  # I_{n-1}
    short_arc: CircleArc  # I_n
    long_time: int  # q_n iterations on I_{n-1}
    short_time: int  # q_{n-1} iterations on I_n
    long_slope: object
    short_slope: object


def circle_renormalization(
    f: PLCircleMap, x0, n: int, max_time: int = 1_000_000
) -> RenormalizedMap:
    """The n-th renormalization: f^{q_{n-1}} on I_n and f^{q_n} on I_{n-1}.

    Branch slopes are orbit products of f's slopes, evaluated at the arc
    midpoints (constant per branch for PL maps away from break orbits).
    """
    part = dynamical_partition(f, x0, n, max_time)
    with mp.workprec(f.precision_bits):
        q = part.q
        long_arc = part.long_arcs[0]
        short_arc = part.short_arcs[0]

        def orbit_slope(arc: CircleArc, steps: int):
            mid = (arc.start + arc.length() / 2) % 1
            s = mpf(1)
            y = mid
            for _ in range(steps):
                s *= f.slope_at(y)
                y = f(y)
            return s

        return RenormalizedMap(
            long_arc=long_arc,
            short_arc=short_arc,
            long_time=q[n],
            short_time=q[n - 1],
            long_slope=orbit_slope(long_arc, q[n]),
            short_slope=orbit_slope(short_arc, q[n - 1]),
        )


@dataclass
class SmoothBranch:
    """One branch of a piecewise-C^2 circle map descriptor."""

    left: float
    right: float
    df: object  # callable, derivative, bounded below by a positive constant
    d2f: object = None  # callable, second derivative (optional)


def mean_nonlinearity(f, tol: float = 1e-10):
    """Integral of D log Df over the circle.

    Exactly 0.0 for PL maps.  For piecewise-C^2 descriptors, integrates
    d2f/df per branch by adaptive quadrature; with d2f missing, falls back
    to the telescoped closed form log df(right) - log df(left).
    """
    import math

    if isinstance(f, PLCircleMap):
        return 0.0
    total = 0.0
    for branch in f:
        lo, hi = float(branch.left), float(branch.right)
        if branch.df(lo) <= 0 or branch.df(hi) <= 0:
            raise ValueError("derivative must be positive")
        if branch.d2f is None:
            total += math.log(branch.df(hi)) - math.log(branch.df(lo))
        else:
            from scipy.integrate import quad

            val, _ = quad(lambda x: branch.d2f(x) / branch.df(x), lo, hi, epsabs=tol)
            total += val
    return total
