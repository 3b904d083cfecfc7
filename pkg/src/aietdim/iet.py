"""Standard interval exchange transformations over exact rationals.

All arithmetic in this module is exact (fractions.Fraction); there is no
rounding anywhere.  Intervals are half-open [left, right), matching the
right-continuity convention of the maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ResourceGuardExceeded
from .linalg import mat_vec
from .perms import Perm, omega_matrix


@dataclass(frozen=True)
class Interval:
    """Half-open interval [left, right)."""

    left: Fraction
    right: Fraction

    def __post_init__(self):
        if not self.left < self.right:
            raise ValueError("empty or reversed interval")

    @property
    def length(self):
        return self.right - self.left

    def __contains__(self, x):
        return self.left <= x < self.right

    def contains_interval(self, other: "Interval") -> bool:
        return self.left <= other.left and other.right <= self.right

    def intersect(self, other: "Interval"):
        lo = max(self.left, other.left)
        hi = min(self.right, other.right)
        return Interval(lo, hi) if lo < hi else None


class IET:
    """Exchange of ``d`` subintervals of [0, 1), encoded by lengths and a permutation.

    Lengths are normalized at construction to sum exactly to one.
    """

    def __init__(self, lengths, perm: Perm, letters=None):
        lengths = tuple(Fraction(x) for x in lengths)
        if len(lengths) != perm.d:
            raise ValueError("length vector does not match the permutation size")
        if any(x <= 0 for x in lengths):
            raise ValueError("all lengths must be positive")
        total = sum(lengths)
        self.lam = tuple(x / total for x in lengths)
        self.perm = perm
        # fixed indexing order for lam/w; stays constant along induction
        # orbits even though the top row of the permutation may change
        self.letters = tuple(letters) if letters is not None else perm.top
        if set(self.letters) != set(perm.top):
            raise ValueError("letter order must cover the permutation's alphabet")
        self._index = {a: i for i, a in enumerate(self.letters)}
        # left endpoints in domain (top) and image (bottom) order
        self._left = {}
        self._image_left = {}
        acc = Fraction(0)
        for a in perm.top:
            self._left[a] = acc
            acc += self.lam[self.index(a)]
        acc = Fraction(0)
        for a in perm.bottom:
            self._image_left[a] = acc
            acc += self.lam[self.index(a)]
        self.w = tuple(
            self._image_left[a] - self._left[a] for a in self.letters
        )

    def index(self, symbol) -> int:
        return self._index[symbol]

    @property
    def d(self) -> int:
        return self.perm.d

    def length(self, symbol) -> Fraction:
        return self.lam[self.index(symbol)]

    def domain_interval(self, symbol) -> Interval:
        left = self._left[symbol]
        return Interval(left, left + self.length(symbol))

    def image_interval(self, symbol) -> Interval:
        left = self._image_left[symbol]
        return Interval(left, left + self.length(symbol))

    def letter_at(self, x) -> str:
        """The symbol whose domain interval contains x."""
        if not (0 <= x < 1):
            raise ValueError("point outside [0, 1)")
        for a in reversed(self.perm.top):
            if self._left[a] <= x:
                return a
        raise AssertionError("unreachable")

    def __call__(self, x):
        return x + self.w[self.index(self.letter_at(x))]

    def inverse(self, y):
        if not (0 <= y < 1):
            raise ValueError("point outside [0, 1)")
        for a in reversed(self.perm.bottom):
            if self._image_left[a] <= y:
                return y - self.w[self.index(a)]
        raise AssertionError("unreachable")

    def discontinuities(self):
        """Left endpoints l_alpha with pi_t(alpha) != 1."""
        return [self._left[a] for a in self.perm.top[1:]]

    def translation_vector(self):
        """w as computed from prefix sums; equals omega_matrix(perm) @ lam."""
        return self.w

    def to_json(self) -> dict:
        lam_top = [self.length(a) for a in self.perm.top]
        return {
            "perm": self.perm.to_json(),
            "lambda": [f"{x.numerator}/{x.denominator}" for x in lam_top],
        }

    @classmethod
    def from_json(cls, data) -> "IET":
        perm = Perm.from_json(data["perm"])
        lengths = [Fraction(s) for s in data["lambda"]]
        return cls(lengths, perm)

    def __repr__(self):
        lam = ", ".join(str(x) for x in self.lam)
        return f"IET([{lam}], {self.perm})"


def build_iet(lengths, perm: Perm) -> IET:
    return IET(lengths, perm)


def translation_vector_by_matrix(T: IET):
    """Omega_pi @ lambda; cross-check route for the translation vector."""
    lam_top = [T.length(a) for a in T.perm.top]
    w_top = mat_vec(omega_matrix(T.perm), lam_top)
    by_letter = dict(zip(T.perm.top, w_top))
    return tuple(by_letter[a] for a in T.letters)


def keane_check(T: IET, depth: int):
    """Bounded semi-decision of the Keane condition.

    Follows the forward orbits of the interior singularities for ``depth``
    steps and reports the first coincidence with any singularity or between
    two orbits.  Returns ("pass", None) or ("fail", witness).
    """
    sing = T.discontinuities()
    points = {i: x for i, x in enumerate(sing)}
    seen = {x: (i, 0) for i, x in points.items()}
    for step in range(1, depth + 1):
        for i in list(points):
            y = T(points[i])
            points[i] = y
            if y in seen:
                j, s = seen[y]
                return "fail", {
                    "orbit": i,
                    "step": step,
                    "collides_with_orbit": j,
                    "collides_at_step": s,
                    "point": y,
                }
            if y in sing:
                return "fail", {
                    "orbit": i,
                    "step": step,
                    "hits_singularity": y,
                }
            seen[y] = (i, step)
    return "pass", None


@dataclass(frozen=True)
class ReturnBranch:
    domain: Interval
    return_time: int
    translation: Fraction


def first_return_map(T: IET, J: Interval, max_time: int):
    """Brute-force first-return system of ``T`` on ``J``.

    Splits J at all preimages of singularities up to the maximal return time
    by direct orbit iteration of subinterval endpoints.  Used as an oracle
    for the induction machinery; exhaustive and exact.
    """
    # Refine J into pieces with a common itinerary until return.
    branches = []
    cuts = [J.left, J.right]
    # iterate candidate pieces; each piece is (current interval, translation, time)
    pending = [(Interval(J.left, J.right), Fraction(0), 0)]
    while pending:
        cur, shift, time = pending.pop()
        if time > 0 and J.contains_interval(cur):
            branches.append(
                ReturnBranch(
                    Interval(cur.left - shift, cur.right - shift), time, shift
                )
            )
            continue
        if time >= max_time:
            raise ResourceGuardExceeded(
                f"first_return_map: no return within {max_time} steps"
            )
        if time > 0 and cur.intersect(J) is not None:
            # partial overlap: split at J's endpoints
            pieces = []
            pts = sorted({cur.left, cur.right, max(cur.left, J.left), min(cur.right, J.right)})
            for lo, hi in zip(pts, pts[1:]):
                if lo < hi:
                    pieces.append(Interval(lo, hi))
            for p in pieces:
                pending.append((p, shift, time))
            continue
        # apply T, splitting at domain discontinuities
        pts = [cur.left, cur.right]
        for s in T.discontinuities():
            if cur.left < s < cur.right:
                pts.append(s)
        pts = sorted(set(pts))
        for lo, hi in zip(pts, pts[1:]):
            wa = T.w[T.index(T.letter_at(lo))]
            pending.append((Interval(lo + wa, hi + wa), shift + wa, time + 1))
    branches.sort(key=lambda b: b.domain.left)
    return branches
