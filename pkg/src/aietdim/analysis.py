"""Rohlin towers, the zero-dimension criterion checker and the generic scanner.

The scanner and all IET-side certificates use exact rational arithmetic.
Affine-side rigidity intersections use inward-rounded interval arithmetic so
that "nonempty intersection" is a certificate rather than a float artifact;
this can only under-report the rigidity count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mp, mpf

from .affine import AIET, AIETOrbitRecord, aiet_orbit, invariant_measure_weights
from .iet import IET
from .perms import Perm
from .renorm import OrbitRecord, orbit


def default_schedule(n: int) -> int:
    """ceil(log2(n + 2)): increasing, and sum 1/(n C(n)) diverges."""
    return max(1, (n + 1).bit_length())


@dataclass
class RohlinTower:
    """Floors f^k(base), 0 <= k < height, over a level-n branch domain."""

    letter: str
    level: int
    base_left: object  # Fraction (IET) or mpf (AIET)
    base_length: object
    height: int

    @property
    def base_right(self):
        return self.base_left + self.base_length

    def floors(self, f, max_floors: int = 100_000):
        """Materialize the floors by iterating the endpoints of the base.

        Endpoint orbits stay inside continuity intervals (tower property),
        so each floor is the interval between the iterated endpoints.
        """
        if self.height > max_floors:
            raise ValueError(
                f"tower height {self.height} exceeds the floor cap {max_floors}"
            )
        out = []
        lo, length = self.base_left, self.base_length
        if isinstance(lo, Fraction):
            # piecewise translation: floors keep the base length
            for _ in range(self.height):
                out.append((lo, length))
                lo = f(lo)
            return out
        with mp.workprec(f.precision_bits):
            mid = lo + length / 2
            for _ in range(self.height):
                out.append((lo, length))
                slope = mp.e ** f.omega[f.index(f.letter_at(mid))]
                lo = f(lo)
                mid = f(mid)
                length = length * slope
        return out


def towers_at_level(f, n_blocks: int, record=None):
    """The d Rohlin towers at renormalization level ``n_blocks``.

    For exact IETs the bases are the (unnormalized, exact rational)
    level-n subintervals and the tiling identity sum h * |base| = 1 is
    verified exactly; for AIETs the bases are the tracked absolute branch
    lengths and the identity is checked to the orbit's drift tolerance.
    """
    if isinstance(f, IET):
        rec = record if record is not None else orbit(f, n_blocks)
        perm, _, ell, heights = rec.level(n_blocks)
        lengths = {a: ell[f.index(a)] for a in f.letters}
        h = {a: heights[f.index(a)] for a in f.letters}
        assert sum(lengths[a] * h[a] for a in f.letters) == 1
    elif isinstance(f, AIET):
        rec = record if record is not None else aiet_orbit(f, n_blocks)
        perm = rec.perms[n_blocks]
        abs_len = rec.abs_lengths(n_blocks)
        lengths = {a: abs_len[f.index(a)] for a in f.letters}
        h = {a: rec.heights[n_blocks][f.index(a)] for a in f.letters}
    else:
        raise TypeError("towers_at_level expects an IET or an AIET")
    towers = []
    acc = lengths[perm.top[0]] * 0  # zero of the right numeric type
    for a in perm.top:
        towers.append(RohlinTower(a, n_blocks, acc, lengths[a], h[a]))
        acc = acc + lengths[a]
    return towers


def verify_tower_disjointness(towers, f, floor_cap: int = 20_000):
    """Materialize all floors and check pairwise disjointness by sorting.

    Only feasible for small total floor count; exact for IETs.
    """
    total = sum(t.height for t in towers)
    if total > floor_cap:
        raise ValueError(f"total floor count {total} exceeds cap {floor_cap}")
    floors = []
    for t in towers:
        floors.extend(t.floors(f))
    floors.sort(key=lambda fl: fl[0])
    for (l1, len1), (l2, _) in zip(floors, floors[1:]):
        if l1 + len1 > l2:
            return False, {"overlap_at": (l1, l1 + len1, l2)}
    return True, None


def s_content(floors, s: float) -> float:
    """Sum of |floor|^s over a family of floors.

    Accepts floor lengths directly, or RohlinTower objects (floors of an
    exact tower all share the base length).
    """
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    total = 0.0
    for item in floors:
        if isinstance(item, RohlinTower):
            total += item.height * float(item.base_length) ** s
        else:
            total += float(item) ** s
    return total


def thinned_floor_lengths(base_length, L: int, M: int, sigma) -> list:
    """Floor lengths of a thinned tower: L groups of M floors, contracted
    geometrically by sigma per group."""
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    return [base_length * sigma ** k for k in range(L) for _ in range(M)]


# ---------------------------------------------------------------------------
# Zero-dimension criterion
# ---------------------------------------------------------------------------


@dataclass
class CriterionLevelEntry:
    level: int
    letter: str
    cond1_tiling: bool
    tiling_residual: float
    cond2_smooth: bool
    tower_measure: float  # mu_hat of the full tower
    slope_gap: float  # |e^{omega^(n)_alpha} - 1|
    rigidity_count: int  # M_n
    rigidity_capped: bool
    log_height: float
    ratio: float  # M_n / log h_n


@dataclass
class CriterionReport:
    levels: list
    designated: tuple  # letters the criterion is evaluated on
    entries: list  # CriterionLevelEntry
    cond1: bool
    cond2: bool
    cond3: bool  # min designated tower measure > measure_floor
    cond3_min_measure: float
    cond4: bool  # min designated slope gap > slope_floor
    cond4_min_gap: float
    cond5_ratios: list  # per level: max over designated letters of M/log h
    measure_floor: float
    slope_floor: float

    def entries_for(self, letter):
        return [e for e in self.entries if e.letter == letter]


def _branch_geometry(perm: Perm, lam, omega, index):
    """Normalized branch data: domain lefts (top order) and image lefts
    (bottom order), plus slopes, for one renormalization level."""
    left, acc = {}, None
    acc = lam[0] * 0
    for a in perm.top:
        left[a] = acc
        acc = acc + lam[index(a)]
    img_left = {}
    acc = lam[0] * 0
    for a in perm.bottom:
        img_left[a] = acc
        if omega is None:
            acc = acc + lam[index(a)]
        else:
            acc = acc + lam[index(a)] * mp.e ** omega[index(a)]
    return left, img_left


def rigidity_count(perm: Perm, lam, omega, index, letter, m_cap: int = 1_000_000,
                   precision_bits: int = None) -> tuple:
    """Largest M with the M-fold self-intersection of the letter's tower
    nonempty: iterates K <- S(K) cut back to the base, where S is the
    letter's branch of the level-n renormalized map.

    Exact for rational data (omega None); certified-conservative with
    inward rounding otherwise.  Returns (M, capped).
    """
    if omega is None:
        left, img_left = _branch_geometry(perm, lam, omega, index)
        i = index(letter)
        l_a = left[letter]
        r_a = l_a + lam[i]
        c_a = img_left[letter]
        slope = 1
        eps = 0
    else:
        with mp.workprec(precision_bits):
            lam = [
                mpf(x.numerator) / mpf(x.denominator)
                if isinstance(x, Fraction) else mpf(x)
                for x in lam
            ]
            left, img_left = _branch_geometry(perm, lam, omega, index)
            i = index(letter)
            l_a = left[letter]
            r_a = l_a + lam[i]
            c_a = img_left[letter]
            slope = mp.e ** omega[i]
            eps = mpf(2) ** (-(precision_bits - 16))
    lo, hi = l_a, r_a
    count = 0
    while count < m_cap:
        # S(x) = c_a + slope * (x - l_a); inward rounding by eps
        new_lo = c_a + slope * (lo - l_a) + eps
        new_hi = c_a + slope * (hi - l_a) - eps
        lo = max(new_lo, l_a)
        hi = min(new_hi, r_a)
        if not lo < hi:
            return count, False
        count += 1
    return count, True


def check_criterion(f, levels, designated=None, measure_floor: float = 0.0,
                    slope_floor: float = 0.0, m_cap: int = 1_000_000,
                    cone_tol: float = 1e-12, record=None,
                    measure=None) -> CriterionReport:
    """Evaluate the five tower conditions at the given levels.

    ``f`` may be an exact IET (slopes identically one: the slope-gap
    condition fails by design) or an AIET.  Designated letters default to
    the alphabet minus the last letters of the level permutation's rows,
    matching the towers the scanner certifies.
    """
    n_max = max(levels)
    is_iet = isinstance(f, IET)
    if is_iet:
        rec = record if record is not None else orbit(f, n_max)
    else:
        rec = record if record is not None else aiet_orbit(f, n_max)
        if measure is None:
            measure = invariant_measure_weights(f, n_max, tol=cone_tol, record=rec)
    entries = []
    for n in levels:
        perm = rec.perms[n]
        lam = rec.lam[n]
        omega = None if is_iet else rec.omegas[n]
        heights = rec.heights[n]
        if is_iet:
            residual = 0.0
            mu = {a: float(rec.ell[n][f.index(a)] * heights[f.index(a)])
                  for a in f.letters}
        else:
            with mp.workprec(f.precision_bits):
                residual = float(abs(
                    sum(l * mp.e ** w for l, w in zip(lam, omega)) - 1
                ))
            mu = {a: float(measure.weights[n][a]) for a in f.letters}
        for a in f.letters:
            i = f.index(a)
            if is_iet:
                gap = 0.0
            else:
                with mp.workprec(f.precision_bits):
                    gap = float(abs(mp.e ** omega[i] - 1))
            m_count, capped = rigidity_count(
                perm, lam, omega, f.index, a, m_cap=m_cap,
                precision_bits=None if is_iet else f.precision_bits,
            )
            log_h = math.log(heights[i]) if heights[i] > 1 else 0.0
            entries.append(CriterionLevelEntry(
                level=n, letter=a,
                cond1_tiling=True, tiling_residual=residual,
                cond2_smooth=True,
                tower_measure=mu[a],
                slope_gap=gap,
                rigidity_count=m_count, rigidity_capped=capped,
                log_height=log_h,
                ratio=m_count / log_h if log_h > 0 else float("inf"),
            ))
    if designated is None:
        excluded = set()
        for n in levels:
            excluded.add(rec.perms[n].last_top)
            excluded.add(rec.perms[n].last_bottom)
        designated = tuple(a for a in f.letters if a not in excluded)
        if not designated:
            designated = tuple(f.letters)
    des = [e for e in entries if e.letter in designated]
    min_mu = min((e.tower_measure for e in des), default=0.0)
    min_gap = min((e.slope_gap for e in des), default=0.0)
    per_level_ratio = [
        max((e.ratio for e in des if e.level == n), default=0.0) for n in levels
    ]
    return CriterionReport(
        levels=list(levels), designated=tuple(designated), entries=entries,
        cond1=all(e.cond1_tiling for e in entries),
        cond2=all(e.cond2_smooth for e in entries),
        cond3=min_mu > measure_floor, cond3_min_measure=min_mu,
        cond4=min_gap > slope_floor, cond4_min_gap=min_gap,
        cond5_ratios=per_level_ratio,
        measure_floor=measure_floor, slope_floor=slope_floor,
    )


# ---------------------------------------------------------------------------
# Generic-condition scanner
# ---------------------------------------------------------------------------


def pi_star_for(letters) -> Perm:
    """The rotation datum with the given top row and bottom row shifted by
    one (first top letter last in the bottom row)."""
    letters = tuple(letters)
    return Perm(letters, letters[1:] + letters[:1])


@dataclass
class GenericConditionReport:
    c0: Fraction
    schedule: object
    max_blocks: int
    pi_star: Perm
    hits: list  # per hit: dict with level and per-condition data
    pi_star_visits: list  # all levels with pi^(n) = pi_star
    warning: str = ""

    @property
    def hit_levels(self):
        return [h["level"] for h in self.hits]


def generic_condition_scan(T: IET, c0, C=default_schedule,
                           max_blocks: int = 2000, record=None,
                           max_entry_bits: int = 1_000_000) -> GenericConditionReport:
    """Scan a Zorich orbit for levels satisfying the four tower conditions.

    At each level n with pi^(n) equal to the reference rotation datum
    (top row preserved, bottom row shifted by one), checks with exact
    rationals: lambda_alpha > n C(n) lambda_{beta*} and lambda_alpha > c0
    for alpha != beta*, and all height ratios > c0.
    """
    c0 = Fraction(c0)
    d = T.d
    if not 0 < c0 < Fraction(1, 10 * d):
        raise ValueError("c0 must lie strictly between 0 and 1/(10d)")
    pi_star = pi_star_for(T.perm.top)
    rec = record if record is not None else orbit(
        T, max_blocks, max_entry_bits=max_entry_bits
    )
    beta = pi_star.bottom[-1]
    ib = T.index(beta)
    hits, visits = [], []
    for n in range(1, rec.n_blocks + 1):
        if rec.perms[n] != pi_star:
            continue
        visits.append(n)
        lam = rec.lam[n]
        h = rec.heights[n]
        factor = n * C(n)
        cond2 = all(
            lam[T.index(a)] > factor * lam[ib]
            for a in T.letters if a != beta
        )
        cond3 = all(lam[T.index(a)] > c0 for a in T.letters if a != beta)
        hmin, hmax = min(h), max(h)
        cond4 = Fraction(hmin, hmax) > c0
        if cond2 and cond3 and cond4:
            hits.append({
                "level": n,
                "nC": factor,
                "lambda": tuple(lam),
                "lambda_beta_star": lam[ib],
                "height_ratio_min": Fraction(hmin, hmax),
                "conditions": (True, cond2, cond3, cond4),
            })
    warning = "" if visits else "reference rotation datum never visited"
    return GenericConditionReport(
        c0=c0, schedule=C, max_blocks=rec.n_blocks, pi_star=pi_star,
        hits=hits, pi_star_visits=visits, warning=warning,
    )


@dataclass
class AdjacencyReport:
    level: int
    markers: list  # iteration indices where the iterate straddles a boundary
    counts: dict  # letter -> number of fully-contained consecutive iterates
    adjacency_certified: bool  # consecutive iterates share endpoints exactly
    step: Fraction  # translation length of the level-n rotation


def adjacency_structure(T: IET, n: int, record=None,
                        max_iter: int = 10_000_000) -> AdjacencyReport:
    """Track the iterates of the first branch domain under the level-n map.

    Requires the level-n permutation to be the reference rotation datum, so
    the renormalized map is a rigid rotation by -lambda_{beta*}; iterates
    are translated copies and consecutive ones inside the same letter share
    an endpoint exactly.  Counts per letter how many iterates are fully
    contained in that letter's subinterval.
    """
    rec = record if record is not None else orbit(T, n)
    pi_star = pi_star_for(T.perm.top)
    if rec.perms[n] != pi_star:
        raise ValueError("level permutation is not the reference rotation datum")
    lam = rec.lam[n]
    beta = pi_star.bottom[-1]
    step = lam[T.index(beta)]
    # letter boundaries in top order
    bounds, acc = [], Fraction(0)
    letter_of = []
    for a in pi_star.top:
        nxt = acc + lam[T.index(a)]
        bounds.append((acc, nxt, a))
        acc = nxt
        letter_of.append(a)
    counts = {a: 0 for a in T.letters}
    markers = []
    prev_left = None
    certified = True
    straddles = 0
    i = 0
    while straddles < T.d and i < max_iter:
        i += 1
        left = (-i * step) % 1
        right = left + step
        inside = None
        for lo, hi, a in bounds:
            if lo <= left and right <= hi:
                inside = a
                break
        if inside is None:
            markers.append(i)
            straddles += 1
            prev_left = None
            continue
        counts[inside] += 1
        if prev_left is not None and prev_left != left + step:
            certified = False
        prev_left = left
    return AdjacencyReport(n, markers, counts, certified, step)


def hat_A_membership(lam, n: int, c0, C=default_schedule) -> bool:
    """Exact membership in the level-n entry set of the scanner's proof.

    ``lam`` is given in the top-row order of the reference rotation datum;
    its first entry belongs to the letter closing that datum's bottom row
    and its second to the letter that ends the top row of the datum's
    bottom-type predecessor.  Membership requires their gap to be positive
    yet smaller than min(c0, 1/(n C(n))), and every length to exceed c0.
    Members are of bottom type on the predecessor and land on the rotation
    datum after one induction step.
    """
    lam = tuple(Fraction(x) for x in lam)
    c0 = Fraction(c0)
    gap = lam[0] - lam[1]
    bound = min(c0, Fraction(1, n * C(n)))
    return bound > gap > 0 and min(lam) > c0
