"""Affine interval exchange transformations and their renormalization.

Branch slopes are tracked through their logarithms (the log-slope vector);
lengths and slopes are arbitrary-precision binary floats (mpmath), with the
working precision recorded on every object.  Integer cocycle matrices are
shared with the exact machinery, so measure estimates derived from them stay
rational.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from mpmath import mp, mpf

from .circle import DEFAULT_PRECISION, PLCircleMap
from .errors import (ConeNotContracted, PrecisionExhausted,
                     ResourceGuardExceeded, TieUndecidable)
from .iet import IET
from .linalg import identity, mat_mul, solve
from .perms import BOTTOM, TOP, Perm, successor
from .renorm import RVStep, ZorichBlock
from .linalg import elementary


class AIET:
    """Piecewise-affine exchange of ``d`` subintervals of [0, 1).

    Encoded by domain lengths ``ell`` (normalized to sum 1), a log-slope
    vector ``omega`` and a combinatorial datum.  Both the domain intervals
    and their images must tile [0, 1): sum(ell) = 1 and
    sum(ell * exp(omega)) = 1 within 2^-(precision - 8).
    """

    def __init__(self, lengths, log_slope, perm: Perm,
                 precision_bits: int = DEFAULT_PRECISION, letters=None,
                 tiling_tol_bits: int = 8):
        self.perm = perm
        self.precision_bits = precision_bits
        self.letters = tuple(letters) if letters is not None else perm.top
        if set(self.letters) != set(perm.top):
            raise ValueError("letter order must cover the permutation's alphabet")
        self._index = {a: i for i, a in enumerate(self.letters)}
        with mp.workprec(precision_bits):
            ell = [mpf(x) for x in lengths]
            omega = [mpf(x) for x in log_slope]
            if len(ell) != perm.d or len(omega) != perm.d:
                raise ValueError("lengths/log-slope size must match the permutation")
            if any(x <= 0 for x in ell):
                raise ValueError("all lengths must be positive")
            total = sum(ell)
            self.ell = tuple(x / total for x in ell)
            self.omega = tuple(omega)
            image_total = sum(
                l * mp.e ** w for l, w in zip(self.ell, self.omega)
            )
            # tiling_tol_bits=None skips the check: internal induction steps
            # accumulate one ulp of drift per step and are guarded by the
            # orbit runner instead
            if tiling_tol_bits is not None and abs(image_total - 1) > mpf(2) ** (
                -(precision_bits - tiling_tol_bits)
            ):
                raise ValueError(
                    f"branch images do not tile [0, 1): total = {image_total}"
                )
            # branch left endpoints in domain (top) and image (bottom) order
            self._left = {}
            self._image_left = {}
            acc = mpf(0)
            for a in perm.top:
                self._left[a] = acc
                acc += self.ell[self.index(a)]
            acc = mpf(0)
            for a in perm.bottom:
                self._image_left[a] = acc
                acc += self.ell[self.index(a)] * mp.e ** self.omega[self.index(a)]

    def index(self, symbol) -> int:
        return self._index[symbol]

    @property
    def d(self) -> int:
        return self.perm.d

    def length(self, symbol):
        return self.ell[self.index(symbol)]

    def slope(self, symbol):
        with mp.workprec(self.precision_bits):
            return mp.e ** self.omega[self.index(symbol)]

    def letter_at(self, x):
        if not (0 <= x < 1):
            raise ValueError("point outside [0, 1)")
        for a in reversed(self.perm.top):
            if self._left[a] <= x:
                return a
        raise AssertionError("unreachable")

    def __call__(self, x):
        with mp.workprec(self.precision_bits):
            x = mpf(x)
            a = self.letter_at(x)
            i = self.index(a)
            return self._image_left[a] + mp.e ** self.omega[i] * (x - self._left[a])

    def to_json(self) -> dict:
        digits = int(self.precision_bits / 3.32) + 2
        order = self.perm.top
        return {
            "perm": self.perm.to_json(),
            "lengths": [mp.nstr(self.length(a), digits) for a in order],
            "log_slope": [mp.nstr(self.omega[self.index(a)], digits) for a in order],
            "precision_bits": self.precision_bits,
        }

    @classmethod
    def from_json(cls, data) -> "AIET":
        perm = Perm.from_json(data["perm"])
        bits = data.get("precision_bits", DEFAULT_PRECISION)
        with mp.workprec(bits):
            ell = [mpf(s) for s in data["lengths"]]
            omega = [mpf(s) for s in data["log_slope"]]
        return cls(ell, omega, perm, precision_bits=bits)

    def __repr__(self):
        ell = ", ".join(mp.nstr(x, 8) for x in self.ell)
        om = ", ".join(mp.nstr(x, 8) for x in self.omega)
        return f"AIET([{ell}], [{om}], {self.perm})"


def build_aiet(perm: Perm, lengths, log_slope,
               precision_bits: int = DEFAULT_PRECISION) -> AIET:
    return AIET(lengths, log_slope, perm, precision_bits=precision_bits)


def aiet_evaluate(f: AIET, x):
    return f(x)


def iet_to_aiet(T: IET, precision_bits: int = DEFAULT_PRECISION) -> AIET:
    """Embed an exact IET as the AIET with zero log-slope."""
    with mp.workprec(precision_bits):
        lengths = [mpf(x.numerator) / mpf(x.denominator) for x in T.lam]
    return AIET(lengths, [0] * T.d, T.perm, precision_bits=precision_bits,
                letters=T.letters)


def _step_geometry(f: AIET):
    """Type, winner/loser and removed length of one induction step.

    The type compares the last domain interval with the last *image*
    interval; ties within 2^-(precision - 32) are refused as undecidable.
    """
    with mp.workprec(f.precision_bits):
        at, ab = f.perm.last_top, f.perm.last_bottom
        lt = f.length(at)
        lb_img = f.length(ab) * mp.e ** f.omega[f.index(ab)]
        gap = lt - lb_img
        tol = mpf(2) ** (-(f.precision_bits - 32))
        if abs(gap) <= tol:
            raise TieUndecidable(
                "last domain and image lengths agree to working precision",
                lower=float(min(lt, lb_img)), upper=float(max(lt, lb_img)),
            )
        if gap > 0:
            return TOP, at, ab, lb_img
        return BOTTOM, ab, at, lt


def giet_rv_step(f: AIET):
    """One renormalization step of an affine exchange: (f', step).

    Top type removes the image of the last branch from the end of [0, 1);
    bottom type removes the last domain interval.  The first-return map on
    the remaining interval is affine with log-slope A^T omega, and is
    rescaled back to [0, 1).
    """
    kind, winner, loser, removed = _step_geometry(f)
    with mp.workprec(f.precision_bits):
        at, ab = f.perm.last_top, f.perm.last_bottom
        it, ib = f.index(at), f.index(ab)
        ell = list(f.ell)
        omega = list(f.omega)
        if kind == TOP:
            # new domain [0, 1 - ell_b e^{w_b}); branch for ab now goes
            # through ab then at
            ell[it] = ell[it] - removed
            omega[ib] = omega[ib] + omega[it]
        else:
            # new domain [0, 1 - ell_t); at's new branch is the preimage of
            # its old domain interval under ab's branch
            scale = mp.e ** (-omega[ib])
            ell[ib] = ell[ib] - ell[it] * scale
            ell[it] = ell[it] * scale
            omega[it] = omega[it] + omega[ib]
        iw = f.index(winner)
        il = f.index(loser)
        step = RVStep(kind, winner, loser, elementary(f.d, iw, il))
        new_perm = successor(f.perm, kind)
        f2 = AIET(ell, omega, new_perm, precision_bits=f.precision_bits,
                  letters=f.letters, tiling_tol_bits=None)
        return f2, step


@dataclass
class AIETOrbitRecord:
    """Per-block renormalization data for one affine orbit."""

    start: AIET
    blocks: list = field(default_factory=list)
    cumulative: list = field(default_factory=list)  # B^n after each block
    perms: list = field(default_factory=list)
    lam: list = field(default_factory=list)  # normalized lengths per level
    omegas: list = field(default_factory=list)  # tracked log-slopes per level
    heights: list = field(default_factory=list)  # big-integer heights
    interval_lengths: list = field(default_factory=list)  # |I^n|
    maps: list = field(default_factory=list)  # renormalized AIET per level
    terminated: str = ""  # nonempty when a partial run stopped early

    @property
    def n_blocks(self):
        return len(self.blocks)

    def abs_lengths(self, n):
        """Actual subinterval lengths of the level-n induction interval."""
        with mp.workprec(self.start.precision_bits):
            scale = self.interval_lengths[n]
            return tuple(x * scale for x in self.lam[n])


def aiet_orbit(f: AIET, n_blocks: int, max_rv_steps: int = 1_000_000,
               allow_partial: bool = False) -> AIETOrbitRecord:
    """Run ``n_blocks`` Zorich-grouped renormalization blocks of an AIET.

    The inner loop works on raw length/log-slope vectors (one renormalized
    map object is built per block, not per step).  Raises PrecisionExhausted
    when the smallest tracked absolute length falls below
    2^-(precision - 32) or the image-tiling drift exceeds 2^-(precision/2),
    and TieUndecidable on undecidable type comparisons; with
    ``allow_partial`` the record accumulated so far is returned instead,
    with the stop reason in ``terminated``.
    """
    d = f.d
    bits = f.precision_bits
    rec = AIETOrbitRecord(start=f)
    rec.perms.append(f.perm)
    rec.lam.append(tuple(f.ell))
    rec.omegas.append(tuple(f.omega))
    rec.heights.append(tuple([1] * d))
    rec.interval_lengths.append(mpf(1))
    rec.cumulative.append(identity(d))
    rec.maps.append(f)
    idx = f.index
    scale = mpf(1)
    floor_len = mpf(2) ** (-(bits - 32))
    tie_tol = mpf(2) ** (-(bits - 32))
    drift_tol = mpf(2) ** (-(bits // 2))
    perm = f.perm
    ell = list(f.ell)
    omega = list(f.omega)
    with mp.workprec(bits):
        for n in range(n_blocks):
            perm_before = perm
            first_kind = None
            z = 0
            # B maintained column-wise: each step adds the winner column to
            # the loser column
            B_cols = [[1 if i == j else 0 for i in range(d)] for j in range(d)]
            winners, losers = [], []
            h = list(rec.heights[-1])
            total = sum(ell)
            expw = [mp.e ** w for w in omega]
            try:
                while z <= max_rv_steps:
                    at, ab = perm.last_top, perm.last_bottom
                    it, ib = idx(at), idx(ab)
                    lb_img = ell[ib] * expw[ib]
                    gap = ell[it] - lb_img
                    if abs(gap) <= tie_tol * total:
                        raise TieUndecidable(
                            "last domain and image lengths agree to "
                            "working precision",
                            lower=float(min(ell[it], lb_img)),
                            upper=float(max(ell[it], lb_img)),
                        )
                    kind = TOP if gap > 0 else BOTTOM
                    if first_kind is None:
                        first_kind = kind
                    elif kind != first_kind:
                        break
                    if kind == TOP:
                        winner, loser = at, ab
                        ell[it] = ell[it] - lb_img
                        omega[ib] = omega[ib] + omega[it]
                        expw[ib] = expw[ib] * expw[it]
                        total = total - lb_img
                    else:
                        winner, loser = ab, at
                        shrink = 1 / expw[ib]
                        lt = ell[it]
                        ell[ib] = ell[ib] - lt * shrink
                        ell[it] = lt * shrink
                        omega[it] = omega[it] + omega[ib]
                        expw[it] = expw[it] * expw[ib]
                        total = total - lt
                    iw, il = idx(winner), idx(loser)
                    h[il] += h[iw]
                    cw = B_cols[iw]
                    cl = B_cols[il]
                    for i in range(d):
                        cl[i] += cw[i]
                    winners.append(winner)
                    losers.append(loser)
                    perm = successor(perm, kind)
                    z += 1
                    if min(ell) * scale < floor_len or total * scale < floor_len:
                        raise PrecisionExhausted(
                            f"tracked length below 2^-({bits}-32) during "
                            f"block {n}; rerun at higher precision"
                        )
                else:
                    raise ResourceGuardExceeded(
                        f"Zorich block {n} exceeds {max_rv_steps} steps"
                    )
            except (TieUndecidable, PrecisionExhausted,
                    ResourceGuardExceeded) as exc:
                if allow_partial:
                    # roll back to the last completed block
                    rec.terminated = f"block {n}: {exc}"
                    return rec
                if isinstance(exc, TieUndecidable):
                    raise TieUndecidable(
                        f"undecidable comparison in block {n}: {exc}",
                        lower=exc.lower, upper=exc.upper,
                    ) from exc
                raise
            # normalize and build the level map
            scale = scale * total
            ell = [x / total for x in ell]
            total = mpf(1)
            residual = abs(
                sum(l * mp.e ** w for l, w in zip(ell, omega)) - 1
            )
            if residual > drift_tol:
                msg = (f"image-tiling drift {mp.nstr(residual, 5)} at block "
                       f"{n} exceeds 2^-({bits}//2); rerun at higher precision")
                if allow_partial:
                    rec.terminated = msg
                    return rec
                raise PrecisionExhausted(msg)
            if min(ell) * scale < floor_len:
                msg = (f"tracked length below 2^-({bits}-32) at block {n}; "
                       f"rerun at higher precision")
                if allow_partial:
                    rec.terminated = msg
                    return rec
                raise PrecisionExhausted(msg)
            B = tuple(
                tuple(B_cols[j][i] for j in range(d)) for i in range(d)
            )
            current = AIET(ell, omega, perm, precision_bits=bits,
                           letters=f.letters, tiling_tol_bits=None)
            ell = list(current.ell)
            rec.blocks.append(
                ZorichBlock(z, first_kind, B, perm_before, perm,
                            winners, losers)
            )
            rec.cumulative.append(mat_mul(rec.cumulative[-1], B))
            rec.perms.append(perm)
            rec.lam.append(tuple(current.ell))
            rec.omegas.append(tuple(current.omega))
            rec.heights.append(tuple(h))
            rec.interval_lengths.append(scale)
            rec.maps.append(current)
    return rec


def aiet_from_path(record, omega0, precision_bits: int = DEFAULT_PRECISION) -> AIET:
    """Affine exchange prescribed to follow the renormalization path of an IET.

    ``record`` is an exact orbit record of a (minimal) IET and ``omega0`` the
    desired level-0 log-slope vector.  A positive length seed is pulled
    backwards through the per-step affine length recursion along the record's
    winner/loser sequence; since the per-step maps are positive and their
    product contracts the cone, the normalized result is (to working
    precision) the unique length vector whose affine orbit reproduces the
    record's path for essentially the record's depth.

    A final exact two-coordinate adjustment restores the image-tiling
    constraint sum(ell * exp(omega)) = 1, perturbing the path only beyond the
    contracted depth.
    """
    T0 = record.start
    d = T0.d
    from .perms import TOP as _TOP

    with mp.workprec(precision_bits):
        omega = [
            mpf(x.numerator) / mpf(x.denominator) if isinstance(x, Fraction)
            else mpf(x)
            for x in omega0
        ]
        omega_start = list(omega)
        steps = []
        for block in record.blocks:
            for w_letter, l_letter in zip(block.winners, block.losers):
                iw = T0.index(w_letter)
                il = T0.index(l_letter)
                factor = mp.e ** (omega[il] if block.kind == _TOP else omega[iw])
                steps.append((block.kind, iw, il, factor))
                omega[il] += omega[iw]
        ell = [mpf(1)] * d
        for kind, iw, il, factor in reversed(steps):
            if kind == _TOP:
                # invert ell'_w = ell_w - ell_l e^{omega_l}
                ell[iw] += ell[il] * factor
            else:
                # invert ell'_w = ell_w - ell_l e^{-omega_w},
                #        ell'_l = ell_l e^{-omega_w}
                ell[iw] += ell[il]
                ell[il] *= factor
        total = sum(ell)
        ell = [x / total for x in ell]
        expw = [mp.e ** w for w in omega_start]
        residual = sum(l * e for l, e in zip(ell, expw)) - 1
        i_hi = max(range(d), key=lambda i: expw[i])
        i_lo = min(range(d), key=lambda i: expw[i])
        if expw[i_hi] != expw[i_lo]:
            shift = -residual / (expw[i_hi] - expw[i_lo])
            ell[i_hi] += shift
            ell[i_lo] -= shift
        if any(x <= 0 for x in ell):
            raise PrecisionExhausted(
                "tiling adjustment exceeded a subinterval length; "
                "use a deeper record or more precision"
            )
        return AIET(ell, omega_start, T0.perm, precision_bits=precision_bits,
                    letters=T0.letters)


@dataclass
class SlopeCocycleReport:
    """Tracked log-slopes vs the transported initial vector, per block."""

    n_blocks: int
    per_block: list  # max relative deviation per block
    max_relative_deviation: float


def log_slope_cocycle_check(f: AIET, n_blocks: int,
                            record: AIETOrbitRecord = None) -> SlopeCocycleReport:
    """Compare tracked slopes against (B^n)^T applied to the initial slopes.

    The deviation is |tracked - transported| / max(1, |transported|) in the
    sup norm, per block.
    """
    rec = record if record is not None else aiet_orbit(f, n_blocks)
    devs = []
    with mp.workprec(f.precision_bits):
        omega0 = rec.omegas[0]
        for n in range(1, rec.n_blocks + 1):
            B = rec.cumulative[n]
            transported = [
                sum(B[i][j] * omega0[i] for i in range(f.d)) for j in range(f.d)
            ]
            dev = max(
                abs(t - w) / max(1, abs(t))
                for t, w in zip(transported, rec.omegas[n])
            )
            devs.append(float(dev))
    return SlopeCocycleReport(rec.n_blocks, devs, max(devs) if devs else 0.0)


def pl_to_aiet(f: PLCircleMap) -> AIET:
    """The affine exchange induced by a PL circle map on [0, 1).

    Cuts the domain at the break points and at the preimage of 0; on each
    resulting interval the map is affine and the images tile [0, 1).
    """
    with mp.workprec(f.precision_bits):
        if f.breaks[0] != 0:
            raise ValueError("break-point list must contain 0")
        # preimage of 0: x with lift(x) = 1 (f(0) > 0 except rotation by 0)
        c = _preimage_of_zero(f)
        cuts = sorted(set([mpf(b) for b in f.breaks] + ([c] if c > 0 else [])))
        d = len(cuts)
        letters = tuple(f"A{i}" for i in range(1, d + 1)) if d > 4 else tuple("ABCD"[:d])
        rights = cuts[1:] + [mpf(1)]
        lengths = [r - l for l, r in zip(cuts, rights)]
        omega = [mp.log(f.slope_at(l + lg / 2)) for l, lg in zip(cuts, lengths)]
        image_left = {}
        for a, l in zip(letters, cuts):
            y = f(l)
            # the branch containing the wrap point maps its left end to the
            # top of the circle
            image_left[a] = y
        bottom = tuple(sorted(letters, key=lambda a: image_left[a]))
        return AIET(lengths, omega, Perm(letters, bottom),
                    precision_bits=f.precision_bits)


def _preimage_of_zero(f: PLCircleMap):
    """The x in [0, 1) with f(x) = 0, by bisection on the lift."""
    with mp.workprec(f.precision_bits):
        target = mp.floor(f.lift(0)) + 1
        lo, hi = mpf(0), mpf(1)
        for _ in range(f.precision_bits + 8):
            mid = (lo + hi) / 2
            if f.lift(mid) < target:
                lo = mid
            else:
                hi = mid
        return hi


@dataclass
class MeasureEstimate:
    """Perron-style estimate of the invariant measure of an affine orbit."""

    lambda_hat: tuple  # exact rationals, sum 1
    cone_diameter: float  # sup-norm spread of normalized B^N columns
    ell_hat: list  # per level: exact rational floor widths in measure
    heights: list  # per level: big-integer heights
    weights: list  # per level: {letter: tower weight}, each level sums to 1
    letters: tuple


def invariant_measure_weights(f: AIET, n_blocks: int, tol: float = 1e-12,
                              record: AIETOrbitRecord = None) -> MeasureEstimate:
    """Measure weights of the renormalization towers of an affine orbit.

    lambda_hat is the normalized image of the positive cone under B^N,
    taken from the orbit's own matrix path; its accuracy certificate is
    the sup-norm spread of the normalized columns of B^N.  Tower weights
    h^(n) * ell_hat^(n) are exact rationals summing to one at every level.
    """
    rec = record if record is not None else aiet_orbit(f, n_blocks)
    B = rec.cumulative[-1]
    d = f.d
    cols = []
    for j in range(d):
        col = [Fraction(B[i][j]) for i in range(d)]
        total = sum(col)
        if total == 0:
            raise ConeNotContracted("cocycle matrix has a zero column")
        cols.append([x / total for x in col])
    diameter = max(
        float(abs(cols[j][i] - cols[k][i]))
        for j in range(d) for k in range(d) for i in range(d)
    )
    if diameter > tol:
        raise ConeNotContracted(
            f"column-direction spread {diameter:.3e} exceeds {tol:.3e}; "
            f"run more blocks"
        )
    mixed = [sum(cols[j][i] for j in range(d)) for i in range(d)]
    total = sum(mixed)
    lambda_hat = tuple(x / total for x in mixed)
    ell_hat, weights = [], []
    for n in range(rec.n_blocks + 1):
        ell_n = solve(rec.cumulative[n], lambda_hat)
        if any(x <= 0 for x in ell_n):
            raise ConeNotContracted(
                f"estimated floor widths leave the positive cone at level {n}"
            )
        h_n = rec.heights[n]
        w = {
            a: h_n[f.index(a)] * ell_n[f.index(a)] for a in f.letters
        }
        ell_hat.append(tuple(ell_n))
        weights.append(w)
    return MeasureEstimate(lambda_hat, diameter, ell_hat, rec.heights,
                           weights, f.letters)


@dataclass
class DimensionTrace:
    """Per-level local-dimension estimates log(measure)/log(length)."""

    levels: list  # level indices
    ratios: list  # per level: {letter: float ratio}
    interval_lengths: list  # |I^n| per recorded level (floats)

    def deepest_below(self, threshold: float):
        """Index of the deepest recorded level with |I^n| < threshold."""
        hits = [i for i, L in enumerate(self.interval_lengths) if L < threshold]
        return hits[-1] if hits else None


def local_dimension_estimates(f: AIET, n_blocks: int, tol: float = 1e-12,
                              record: AIETOrbitRecord = None,
                              carrier=None) -> DimensionTrace:
    """log(mu_hat(branch)) / log(|branch|) per letter and level.

    mu_hat comes from the exact tower widths of invariant_measure_weights;
    |branch| is the tracked absolute length of the level-n subinterval.

    When the map was built by following the renormalization path of an exact
    IET (see aiet_from_path), pass that IET's orbit record as ``carrier``:
    its exact per-level lengths are the widths of the level intervals under
    the pulled-back invariant measure, so no cone estimation is needed.  The
    trace is then cut at the first level where the affine orbit leaves the
    carrier's path.
    """
    rec = record if record is not None else aiet_orbit(f, n_blocks)
    if carrier is None:
        est = invariant_measure_weights(f, n_blocks, tol=tol, record=rec)
        depth = rec.n_blocks
        mu_of = est.ell_hat
    else:
        depth = 0
        for b_f, b_c in zip(rec.blocks, carrier.blocks):
            if (b_f.kind, b_f.z) != (b_c.kind, b_c.z):
                break
            depth += 1
        mu_of = carrier.ell
    levels, ratios, lengths = [], [], []
    with mp.workprec(f.precision_bits):
        for n in range(1, depth + 1):
            abs_len = rec.abs_lengths(n)
            entry = {}
            for a in f.letters:
                i = f.index(a)
                mu = mu_of[n][i]
                L = abs_len[i]
                num = mp.log(mpf(mu.numerator)) - mp.log(mpf(mu.denominator))
                entry[a] = float(num / mp.log(L))
            levels.append(n)
            ratios.append(entry)
            lengths.append(float(rec.interval_lengths[n]))
    return DimensionTrace(levels, ratios, lengths)
