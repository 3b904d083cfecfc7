"""Kernel projections, rotation-type Oseledets subspaces and Lyapunov estimates."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .iet import IET
from .linalg import dot, solve, vec_mat
from .perms import Perm, is_rotation_type, kernel_basis
from .renorm import orbit

IN_E_S = "in_E_s"
IN_E_CS_NOT_E_S = "in_E_cs_not_E_s"
OUTSIDE_E_CS = "outside_E_cs"


@dataclass(frozen=True)
class Subspace:
    """Exact rational basis of a linear subspace."""

    basis: tuple

    @property
    def dim(self):
        return len(self.basis)

    def contains(self, v) -> bool:
        """Exact membership test via rank comparison."""
        return _in_span(self.basis, v)


def _in_span(basis, v):
    from .linalg import rref

    if not basis:
        return all(x == 0 for x in v)
    before = rref(list(basis))
    after = rref(list(basis) + [tuple(v)])
    return len(before) == len(after)


def project_kernel(omega, perm: Perm):
    """Exact orthogonal projection of ``omega`` onto Ker(Omega_pi).

    Solves the rational Gram system for the canonical kernel basis.
    Returns the zero vector when the kernel is trivial.
    """
    basis = kernel_basis(perm)
    d = perm.d
    if not basis:
        return tuple([Fraction(0)] * d)
    omega = tuple(map(Fraction, omega))
    gram = tuple(tuple(Fraction(dot(u, v)) for v in basis) for u in basis)
    rhs = tuple(Fraction(dot(u, omega)) for u in basis)
    coeffs = solve(gram, rhs)
    return tuple(
        sum(c * Fraction(b[i]) for c, b in zip(coeffs, basis)) for i in range(d)
    )


@dataclass
class InvarianceReport:
    returns: list  # block indices with pi^(n) == pi^(0)
    verdicts: list  # bool per return
    base_projection: tuple

    @property
    def all_pass(self):
        return all(self.verdicts)


def kernel_projection_invariance_check(T: IET, omega, n_blocks: int) -> InvarianceReport:
    """Check that the kernel projection of the transported vector is constant.

    At every Zorich block with pi^(n) = pi^(0), compares the projection of
    omega^(n) = (B^n)^T omega with the projection of omega, exactly.  The
    transpose transport is the one that acts trivially on the kernel of the
    intersection form at returns, so the projection must be preserved.
    """
    omega = tuple(map(Fraction, omega))
    rec = orbit(T, n_blocks)
    base = project_kernel(omega, T.perm)
    returns, verdicts = [], []
    for n in range(1, rec.n_blocks + 1):
        if rec.perms[n] != T.perm:
            continue
        transported = vec_mat(omega, rec.cumulative[n])  # exact (B^n)^T omega
        proj = project_kernel(transported, T.perm)
        returns.append(n)
        verdicts.append(proj == base)
    return InvarianceReport(returns, verdicts, base)


def rotation_stable_spaces(T: IET):
    """(E_s, E_cs) in closed form for rotation-type permutations.

    E_cs is the orthogonal complement of the lengths vector; E_s is its
    intersection with the orthogonal complement of Ker(Omega_pi).
    """
    if not is_rotation_type(T.perm):
        raise ValueError("closed forms require a rotation-type permutation")
    from .linalg import nullspace_int

    d = T.d
    lam = [T.lam[i] for i in range(d)]
    e_cs = Subspace(tuple(nullspace_int([lam])))
    kb = kernel_basis(T.perm)
    constraints = [lam] + [list(map(Fraction, b)) for b in kb]
    e_s = Subspace(tuple(nullspace_int(constraints)))
    return e_s, e_cs


def log_slope_membership(omega, T: IET) -> str:
    """Classify ``omega`` against the rotation-type stable spaces, exactly."""
    if not is_rotation_type(T.perm):
        raise ValueError("membership test requires a rotation-type permutation")
    omega = tuple(map(Fraction, omega))
    if dot(omega, T.lam) != 0:
        return OUTSIDE_E_CS
    proj = project_kernel(omega, T.perm)
    if all(x == 0 for x in proj):
        return IN_E_S
    return IN_E_CS_NOT_E_S


@dataclass
class LyapunovEstimate:
    theta_top: float  # per chosen normalization
    per_rv_step: float
    per_block: float
    n_blocks: int
    samples: int
    skipped: int
    normalization: str
    per_sample: list


def _random_simplex_rationals(rng: random.Random, d: int, bits: int):
    """Lebesgue-like random rational lengths with ``bits`` of precision."""
    den = 1 << bits
    while True:
        cuts = sorted(rng.randrange(1, den) for _ in range(d - 1))
        pts = [0] + cuts + [den]
        lengths = [Fraction(b - a, den) for a, b in zip(pts, pts[1:])]
        if all(x > 0 for x in lengths):
            return lengths


def lyapunov_top(
    perm: Perm,
    n_blocks: int,
    samples: int,
    seed: int,
    normalization: str = "per-Zorich-block",
    precision_bits: int = 8192,
) -> LyapunovEstimate:
    """Monte Carlo estimate of the top exponent of the heights cocycle.

    Samples Lebesgue-random lengths at ``precision_bits`` of dyadic
    resolution, runs the Zorich orbit and averages log||h^(n)||_inf per
    Zorich block (and per RV step).  For d = 2 the per-block exponent is the
    growth rate of continued-fraction denominators per partial quotient,
    pi^2/(12 ln 2) =~ 1.18657.  Deterministic given the seed; samples
    whose orbit terminates early (rational lengths exhausted) are skipped
    and counted.
    """
    if normalization not in ("per-RV-step", "per-Zorich-block"):
        raise ValueError("unknown normalization")
    d = perm.d
    per_step, per_block, per_sample = [], [], []
    skipped = 0
    for k in range(samples):
        rng = random.Random(f"{seed}:{k}")
        lam = _random_simplex_rationals(rng, d, precision_bits)
        T = IET(lam, perm)
        try:
            rec = orbit(T, n_blocks, max_entry_bits=64 * precision_bits)
        except Exception:
            skipped += 1
            continue
        h_max = max(rec.heights[-1])
        steps = rec.rv_steps_consumed()
        per_step.append(_log_big(h_max) / steps if steps else 0.0)
        per_block.append(_log_big(h_max) / n_blocks if n_blocks else 0.0)
        per_sample.append(
            per_step[-1] if normalization == "per-RV-step" else per_block[-1]
        )
    mean_step = sum(per_step) / len(per_step) if per_step else 0.0
    mean_block = sum(per_block) / len(per_block) if per_block else 0.0
    theta = mean_step if normalization == "per-RV-step" else mean_block
    return LyapunovEstimate(
        theta_top=theta,
        per_rv_step=mean_step,
        per_block=mean_block,
        n_blocks=n_blocks,
        samples=samples,
        skipped=skipped,
        normalization=normalization,
        per_sample=per_sample,
    )


def _log_big(n: int) -> float:
    """log of a positive big integer without float overflow."""
    if n.bit_length() <= 512:
        return math.log(n)
    shift = n.bit_length() - 512
    return math.log(n >> shift) + shift * math.log(2)
