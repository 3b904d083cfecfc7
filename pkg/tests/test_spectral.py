import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aietdim.iet import IET
from aietdim.linalg import dot
from aietdim.perms import canonical_rotation_perm
from aietdim.spectral import (IN_E_CS_NOT_E_S, IN_E_S, OUTSIDE_E_CS, _log_big,
                              kernel_projection_invariance_check,
                              log_slope_membership, lyapunov_top,
                              project_kernel, rotation_stable_spaces)

from helpers import omega_ecs, omega_es, rand_lam

LEVY = math.pi ** 2 / (12 * math.log(2))


def random_rational_vector(rng, d, span=50):
    return tuple(Fraction(rng.randrange(-span, span + 1), rng.randrange(1, span))
                 for _ in range(d))


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=3, max_value=6), st.integers(min_value=0, max_value=10_000))
def test_project_kernel_is_orthogonal_projection(d, seed):
    rng = random.Random(seed)
    perm = canonical_rotation_perm(d)
    from aietdim.perms import kernel_basis

    omega = random_rational_vector(rng, d)
    proj = project_kernel(omega, perm)
    basis = kernel_basis(perm)
    # residual orthogonal to the kernel, exactly
    residual = tuple(o - p for o, p in zip(omega, proj))
    for b in basis:
        assert dot(residual, b) == 0
    # idempotent
    assert project_kernel(proj, perm) == proj


def test_project_kernel_trivial_for_d2():
    assert project_kernel((Fraction(3), Fraction(-2)),
                          canonical_rotation_perm(2)) == (0, 0)


def test_kernel_projection_invariance_small():
    rng = random.Random("spectral-invariance")
    hits = 0
    for k in range(5):
        T = IET(rand_lam(rng, 96), canonical_rotation_perm(3))
        omega = random_rational_vector(rng, 3)
        rep = kernel_projection_invariance_check(T, omega, 20)
        assert rep.all_pass
        hits += len(rep.returns)
    assert hits > 0


def test_rotation_stable_spaces_dimensions():
    rng = random.Random("spectral-dims")
    for d in (3, 4, 5):
        T = IET(rand_lam(rng, 64, d=d), canonical_rotation_perm(d))
        e_s, e_cs = rotation_stable_spaces(T)
        assert e_cs.dim == d - 1
        assert e_s.dim == 1
        # E_s inside E_cs
        for b in e_s.basis:
            assert e_cs.contains(b)


def test_rotation_stable_spaces_requires_rotation_type():
    from aietdim.perms import Perm

    T = IET([Fraction(1, 3), Fraction(1, 3), Fraction(1, 3)],
            Perm(("A", "B", "C"), ("C", "B", "A")))
    with pytest.raises(ValueError):
        rotation_stable_spaces(T)


def test_log_slope_membership_classification():
    rng = random.Random("spectral-membership")
    lam = rand_lam(rng, 64)
    T = IET(lam, canonical_rotation_perm(3))
    assert log_slope_membership(omega_es(lam, 1), T) == IN_E_S
    assert log_slope_membership(omega_ecs(lam, 1), T) == IN_E_CS_NOT_E_S
    assert log_slope_membership((1, 1, 1), T) == OUTSIDE_E_CS
    e_s, e_cs = rotation_stable_spaces(T)
    assert e_s.contains(omega_es(lam, 1))
    assert e_cs.contains(omega_ecs(lam, 1))
    assert not e_s.contains(omega_ecs(lam, 1))


def test_lyapunov_deterministic_and_counts_skips():
    a = lyapunov_top(canonical_rotation_perm(2), 30, 10, seed=3,
                     precision_bits=512)
    b = lyapunov_top(canonical_rotation_perm(2), 30, 10, seed=3,
                     precision_bits=512)
    assert a.per_sample == b.per_sample and a.theta_top == b.theta_top
    assert a.skipped == 0
    # starved resolution exhausts the rationals before 60 blocks
    c = lyapunov_top(canonical_rotation_perm(2), 60, 10, seed=3,
                     precision_bits=16)
    assert c.skipped > 0


def test_lyapunov_normalization_validation():
    with pytest.raises(ValueError):
        lyapunov_top(canonical_rotation_perm(2), 10, 2, 0, normalization="median")


def test_levy_constant_independent_simulation():
    """Growth rate of continued-fraction denominators per partial quotient,
    simulated directly with the shift on random reals: independent oracle
    for the d=2 per-block exponent gate."""
    rng = random.Random("levy-oracle")
    total, n_terms = 0.0, 0
    for _ in range(300):
        x = rng.random()
        log_q, q_prev, q = 0.0, 0.0, 1.0
        terms = 0
        for _ in range(400):
            if x < 1e-12:
                break
            inv = 1.0 / x
            a = int(inv)
            x = inv - a
            q_prev, q = q, a * q + q_prev
            terms += 1
            if q > 1e200:  # renormalize to avoid overflow
                log_q += math.log(q)
                q_prev, q = q_prev / q, 1.0
        total += log_q + math.log(q)
        n_terms += terms
    estimate = total / n_terms
    assert abs(estimate - LEVY) / LEVY < 0.02


def test_lyapunov_d2_matches_levy_at_small_scale():
    est = lyapunov_top(canonical_rotation_perm(2), 150, 40, seed=11,
                       precision_bits=2048)
    assert est.normalization == "per-Zorich-block"
    assert abs(est.theta_top - LEVY) / LEVY < 0.08
    assert est.per_rv_step < est.per_block


def test_log_big_consistent():
    assert _log_big(12345) == math.log(12345)
    huge = 3 ** 5000
    approx = _log_big(huge)
    assert abs(approx - 5000 * math.log(3)) < 1e-6 * approx
