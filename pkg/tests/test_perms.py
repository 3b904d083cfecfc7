import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aietdim.errors import ResourceGuardExceeded
from aietdim.perms import (BOTTOM, TOP, Perm, all_irreducible_perms,
                           bottom_predecessor, canonical_rotation_perm,
                           is_irreducible, is_rotation_type, kernel_basis,
                           monodromy, omega_matrix, rauzy_class, successor)


def perm_strategy(d):
    return st.permutations(list("ABCDEF"[:d])).map(
        lambda bottom: Perm(tuple("ABCDEF"[:d]), tuple(bottom))
    )


def test_canonical_rotation_perm_shape():
    p = canonical_rotation_perm(4)
    assert p.top == ("A", "B", "C", "D")
    assert p.bottom == ("B", "C", "D", "A")
    p5 = canonical_rotation_perm(5)
    assert p5.top == ("A1", "A2", "A3", "A4", "A5")
    with pytest.raises(ValueError):
        canonical_rotation_perm(1)


def test_monodromy_values():
    p = canonical_rotation_perm(4)
    assert monodromy(p) == {1: 4, 2: 1, 3: 2, 4: 3}


def test_rotation_type_detection():
    for d in range(2, 7):
        assert is_rotation_type(canonical_rotation_perm(d))
    # every cyclic shift of the bottom row is rotation type
    letters = tuple("ABCD")
    for k in range(4):
        assert is_rotation_type(Perm(letters, letters[k:] + letters[:k]))
    assert not is_rotation_type(Perm(("A", "B", "C", "D"), ("B", "A", "D", "C")))


def test_irreducibility():
    assert not is_irreducible(Perm(("A", "B"), ("A", "B")))
    assert not is_irreducible(Perm(("A", "B", "C", "D"), ("B", "A", "D", "C")))
    assert is_irreducible(canonical_rotation_perm(3))
    # d=3: exactly BCA, CAB, CBA are irreducible over identity top row
    assert len(all_irreducible_perms(3)) == 3


@settings(max_examples=60, deadline=None)
@given(perm_strategy(5))
def test_omega_matrix_antisymmetric(p):
    om = omega_matrix(p)
    d = p.d
    for i in range(d):
        for j in range(d):
            assert om[i][j] == -om[j][i]
    assert all(om[i][i] == 0 for i in range(d))


def test_kernel_basis_rotation_d4():
    basis = kernel_basis(canonical_rotation_perm(4))
    assert basis == [(0, 0, 1, -1), (0, 1, 0, -1)]


def test_kernel_dimension_rotation_type():
    for d in range(2, 7):
        assert len(kernel_basis(canonical_rotation_perm(d))) == d - 2


@settings(max_examples=40, deadline=None)
@given(perm_strategy(4).filter(is_irreducible))
def test_successor_bottom_predecessor_roundtrip(p):
    assert bottom_predecessor(successor(p, BOTTOM)) == p


@settings(max_examples=40, deadline=None)
@given(perm_strategy(4).filter(is_irreducible), st.sampled_from([TOP, BOTTOM]))
def test_successor_preserves_irreducibility(p, kind):
    assert is_irreducible(successor(p, kind))


def test_successor_bad_kind():
    with pytest.raises(ValueError):
        successor(canonical_rotation_perm(2), "sideways")


def test_rauzy_class_d2_single_node():
    cls = rauzy_class(canonical_rotation_perm(2))
    assert len(cls) == 1


def test_rauzy_class_closed_and_strongly_connected():
    for d in (3, 4, 5):
        cls = rauzy_class(canonical_rotation_perm(d))
        nodes = set(cls.perms)
        # closure: both successors of every node stay inside
        for p in nodes:
            assert successor(p, TOP) in nodes
            assert successor(p, BOTTOM) in nodes
        # strong connectivity: forward and backward reachability from start
        adj, radj = {}, {}
        for a, _, b in cls.arcs:
            adj.setdefault(a, set()).add(b)
            radj.setdefault(b, set()).add(a)

        def reach(start, graph):
            seen, stack = {start}, [start]
            while stack:
                for nxt in graph.get(stack.pop(), ()):
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            return seen

        assert reach(cls.perms[0], adj) == nodes
        assert reach(cls.perms[0], radj) == nodes


def test_rauzy_class_size_guard():
    with pytest.raises(ResourceGuardExceeded):
        rauzy_class(canonical_rotation_perm(4), max_size=2)


def test_rauzy_class_deterministic_order():
    a = rauzy_class(canonical_rotation_perm(4))
    b = rauzy_class(canonical_rotation_perm(4))
    assert a.perms == b.perms
    assert a.to_json() == b.to_json()


def test_rauzy_class_requires_irreducible():
    with pytest.raises(ValueError):
        rauzy_class(Perm(("A", "B"), ("A", "B")))


def test_perm_json_roundtrip():
    p = canonical_rotation_perm(3)
    assert Perm.from_json(p.to_json()) == p


def test_perm_validation():
    with pytest.raises(ValueError):
        Perm(("A",), ("A",))
    with pytest.raises(ValueError):
        Perm(("A", "A"), ("A", "A"))
    with pytest.raises(ValueError):
        Perm(("A", "B"), ("A", "C"))
