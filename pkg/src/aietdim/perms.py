"""Combinatorial data of interval exchanges and the Rauzy graph.

A combinatorial datum is a pair of rows (top, bottom), each an ordering of
the same finite alphabet.  The alphabet order used everywhere for indexing
vectors and matrices is the order of the top row.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .errors import ResourceGuardExceeded
from .linalg import nullspace_int

TOP = "top"
BOTTOM = "bottom"


@dataclass(frozen=True)
class Perm:
    """Pair of bijections alphabet -> {1..d}, stored as ordered rows."""

    top: tuple
    bottom: tuple

    def __post_init__(self):
        if len(self.top) < 2:
            raise ValueError("need at least 2 symbols")
        if len(set(self.top)) != len(self.top):
            raise ValueError("top row has repeated symbols")
        if set(self.top) != set(self.bottom) or len(self.top) != len(self.bottom):
            raise ValueError("rows must order the same alphabet")
        object.__setattr__(self, "top", tuple(self.top))
        object.__setattr__(self, "bottom", tuple(self.bottom))

    @property
    def d(self) -> int:
        return len(self.top)

    @property
    def alphabet(self) -> tuple:
        """Symbols in top-row order; the indexing order for all vectors."""
        return self.top

    def top_index(self, symbol) -> int:
        """pi_t(symbol), 1-based."""
        return self.top.index(symbol) + 1

    def bottom_index(self, symbol) -> int:
        """pi_b(symbol), 1-based."""
        return self.bottom.index(symbol) + 1

    @property
    def last_top(self):
        """alpha_t: the letter whose interval is rightmost in the domain."""
        return self.top[-1]

    @property
    def last_bottom(self):
        """alpha_b: the letter whose image interval is rightmost."""
        return self.bottom[-1]

    def __str__(self):
        return " ".join(map(str, self.top)) + " / " + " ".join(map(str, self.bottom))

    def to_json(self) -> dict:
        return {"top": list(self.top), "bottom": list(self.bottom)}

    @classmethod
    def from_json(cls, data) -> "Perm":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(data["top"]), tuple(data["bottom"]))


def monodromy(perm: Perm) -> dict:
    """The map pi_b o pi_t^{-1} as a dict {1..d} -> {1..d}."""
    return {perm.top_index(a): perm.bottom_index(a) for a in perm.alphabet}


def is_rotation_type(perm: Perm) -> bool:
    """True iff the monodromy is the cyclic shift i -> i + k + 1 (mod d) for some k."""
    d = perm.d
    m = monodromy(perm)
    return any(all((m[i] - 1) % d == (i + k) % d for i in range(1, d + 1)) for k in range(d))


def is_irreducible(perm: Perm) -> bool:
    """True iff no proper prefix {1..k} is invariant under the monodromy."""
    d = perm.d
    m = monodromy(perm)
    seen_max = 0
    for i in range(1, d):
        seen_max = max(seen_max, m[i])
        if seen_max <= i:
            return False
    return True


def omega_matrix(perm: Perm):
    """Antisymmetric intersection matrix, rows/cols in alphabet (top-row) order.

    Entry (alpha, beta) is +1 when alpha ends up after beta despite starting
    before it, -1 in the symmetric case, 0 otherwise.
    """
    letters = perm.alphabet
    t = {a: perm.top_index(a) for a in letters}
    b = {a: perm.bottom_index(a) for a in letters}

    def entry(a, c):
        if b[a] > b[c] and t[a] < t[c]:
            return 1
        if b[a] < b[c] and t[a] > t[c]:
            return -1
        return 0

    return tuple(tuple(entry(a, c) for c in letters) for a in letters)


def kernel_basis(perm: Perm):
    """Canonical integer basis of Ker(Omega) over the rationals.

    Empty for d = 2 rotation data; d - 2 vectors for rotation type.
    """
    return nullspace_int(omega_matrix(perm))


def successor(perm: Perm, kind: str) -> Perm:
    """Combinatorial datum after one Rauzy-Veech move of the given type.

    Top move: winner is the last top letter; the last bottom letter is
    reinserted in the bottom row right after the winner.  Bottom move is
    symmetric with the rows swapped.
    """
    if kind == TOP:
        winner = perm.last_top
        loser = perm.last_bottom
        row = list(perm.bottom[:-1])
        row.insert(row.index(winner) + 1, loser)
        return Perm(perm.top, tuple(row))
    if kind == BOTTOM:
        winner = perm.last_bottom
        loser = perm.last_top
        row = list(perm.top[:-1])
        row.insert(row.index(winner) + 1, loser)
        return Perm(tuple(row), perm.bottom)
    raise ValueError(f"unknown move type: {kind!r}")


def bottom_predecessor(perm: Perm) -> Perm:
    """The unique datum whose bottom-type successor is ``perm``.

    A bottom move keeps the bottom row and moves one top letter; undoing it
    sends the letter following the last bottom letter (in the top row) back
    to the end of the top row.
    """
    pivot = perm.last_bottom
    row = list(perm.top)
    i = row.index(pivot)
    if i + 1 >= len(row):
        raise ValueError("no bottom predecessor: pivot is last in the top row")
    moved = row.pop(i + 1)
    row.append(moved)
    return Perm(tuple(row), perm.bottom)


def canonical_rotation_perm(d: int) -> Perm:
    """Identity top row over A1..Ad, bottom row cyclically shifted by one."""
    if d < 2:
        raise ValueError("d must be >= 2")
    letters = tuple(f"A{i}" for i in range(1, d + 1)) if d > 4 else tuple("ABCD"[:d])
    return Perm(letters, letters[1:] + letters[:1])


@dataclass
class RauzyClass:
    """Closure of a permutation under both Rauzy moves, with the arc set."""

    perms: list = field(default_factory=list)
    arcs: list = field(default_factory=list)  # (from Perm, kind, to Perm)

    def __contains__(self, perm):
        return perm in set(self.perms)

    def __len__(self):
        return len(self.perms)

    def to_json(self) -> dict:
        index = {p: i for i, p in enumerate(self.perms)}
        return {
            "nodes": [p.to_json() for p in self.perms],
            "edges": [
                {"from": index[a], "type": kind, "to": index[b]}
                for a, kind, b in self.arcs
            ],
        }


def rauzy_class(perm: Perm, max_size: int = 100_000) -> RauzyClass:
    """BFS closure of ``perm`` under both successor moves.

    Discovery order is deterministic: FIFO, top move explored before bottom.
    """
    if not is_irreducible(perm):
        raise ValueError("Rauzy classes are defined for irreducible permutations")
    order = [perm]
    seen = {perm}
    arcs = []
    queue = deque([perm])
    while queue:
        current = queue.popleft()
        for kind in (TOP, BOTTOM):
            nxt = successor(current, kind)
            arcs.append((current, kind, nxt))
            if nxt not in seen:
                if len(seen) >= max_size:
                    raise ResourceGuardExceeded(
                        f"Rauzy class exceeds cap of {max_size} permutations"
                    )
                seen.add(nxt)
                order.append(nxt)
                queue.append(nxt)
    return RauzyClass(order, arcs)


def all_irreducible_perms(d: int, alphabet=None):
    """All irreducible combinatorial data over a fixed alphabet (identity top row)."""
    from itertools import permutations as iperm

    if alphabet is None:
        alphabet = canonical_rotation_perm(d).alphabet
    out = []
    for bottom in iperm(alphabet):
        p = Perm(tuple(alphabet), bottom)
        if is_irreducible(p):
            out.append(p)
    return out
