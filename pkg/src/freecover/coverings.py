"""Coverings of the bouquet: the integer-grid covering, its truncations,
path lifting, regularity analysis, and finite Cayley coverings.

The infinite grid covering of the two-petal bouquet is never materialized:
lifting a loop is a walk on the integer lattice, so it is exact for any
word and any start point.  Truncated grids are built as honest
LabeledGraphs.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import NamedTuple, Optional, Sequence, Union

from . import _kernels
from .graphs import (
    LabeledGraph,
    Perm,
    graph_label_automorphisms,
    perm_compose,
    rank,
    stallings_graph,
)
from .words import Word, abelianize, in_commutator_subgroup, word_to_text

__all__ = [
    "GridPoint",
    "DeckTranslation",
    "LiftWitness",
    "RegularityReport",
    "ArtinCertificate",
    "grid",
    "grid_lift",
    "lift_closes",
    "grid_basis",
    "artin_certificate",
    "homology_image_check",
    "lift_in_finite_covering",
    "is_regular",
    "cayley_covering",
    "deck_translations_check",
]


class GridPoint(NamedTuple):
    x: int
    y: int


class DeckTranslation(NamedTuple):
    dx: int
    dy: int


def grid(n: int) -> LabeledGraph:
    """Truncated grid on [0, n] x [0, n]: unit horizontal edges are labeled
    1 (pointing +x), vertical ones 2 (pointing +y), basepoint (0, 0)."""
    if n < 0:
        raise ValueError("grid size must be nonnegative")
    side = n + 1

    def vid(x: int, y: int) -> int:
        return y * side + x

    edges = []
    for y in range(side):
        for x in range(n):
            edges.append((vid(x, y), vid(x + 1, y), 1))
    for y in range(n):
        for x in range(side):
            edges.append((vid(x, y), vid(x, y + 1), 2))
    return LabeledGraph(side * side, tuple(edges), 0, 2)


def grid_lift(w: Word, start: GridPoint = GridPoint(0, 0)) -> GridPoint:
    """Endpoint of the lift of the loop w into the infinite grid, computed
    as a unit-step walk from start."""
    if w.rank != 2:
        raise ValueError("grid lifting is defined for rank-2 words")
    x, y = _kernels.walk_lattice(w.letters, int(start[0]), int(start[1]))
    return GridPoint(int(x), int(y))


def lift_closes(w: Word) -> bool:
    """True iff the grid lift of the loop w returns to its start point."""
    return grid_lift(w, GridPoint(0, 0)) == GridPoint(0, 0)


def grid_basis(n: int) -> list[Word]:
    """Free basis of the fundamental group of grid(n), read through the
    comb spanning tree (all vertical edges plus the bottom row).

    The non-tree edges are the horizontal edges off the bottom row; the
    word for the edge at column i, height j is a^i b^j a b^-j a^-(i+1),
    ordered with j outer and i inner.  There are exactly n^2 of them.
    """
    if n < 1:
        raise ValueError("grid_basis requires n >= 1")
    basis = []
    for j in range(1, n + 1):
        for i in range(n):
            letters = [1] * i + [2] * j + [1] + [-2] * j + [-1] * (i + 1)
            basis.append(Word(2, letters))
    return basis


@dataclass(frozen=True)
class ArtinCertificate:
    """Witness that the commutator subgroup of F_2 contains a free subgroup
    of rank n^2: the grid-basis words all have zero exponent sums, and
    their folded core graph has first Betti number exactly n^2."""

    n: int
    basis_count: int
    all_in_commutator: bool
    stallings_rank: int

    @property
    def conclusion(self) -> str:
        return (f"the commutator subgroup of F_2 contains a free subgroup of rank "
                f"{self.n * self.n}; the rank grows without bound with n, so the "
                f"subgroup is not finitely generated")

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "basis_count": self.basis_count,
            "all_in_commutator": self.all_in_commutator,
            "stallings_rank": self.stallings_rank,
            "conclusion": self.conclusion,
        }


def artin_certificate(n: int, bound: int = 5) -> ArtinCertificate:
    """Fold the grid-basis words and certify their subgroup rank.

    Bounded because the wedge graph grows with n and the word lengths.
    """
    if not (1 <= n <= bound):
        raise ValueError(f"n must be within 1..{bound} (resource limit)")
    basis = grid_basis(n)
    sg = stallings_graph(basis)
    return ArtinCertificate(
        n=n,
        basis_count=len(basis),
        all_in_commutator=all(in_commutator_subgroup(w) for w in basis),
        stallings_rank=rank(sg.graph),
    )


def homology_image_check(n: int) -> bool:
    """True iff every grid-basis word abelianizes to the zero vector, i.e.
    the basis of the truncation's first homology maps to zero downstairs."""
    if n < 1:
        raise ValueError("homology_image_check requires n >= 1")
    return all(abelianize(w) == (0, 0) for w in grid_basis(n))


# ---------------------------------------------------------------------------
# lifting in finite coverings


def _require_covering(g: LabeledGraph) -> None:
    if not g.is_covering():
        raise ValueError("graph is not a genuine covering of the bouquet "
                         "(some vertex is missing an edge for some label)")


def lift_in_finite_covering(g: LabeledGraph, w: Word, start: int) -> tuple[int, bool]:
    """Trace the unique lift of the loop w from the given fiber point.

    Returns (end vertex, whether the lift is closed)."""
    _require_covering(g)
    if w.rank != g.rank:
        raise ValueError("word rank does not match covering rank")
    if not (0 <= start < g.vertex_count):
        raise ValueError("start vertex out of range")
    v = start
    for letter in w.letters:
        v = g.step(v, int(letter))
    return v, v == start


class LiftWitness(NamedTuple):
    """A loop with one closed and one open lift in the same covering."""

    word: Word
    closed_at: int
    open_at: int


@dataclass(frozen=True)
class RegularityReport:
    covering_id: str
    condition_iii_holds: bool
    deck_transitive: bool
    deck_order: int
    sampled_witness: Optional[LiftWitness]
    condition_iii_exhaustive: bool

    def is_regular(self) -> bool:
        return self.deck_transitive

    def to_json(self) -> dict:
        witness = None
        if self.sampled_witness is not None:
            witness = {
                "word": word_to_text(self.sampled_witness.word),
                "closed_at": self.sampled_witness.closed_at,
                "open_at": self.sampled_witness.open_at,
            }
        return {
            "covering": self.covering_id,
            "condition_iii_holds": self.condition_iii_holds,
            "deck_transitive": self.deck_transitive,
            "deck_order": self.deck_order,
            "regular": self.deck_transitive,
            "witness": witness,
            "condition_iii_exhaustive": self.condition_iii_exhaustive,
        }


def _generator_perms(g: LabeledGraph) -> list[Perm]:
    return [tuple(g.step(v, l) for v in range(g.vertex_count))
            for l in range(1, g.rank + 1)]


def is_regular(g: LabeledGraph, word_budget: Optional[int] = None,
               name: Optional[str] = None,
               max_group: int = 200_000) -> RegularityReport:
    """Decide regularity of a finite covering of the bouquet two ways.

    Deck transitivity is exact: the label-preserving automorphisms are
    enumerated in full and the covering is regular iff they act
    transitively on the fiber (equivalently, iff there are as many as
    sheets).  The all-lifts-closed-or-none condition is tested through the
    orbit structure: every loop acts on the fiber through the finite
    permutation group generated by the one-letter actions, so it suffices
    to scan the group elements reachable by words up to the budget
    (default twice the fiber size) and flag any with a proper, nonempty
    fixed-point set.
    """
    _require_covering(g)
    m = g.vertex_count
    budget = 2 * m if word_budget is None else word_budget

    deck = graph_label_automorphisms(g)
    fiber_images = {p[g.basepoint] for p in deck}
    deck_transitive = len(fiber_images) == m

    gens: list[tuple[Perm, int]] = []
    for l, p in enumerate(_generator_perms(g), start=1):
        gens.append((p, l))
        gens.append((tuple(p.index(v) for v in range(m)), -l))

    ident = tuple(range(m))
    seen = {ident}
    frontier: deque[tuple[Perm, tuple[int, ...]]] = deque([(ident, ())])
    witness = None
    exhaustive = True
    while frontier and witness is None:
        p, word = frontier.popleft()
        if len(word) >= budget:
            exhaustive = False
            continue
        for q, sl in gens:
            np_ = perm_compose(p, q)
            if np_ in seen:
                continue
            if len(seen) >= max_group:
                raise ValueError("monodromy group exceeds the enumeration limit")
            seen.add(np_)
            new_word = word + (sl,)
            fixed = [v for v in range(m) if np_[v] == v]
            if 0 < len(fixed) < m:
                moved = next(v for v in range(m) if np_[v] != v)
                witness = LiftWitness(Word(g.rank, new_word), fixed[0], moved)
                break
            frontier.append((np_, new_word))

    return RegularityReport(
        covering_id=name or f"covering({m} sheets, rank {g.rank})",
        condition_iii_holds=witness is None,
        deck_transitive=deck_transitive,
        deck_order=len(deck),
        sampled_witness=witness,
        condition_iii_exhaustive=exhaustive or witness is not None,
    )


# ---------------------------------------------------------------------------
# Cayley coverings


def cayley_covering(group: Union[Sequence[int], str],
                    gen_images: Sequence) -> LabeledGraph:
    """Cayley graph of a finite group on the given generator images, as a
    covering of the bouquet with one sheet per group element.

    ``group`` is either a sequence of cyclic orders (finite abelian case,
    with images given as integer tuples) or the string "perm" (the group
    generated by the given permutations).  Vertex 0 is the identity.
    """
    if not gen_images:
        raise ValueError("need at least one generator image")
    k = len(gen_images)

    if group == "perm":
        m = len(gen_images[0])
        images = [tuple(int(x) for x in p) for p in gen_images]
        for p in images:
            if sorted(p) != list(range(m)):
                raise ValueError(f"not a permutation: {p}")
        ident = tuple(range(m))
        elements = [ident]
        pos = {ident: 0}
        queue = deque([ident])
        while queue:
            e = queue.popleft()
            for p in images:
                ne = perm_compose(e, p)
                if ne not in pos:
                    pos[ne] = len(elements)
                    elements.append(ne)
                    queue.append(ne)
        # closure under generators of a finite set of bijections is a group
        edges = tuple((pos[e], pos[perm_compose(e, p)], j + 1)
                      for j, p in enumerate(images) for e in elements)
        return LabeledGraph(len(elements), edges, 0, k)

    orders = tuple(int(m) for m in group)
    if not orders or any(m < 1 for m in orders):
        raise ValueError("abelian group spec needs positive cyclic orders")
    images = []
    for img in gen_images:
        t = tuple(int(x) % m for x, m in zip(tuple(img), orders))
        if len(tuple(img)) != len(orders):
            raise ValueError("generator image has wrong length for the group")
        images.append(t)
    elements = list(product(*(range(m) for m in orders)))
    pos = {e: i for i, e in enumerate(elements)}

    def add(e, im):
        return tuple((a + b) % m for a, b, m in zip(e, im, orders))

    reached = {elements[0]}
    queue = deque([elements[0]])
    while queue:
        e = queue.popleft()
        for im in images:
            for ne in (add(e, im), tuple((a - b) % m for a, b, m in zip(e, im, orders))):
                if ne not in reached:
                    reached.add(ne)
                    queue.append(ne)
    if len(reached) != len(elements):
        raise ValueError("images do not generate the group (covering would be disconnected)")
    edges = tuple((pos[e], pos[add(e, im)], j + 1)
                  for j, im in enumerate(images) for e in elements)
    return LabeledGraph(len(elements), edges, 0, k)


# ---------------------------------------------------------------------------
# deck translations of the infinite grid


def deck_translations_check(num_samples: int = 100, seed: int = 0) -> bool:
    """Exact integer identities behind the grid covering's regularity.

    Samples words w, start points s, and translations t, and checks that
    translating commutes with lifting, that lift closure does not depend on
    the start point, and that any two fiber points are connected by exactly
    one translation."""
    rng = random.Random(seed)
    for _ in range(num_samples):
        length = rng.randrange(0, 30)
        w = Word(2, [rng.choice((1, -1, 2, -2)) for _ in range(length)])
        s = GridPoint(rng.randrange(-50, 51), rng.randrange(-50, 51))
        t = DeckTranslation(rng.randrange(-50, 51), rng.randrange(-50, 51))
        shifted = GridPoint(s.x + t.dx, s.y + t.dy)
        end_s = grid_lift(w, s)
        end_shifted = grid_lift(w, shifted)
        if end_shifted != GridPoint(end_s.x + t.dx, end_s.y + t.dy):
            return False
        if (end_s == s) != (end_shifted == shifted):
            return False
        if (end_s == s) != lift_closes(w):
            return False
        p = GridPoint(rng.randrange(-50, 51), rng.randrange(-50, 51))
        q = GridPoint(rng.randrange(-50, 51), rng.randrange(-50, 51))
        t_pq = DeckTranslation(q.x - p.x, q.y - p.y)
        if GridPoint(p.x + t_pq.dx, p.y + t_pq.dy) != q:
            return False
        # uniqueness: a translation is determined by where it sends p
        other = DeckTranslation(t_pq.dx + rng.randrange(1, 5), t_pq.dy)
        if GridPoint(p.x + other.dx, p.y + other.dy) == q:
            return False
    return True
