"""Generator-labeled directed multigraphs over the bouquet of k loops.

Vertices are ``0..vertex_count-1`` and edges are ``(src, dst, label)`` with
1-based labels.  Traversing an edge forward reads its generator, backward
the inverse, so a graph whose every vertex has exactly one outgoing and one
incoming edge per label is a covering of the bouquet.

Every deterministic algorithm here walks edges in one canonical order:
label ascending, forward edge before reverse edge, insertion order as the
final tiebreak.  Graphs are immutable after construction; folding builds a
new graph.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence, Union

from .words import Word, word_to_text

__all__ = [
    "INFINITE",
    "LabeledGraph",
    "SubgroupGraph",
    "NsCertificate",
    "bouquet",
    "fold",
    "stallings_graph",
    "membership",
    "index",
    "cycle_basis",
    "rank",
    "coset_graph",
    "ns_check",
    "canonical_form",
    "graph_to_json",
    "graph_from_json",
    "graph_to_dot",
    "graph_label_automorphisms",
    "perm_compose",
    "perm_inverse",
    "identity_perm",
]


class _Infinite:
    """Explicit infinite-index marker (never a sentinel integer)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"


INFINITE = _Infinite()

Edge = tuple[int, int, int]


@dataclass(frozen=True)
class LabeledGraph:
    vertex_count: int
    edges: tuple[Edge, ...]
    basepoint: int
    rank: int

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("graph needs at least one vertex")
        if not (0 <= self.basepoint < self.vertex_count):
            raise ValueError("basepoint out of range")
        if self.rank < 0:
            raise ValueError("rank must be nonnegative")
        object.__setattr__(self, "edges", tuple((int(s), int(d), int(l)) for s, d, l in self.edges))
        for s, d, l in self.edges:
            if not (0 <= s < self.vertex_count and 0 <= d < self.vertex_count):
                raise ValueError(f"edge endpoint out of range: {(s, d, l)}")
            if not (1 <= l <= self.rank):
                raise ValueError(f"edge label out of range: {(s, d, l)}")

    @cached_property
    def _out(self) -> dict[tuple[int, int], list[tuple[int, int]]]:
        # (vertex, label) -> [(dst, edge index)] in insertion order
        m: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for i, (s, d, l) in enumerate(self.edges):
            m.setdefault((s, l), []).append((d, i))
        return m

    @cached_property
    def _in(self) -> dict[tuple[int, int], list[tuple[int, int]]]:
        m: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for i, (s, d, l) in enumerate(self.edges):
            m.setdefault((d, l), []).append((s, i))
        return m

    def steps(self, v: int):
        """Canonical neighbor sweep: (neighbor, edge index, signed label)."""
        for l in range(1, self.rank + 1):
            for dst, i in self._out.get((v, l), ()):
                yield dst, i, l
            for src, i in self._in.get((v, l), ()):
                yield src, i, -l

    def step(self, v: int, letter: int) -> Optional[int]:
        """Unique traversal of the signed letter from v, or None.

        Requires foldedness for uniqueness; raises if the step is ambiguous.
        """
        table = self._out if letter > 0 else self._in
        hits = table.get((v, abs(letter)), ())
        if not hits:
            return None
        if len(hits) > 1:
            raise ValueError("ambiguous step: graph is not folded")
        return hits[0][0]

    def reachable(self, start: Optional[int] = None) -> list[int]:
        """Vertices reachable from start ignoring direction, BFS order."""
        if start is None:
            start = self.basepoint
        seen = [False] * self.vertex_count
        seen[start] = True
        order = [start]
        queue = deque([start])
        while queue:
            v = queue.popleft()
            for w, _, _ in self.steps(v):
                if not seen[w]:
                    seen[w] = True
                    order.append(w)
                    queue.append(w)
        return order

    def is_connected(self) -> bool:
        return len(self.reachable()) == self.vertex_count

    def is_folded(self) -> bool:
        return all(len(v) == 1 for v in self._out.values()) and \
            all(len(v) == 1 for v in self._in.values())

    def is_covering(self) -> bool:
        """Every vertex has exactly one in- and one out-edge per label."""
        for v in range(self.vertex_count):
            for l in range(1, self.rank + 1):
                if len(self._out.get((v, l), ())) != 1:
                    return False
                if len(self._in.get((v, l), ())) != 1:
                    return False
        return True

    def degree(self, v: int) -> int:
        return sum((s == v) + (d == v) for s, d, _ in self.edges)


def bouquet(k: int) -> LabeledGraph:
    """One vertex with k labeled loops; its loops read the k generators."""
    if k < 1:
        raise ValueError("bouquet needs k >= 1")
    return LabeledGraph(1, tuple((0, 0, l) for l in range(1, k + 1)), 0, k)


# ---------------------------------------------------------------------------
# folding


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def fold(g: LabeledGraph) -> LabeledGraph:
    """Identify equal-label edges sharing a source (or destination) until
    none remain.  The result is folded and carries the same subgroup; the
    quotient partition is unique, so the output does not depend on merge
    order."""
    if not g.is_connected():
        raise ValueError("fold requires a connected graph")
    uf = _UnionFind(g.vertex_count)
    changed = True
    while changed:
        changed = False
        for key_end, val_end in ((0, 1), (1, 0)):
            seen: dict[tuple[int, int], int] = {}
            for e in g.edges:
                key = (uf.find(e[key_end]), e[2])
                val = uf.find(e[val_end])
                if key in seen:
                    if uf.union(seen[key], val):
                        changed = True
                    seen[key] = uf.find(val)
                else:
                    seen[key] = val
    roots = sorted({uf.find(v) for v in range(g.vertex_count)},
                   key=lambda r: min(v for v in range(g.vertex_count) if uf.find(v) == r))
    new_id = {r: i for i, r in enumerate(roots)}
    merged = sorted({(new_id[uf.find(s)], new_id[uf.find(d)], l) for s, d, l in g.edges},
                    key=lambda e: (e[2], e[0], e[1]))
    return LabeledGraph(len(roots), tuple(merged), new_id[uf.find(g.basepoint)], g.rank)


def _prune_core(g: LabeledGraph) -> LabeledGraph:
    """Drop non-basepoint vertices of total degree <= 1, repeatedly."""
    alive = [True] * g.vertex_count
    edges = list(g.edges)
    while True:
        deg = [0] * g.vertex_count
        for s, d, _ in edges:
            deg[s] += 1
            deg[d] += 1
        victims = [v for v in range(g.vertex_count)
                   if alive[v] and v != g.basepoint and deg[v] <= 1]
        if not victims:
            break
        for v in victims:
            alive[v] = False
        dead = set(victims)
        edges = [e for e in edges if e[0] not in dead and e[1] not in dead]
    remap = {}
    for v in range(g.vertex_count):
        if alive[v]:
            remap[v] = len(remap)
    return LabeledGraph(len(remap),
                        tuple((remap[s], remap[d], l) for s, d, l in edges),
                        remap[g.basepoint], g.rank)


@dataclass(frozen=True)
class SubgroupGraph:
    """Folded core graph canonically representing a finitely generated
    subgroup of the free group, pinned at the basepoint."""

    graph: LabeledGraph
    origin: tuple[Word, ...] = field(default=())


def stallings_graph(words: Sequence[Word], rank: Optional[int] = None) -> SubgroupGraph:
    """Core graph of the subgroup generated by the given words.

    Wedges each word-path at a basepoint, folds, then prunes hanging trees.
    Output is deterministic for a fixed input order.  An empty (or
    all-identity) generator list yields the one-vertex trivial subgroup
    graph; its ambient rank must then be passed explicitly.
    """
    words = list(words)
    ranks = {w.rank for w in words}
    if len(ranks) > 1:
        raise ValueError("generator words must share one rank")
    if rank is None:
        if not ranks:
            raise ValueError("rank is required for an empty generator list")
        rank = ranks.pop()
    elif ranks and ranks.pop() != rank:
        raise ValueError("explicit rank disagrees with the words")

    edges: list[Edge] = []
    n = 1
    for w in words:
        if w.is_identity():
            continue
        prev = 0
        for pos, g in enumerate(w.letters):
            cur = 0 if pos == len(w.letters) - 1 else n
            if cur != 0:
                n += 1
            if g > 0:
                edges.append((prev, cur, int(g)))
            else:
                edges.append((cur, prev, -int(g)))
            prev = cur
    wedge = LabeledGraph(n, tuple(edges), 0, rank)
    core = _prune_core(fold(wedge))
    return SubgroupGraph(core, tuple(words))


def _unwrap(sg_or_graph: Union[SubgroupGraph, LabeledGraph]) -> LabeledGraph:
    return sg_or_graph.graph if isinstance(sg_or_graph, SubgroupGraph) else sg_or_graph


def membership(sg: Union[SubgroupGraph, LabeledGraph], w: Word) -> bool:
    """True iff w traces a closed loop at the basepoint."""
    g = _unwrap(sg)
    if w.rank != g.rank:
        raise ValueError("word rank does not match graph rank")
    v = g.basepoint
    for letter in w.letters:
        v = g.step(v, int(letter))
        if v is None:
            return False
    return v == g.basepoint


def index(sg: Union[SubgroupGraph, LabeledGraph]):
    """Subgroup index: the fiber cardinality when the graph is a genuine
    covering of the bouquet, INFINITE otherwise."""
    g = _unwrap(sg)
    return g.vertex_count if g.is_covering() else INFINITE


# ---------------------------------------------------------------------------
# spanning trees and cycle bases


def _bfs_tree(g: LabeledGraph) -> tuple[list[int], dict[int, tuple[int, int, int]], set[int]]:
    """Canonical breadth-first tree from the basepoint.

    Returns (discovery order, parent map v -> (parent, edge idx, signed
    label), tree edge indices).  Raises on disconnected input.
    """
    parent: dict[int, tuple[int, int, int]] = {}
    order = [g.basepoint]
    seen = {g.basepoint}
    queue = deque([g.basepoint])
    tree_edges: set[int] = set()
    while queue:
        v = queue.popleft()
        for w, i, sl in g.steps(v):
            if w not in seen:
                seen.add(w)
                parent[w] = (v, i, sl)
                tree_edges.add(i)
                order.append(w)
                queue.append(w)
    if len(order) != g.vertex_count:
        raise ValueError("graph is not connected")
    return order, parent, tree_edges


def _paths_from_base(g: LabeledGraph, order: list[int],
                     parent: dict[int, tuple[int, int, int]]) -> dict[int, list[int]]:
    paths: dict[int, list[int]] = {g.basepoint: []}
    for v in order:
        if v == g.basepoint:
            continue
        p, _, sl = parent[v]
        paths[v] = paths[p] + [sl]
    return paths


def cycle_basis(g: LabeledGraph) -> list[Word]:
    """Free basis of the fundamental group of g read through edge labels.

    One word per non-tree edge e = (u, v, l): the tree path to u, then l,
    then the reversed tree path from v.  Non-tree edges are taken in
    insertion order; the count is always E - V + 1.
    """
    order, parent, tree_edges = _bfs_tree(g)
    paths = _paths_from_base(g, order, parent)
    basis = []
    for i, (u, v, l) in enumerate(g.edges):
        if i in tree_edges:
            continue
        letters = paths[u] + [l] + [-x for x in reversed(paths[v])]
        basis.append(Word(g.rank, letters))
    return basis


def rank(g: LabeledGraph) -> int:
    """E - V + 1 for a connected graph (first Betti number)."""
    if not g.is_connected():
        raise ValueError("rank requires a connected graph")
    return len(g.edges) - g.vertex_count + 1


# ---------------------------------------------------------------------------
# permutations and coset graphs

Perm = tuple[int, ...]


def identity_perm(m: int) -> Perm:
    return tuple(range(m))


def perm_compose(p: Perm, q: Perm) -> Perm:
    """Apply p first, then q."""
    return tuple(q[p[i]] for i in range(len(p)))


def perm_inverse(p: Perm) -> Perm:
    out = [0] * len(p)
    for i, j in enumerate(p):
        out[j] = i
    return tuple(out)


def _check_perm(p: Sequence[int], m: int) -> Perm:
    t = tuple(int(x) for x in p)
    if len(t) != m or sorted(t) != list(range(m)):
        raise ValueError(f"not a permutation of {m} points: {p}")
    return t


def coset_graph(perms: Sequence[Sequence[int]], basepoint: int = 0) -> LabeledGraph:
    """Schreier graph of a transitive action: vertex i carries an edge
    (i, perms[j](i), j+1) for each generator j.  Always a covering of the
    bouquet with fiber size m."""
    if not perms:
        raise ValueError("need at least one permutation")
    m = len(perms[0])
    ps = [_check_perm(p, m) for p in perms]
    edges = tuple((i, p[i], j + 1) for j, p in enumerate(ps) for i in range(m))
    g = LabeledGraph(m, edges, basepoint, len(ps))
    if not g.is_connected():
        raise ValueError("action is not transitive")
    return g


@dataclass(frozen=True)
class NsCertificate:
    """Rank-index certificate for a subgroup of the free group F_k.

    For finite index the claim is rank == (k-1)*index + 1; for infinite
    index no finite rank is predicted and ``subgroup_rank`` is only the
    lower bound read off the core graph.
    """

    k: int
    index: object  # int or INFINITE
    subgroup_rank: int
    formula_holds: Optional[bool]
    note: str = ""

    def expected_rank(self) -> Optional[int]:
        if self.index is INFINITE:
            return None
        return (self.k - 1) * self.index + 1

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "index": "INFINITE" if self.index is INFINITE else self.index,
            "rank": self.subgroup_rank,
            "expected_rank": self.expected_rank(),
            "formula_holds": self.formula_holds,
            "note": self.note,
        }


def ns_check(k: int, sg_or_graph: Union[SubgroupGraph, LabeledGraph]) -> NsCertificate:
    """Certify rank == (k-1)*index + 1 on a subgroup/covering graph."""
    g = _unwrap(sg_or_graph)
    if g.rank != k:
        raise ValueError(f"graph rank {g.rank} does not match k={k}")
    idx = index(g)
    r = rank(g)
    if idx is INFINITE:
        return NsCertificate(k, INFINITE, r, None,
                             "infinite index: no finite rank is predicted; "
                             "the reported rank is the core-graph lower bound")
    return NsCertificate(k, idx, r, r == (k - 1) * idx + 1)


# ---------------------------------------------------------------------------
# canonical forms and automorphisms


def canonical_form(g: LabeledGraph) -> LabeledGraph:
    """Relabel vertices in canonical BFS discovery order from the basepoint
    and sort edges; folded graphs get identical canonical forms iff they
    present the same subgroup."""
    if not g.is_folded():
        raise ValueError("canonical_form requires a folded graph")
    order, _, _ = _bfs_tree(g)
    new_id = {v: i for i, v in enumerate(order)}
    edges = sorted(((new_id[s], new_id[d], l) for s, d, l in g.edges),
                   key=lambda e: (e[2], e[0], e[1]))
    return LabeledGraph(g.vertex_count, tuple(edges), 0, g.rank)


def graph_label_automorphisms(g: LabeledGraph) -> list[Perm]:
    """All label-preserving automorphisms of a folded connected graph.

    Each automorphism is determined by the image of the basepoint, so the
    enumeration tries every vertex as that image and extends along the
    canonical sweep.  For covering graphs these are exactly the deck
    transformations."""
    if not g.is_folded():
        raise ValueError("automorphism enumeration requires a folded graph")
    order, _, _ = _bfs_tree(g)
    autos: list[Perm] = []
    for target in range(g.vertex_count):
        img: dict[int, int] = {g.basepoint: target}
        ok = True
        for v in order:
            if not ok:
                break
            for w, _, sl in g.steps(v):
                u = g.step(img[v], sl)
                # v is mapped before its sweep runs: BFS order guarantees it
                if u is None:
                    ok = False
                    break
                if w in img:
                    if img[w] != u:
                        ok = False
                        break
                else:
                    img[w] = u
        if not ok or len(img) != g.vertex_count:
            continue
        values = sorted(img.values())
        if values != list(range(g.vertex_count)):
            continue
        autos.append(tuple(img[v] for v in range(g.vertex_count)))
    return autos


# ---------------------------------------------------------------------------
# serialization


def graph_to_json(g: LabeledGraph) -> str:
    payload = {
        "rank": g.rank,
        "vertices": g.vertex_count,
        "basepoint": g.basepoint,
        "edges": [[s, d, l] for s, d, l in g.edges],
    }
    return json.dumps(payload)


def graph_from_json(text: str) -> LabeledGraph:
    data = json.loads(text)
    try:
        return LabeledGraph(int(data["vertices"]),
                            tuple((int(s), int(d), int(l)) for s, d, l in data["edges"]),
                            int(data["basepoint"]), int(data["rank"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed graph JSON: {exc}") from exc


def _label_letter(l: int) -> str:
    return chr(ord("a") + l - 1) if l <= 26 else f"g{l}"


def graph_to_dot(g: LabeledGraph) -> str:
    """DOT text, one line per edge, basepoint emphasized, sorted edges."""
    lines = ["digraph covering {"]
    lines.append(f'  {g.basepoint} [shape=doublecircle];')
    for s, d, l in sorted(g.edges, key=lambda e: (e[2], e[0], e[1])):
        lines.append(f'  {s} -> {d} [label="{_label_letter(l)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
