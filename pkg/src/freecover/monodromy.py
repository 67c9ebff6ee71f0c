"""Numerical monodromy of a polynomial covering of the punctured plane.

A monic polynomial p with simple critical points restricts to a covering
away from its critical values (removed downstairs) and their full
preimages (removed upstairs).  Loops around the target punctures permute
the fiber; the permutations are computed by continuing the whole fiber
along polygonal loops with an adaptive Newton corrector.

Conventions, fixed once:
  - fiber roots are indexed in lexicographic order by (real, imaginary
    part), rounded at 1e-9;
  - a loop's permutation sends sheet i to the index its root lands on;
  - traversing loop one then loop two composes as "apply perm one, then
    perm two".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .graphs import (
    Perm,
    coset_graph,
    graph_label_automorphisms,
    identity_perm,
    perm_compose,
    rank,
    NsCertificate,
)

__all__ = [
    "PolyCovering",
    "MonodromyReport",
    "ContinuationError",
    "build_covering",
    "fiber_at",
    "continue_root",
    "continue_fiber",
    "puncture_loop",
    "fiber_permutation",
    "monodromy",
    "ns_crosscheck",
]

ROOT_TOL = 1e-12
END_RESIDUAL_TOL = 1e-9
CLUSTER_TOL = 1e-5
DEFAULT_MIN_CLEARANCE = 1e-3
MIN_SUBSTEP = 1e-12
SAMPLES_PER_SIDE = 16


class ContinuationError(RuntimeError):
    """Root tracking could not be completed (reported, never silent)."""


def _sort_key(z: complex) -> tuple[float, float]:
    return (round(z.real, 9), round(z.imag, 9))


def _canonical(values: Sequence[complex]) -> tuple[complex, ...]:
    return tuple(sorted((complex(z) for z in values), key=_sort_key))


def _polyval(coeffs: np.ndarray, z: complex) -> complex:
    out = coeffs[0]
    for c in coeffs[1:]:
        out = out * z + c
    return complex(out)


def _roots(coeffs: np.ndarray) -> np.ndarray:
    return _kernels.durand_kerner(np.asarray(coeffs, dtype=np.complex128),
                                  ROOT_TOL, 400)


def _newton_polish(coeffs: np.ndarray, dcoeffs: np.ndarray, z: complex,
                   iters: int = 40) -> complex:
    for _ in range(iters):
        pv = _polyval(coeffs, z)
        if abs(pv) <= ROOT_TOL:
            break
        dv = _polyval(dcoeffs, z)
        if dv == 0:
            break
        z = z - pv / dv
    return z


def _cluster(values: np.ndarray, tol: float) -> list[tuple[complex, int]]:
    """Group near-coincident roots: (cluster mean, multiplicity)."""
    remaining = sorted((complex(z) for z in values), key=_sort_key)
    clusters: list[tuple[complex, int]] = []
    while remaining:
        z = remaining.pop(0)
        members = [z]
        rest = []
        for u in remaining:
            if abs(u - z) <= tol:
                members.append(u)
            else:
                rest.append(u)
        remaining = rest
        mean = sum(members) / len(members)
        clusters.append((mean, len(members)))
    return clusters


@dataclass(frozen=True)
class PolyCovering:
    """A monic polynomial with its branching data.

    ``preimages_of_critical_values[i]`` records the full fiber over
    ``critical_values[i]`` as (point, multiplicity) pairs; the union of
    those points forms the domain punctures.
    """

    coefficients: tuple[complex, ...]
    critical_points: tuple[complex, ...]
    critical_values: tuple[complex, ...]
    preimages_of_critical_values: tuple[tuple[tuple[complex, int], ...], ...]
    punctures_domain: tuple[complex, ...]
    punctures_target: tuple[complex, ...]

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def _coeff_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=np.complex128)

    def _dcoeff_array(self) -> np.ndarray:
        c = self._coeff_array()
        d = len(c) - 1
        return c[:-1] * np.arange(d, 0, -1)

    def value(self, z: complex) -> complex:
        return _polyval(self._coeff_array(), z)


def build_covering(coeffs: Sequence[complex], tol: float = ROOT_TOL) -> PolyCovering:
    """Assemble the covering data of a monic polynomial of degree >= 2.

    Critical points come from simultaneous root iteration on the
    derivative (polished by Newton); they must be simple.  Each critical
    value's full preimage is recovered by root clustering, which also
    yields the multiplicities.
    """
    c = np.asarray([complex(x) for x in coeffs], dtype=np.complex128)
    if len(c) < 3:
        raise ValueError("need degree >= 2")
    if abs(c[0] - 1) > 1e-12:
        raise ValueError("polynomial must be monic")
    d = len(c) - 1
    dc = c[:-1] * np.arange(d, 0, -1)
    ddc = dc[:-1] * np.arange(d - 1, 0, -1) if d >= 2 else np.asarray([], np.complex128)

    crit = _roots(dc)
    crit = np.asarray([_newton_polish(dc, ddc, complex(z)) for z in crit])
    for i in range(len(crit)):
        for j in range(i + 1, len(crit)):
            if abs(crit[i] - crit[j]) < 1e-6:
                raise ValueError("repeated critical points are unsupported")
    crit_sorted = _canonical(crit)

    scale = max(1.0, max(abs(z) for z in crit_sorted))
    values = []
    for z in crit_sorted:
        values.append(complex(_polyval(c, z)))
    crit_values: list[complex] = []
    for v in sorted(values, key=_sort_key):
        if all(abs(v - u) > 1e-9 * scale for u in crit_values):
            crit_values.append(v)

    preimages = []
    domain: list[complex] = []
    for v in crit_values:
        shifted = c.copy()
        shifted[-1] -= v
        fiber_roots = _roots(shifted)
        clusters = _cluster(fiber_roots, CLUSTER_TOL * scale)
        polished = []
        for z, mult in clusters:
            if mult == 1:
                z = _newton_polish(shifted, dc, z)
            else:
                # a multiple root of p - v is a root of p', already polished
                z = min(crit_sorted, key=lambda w: abs(w - z))
            polished.append((complex(z), mult))
        polished.sort(key=lambda pair: _sort_key(pair[0]))
        preimages.append(tuple(polished))
        for z, _ in polished:
            if all(abs(z - u) > 1e-9 * scale for u in domain):
                domain.append(z)

    return PolyCovering(
        coefficients=tuple(complex(x) for x in c),
        critical_points=crit_sorted,
        critical_values=tuple(crit_values),
        preimages_of_critical_values=tuple(preimages),
        punctures_domain=_canonical(domain),
        punctures_target=tuple(crit_values),
    )


def fiber_at(cov: PolyCovering, z: complex) -> tuple[complex, ...]:
    """The d roots of p(w) = z in canonical order; z must avoid the
    target punctures."""
    if any(abs(z - v) < 1e-9 for v in cov.punctures_target):
        raise ValueError("requested fiber over a puncture")
    shifted = cov._coeff_array()
    shifted[-1] -= z
    dc = cov._dcoeff_array()
    roots = [_newton_polish(shifted, dc, complex(r)) for r in _roots(shifted)]
    return _canonical(roots)


def _segment_clearance(a: complex, b: complex, z: complex) -> float:
    """Distance from point z to segment [a, b]."""
    ab = b - a
    denom = abs(ab) ** 2
    if denom == 0:
        return abs(z - a)
    t = ((z - a).real * ab.real + (z - a).imag * ab.imag) / denom
    t = min(1.0, max(0.0, t))
    return abs(z - (a + t * ab))


def _path_clearance(path: Sequence[complex], punctures: Sequence[complex]) -> float:
    best = float("inf")
    for a, b in zip(path, path[1:]):
        for z in punctures:
            best = min(best, _segment_clearance(a, b, z))
    return best


def continue_fiber(cov: PolyCovering, path: Sequence[complex],
                   fiber: Sequence[complex],
                   min_clearance: float = DEFAULT_MIN_CLEARANCE,
                   ) -> tuple[tuple[complex, ...], float]:
    """Continue the whole fiber along a polyline; returns (end fiber in
    tracked order, minimum pairwise separation seen)."""
    pts = [complex(z) for z in path]
    if len(pts) < 2:
        return tuple(complex(z) for z in fiber), float("inf")
    clearance = _path_clearance(pts, cov.punctures_target)
    if clearance < min_clearance:
        raise ContinuationError(
            f"path passes within {clearance:.3g} of a target puncture "
            f"(min clearance {min_clearance:.3g})")
    end, status, min_sep = _kernels.track_fiber(
        cov._coeff_array(), cov._dcoeff_array(),
        np.asarray(pts, dtype=np.complex128),
        np.asarray(fiber, dtype=np.complex128),
        ROOT_TOL, MIN_SUBSTEP)
    if status != 0:
        raise ContinuationError("substep underflow while tracking the fiber")
    return tuple(complex(z) for z in end), float(min_sep)


def continue_root(cov: PolyCovering, path: Sequence[complex], start_root: complex,
                  min_clearance: float = DEFAULT_MIN_CLEARANCE) -> complex:
    """Track one root of p(w) = path[0] along the path.

    The whole fiber is continued so the tracked root can be kept separated
    from its neighbors; the end value satisfies |p(end) - path[-1]| <= 1e-9.
    """
    pts = [complex(z) for z in path]
    if not pts:
        raise ValueError("empty path")
    if abs(_polyval(cov._coeff_array(), complex(start_root)) - pts[0]) > 1e-6:
        raise ValueError("start_root does not lie over the path start")
    start_fiber = fiber_at(cov, pts[0])
    dists = [abs(complex(start_root) - z) for z in start_fiber]
    idx = int(np.argmin(dists))
    sep = (min(abs(a - b) for i, a in enumerate(start_fiber) for b in start_fiber[i + 1:])
           if len(start_fiber) > 1 else float("inf"))
    if dists[idx] > 0.5 * sep:
        raise ValueError("start_root does not match any fiber point")
    if len(pts) < 2:
        return start_fiber[idx]
    end, _ = continue_fiber(cov, pts, start_fiber, min_clearance)
    result = end[idx]
    if abs(_polyval(cov._coeff_array(), result) - pts[-1]) > END_RESIDUAL_TOL:
        raise ContinuationError("end residual above tolerance")
    return result


# ---------------------------------------------------------------------------
# loops and permutations


def puncture_loop(cov: PolyCovering, puncture: complex,
                  base_value: complex) -> list[complex]:
    """Polygonal loop around one target puncture, based at base_value.

    A straight spoke runs from the base to the boundary of an axis-aligned
    square centered at the puncture (half-width half the distance to the
    nearest other puncture), the square is traversed counterclockwise with
    a fixed number of samples per side, and the spoke is retraced.
    """
    c = complex(puncture)
    others = [complex(v) for v in cov.punctures_target if abs(complex(v) - c) > 1e-12]
    if others:
        h = 0.5 * min(abs(v - c) for v in others)
    else:
        h = 0.5 * abs(complex(base_value) - c)
    if h <= 0:
        raise ValueError("cannot build a loop of zero size")
    u = complex(base_value) - c
    m = max(abs(u.real), abs(u.imag))
    if m <= h:
        raise ValueError("base point lies inside the loop square")
    entry = c + u * (h / m)

    corners = [c + h * (1 + 1j), c + h * (-1 + 1j), c + h * (-1 - 1j), c + h * (1 - 1j)]

    def on_side(p: complex, a: complex, b: complex) -> bool:
        return abs(_segment_clearance(a, b, p)) < 1e-12

    # find the ccw side [corner[i] -> corner[i+1]] containing the entry point
    side = next(i for i in range(4)
                if on_side(entry, corners[i], corners[(i + 1) % 4]))
    ring: list[complex] = [entry]
    anchors = [corners[(side + 1 + j) % 4] for j in range(4)] + [entry]
    for a, b in zip([entry] + anchors[:-1], anchors):
        for s in range(1, SAMPLES_PER_SIDE + 1):
            ring.append(a + (b - a) * (s / SAMPLES_PER_SIDE))
    return [complex(base_value)] + ring + [complex(base_value)]


def fiber_permutation(cov: PolyCovering, path: Sequence[complex],
                      fiber: Sequence[complex],
                      min_clearance: float = DEFAULT_MIN_CLEARANCE) -> Perm:
    """Permutation induced on the (closed-path) fiber: sheet i lands on
    sheet perm[i]."""
    end, _ = continue_fiber(cov, path, fiber, min_clearance)
    fib = [complex(z) for z in fiber]
    sep = min(abs(a - b) for i, a in enumerate(fib) for b in fib[i + 1:]) if len(fib) > 1 else float("inf")
    images = []
    for z in end:
        dists = [abs(z - w) for w in fib]
        j = int(np.argmin(dists))
        if dists[j] > 0.5 * sep:
            raise ContinuationError("end fiber does not match the start fiber")
        images.append(j)
    if sorted(images) != list(range(len(fib))):
        raise ContinuationError("tracked fiber did not return to a permutation of itself")
    return tuple(images)


@dataclass(frozen=True)
class MonodromyReport:
    """Everything the loop analysis of one polynomial covering produced."""

    base_value: complex
    fiber: tuple[complex, ...]
    punctures_target: tuple[complex, ...]
    punctures_domain: tuple[complex, ...]
    critical_values: tuple[complex, ...]
    loop_perms: tuple[Perm, ...]
    transitive: bool
    deck_elements: tuple[Perm, ...]
    stabilizer_rank: int
    traces: Optional[tuple[tuple[tuple[float, tuple[complex, ...]], ...], ...]] = None

    @property
    def sheet_count(self) -> int:
        return len(self.fiber)

    def to_json(self) -> dict:
        def c2(z: complex) -> list[float]:
            return [float(z.real), float(z.imag)]

        return {
            "base_value": c2(self.base_value),
            "fiber": [c2(z) for z in self.fiber],
            "punctures_target": [c2(z) for z in self.punctures_target],
            "punctures_domain": [c2(z) for z in self.punctures_domain],
            "critical_values": [c2(z) for z in self.critical_values],
            "loop_perms": [list(p) for p in self.loop_perms],
            "transitive": self.transitive,
            "deck_elements": [list(p) for p in self.deck_elements],
            "stabilizer_rank": self.stabilizer_rank,
            "sheet_count": self.sheet_count,
        }


def _orbit_transitive(perms: Sequence[Perm], m: int) -> bool:
    reached = {0}
    frontier = [0]
    while frontier:
        v = frontier.pop()
        for p in perms:
            for w in (p[v], p.index(v)):
                if w not in reached:
                    reached.add(w)
                    frontier.append(w)
    return len(reached) == m


def _centralizer(perms: Sequence[Perm], m: int) -> list[Perm]:
    """Brute-force centralizer of the generated group in the symmetric
    group on m points (m is small for coverings at desk scale)."""
    if m > 8:
        raise ValueError("centralizer brute force is limited to <= 8 sheets")
    from itertools import permutations as all_perms

    out = []
    for q in all_perms(range(m)):
        if all(perm_compose(p, q) == perm_compose(q, p) for p in perms):
            out.append(tuple(q))
    return out


def monodromy(cov: PolyCovering, base_value: complex = 0,
              min_clearance: float = DEFAULT_MIN_CLEARANCE,
              record_traces: bool = False) -> MonodromyReport:
    """Loop permutations around every target puncture, with deck data.

    Deck elements are computed two independent ways and must agree: as the
    centralizer of the loop permutations in the symmetric group, and as the
    label-preserving automorphisms of the induced coset graph.  Each loop
    is also retraced backwards to confirm its permutation inverts.
    """
    base = complex(base_value)
    if any(abs(base - v) < min_clearance for v in cov.punctures_target):
        raise ValueError("base value too close to a target puncture")
    fiber = fiber_at(cov, base)
    d = len(fiber)

    perms: list[Perm] = []
    traces: list[tuple[tuple[float, tuple[complex, ...]], ...]] = []
    for puncture in cov.punctures_target:
        loop = puncture_loop(cov, puncture, base)
        perm = fiber_permutation(cov, loop, fiber, min_clearance)
        back = fiber_permutation(cov, list(reversed(loop)), fiber, min_clearance)
        if perm_compose(perm, back) != identity_perm(d):
            raise ContinuationError("loop reversal did not invert the permutation")
        perms.append(perm)
        if record_traces:
            samples = []
            cur = fiber
            for i, (t_frac, z) in enumerate(zip(np.linspace(0.0, 1.0, len(loop)), loop)):
                if i > 0:
                    cur, _ = continue_fiber(cov, loop[i - 1:i + 1], cur, min_clearance)
                samples.append((float(t_frac), tuple(cur)))
            traces.append(tuple(samples))

    transitive = _orbit_transitive(perms, d)
    graph = coset_graph(perms, 0)
    deck_graph = sorted(graph_label_automorphisms(graph))
    deck_centralizer = sorted(_centralizer(perms, d)) if d <= 8 else deck_graph
    if deck_graph != deck_centralizer:
        raise ContinuationError(
            "deck computations disagree (centralizer vs graph automorphisms)")

    return MonodromyReport(
        base_value=base,
        fiber=fiber,
        punctures_target=cov.punctures_target,
        punctures_domain=cov.punctures_domain,
        critical_values=cov.critical_values,
        loop_perms=tuple(perms),
        transitive=transitive,
        deck_elements=tuple(deck_graph),
        stabilizer_rank=rank(graph),
        traces=tuple(traces) if record_traces else None,
    )


def ns_crosscheck(report: MonodromyReport, k: int) -> NsCertificate:
    """Check the covering's stabilizer subgroup against the rank formula
    rank == (k-1) * sheets + 1."""
    if k != len(report.loop_perms):
        raise ValueError("k must equal the number of target punctures")
    d = report.sheet_count
    expected = (k - 1) * d + 1
    return NsCertificate(k, d, report.stabilizer_rank,
                         report.stabilizer_rank == expected)
