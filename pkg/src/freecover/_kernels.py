"""Numeric inner loops shared by the word and continuation code.

Each kernel is written once as a plain function over numpy arrays.  When
numba is importable and ``FREECOVER_DISABLE_JIT`` is unset, the exported
names are ``@njit``-compiled versions; otherwise the interpreted functions
run as-is.  ``PY_FUNCS`` / ``JIT_FUNCS`` expose both paths so the benchmark
script can compare them directly.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "JIT_ENABLED",
    "reduce_letters",
    "walk_lattice",
    "durand_kerner",
    "track_fiber",
]

_BIG = 1e300


def _reduce_letters(letters):
    # Single left-to-right stack pass; a letter cancels the stack top iff it
    # is its formal inverse.  Output length never exceeds input length.
    out = np.empty_like(letters)
    top = 0
    for i in range(letters.shape[0]):
        x = letters[i]
        if top > 0 and out[top - 1] == -x:
            top -= 1
        else:
            out[top] = x
            top += 1
    return out[:top].copy()


def _walk_lattice(letters, x, y):
    # Unit steps on the integer grid: letters +-1 move x, +-2 move y.
    # Caller guarantees rank 2.
    for i in range(letters.shape[0]):
        g = letters[i]
        if g == 1:
            x += 1
        elif g == -1:
            x -= 1
        elif g == 2:
            y += 1
        else:
            y -= 1
    return x, y


def _durand_kerner(coeffs, tol, max_iter):
    # Simultaneous root iteration for a polynomial given highest-degree
    # first.  Returns the full root vector; accuracy degrades to ~sqrt(tol)
    # at multiple roots, which callers handle by clustering.
    d = coeffs.shape[0] - 1
    roots = np.empty(d, np.complex128)
    # Cauchy bound scales the classic (0.4+0.9i)^k starting spiral.
    bound = 0.0
    for j in range(1, d + 1):
        m = abs(coeffs[j] / coeffs[0])
        if m > bound:
            bound = m
    radius = 1.0 + bound
    seed = 0.4 + 0.9j
    cur = 1.0 + 0.0j
    for i in range(d):
        cur = cur * seed
        roots[i] = radius * cur / abs(cur)
    for _ in range(max_iter):
        moved = 0.0
        for i in range(d):
            w = roots[i]
            pv = coeffs[0]
            for j in range(1, d + 1):
                pv = pv * w + coeffs[j]
            denom = coeffs[0]
            for j in range(d):
                if j != i:
                    denom = denom * (w - roots[j])
            if abs(denom) == 0.0:
                # coincident iterates: nudge deterministically
                roots[i] = w + tol + tol * 1j
                moved = _BIG
                continue
            delta = pv / denom
            roots[i] = w - delta
            step = abs(delta)
            if step > moved:
                moved = step
        if moved < tol:
            break
    return roots


def _track_fiber(coeffs, dcoeffs, path, fiber, corrector_tol, min_step):
    """Continue every root of p(w) = z along the polyline of z values.

    Predictor: previous root.  Corrector: Newton on p(w) - z, rejected (and
    the substep halved) when it wants to move farther than half the current
    fiber separation or fails to converge.  Returns (end_fiber, status,
    min_separation) with status 0 = ok, 1 = substep underflow.
    """
    cur = fiber.copy()
    d = cur.shape[0]
    nc = coeffs.shape[0]
    min_sep = _BIG
    for i in range(d):
        for j in range(i + 1, d):
            s = abs(cur[i] - cur[j])
            if s < min_sep:
                min_sep = s
    for seg in range(path.shape[0] - 1):
        z0 = path[seg]
        z1 = path[seg + 1]
        t = 0.0
        h = 1.0
        while t < 1.0:
            tt = t + h
            if tt > 1.0:
                tt = 1.0
            target = z0 + (z1 - z0) * tt
            sep = _BIG
            for i in range(d):
                for j in range(i + 1, d):
                    s = abs(cur[i] - cur[j])
                    if s < sep:
                        sep = s
            trust = 0.5 * sep
            trial = cur.copy()
            new_sep = _BIG
            ok = True
            for i in range(d):
                w = trial[i]
                converged = False
                for _ in range(50):
                    pv = coeffs[0]
                    for j in range(1, nc):
                        pv = pv * w + coeffs[j]
                    pv -= target
                    if abs(pv) <= corrector_tol:
                        converged = True
                        break
                    dv = dcoeffs[0]
                    for j in range(1, nc - 1):
                        dv = dv * w + dcoeffs[j]
                    if abs(dv) == 0.0:
                        break
                    step = pv / dv
                    if abs(step) > trust:
                        break
                    w = w - step
                if not converged or abs(w - cur[i]) > trust:
                    ok = False
                    break
                trial[i] = w
            if ok:
                for i in range(d):
                    for j in range(i + 1, d):
                        s = abs(trial[i] - trial[j])
                        if s < new_sep:
                            new_sep = s
                if d > 1 and new_sep < 0.5 * sep:
                    ok = False
            if ok:
                cur = trial
                t = tt
                if new_sep < min_sep:
                    min_sep = new_sep
                h = h * 2.0
                if h > 1.0:
                    h = 1.0
            else:
                h = h * 0.5
                if h < min_step:
                    return cur, 1, min_sep
    return cur, 0, min_sep


PY_FUNCS = {
    "reduce_letters": _reduce_letters,
    "walk_lattice": _walk_lattice,
    "durand_kerner": _durand_kerner,
    "track_fiber": _track_fiber,
}

_disabled = os.environ.get("FREECOVER_DISABLE_JIT", "").strip() not in ("", "0")
JIT_FUNCS: dict = {}
if not _disabled:
    try:
        from numba import njit
    except ImportError:
        _disabled = True
    else:
        for _name, _fn in PY_FUNCS.items():
            JIT_FUNCS[_name] = njit(cache=True)(_fn)

JIT_ENABLED = not _disabled
_active = JIT_FUNCS if JIT_ENABLED else PY_FUNCS

reduce_letters = _active["reduce_letters"]
walk_lattice = _active["walk_lattice"]
durand_kerner = _active["durand_kerner"]
track_fiber = _active["track_fiber"]
