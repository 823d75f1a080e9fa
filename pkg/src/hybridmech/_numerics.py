"""Small numerical kernels: bracketed root polishing, golden-section search
and quadrature for piecewise-smooth integrands with jumps."""

from __future__ import annotations

import math
from collections.abc import Callable

import numpy as np

INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# 5-point Gauss-Legendre rule on [-1, 1]; open nodes never touch a jump point
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(5)


def bisect_newton(
    f: Callable[[float], float],
    df: Callable[[float], float],
    lo: float,
    hi: float,
    *,
    bisect_tol: float = 1e-6,
    tol: float = 1e-15,
    max_newton: int = 50,
) -> float:
    """Root of ``f`` in ``[lo, hi]``: bisection to ``bisect_tol`` then Newton.

    ``f(lo)`` and ``f(hi)`` must have opposite signs.  Newton steps that
    leave the bracket fall back to bisection.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if flo * fhi > 0:
        raise ValueError(f"root not bracketed by [{lo}, {hi}]")
    while hi - lo > bisect_tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(max_newton):
        step = f(x) / df(x)
        nxt = x - step
        if not lo <= nxt <= hi:
            nxt = 0.5 * (lo + hi)
        fn = f(nxt)
        if (fn < 0) == (flo < 0):
            lo = nxt
        else:
            hi = nxt
        if abs(nxt - x) <= tol * max(1.0, abs(x)):
            return nxt
        x = nxt
    return x


def golden_section_max(
    f: Callable[[float], float], lo: float, hi: float, *, tol: float = 1e-12, max_iter: int = 200
) -> tuple[float, float, int]:
    """Maximize a unimodal ``f`` on ``[lo, hi]``.

    Returns ``(argmax, max, evaluations)``; the bracket endpoints are
    evaluated too so a monotone ``f`` returns its boundary value.
    """
    a, b = lo, hi
    c = b - INV_GOLDEN * (b - a)
    d = a + INV_GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    evals = 2
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INV_GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_GOLDEN * (b - a)
            fd = f(d)
        evals += 1
    candidates = [(fc, c), (fd, d), (f(lo), lo), (f(hi), hi)]
    evals += 2
    best_f, best_x = max(candidates, key=lambda t: (t[0], -abs(t[1] - c)))
    return best_x, best_f, evals


def golden_section_min(
    f: Callable[[float], float], lo: float, hi: float, *, tol: float = 1e-12, max_iter: int = 200
) -> tuple[float, float, int]:
    x, neg, evals = golden_section_max(lambda t: -f(t), lo, hi, tol=tol, max_iter=max_iter)
    return x, -neg, evals


def graded_edges(edges, ratio: float = 2.0, max_steps: int = 60) -> np.ndarray:
    """Insert geometric points into every segment ``[a, b]`` with
    ``0 < a`` and ``b / a > ratio``.

    Allocations driven by a bid ratio vary on the scale of the smaller
    bid, so a long segment starting near zero needs panels graded in
    ``log t`` rather than uniform ones.
    """
    edges = np.unique(np.asarray(edges, dtype=float))
    extra = []
    for a, b in zip(edges[:-1], edges[1:]):
        if a > 0 and b > ratio * a:
            # below b * ratio**-max_steps the segment holds nothing measurable
            lo = max(a, b * ratio**-max_steps)
            k = int(math.ceil(math.log(b / lo) / math.log(ratio)))
            extra.append(np.geomspace(lo, b, k + 1)[:-1])
    if not extra:
        return edges
    return np.unique(np.concatenate([edges, *extra]))


def integrate_segments(
    f: Callable[[np.ndarray], np.ndarray],
    edges: np.ndarray,
    *,
    tol: float = 1e-9,
    max_panels: int = 4096,
) -> np.ndarray:
    """Integral of ``f`` over each ``[edges[k], edges[k+1]]``.

    ``f`` must be smooth inside every segment; it may jump at the edges.
    Each segment uses composite 5-point Gauss-Legendre; the panel count
    doubles for every segment whose estimate moved by more than its share
    of ``tol`` (``tol`` bounds the total over all segments).

    ``f`` may return shape ``(k, len(nodes))`` to integrate ``k`` functions
    at once; the result then has shape ``(k, nseg)``.
    """
    edges = np.asarray(edges, dtype=float)
    a, b = edges[:-1], edges[1:]
    nseg = a.size
    if nseg == 0:
        return np.zeros(0)
    share = tol / nseg
    panels = 1
    est = _composite_gl(f, a, b, panels)
    active = np.ones(nseg, dtype=bool)
    while panels < max_panels and active.any():
        panels *= 2
        idx = np.flatnonzero(active)
        refined = _composite_gl(f, a[idx], b[idx], panels)
        moved = np.abs(refined - est[..., idx])
        done = (moved.max(axis=0) if moved.ndim == 2 else moved) <= share
        est[..., idx] = refined
        active[idx[done]] = False
    return est


def _composite_gl(f, a: np.ndarray, b: np.ndarray, panels: int) -> np.ndarray:
    width = (b - a) / panels
    starts = a[:, None] + width[:, None] * np.arange(panels)[None, :]
    half = 0.5 * width[:, None, None]
    nodes = starts[:, :, None] + half * (_GL_NODES[None, None, :] + 1.0)
    vals = np.asarray(f(nodes.ravel()), dtype=float)
    vals = vals.reshape(vals.shape[:-1] + nodes.shape)
    return (vals * _GL_WEIGHTS).sum(axis=(-1, -2)) * half[:, 0, 0]


def integrate_piecewise(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    breakpoints=(),
    *,
    tol: float = 1e-9,
) -> float:
    """Integral of ``f`` over ``[a, b]`` split at the breakpoints inside it."""
    if b <= a:
        return 0.0
    inner = sorted({float(t) for t in breakpoints if a < t < b})
    return float(integrate_segments(f, np.array([a, *inner, b]), tol=tol).sum())


def adaptive_simpson(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    tol: float = 1e-10,
    min_width: float = 1e-13,
    max_rounds: int = 80,
) -> float:
    """Hint-free adaptive Simpson integration.

    Intervals are bisected until the two-level Simpson estimates agree;
    every round evaluates all pending midpoints in one batch.  Jumps are
    isolated by repeated bisection.
    """
    if b <= a:
        return 0.0
    lo = np.array([a])
    hi = np.array([b])
    flo, fhi = (np.asarray(f(np.array([a, b])), dtype=float))
    fl = np.array([flo])
    fh = np.array([fhi])
    fm = np.asarray(f(0.5 * (lo + hi)), dtype=float)
    eps = np.array([tol])
    total = 0.0
    for _ in range(max_rounds):
        if lo.size == 0:
            break
        mid = 0.5 * (lo + hi)
        q1 = 0.5 * (lo + mid)
        q3 = 0.5 * (mid + hi)
        fq = np.asarray(f(np.concatenate([q1, q3])), dtype=float)
        fq1, fq3 = fq[: lo.size], fq[lo.size :]
        width = hi - lo
        whole = width / 6.0 * (fl + 4.0 * fm + fh)
        left = width / 12.0 * (fl + 4.0 * fq1 + fm)
        right = width / 12.0 * (fm + 4.0 * fq3 + fh)
        diff = left + right - whole
        ok = (np.abs(diff) <= 15.0 * eps) | (width <= min_width)
        total += float(np.sum((left + right + diff / 15.0)[ok]))
        keep = ~ok
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        fl, fq1, fm, fq3, fh = fl[keep], fq1[keep], fm[keep], fq3[keep], fh[keep]
        eps = eps[keep] / 2.0
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        fl, fh = np.concatenate([fl, fm]), np.concatenate([fm, fh])
        fm = np.concatenate([fq1, fq3])
        eps = np.concatenate([eps, eps])
    if lo.size:
        total += float(np.sum((hi - lo) / 6.0 * (fl + 4.0 * fm + fh)))
    return total
