"""Worst-case approximation ratio by structured search, and the sufficient
conditions that certify upper bounds for each mechanism class.

Mechanisms only see the expert's ordering, the second value ``x`` and the
normalized low bid ``y``, so the search runs over expert values ``(1, x, 0)``
permuted across the options and bids ``(1, y)`` with either agent high.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._numerics import golden_section_max
from .bounds import constants
from .core import AGENTS, Option, Profile, expected_welfare, optimal_welfare, pointwise_ratio
from .exceptions import ZeroWelfare
from .verify import ORDERINGS, bid_rows, default_grid, expert_rows, ordering_label

DEFAULT_GRID = 2001
CONDITION_GRID = 2001
MARGIN_TOL = 1e-9
# rows per vectorized evaluation
CHUNK_ROWS = 1 << 18
WORKERS_ENV = "HYBRID_MECH_WORKERS"

SWEEP_COLUMNS = ("mechanism", "ordering", "x", "y", "highAgent", "ratio")


@dataclass(frozen=True)
class RatioReport:
    mechanism: str
    ratio: float
    witness: Profile
    ordering: tuple
    x: float
    y: float
    high_agent: Option
    search_iterations: int
    refined: bool
    limit: bool

    def to_json(self) -> dict:
        return {
            "mechanismName": self.mechanism,
            "ratio": self.ratio,
            "witnessProfile": self.witness.to_json(),
            "witnessCoordinates": {
                "ordering": ordering_label(self.ordering),
                "x": self.x,
                "y": self.y,
                "highAgent": self.high_agent.label,
            },
            "searchIterations": self.search_iterations,
            "refined": self.refined,
            "limit": self.limit,
        }


def upper_bounds() -> dict[str, float]:
    """Proven approximation ratio of each shipped mechanism."""
    c = constants()
    return {
        "eom": 1.5,
        "bom": 1.5,
        "bim": c.rho_bim,
        "eim": c.rho_eim,
        "r": 1.25,
        "d": c.phi,
        "second-price": 2.0,
    }


def resolve_workers(workers: int | None = None) -> int:
    """Explicit value, else ``HYBRID_MECH_WORKERS``, else the CPU count."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise ValueError("workers must be at least 1")
    return workers


def profile_at(order, x: float, y: float, high: Option) -> Profile:
    V = expert_rows(order, [x])[0]
    W = bid_rows(Option(high), [y])[0]
    return Profile(*V, *W)


def ratio_at(mechanism, p: Profile) -> float:
    """Optimal over expected welfare through the scalar code path."""
    expected = expected_welfare(mechanism.evaluate(p), p)
    if expected <= 0:
        raise ZeroWelfare(f"{mechanism.name}: expected welfare is {expected} at {p.to_json()}")
    return optimal_welfare(p)[1] / expected


def block_ratios(mechanism, order, high: Option, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Pointwise ratio on the ``xs`` by ``ys`` grid for one ordering and high agent."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    out = np.empty((xs.size, ys.size))
    W_block = bid_rows(high, ys)
    step = max(1, CHUNK_ROWS // max(ys.size, 1))
    for start in range(0, xs.size, step):
        chunk = xs[start : start + step]
        V = np.repeat(expert_rows(order, chunk), ys.size, axis=0)
        W = np.tile(W_block, (chunk.size, 1))
        out[start : start + chunk.size] = pointwise_ratio(mechanism.lotteries(V, W), V, W).reshape(chunk.size, ys.size)
    return out


def _block_max(mechanism, order, high, xs, ys):
    r = block_ratios(mechanism, order, high, xs, ys)
    if np.any(~np.isfinite(r)):
        i, j = np.unravel_index(int(np.argmax(~np.isfinite(r))), r.shape)
        raise ZeroWelfare(f"{mechanism.name}: expected welfare is 0 at x={xs[i]}, y={ys[j]}")
    i, j = np.unravel_index(int(np.argmax(r)), r.shape)
    return float(r[i, j]), int(i), int(j)


def _block_task(args):
    # process-pool entry point; registry mechanisms are rebuilt by name
    from .mechanisms import lookup

    name, order, high, xs, ys = args
    return _block_max(lookup(name), order, high, xs, ys)


def _pickable(mechanism) -> bool:
    from .mechanisms import names

    return mechanism.name in names()


def _neighbours(grid: np.ndarray, k: int) -> tuple[float, float]:
    return float(grid[max(k - 1, 0)]), float(grid[min(k + 1, grid.size - 1)])


def worst_case_ratio(
    mechanism,
    grid: int | np.ndarray = DEFAULT_GRID,
    *,
    refine: bool = True,
    workers: int | None = None,
) -> RatioReport:
    """Largest pointwise ratio over the reduced profile space.

    A dense grid (with every mechanism breakpoint inserted) is scanned per
    ordering and high agent; the incumbent is then refined by golden-section
    search along ``x`` and then ``y`` within its neighbouring grid cells.
    Refinement only ever replaces the incumbent by a larger value.  The
    result is a lower bound on the supremum.
    """
    xs = default_grid(grid) if np.isscalar(grid) else np.unique(np.asarray(grid, dtype=float))
    ys = xs
    blocks = [(order, high) for order in ORDERINGS for high in AGENTS]
    n_workers = resolve_workers(workers)
    if n_workers > 1 and _pickable(mechanism):
        tasks = [(mechanism.name, order, high, xs, ys) for order, high in blocks]
        with ProcessPoolExecutor(max_workers=min(n_workers, len(blocks))) as pool:
            results = list(pool.map(_block_task, tasks))
    else:
        results = [_block_max(mechanism, order, high, xs, ys) for order, high in blocks]
    iterations = len(blocks) * xs.size * ys.size

    k = int(np.argmax([r[0] for r in results]))
    best, i, j = results[k]
    order, high = blocks[k]
    x, y = float(xs[i]), float(ys[j])

    refined = False
    if refine:
        def along_x(t):
            return float(block_ratios(mechanism, order, high, [t], [y])[0, 0])

        lo, hi = _neighbours(xs, i)
        tx, fx, evals = golden_section_max(along_x, lo, hi)
        iterations += evals
        if fx > best:
            best, x, refined = fx, tx, True

        def along_y(t):
            return float(block_ratios(mechanism, order, high, [x], [t])[0, 0])

        lo, hi = _neighbours(ys, j)
        ty, fy, evals = golden_section_max(along_y, lo, hi)
        iterations += evals
        if fy > best:
            best, y, refined = fy, ty, True

    witness = profile_at(order, x, y, high)
    ratio = ratio_at(mechanism, witness)
    limit = x in (0.0, 1.0) or y in (0.0, 1.0)
    return RatioReport(mechanism.name, ratio, witness, tuple(order), x, y, Option(high), iterations, refined, limit)


def ratio_sweep(mechanism, grid: int | np.ndarray = 101):
    """Yield one CSV row per grid profile (see :data:`SWEEP_COLUMNS`)."""
    xs = default_grid(grid) if np.isscalar(grid) else np.unique(np.asarray(grid, dtype=float))
    for order in ORDERINGS:
        label = ordering_label(order)
        for high in AGENTS:
            r = block_ratios(mechanism, order, high, xs, xs)
            for i, x in enumerate(xs):
                for j, y in enumerate(xs):
                    yield (mechanism.name, label, float(x), float(y), high.label, float(r[i, j]))


def write_sweep_csv(stream, mechanisms, grid: int | np.ndarray = 101) -> int:
    writer = csv.writer(stream)
    writer.writerow(SWEEP_COLUMNS)
    n = 0
    for m in mechanisms:
        for row in ratio_sweep(m, grid):
            writer.writerow(row)
            n += 1
    return n


# ---------------------------------------------------------------------------
# sufficient conditions


@dataclass(frozen=True)
class MarginReport:
    """Smallest slack of each inequality of a condition over a grid."""

    check: str
    rho: float
    names: tuple
    min_slacks: tuple
    argmins: tuple
    tolerance: float = MARGIN_TOL
    grid: np.ndarray = field(default=None, repr=False, compare=False)
    slacks: tuple = field(default=(), repr=False, compare=False)

    @property
    def min_slack(self) -> float:
        return min(self.min_slacks)

    @property
    def passed(self) -> bool:
        return self.min_slack >= -self.tolerance

    def to_json(self) -> dict:
        return {
            "checkName": self.check,
            "rho": self.rho,
            "inequalities": [
                {"name": n, "minSlack": s, "argmin": a}
                for n, s, a in zip(self.names, self.min_slacks, self.argmins)
            ],
            "passed": self.passed,
        }


def _margins(check, rho, grid, names, slacks, tol) -> MarginReport:
    mins, args = [], []
    for s in slacks:
        k = int(np.argmin(s))
        mins.append(float(s[k]))
        args.append(float(grid[k]))
    return MarginReport(check, float(rho), tuple(names), tuple(mins), tuple(args), tol, grid, tuple(slacks))


def _condition_grid(grid):
    if grid is None:
        return default_grid(CONDITION_GRID)
    return default_grid(grid) if np.isscalar(grid) else np.unique(np.asarray(grid, dtype=float))


def bim_condition(g, f, rho: float, grid=None, tol: float = MARGIN_TOL) -> MarginReport:
    """``2g + x f >= 2/rho`` and ``g + (1+x) f >= (1+x)/rho`` for all ``x``."""
    x = _condition_grid(grid)
    gx = np.broadcast_to(np.asarray(g(x), dtype=float), x.shape)
    fx = np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)
    first = 2.0 * gx + x * fx - 2.0 / rho
    second = gx + (1.0 + x) * fx - (1.0 + x) / rho
    return _margins("bim", rho, x, ("2g+xf>=2/rho", "g+(1+x)f>=(1+x)/rho"), (first, second), tol)


def _band_check(check, c, rho, grid, upper, tol) -> MarginReport:
    y = _condition_grid(grid)
    cy = np.broadcast_to(np.asarray(c(y), dtype=float), y.shape)
    with np.errstate(divide="ignore"):
        lower = 1.0 / rho - (1.0 - 1.0 / rho) / y
        up = upper(y)
    return _margins(check, rho, y, ("c>=lower", "c<=upper"), (cy - lower, up - cy), tol)


def eim_band(y, rho: float):
    """Lower and upper bounds on an expert-independent curve at ``y``."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / rho - (1.0 - 1.0 / rho) / y, 2.0 * (1.0 - 1.0 / rho) / (2.0 - y)


def template_band(y, rho: float):
    """Lower and upper bounds on a template curve in category T1."""
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / rho - (1.0 - 1.0 / rho) / y, (1.0 - 1.0 / rho) / (1.0 - y)


def eim_condition(c, rho: float, grid=None, tol: float = MARGIN_TOL) -> MarginReport:
    return _band_check("eim", c, rho, grid, lambda y: eim_band(y, rho)[1], tol)


def template_condition(c, rho: float, grid=None, tol: float = MARGIN_TOL) -> MarginReport:
    return _band_check("template", c, rho, grid, lambda y: template_band(y, rho)[1], tol)
