"""Incentive-compatibility audits.

Four analytic checks follow the characterizations of bid level changes
(BCh), expert level changes (ECh), expert swaps for bid-independent
mechanisms (ESw) and bid swaps for expert-independent mechanisms (BSw).
:func:`black_box_ic_audit` searches unilateral misreports directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._numerics import graded_edges, integrate_segments
from .bounds import constants
from .core import AGENTS, Option, Profile
from .exceptions import WrongClass

ANALYTIC_TOL = 1e-9
ECH_RESIDUAL_TOL = 1e-8
BLACK_BOX_TOL = 1e-6
ENDPOINT_NUDGE = 1e-12

ORDERINGS = tuple(itertools.permutations((Option.A, Option.B, Option.NONE)))


@dataclass(frozen=True)
class AuditReport:
    mechanism: str
    check: str
    max_violation: float
    tolerance: float
    witness: dict | None = field(default=None)

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_json(self) -> dict:
        return {
            "mechanismName": self.mechanism,
            "checkName": self.check,
            "maxViolation": self.max_violation,
            "tolerance": self.tolerance,
            "witness": self.witness,
            "passed": self.passed,
        }


def _report(mechanism, check, violation, tol, witness) -> AuditReport:
    violation = max(0.0, float(violation))
    return AuditReport(mechanism.name, check, violation, tol, witness if violation > tol else None)


def breakpoints() -> tuple[float, ...]:
    c = constants()
    return (c.tau, c.eim_breakpoint, 0.8, c.inv_phi, 0.5)


def default_grid(n: int = 201, extra=()) -> np.ndarray:
    """``n`` equispaced points on [0, 1] plus every mechanism breakpoint."""
    if n < 3:
        raise ValueError("grid needs at least 3 points")
    return np.unique(np.concatenate([np.linspace(0.0, 1.0, n), breakpoints(), np.asarray(extra, dtype=float)]))


def _as_grid(grid) -> np.ndarray:
    if grid is None:
        return default_grid()
    if np.isscalar(grid):
        return default_grid(int(grid))
    return np.unique(np.asarray(grid, dtype=float))


def ordering_label(order) -> str:
    return ">".join(Option(o).label for o in order)


def expert_rows(order, x) -> np.ndarray:
    """Expert values ``(1, x, 0)`` placed on the options of ``order``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    V = np.zeros((x.size, 3))
    V[:, order[0]] = 1.0
    V[:, order[1]] = x
    return V


def bid_rows(high: Option, y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    W = np.empty((y.size, 2))
    W[:, high] = 1.0
    W[:, 1 - high] = y
    return W


def _profile_json(V_row, W_row) -> dict:
    return Profile(*map(float, V_row), *map(float, W_row)).to_json()


# ---------------------------------------------------------------------------
# analytic checks


def check_bch_ic(mechanism, grid=None, xs=(0.25, 0.5, 0.75), tol: float = ANALYTIC_TOL) -> AuditReport:
    """Low-bidder probability non-decreasing and high-bidder probability
    non-increasing in ``y``, per fixed expert context and high-bidder."""
    ys = _as_grid(grid)
    worst, witness = 0.0, None
    for order, x, high in itertools.product(ORDERINGS, xs, AGENTS):
        # equal bids make A the high-bidder, so B-high contexts stop short of y = 1
        yy = ys if high is Option.A else ys[ys < 1.0]
        V = np.repeat(expert_rows(order, x), yy.size, axis=0)
        W = bid_rows(high, yy)
        P = mechanism.lotteries(V, W)
        low = 1 - high
        c_drop = P[:-1, low] - P[1:, low]
        d_rise = P[1:, high] - P[:-1, high]
        for name, steps in (("low-bidder", c_drop), ("high-bidder", d_rise)):
            k = int(np.argmax(steps))
            if steps[k] > worst:
                worst = float(steps[k])
                witness = {
                    "context": {"ordering": ordering_label(order), "x": float(x), "highAgent": high.label},
                    "probability": name,
                    "y": [float(yy[k]), float(yy[k + 1])],
                    "step": float(steps[k]),
                }
    return _report(mechanism, "BCh-IC", worst, tol, witness)


def _ech_context_curves(mechanism, order, W_row):
    """Callable ``x -> (g, f)`` for a fixed expert ordering and bid row."""

    def curves(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        V = expert_rows(order, x)
        W = np.broadcast_to(W_row, (x.size, 2))
        P = mechanism.lotteries(V, W)
        return P[:, order[0]], P[:, order[1]]

    return curves


def check_ech_ic(
    mechanism, grid=None, ys=(0.0, 0.3, 0.7, 1.0), tol: float = ECH_RESIDUAL_TOL
) -> AuditReport:
    """``f`` non-decreasing in ``x`` and
    ``g(x) + x f(x) - g(x0) - x0 f(x0) - int_{x0}^x f = 0`` per bid context.

    The context keeps the expert's ordering fixed, so ``x`` runs over the
    open interval with endpoints nudged inward by 1e-12 (at 0 and 1 the
    tie-breaking priority would reorder the options).
    """
    xs = _as_grid(grid)
    xs = np.clip(xs, ENDPOINT_NUDGE, 1.0 - ENDPOINT_NUDGE)
    xs = np.unique(np.concatenate([xs, [b for b in mechanism.expert_breakpoints if 0 < b < 1]]))
    worst, witness = 0.0, None
    for order, high, y in itertools.product(ORDERINGS, AGENTS, ys):
        if high is Option.B and y >= 1.0:
            continue
        W_row = bid_rows(high, y)[0]
        curves = _ech_context_curves(mechanism, order, W_row)
        g, f = curves(xs)
        mono = f[:-1] - f[1:]
        pieces = integrate_segments(lambda t: curves(t)[1], xs, tol=1e-11)
        integral = np.concatenate([[0.0], np.cumsum(pieces)])
        resid = np.abs(g + xs * f - g[0] - xs[0] * f[0] - integral)
        context = {"ordering": ordering_label(order), "highAgent": high.label, "y": float(y)}
        k = int(np.argmax(mono))
        if mono[k] > worst:
            worst = float(mono[k])
            witness = {"context": context, "kind": "f decreases", "x": [float(xs[k]), float(xs[k + 1])]}
        k = int(np.argmax(resid))
        if resid[k] > worst:
            worst = float(resid[k])
            witness = {"context": context, "kind": "integral identity residual", "x": float(xs[k])}
    return _report(mechanism, "ECh-IC", worst, tol, witness)


def _require(mechanism, tag):
    if tag not in mechanism.tags:
        raise WrongClass(f"{mechanism.name} is not tagged {tag}")


def check_esw_ic_bid_independent(mechanism, grid=None, tol: float = ANALYTIC_TOL) -> AuditReport:
    """``g(x) >= f(x')`` and ``f(x) >= eta(x')`` for all ``x, x'`` in (0, 1)."""
    _require(mechanism, "bid-independent")
    xs = _as_grid(grid)
    xs = xs[(xs > 0) & (xs < 1)]
    order = (Option.A, Option.B, Option.NONE)
    V = expert_rows(order, xs)
    P = mechanism.lotteries(V, bid_rows(Option.A, np.full(xs.size, 0.5)))
    g, f, eta = P[:, 0], P[:, 1], P[:, 2]
    gap1 = f.max() - g.min()
    gap2 = eta.max() - f.min()
    if gap1 >= gap2:
        witness = {"condition": "g(x) >= f(x')", "x": float(xs[np.argmin(g)]), "x_prime": float(xs[np.argmax(f)])}
    else:
        witness = {"condition": "f(x) >= eta(x')", "x": float(xs[np.argmin(f)]), "x_prime": float(xs[np.argmax(eta)])}
    return _report(mechanism, "ESw-IC", max(gap1, gap2), tol, witness)


def check_bsw_ic_expert_independent(mechanism, tol: float = ANALYTIC_TOL) -> AuditReport:
    """``d(1) >= c(1)``: at equal bids the high-bidder is at least as likely as the low-bidder."""
    _require(mechanism, "expert-independent")
    P = mechanism.lotteries(np.array([[1.0, 0.0, 0.0]]), np.array([[1.0, 1.0]]))[0]
    d1, c1 = float(P[0]), float(P[1])
    return _report(mechanism, "BSw-IC", c1 - d1, tol, {"d(1)": d1, "c(1)": c1})


def class_checks(mechanism, grid=None) -> list[AuditReport]:
    """The analytic checks that apply to the mechanism's class tags."""
    reports = [check_bch_ic(mechanism, grid), check_ech_ic(mechanism, grid)]
    if "bid-independent" in mechanism.tags:
        reports.append(check_esw_ic_bid_independent(mechanism, grid))
    if "expert-independent" in mechanism.tags:
        reports.append(check_bsw_ic_expert_independent(mechanism))
    return reports


# ---------------------------------------------------------------------------
# black-box misreport search


@dataclass(frozen=True)
class ProfileGrid:
    """Reduced profile space: expert ``(1, x, 0)`` permuted, bids ``(1, y)``."""

    xs: np.ndarray
    ys: np.ndarray
    orderings: tuple = ORDERINGS
    highs: tuple = AGENTS

    @classmethod
    def default(cls, n: int = 11) -> "ProfileGrid":
        return cls(default_grid(n), default_grid(n))

    def bid_contexts(self):
        for high in self.highs:
            for y in self.ys:
                yield high, float(y)

    def expert_matrix(self) -> np.ndarray:
        return np.concatenate([expert_rows(order, self.xs) for order in self.orderings])


def _expert_regret(mechanism, V_true, W_row, misreports) -> tuple[float, int, int]:
    W = np.broadcast_to(W_row, (misreports.shape[0], 2))
    P_dev = mechanism.lotteries(misreports, W)
    P_true = mechanism.lotteries(V_true, np.broadcast_to(W_row, (V_true.shape[0], 2)))
    u_true = np.einsum("ij,ij->i", V_true, P_true)
    gains = V_true @ P_dev.T - u_true[:, None]
    i, j = np.unravel_index(int(np.argmax(gains)), gains.shape)
    return float(gains[i, j]), int(i), int(j)


def _batched_q(mechanism, V_true, agent: Option, other: float):
    """``ts -> q_agent(t)`` for every expert row at once, shape ``(rows, len(ts))``."""
    n = V_true.shape[0]

    def q(ts):
        ts = np.asarray(ts, dtype=float)
        V = np.repeat(V_true, ts.size, axis=0)
        W = np.empty((n * ts.size, 2))
        W[:, agent] = np.tile(ts, n)
        W[:, 1 - agent] = other
        return mechanism.lotteries(V, W)[:, agent].reshape(n, ts.size)

    return q


def _agent_regret(mechanism, V_true, agent: Option, w: float, other: float, n_dev: int, tol: float):
    """Max over deviations ``t`` of ``q(t)(w - t) - int_t^w q`` for each expert row."""
    hints = set()
    for row in V_true:
        hints.update(mechanism.bid_hints(agent, other, tuple(row)))
    if other > 0:
        devs = np.concatenate([np.linspace(0.0, 2.0 * other, n_dev), [0.0, other, 2.0 * other]])
    else:
        devs = np.linspace(0.0, 2.0 * w, n_dev)[1:]
    devs = np.concatenate([devs, [t for t in hints if t > 0]])
    devs = np.unique(devs)
    points = np.unique(np.concatenate([devs, [w]]))
    if other == 0:
        points = points[points > 0]
    top = float(points.max())
    edges = graded_edges(np.concatenate([[0.0], points, [h for h in hints if 0 < h < top]]))
    n = V_true.shape[0]
    q = _batched_q(mechanism, V_true, agent, other)
    pieces = integrate_segments(q, edges, tol=tol)
    cum = np.concatenate([np.zeros((n, 1)), np.cumsum(pieces, axis=1)], axis=1)
    at = lambda ts: cum[:, np.searchsorted(edges, ts)]
    if w == 0 and other == 0:
        return 0.0, 0, 0.0
    I_dev, I_w = at(devs), at(np.array([w]))
    q_dev = q(devs)
    regret = q_dev * (w - devs)[None, :] - (I_w - I_dev)
    i, k = np.unravel_index(int(np.argmax(regret)), regret.shape)
    return float(regret[i, k]), int(i), float(devs[k])


def black_box_ic_audit(
    mechanism,
    profile_grid: ProfileGrid | None = None,
    deviation_grid: int = 201,
    tol: float = BLACK_BOX_TOL,
    quad_tol: float = 1e-10,
) -> AuditReport:
    """Largest utility gain from a unilateral misreport over a profile grid.

    Expert misreports range over all canonical profiles ``(1, x', 0)``
    permuted, with ``x'`` on a ``deviation_grid``-point grid.  Agent
    misreports range over ``[0, 2 * other bid]`` (plus breakpoints), with
    Myerson payments.
    """
    pg = profile_grid or ProfileGrid.default()
    misreports = np.concatenate([expert_rows(o, default_grid(deviation_grid)) for o in ORDERINGS])
    V_true = pg.expert_matrix()
    worst, witness = -np.inf, None
    for high, y in pg.bid_contexts():
        W_row = bid_rows(high, y)[0]
        gain, i, j = _expert_regret(mechanism, V_true, W_row, misreports)
        if gain > worst:
            worst = gain
            witness = {
                "profile": _profile_json(V_true[i], W_row),
                "deviation": {"who": "expert", "report": dict(zip(("A", "B", "none"), map(float, misreports[j])))},
                "gain": gain,
            }
        for agent in AGENTS:
            w, other = float(W_row[agent]), float(W_row[1 - agent])
            if w == 0 and other == 0:
                continue
            gain, i, t = _agent_regret(mechanism, V_true, agent, w, other, deviation_grid, quad_tol)
            if gain > worst:
                worst = gain
                witness = {
                    "profile": _profile_json(V_true[i], W_row),
                    "deviation": {"who": agent.label, "bid": t},
                    "gain": gain,
                }
    return _report(mechanism, "black-box", worst, tol, witness)


def truthful_utility_audit(
    mechanism, profile_grid: ProfileGrid | None = None, tol: float = ANALYTIC_TOL, quad_tol: float = 1e-10
) -> AuditReport:
    """Individual rationality: the truthful utility ``int_0^w q`` of each
    agent is non-negative.  The violation is the most negative utility."""
    pg = profile_grid or ProfileGrid.default()
    V_true = pg.expert_matrix()
    worst, witness = 0.0, None
    for high, y in pg.bid_contexts():
        W_row = bid_rows(high, y)[0]
        for agent in AGENTS:
            w, other = float(W_row[agent]), float(W_row[1 - agent])
            if w == 0:
                continue
            hints = set()
            for row in V_true:
                hints.update(mechanism.bid_hints(agent, other, tuple(row)))
            edges = graded_edges([0.0, w, *(h for h in hints if 0 < h < w)])
            utility = integrate_segments(_batched_q(mechanism, V_true, agent, other), edges, tol=quad_tol).sum(axis=1)
            i = int(np.argmin(utility))
            if -utility[i] > worst:
                worst = float(-utility[i])
                witness = {"profile": _profile_json(V_true[i], W_row), "agent": agent.label, "utility": float(utility[i])}
    return _report(mechanism, "IR", worst, tol, witness)


def audit(mechanism, grid=None, profile_grid=None, deviation_grid: int = 201) -> list[AuditReport]:
    return [*class_checks(mechanism, grid), black_box_ic_audit(mechanism, profile_grid, deviation_grid)]
