"""Myerson payments for the two bidders and sampled outcomes.

For a bid-monotone allocation the unique payment that is zero at a zero
bid is ``p_i = w_i q_i(w_i) - int_0^{w_i} q_i(t) dt``.  Payments are
charged unconditionally, whether or not the agent wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numerics import adaptive_simpson, graded_edges, integrate_segments
from .core import AGENTS, Lottery, Option, Profile
from .exceptions import DegenerateBids, NonMonotone

PAYMENT_TOL = 1e-9
MONOTONE_TOL = 1e-9


@dataclass(frozen=True)
class PaymentVector:
    a: float
    b: float

    def __getitem__(self, agent: Option) -> float:
        if agent is Option.A:
            return self.a
        if agent is Option.B:
            return self.b
        raise KeyError(agent)

    def to_json(self) -> dict:
        return {"A": self.a, "B": self.b}


@dataclass(frozen=True)
class Outcome:
    option: Option
    payments: PaymentVector
    lottery: Lottery
    seed: int

    def to_json(self) -> dict:
        return {
            "option": self.option.label,
            "payments": self.payments.to_json(),
            "lottery": self.lottery.to_json(),
            "seed": self.seed,
        }


def _other(agent: Option) -> Option:
    if agent is Option.NONE:
        raise ValueError("payments apply to agents A and B only")
    return Option.B if agent is Option.A else Option.A


def selection_probabilities(mechanism, agent: Option, bids, other_bid: float, expert) -> np.ndarray:
    """``q_i(t)`` for each own bid ``t`` with the other bid and expert fixed."""
    agent = Option(agent)
    bids = np.atleast_1d(np.asarray(bids, dtype=float))
    if np.any(bids < 0) or other_bid < 0:
        raise ValueError("bids must be non-negative")
    if other_bid == 0 and np.any(bids == 0):
        raise DegenerateBids("own bid and other bid are both zero")
    n = bids.size
    V = np.broadcast_to(np.asarray(expert, dtype=float), (n, 3))
    W = np.empty((n, 2))
    W[:, agent] = bids
    W[:, _other(agent)] = other_bid
    return mechanism.lotteries(V, W)[:, agent]


def selection_probability(mechanism, agent: Option, bid: float, other_bid: float, expert) -> float:
    return float(selection_probabilities(mechanism, agent, [bid], other_bid, expert)[0])


class _RecordingIntegrand:
    """Evaluates ``q_i`` and keeps every sample for a monotonicity check."""

    def __init__(self, mechanism, agent, other_bid, expert):
        self.args = (mechanism, agent, other_bid, expert)
        self.ts: list[np.ndarray] = []
        self.qs: list[np.ndarray] = []

    def __call__(self, ts):
        m, agent, other, expert = self.args
        q = selection_probabilities(m, agent, ts, other, expert)
        self.ts.append(np.asarray(ts, dtype=float))
        self.qs.append(q)
        return q

    def worst_decrease(self) -> tuple[float, float, float]:
        ts = np.concatenate(self.ts)
        qs = np.concatenate(self.qs)
        order = np.argsort(ts, kind="stable")
        ts, qs = ts[order], qs[order]
        drops = qs[:-1] - qs[1:]
        if drops.size == 0:
            return 0.0, np.nan, np.nan
        k = int(np.argmax(drops))
        return float(drops[k]), float(ts[k]), float(ts[k + 1])


def _edges(upper: float, hints, extra=()) -> np.ndarray:
    pts = {0.0, float(upper), *(float(t) for t in extra)}
    pts.update(float(t) for t in hints if 0.0 < t < upper)
    return graded_edges([t for t in pts if 0.0 <= t <= upper])


def allocation_integral(mechanism, p: Profile, agent: Option, upper: float | None = None, *, tol=PAYMENT_TOL) -> float:
    """``int_0^upper q_i(t) dt`` split at the mechanism's bid hints."""
    agent = Option(agent)
    other = p.bid(_other(agent))
    upper = p.bid(agent) if upper is None else upper
    q = _RecordingIntegrand(mechanism, agent, other, p.expert)
    edges = _edges(upper, mechanism.bid_hints(agent, other, p.expert))
    return float(integrate_segments(q, edges, tol=tol).sum()) if edges.size > 1 else 0.0


def myerson_payment(mechanism, p: Profile, agent: Option, *, tol: float = PAYMENT_TOL) -> float:
    """Unique zero-at-zero payment making the agent's allocation truthful.

    Raises :class:`NonMonotone` when the sampled ``q_i`` drops by more
    than ``1e-9`` anywhere on ``[0, w_i]``.
    """
    agent = Option(agent)
    w = p.bid(agent)
    if w == 0 or "bid-independent" in mechanism.tags:
        # constant q_i: the two terms cancel exactly
        return 0.0
    other = p.bid(_other(agent))
    q = _RecordingIntegrand(mechanism, agent, other, p.expert)
    edges = _edges(w, mechanism.bid_hints(agent, other, p.expert))
    integral = float(integrate_segments(q, edges, tol=tol).sum())
    q_w = float(q(np.array([w]))[0])
    drop, t0, t1 = q.worst_decrease()
    if drop > MONOTONE_TOL:
        raise NonMonotone(
            f"{mechanism.name}: q_{agent.label} drops by {drop:.3g} between bids {t0:.6g} and {t1:.6g}"
        )
    return w * q_w - integral


def myerson_payments(mechanism, p: Profile, *, tol: float = PAYMENT_TOL) -> PaymentVector:
    return PaymentVector(*(myerson_payment(mechanism, p, a, tol=tol) for a in AGENTS))


def hint_free_payment(mechanism, p: Profile, agent: Option, *, tol: float = 1e-10) -> float:
    """Same payment by adaptive Simpson without breakpoint hints; used to
    catch mis-declared hints."""
    agent = Option(agent)
    w = p.bid(agent)
    if w == 0:
        return 0.0
    other = p.bid(_other(agent))
    expert = p.expert

    def q(ts):
        ts = np.asarray(ts, dtype=float)
        safe = np.where(ts == 0, 0.0 if other > 0 else np.finfo(float).tiny, ts)
        return selection_probabilities(mechanism, agent, safe, other, expert)

    return w * selection_probability(mechanism, agent, w, other, expert) - adaptive_simpson(q, 0.0, w, tol=tol)


def cumulative_allocation(mechanism, agent: Option, points, other_bid: float, expert, *, tol=PAYMENT_TOL) -> np.ndarray:
    """``int_0^t q_i`` for every ``t`` in ``points`` (no monotonicity check)."""
    agent = Option(agent)
    points = np.asarray(points, dtype=float)
    top = float(points.max())
    edges = _edges(top, mechanism.bid_hints(agent, other_bid, expert), extra=points)
    if edges.size < 2:
        return np.zeros_like(points)

    def q(ts):
        return selection_probabilities(mechanism, agent, ts, other_bid, expert)

    pieces = integrate_segments(q, edges, tol=tol)
    cum = np.concatenate([[0.0], np.cumsum(pieces)])
    return cum[np.searchsorted(edges, points)]


def outcome_with_payments(mechanism, p: Profile, seed: int = 0) -> Outcome:
    """Draw an option from the mechanism's lottery and attach both payments."""
    lottery = mechanism.evaluate(p)
    rng = np.random.default_rng(seed)
    probs = np.clip(lottery.as_array(), 0.0, None)
    option = Option(int(rng.choice(3, p=probs / probs.sum())))
    return Outcome(option, myerson_payments(mechanism, p), lottery, seed)
