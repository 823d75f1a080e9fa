"""Mechanisms as maps from profiles to lotteries over {A, B, none}.

Each :class:`Mechanism` wraps a vectorized ``batch(V, W) -> P`` function.
Expert-side mechanisms assign probabilities to the expert's ranks
(``g``, ``f``, ``eta`` for first, second, third favourite); bid-side
mechanisms assign them to the high- and low-bidder (``d``, ``c``).
"""

from __future__ import annotations

import json
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .bounds import constants
from .core import (
    Lottery,
    Option,
    Profile,
    high_agent_index,
    low_bid_ratio,
    option_ranks,
    second_values,
    welfare_matrix,
)
from .exceptions import InvalidCurve, UnknownMechanism

TAGS = frozenset(
    {"ordinal", "bid-independent", "expert-independent", "template", "always-sell", "deterministic"}
)

BatchFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
HintFn = Callable[[Option, float, Sequence[float]], tuple]


def _no_hints(agent, other_bid, expert) -> tuple:
    return ()


@dataclass(frozen=True)
class Mechanism:
    """A mechanism handle with its class tags.

    ``bid_hints(agent, other_bid, expert)`` lists own-bid values where the
    agent's selection probability may jump or change formula;
    ``expert_breakpoints`` does the same for the expert's second value.
    """

    name: str
    batch: BatchFn = field(repr=False)
    tags: frozenset = frozenset()
    bid_hints: HintFn = field(default=_no_hints, repr=False)
    expert_breakpoints: tuple = ()

    def __post_init__(self):
        unknown = set(self.tags) - TAGS
        if unknown:
            raise ValueError(f"unknown class tags {sorted(unknown)}")
        object.__setattr__(self, "tags", frozenset(self.tags))

    def evaluate(self, p: Profile) -> Lottery:
        V, W = p.arrays()
        return Lottery.from_array(self.batch(V, W)[0])

    __call__ = evaluate

    def lotteries(self, V, W) -> np.ndarray:
        return self.batch(np.asarray(V, dtype=float), np.asarray(W, dtype=float))


# ---------------------------------------------------------------------------
# helpers


def _by_rank(V: np.ndarray, g, f, eta) -> np.ndarray:
    n = V.shape[0]
    rank_probs = np.column_stack(
        [np.broadcast_to(np.asarray(a, dtype=float), (n,)) for a in (g, f, eta)]
    )
    return np.take_along_axis(rank_probs, option_ranks(V), axis=1)


def _by_bidder(W: np.ndarray, c) -> np.ndarray:
    """High-bidder gets ``1 - c``, low-bidder ``c``, no sale 0."""
    n = W.shape[0]
    c = np.broadcast_to(np.asarray(c, dtype=float), (n,))
    a_high = W[:, 0] >= W[:, 1]
    P = np.zeros((n, 3))
    P[:, 0] = np.where(a_high, 1.0 - c, c)
    P[:, 1] = np.where(a_high, c, 1.0 - c)
    return P


def _scaled_hints(ys: Iterable[float]) -> HintFn:
    """Own-bid jump points for a rule that depends on bids only through ``y``.

    As the low-bidder the agent's ``y`` is ``bid / other``; as the
    high-bidder it is ``other / bid``.
    """
    ys = tuple(float(y) for y in ys if 0.0 < y < 1.0)

    def hints(agent, other_bid, expert) -> tuple:
        pts = {other_bid}
        for y in ys:
            pts.add(other_bid * y)
            pts.add(other_bid / y)
        return tuple(sorted(p for p in pts if p > 0))

    return hints


# ---------------------------------------------------------------------------
# curves in view coordinates


def bim_curves(x):
    """``(g, f, eta)`` of BIM at expert second value ``x``."""
    tau = constants().tau
    x = np.asarray(x, dtype=float)
    den = 1.0 + 3.0 * tau
    e = np.exp(1.0 - x)
    low = x <= tau
    g = np.where(low, (1.0 + tau) / den, 2.0 * tau * (1.0 + x) * e / den)
    f = np.where(low, tau / den, (1.0 + tau - 2.0 * tau * e) / den)
    eta = np.where(low, tau / den, 2.0 * tau * (1.0 - x * e) / den)
    return g, f, eta


def quadratic_curves(x):
    x = np.asarray(x, dtype=float)
    return (4.0 - x * x) / 6.0, (1.0 + 2.0 * x) / 6.0, (1.0 - x) ** 2 / 6.0


def eim_upper_branch(y, rho=None):
    if rho is None:
        rho = constants().rho_eim
    return 2.0 * (1.0 - 1.0 / rho) / (2.0 - np.asarray(y, dtype=float))


def eim_lower_branch(y, rho=None):
    if rho is None:
        rho = constants().rho_eim
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return 1.0 / rho - (1.0 - 1.0 / rho) / y


def eim_curve(y):
    """EIM's low-bidder probability; left branch at the breakpoint."""
    y = np.asarray(y, dtype=float)
    cut = constants().eim_breakpoint
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(y <= cut, eim_upper_branch(y), eim_lower_branch(y))


def r_curve(y):
    y = np.asarray(y, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(y < 0.8, 1.0 / (5.0 * (1.0 - y)), 1.0)


def d_curve(y):
    y = np.asarray(y, dtype=float)
    return np.where(y >= constants().inv_phi, 1.0, 0.0)


# ---------------------------------------------------------------------------
# batch implementations


def _eom(V, W):
    return _by_rank(V, 2.0 / 3.0, 1.0 / 3.0, 0.0)


def _bom(V, W):
    return _by_bidder(W, 1.0 / 3.0)


def _bim(V, W):
    return _by_rank(V, *bim_curves(second_values(V)))


def _quadratic(V, W):
    return _by_rank(V, *quadratic_curves(second_values(V)))


def _eim(V, W):
    return _by_bidder(W, eim_curve(low_bid_ratio(W)))


def _second_price(V, W):
    return _by_bidder(W, 0.0)


def template_categories(V, W) -> np.ndarray:
    """True where a profile is in category T1.

    T1 when the expert values the low-bidder strictly more than the
    high-bidder, or equally and the low-bidder is A (A > B priority).
    """
    V = np.asarray(V, dtype=float)
    high = high_agent_index(W)
    rows = np.arange(V.shape[0])
    h = V[rows, high]
    low = 1 - high
    l = V[rows, low]
    return (l > h) | ((l == h) & (low == 0))


def _template_batch(curve) -> BatchFn:
    def batch(V, W):
        y = low_bid_ratio(W)
        c = np.where(template_categories(V, W), curve(y), 0.0)
        return _by_bidder(W, c)

    return batch


def _welfare_optimal(V, W):
    sw = welfare_matrix(V, W)
    P = np.zeros_like(sw)
    P[np.arange(sw.shape[0]), np.argmax(sw, axis=1)] = 1.0
    return P


def _welfare_optimal_hints(agent: Option, other_bid: float, expert) -> tuple[float, ...]:
    # bids where the agent's welfare meets the other agent's or the none option's
    v = np.asarray(expert, dtype=float)
    vi, vj, vn = v[int(agent)], v[1 - int(agent)], v[2]
    o = float(other_bid)
    if o <= 0:
        return ()
    pts = [o * (1 + vj - vi), o * (vn - vi)]
    if vi + 1 > vj:
        pts.append(o / (vi + 1 - vj))
    return tuple(t for t in pts if t > 0)


# ---------------------------------------------------------------------------
# factories for user-defined mechanisms


class PiecewiseLinearCurve:
    """Non-decreasing piecewise-linear curve on [0, 1] through given knots.

    Outside the knot range the curve is flat.  ``monotone=False`` skips
    the non-decreasing check so that audits can report the violation.
    """

    def __init__(self, points: Sequence, monotone: bool = True):
        ys, cs = [], []
        for i, pt in enumerate(points):
            try:
                y, c = (float(pt["y"]), float(pt["c"])) if isinstance(pt, dict) else map(float, pt)
            except (KeyError, TypeError, ValueError):
                raise InvalidCurve(f"point {i}: expected {{'y': float, 'c': float}}") from None
            ys.append(y)
            cs.append(c)
        if not ys:
            raise InvalidCurve("curve needs at least one point")
        ys, cs = np.array(ys), np.array(cs)
        if np.any(~np.isfinite(ys)) or np.any(~np.isfinite(cs)):
            raise InvalidCurve("curve points must be finite")
        if np.any(np.diff(ys) <= 0):
            raise InvalidCurve("curve y values must be strictly increasing")
        if ys[0] < 0 or ys[-1] > 1:
            raise InvalidCurve("curve y values must lie in [0, 1]")
        if np.any((cs < 0) | (cs > 1)):
            raise InvalidCurve("curve values must lie in [0, 1]")
        if monotone and np.any(np.diff(cs) < 0):
            bad = int(np.flatnonzero(np.diff(cs) < 0)[0])
            raise InvalidCurve(f"curve decreases between y={ys[bad]} and y={ys[bad + 1]}")
        self.ys = ys
        self.cs = cs

    def __call__(self, y):
        return np.interp(np.asarray(y, dtype=float), self.ys, self.cs)

    @classmethod
    def from_json(cls, text_or_obj, monotone: bool = True) -> "PiecewiseLinearCurve":
        obj = json.loads(text_or_obj) if isinstance(text_or_obj, str) else text_or_obj
        if not isinstance(obj, list):
            raise InvalidCurve("curve JSON must be a list of {'y', 'c'} objects")
        return cls(obj, monotone=monotone)


def make_template(curve, name: str = "template", breakpoints: Iterable[float] = ()) -> Mechanism:
    """Template mechanism: T1 profiles pick the low-bidder with ``curve(y)``,
    T2 profiles pick the high-bidder."""
    if isinstance(curve, PiecewiseLinearCurve):
        breakpoints = (*breakpoints, *curve.ys)
    tags = {"template", "always-sell"}
    return Mechanism(name, _template_batch(curve), frozenset(tags), _scaled_hints(breakpoints))


def make_expert_independent(
    c, name: str = "expert-independent", breakpoints: Iterable[float] = (), tags=()
) -> Mechanism:
    """Always-sell mechanism giving the low-bidder ``c(y)``."""
    if isinstance(c, PiecewiseLinearCurve):
        breakpoints = (*breakpoints, *c.ys)

    def batch(V, W):
        return _by_bidder(W, c(low_bid_ratio(W)))

    all_tags = {"expert-independent", "always-sell", *tags}
    return Mechanism(name, batch, frozenset(all_tags), _scaled_hints(breakpoints))


def make_bid_independent(g, f, eta, name: str = "bid-independent", breakpoints=()) -> Mechanism:
    """Mechanism assigning ``g(x), f(x), eta(x)`` to the expert's ranks."""

    def batch(V, W):
        x = second_values(V)
        return _by_rank(V, g(x), f(x), eta(x))

    return Mechanism(name, batch, frozenset({"bid-independent"}), _no_hints, tuple(breakpoints))


# ---------------------------------------------------------------------------
# registry


def _build_registry() -> dict[str, Mechanism]:
    c = constants()
    mechs = [
        Mechanism("eom", _eom, frozenset({"ordinal", "bid-independent"})),
        Mechanism(
            "bom",
            _bom,
            frozenset({"ordinal", "expert-independent", "always-sell"}),
            _scaled_hints(()),
        ),
        Mechanism("bim", _bim, frozenset({"bid-independent"}), expert_breakpoints=(c.tau,)),
        Mechanism(
            "eim",
            _eim,
            frozenset({"expert-independent", "always-sell"}),
            _scaled_hints((c.eim_breakpoint,)),
        ),
        Mechanism("r", _template_batch(r_curve), frozenset({"template", "always-sell"}), _scaled_hints((0.8,))),
        Mechanism(
            "d",
            _template_batch(d_curve),
            frozenset({"template", "always-sell", "deterministic"}),
            _scaled_hints((c.inv_phi,)),
        ),
        Mechanism(
            "second-price",
            _second_price,
            frozenset({"expert-independent", "always-sell", "deterministic", "ordinal"}),
            _scaled_hints(()),
        ),
        Mechanism("quadratic", _quadratic, frozenset({"bid-independent"})),
    ]
    return {m.name: m for m in mechs}


_REGISTRY: dict[str, Mechanism] | None = None

# not truthful; kept out of the registry and used to exercise the audits
WELFARE_OPTIMAL = Mechanism(
    "welfare-optimal", _welfare_optimal, frozenset({"deterministic"}), _welfare_optimal_hints
)


def registry() -> list[Mechanism]:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = _build_registry()
    return list(_REGISTRY.values())


def names() -> list[str]:
    return [m.name for m in registry()]


def lookup(name: str) -> Mechanism:
    registry()
    key = name.strip().lower()
    if key not in _REGISTRY:
        raise UnknownMechanism(f"unknown mechanism {name!r}; choose from {', '.join(_REGISTRY)}")
    return _REGISTRY[key]


# ---------------------------------------------------------------------------
# scalar entry points


def eom(p: Profile) -> Lottery:
    return lookup("eom").evaluate(p)


def bom(p: Profile) -> Lottery:
    return lookup("bom").evaluate(p)


def bim(p: Profile) -> Lottery:
    return lookup("bim").evaluate(p)


def eim(p: Profile) -> Lottery:
    return lookup("eim").evaluate(p)


def mech_r(p: Profile) -> Lottery:
    return lookup("r").evaluate(p)


def mech_d(p: Profile) -> Lottery:
    return lookup("d").evaluate(p)


def quadratic_lottery(p: Profile) -> Lottery:
    return lookup("quadratic").evaluate(p)


def second_price(p: Profile) -> Lottery:
    return lookup("second-price").evaluate(p)


def template_category(p: Profile) -> str:
    V, W = p.arrays()
    return "T1" if template_categories(V, W)[0] else "T2"


def template_apply(curve, p: Profile) -> Lottery:
    V, W = p.arrays()
    return Lottery.from_array(_template_batch(curve)(V, W)[0])
