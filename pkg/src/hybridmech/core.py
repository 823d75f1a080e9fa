"""Profiles, the expert's and agents' views, lotteries and social welfare.

A profile holds the expert's normalized values for the three options
(sell to A, sell to B, no sale) and the two raw bids.  Ties are always
broken by the fixed priority A > B > no sale, both when ranking the
expert's values and when picking the high-bidder.

Every scalar operation here has a vectorized twin operating on an
``(n, 3)`` array of expert values ``V`` (columns A, B, none) and an
``(n, 2)`` array of bids ``W``.  Mechanisms and searches use the batch
forms; the scalar forms are thin wrappers around them.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .exceptions import DegenerateBids, DegenerateExpert, InvalidLottery, InvalidProfile

NORMALIZATION_TOL = 1e-12
LOTTERY_SUM_TOL = 1e-9
LOTTERY_NEG_TOL = 1e-12


class Option(IntEnum):
    A = 0
    B = 1
    NONE = 2

    @property
    def label(self) -> str:
        return ("A", "B", "none")[self]

    @classmethod
    def from_label(cls, label: str) -> "Option":
        try:
            return {"A": cls.A, "B": cls.B, "none": cls.NONE}[label]
        except KeyError:
            raise InvalidProfile(f"unknown option label {label!r}") from None


OPTIONS = (Option.A, Option.B, Option.NONE)
AGENTS = (Option.A, Option.B)


# ---------------------------------------------------------------------------
# batch primitives


def option_ranks(V: np.ndarray) -> np.ndarray:
    """Rank (0 = favourite) of each option under the expert's values.

    An option is beaten by every option with a strictly larger value and
    by every option with an equal value that comes earlier in A > B > none.
    """
    V = np.asarray(V, dtype=float)
    ranks = np.zeros(V.shape, dtype=np.intp)
    for o in range(3):
        for other in range(3):
            if other == o:
                continue
            beats = V[:, other] > V[:, o]
            if other < o:
                beats |= V[:, other] == V[:, o]
            ranks[:, o] += beats
    return ranks


def rank_order(ranks: np.ndarray) -> np.ndarray:
    """Invert :func:`option_ranks`: column ``r`` holds the option of rank ``r``."""
    return np.argsort(ranks, axis=1)


def high_agent_index(W: np.ndarray) -> np.ndarray:
    """0 when A is the high-bidder (including equal bids), else 1."""
    W = np.asarray(W, dtype=float)
    return (W[:, 1] > W[:, 0]).astype(np.intp)


def normalized_bids(W: np.ndarray) -> np.ndarray:
    """``(n, 3)`` array of bid / max bid, with 0 in the no-sale column."""
    W = np.asarray(W, dtype=float)
    top = np.maximum(W[:, 0], W[:, 1])
    out = np.zeros((W.shape[0], 3))
    with np.errstate(invalid="ignore", divide="ignore"):
        out[:, 0] = W[:, 0] / top
        out[:, 1] = W[:, 1] / top
    return out


def welfare_matrix(V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Social welfare of each option, shape ``(n, 3)``."""
    return np.asarray(V, dtype=float) + normalized_bids(W)


def expected_welfare_batch(P: np.ndarray, V: np.ndarray, W: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", np.asarray(P, dtype=float), welfare_matrix(V, W))


def pointwise_ratio(P: np.ndarray, V: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Optimal welfare over expected welfare for each row."""
    sw = welfare_matrix(V, W)
    expected = np.einsum("ij,ij->i", np.asarray(P, dtype=float), sw)
    best = np.maximum(np.maximum(sw[:, 0], sw[:, 1]), sw[:, 2])
    with np.errstate(divide="ignore", invalid="ignore"):
        return best / expected


def second_values(V: np.ndarray, ranks: np.ndarray | None = None) -> np.ndarray:
    """Expert value of the rank-2 option (the ``x`` of the expert's view)."""
    V = np.asarray(V, dtype=float)
    if ranks is None:
        ranks = option_ranks(V)
    return np.take_along_axis(V, rank_order(ranks)[:, 1:2], axis=1)[:, 0]


def low_bid_ratio(W: np.ndarray) -> np.ndarray:
    """Normalized low bid ``y = min / max``."""
    W = np.asarray(W, dtype=float)
    a, b = W[:, 0], W[:, 1]
    return np.minimum(a, b) / np.maximum(a, b)


def normalize_expert_rows(raw: np.ndarray) -> np.ndarray:
    """Affinely rescale each row to min 0 and max 1.  Raises on constant rows."""
    raw = np.asarray(raw, dtype=float)
    lo = raw.min(axis=1, keepdims=True)
    span = raw.max(axis=1, keepdims=True) - lo
    if np.any(span <= 0):
        bad = int(np.flatnonzero(span.ravel() <= 0)[0])
        raise DegenerateExpert(f"row {bad}: all expert values are equal")
    return (raw - lo) / span


# ---------------------------------------------------------------------------
# scalar types


@dataclass(frozen=True)
class Profile:
    """Normalized expert values plus the two raw bids."""

    v_a: float
    v_b: float
    v_none: float
    w_a: float
    w_b: float

    def __post_init__(self):
        for name in ("v_a", "v_b", "v_none", "w_a", "w_b"):
            object.__setattr__(self, name, float(getattr(self, name)))
        values = (self.v_a, self.v_b, self.v_none, self.w_a, self.w_b)
        if not all(math.isfinite(v) for v in values):
            raise InvalidProfile(f"non-finite entry in {values}")
        ex = self.expert
        if abs(max(ex) - 1.0) > NORMALIZATION_TOL or abs(min(ex)) > NORMALIZATION_TOL:
            raise InvalidProfile(f"expert values {ex} are not normalized to [0, 1] with max 1 and min 0")
        if self.w_a < 0 or self.w_b < 0:
            raise InvalidProfile(f"negative bid in {self.bids}")
        if max(self.w_a, self.w_b) <= 0:
            raise DegenerateBids("both bids are zero")

    @property
    def expert(self) -> tuple[float, float, float]:
        return (self.v_a, self.v_b, self.v_none)

    @property
    def bids(self) -> tuple[float, float]:
        return (self.w_a, self.w_b)

    def value(self, option: Option) -> float:
        return self.expert[option]

    def bid(self, agent: Option) -> float:
        if agent is Option.NONE:
            raise ValueError("the no-sale option has no bid")
        return self.bids[agent]

    def normalized(self) -> "Profile":
        """Same profile with the high bid scaled to 1."""
        top = max(self.bids)
        return Profile(self.v_a, self.v_b, self.v_none, self.w_a / top, self.w_b / top)

    def with_bid(self, agent: Option, bid: float) -> "Profile":
        bids = list(self.bids)
        bids[agent] = bid
        return Profile(self.v_a, self.v_b, self.v_none, *bids)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """``(V, W)`` batch arrays of length one."""
        return np.array([self.expert], dtype=float), np.array([self.bids], dtype=float)

    def to_json(self) -> dict:
        return {
            "expert": {"A": self.v_a, "B": self.v_b, "none": self.v_none},
            "bids": {"A": self.w_a, "B": self.w_b},
        }

    @classmethod
    def from_json(cls, obj: Mapping) -> "Profile":
        """Parse the profile JSON object, canonicalizing the expert values."""
        if not isinstance(obj, Mapping):
            raise InvalidProfile("profile: expected a JSON object")
        expert = _json_section(obj, "expert", ("A", "B", "none"))
        bids = _json_section(obj, "bids", ("A", "B"))
        return canonicalize(expert, bids)


def _json_section(obj: Mapping, section: str, keys: tuple[str, ...]) -> list[float]:
    if section not in obj:
        raise InvalidProfile(f"{section}: missing field")
    part = obj[section]
    if not isinstance(part, Mapping):
        raise InvalidProfile(f"{section}: expected an object")
    out = []
    for key in keys:
        if key not in part:
            raise InvalidProfile(f"{section}.{key}: missing field")
        value = part[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise InvalidProfile(f"{section}.{key}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise InvalidProfile(f"{section}.{key}: not finite")
        out.append(float(value))
    return out


def canonicalize(raw_expert, raw_bids) -> Profile:
    """Build a :class:`Profile` from raw expert values and raw bids.

    ``raw_expert`` is a mapping with keys ``A``, ``B``, ``none`` or a
    sequence in that order; ``raw_bids`` likewise with ``A`` and ``B``.
    Expert values are affinely rescaled to ``(v - min) / (max - min)``;
    bids are kept raw.
    """
    expert = _as_values(raw_expert, ("A", "B", "none"))
    bids = _as_values(raw_bids, ("A", "B"))
    if any(v < 0 for v in expert):
        raise InvalidProfile(f"negative expert value in {expert}")
    if any(w < 0 for w in bids):
        raise InvalidProfile(f"negative bid in {bids}")
    if max(bids) <= 0:
        raise DegenerateBids("both bids are zero")
    lo, hi = min(expert), max(expert)
    if hi <= lo:
        raise DegenerateExpert(f"all expert values equal {hi}")
    scaled = [(v - lo) / (hi - lo) for v in expert]
    return Profile(*scaled, *bids)


def _as_values(raw, keys: tuple[str, ...]) -> list[float]:
    try:
        if isinstance(raw, Mapping):
            return [float(raw[k]) for k in keys]
        values = [float(v) for v in raw]
    except KeyError as err:
        raise InvalidProfile(f"missing value for {err.args[0]!r}") from None
    except (TypeError, ValueError) as err:
        raise InvalidProfile(f"expected numbers: {err}") from None
    if len(values) != len(keys):
        raise InvalidProfile(f"expected {len(keys)} values, got {len(values)}")
    return values


@dataclass(frozen=True)
class ExpertView:
    """Columns ordered by the expert's values: ``(1, x, 0)`` over ``(h, l, z)``.

    ``h``, ``l`` and ``z`` are the normalized bids attached to the expert's
    first, second and third favourite option (0 for no sale); ``order``
    lists the options by rank.
    """

    x: float
    h: float
    l: float
    z: float
    order: tuple[Option, Option, Option]

    def to_profile(self) -> Profile:
        expert = [0.0, 0.0, 0.0]
        bids = [0.0, 0.0]
        for value, bid, option in zip((1.0, self.x, 0.0), (self.h, self.l, self.z), self.order):
            expert[option] = value
            if option is not Option.NONE:
                bids[option] = bid
        return Profile(*expert, *bids)


@dataclass(frozen=True)
class AgentsView:
    """Columns ordered by the bids: ``(h, l, n)`` over ``(1, y, 0)``.

    ``h``, ``l`` and ``n`` are the expert's values for the high-bidder,
    the low-bidder and the no-sale option.
    """

    y: float
    h: float
    l: float
    n: float
    high_agent: Option

    @property
    def low_agent(self) -> Option:
        return Option.B if self.high_agent is Option.A else Option.A

    def to_profile(self) -> Profile:
        expert = [0.0, 0.0, self.n]
        expert[self.high_agent] = self.h
        expert[self.low_agent] = self.l
        bids = [0.0, 0.0]
        bids[self.high_agent] = 1.0
        bids[self.low_agent] = self.y
        return Profile(*expert, *bids)


def expert_views(V: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch expert view: ``x``, the ``(h, l, z)`` bid columns and the
    ``(n, 3)`` rank-to-option order."""
    V = np.asarray(V, dtype=float)
    order = rank_order(option_ranks(V))
    hlz = np.take_along_axis(normalized_bids(W), order, axis=1)
    x = np.take_along_axis(V, order[:, 1:2], axis=1)[:, 0]
    return x, hlz, order


def profiles_from_expert_views(x, hlz, order) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of :func:`expert_views`, with the high bid scaled to 1."""
    x = np.asarray(x, dtype=float)
    order = np.asarray(order)
    n = x.size
    values = np.column_stack([np.ones(n), x, np.zeros(n)])
    V = np.empty((n, 3))
    padded = np.empty((n, 3))
    np.put_along_axis(V, order, values, axis=1)
    np.put_along_axis(padded, order, np.asarray(hlz, dtype=float), axis=1)
    return V, padded[:, :2].copy()


def agents_views(V: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batch agents' view: ``y``, the ``(h, l, n)`` expert columns and the
    high agent index."""
    V = np.asarray(V, dtype=float)
    high = high_agent_index(W)
    rows = np.arange(V.shape[0])
    hln = np.column_stack([V[rows, high], V[rows, 1 - high], V[:, Option.NONE]])
    return low_bid_ratio(W), hln, high


def profiles_from_agents_views(y, hln, high) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    hln = np.asarray(hln, dtype=float)
    high = np.asarray(high)
    rows = np.arange(y.size)
    V = np.empty((y.size, 3))
    W = np.empty((y.size, 2))
    V[rows, high], V[rows, 1 - high], V[:, Option.NONE] = hln[:, 0], hln[:, 1], hln[:, 2]
    W[rows, high], W[rows, 1 - high] = 1.0, y
    return V, W


def expert_view(p: Profile) -> ExpertView:
    x, hlz, order = expert_views(*p.arrays())
    h, l, z = (float(b) for b in hlz[0])
    return ExpertView(x=float(x[0]), h=h, l=l, z=z, order=tuple(Option(int(o)) for o in order[0]))


def agents_view(p: Profile) -> AgentsView:
    y, hln, high = agents_views(*p.arrays())
    h, l, n = (float(v) for v in hln[0])
    return AgentsView(y=float(y[0]), h=h, l=l, n=n, high_agent=Option(int(high[0])))


@dataclass(frozen=True)
class Lottery:
    p_a: float
    p_b: float
    p_none: float

    def __post_init__(self):
        for name in ("p_a", "p_b", "p_none"):
            object.__setattr__(self, name, float(getattr(self, name)))
        probs = (self.p_a, self.p_b, self.p_none)
        if not all(math.isfinite(p) for p in probs):
            raise InvalidLottery(f"non-finite probability in {probs}")
        if min(probs) < -LOTTERY_NEG_TOL:
            raise InvalidLottery(f"negative probability in {probs}")
        if abs(sum(probs) - 1.0) > LOTTERY_SUM_TOL:
            raise InvalidLottery(f"probabilities {probs} sum to {sum(probs)}")

    def __getitem__(self, option: Option) -> float:
        return (self.p_a, self.p_b, self.p_none)[option]

    def as_array(self) -> np.ndarray:
        return np.array([self.p_a, self.p_b, self.p_none])

    @classmethod
    def from_array(cls, probs: Sequence[float]) -> "Lottery":
        return cls(*(float(p) for p in probs))

    @classmethod
    def point_mass(cls, option: Option) -> "Lottery":
        probs = [0.0, 0.0, 0.0]
        probs[option] = 1.0
        return cls(*probs)

    def is_point_mass(self, tol: float = 1e-12) -> bool:
        return max(self.p_a, self.p_b, self.p_none) >= 1.0 - tol

    def to_json(self) -> dict:
        return {"A": self.p_a, "B": self.p_b, "none": self.p_none}


def social_welfare(option: Option, p: Profile) -> float:
    if option is Option.NONE:
        return p.v_none
    return p.value(option) + p.bid(option) / max(p.bids)


def optimal_welfare(p: Profile) -> tuple[Option, float]:
    # max() keeps the first maximum, which is the A > B > none priority
    best = max(OPTIONS, key=lambda o: (social_welfare(o, p), -int(o)))
    return best, social_welfare(best, p)


def expected_welfare(lottery: Lottery, p: Profile) -> float:
    return sum(lottery[o] * social_welfare(o, p) for o in OPTIONS)
