"""Constants solved from their defining equations, lower-bound curves and
adversarial profile families that certify class lower bounds."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from ._numerics import bisect_newton, golden_section_min
from .core import Profile, expected_welfare, optimal_welfare
from .exceptions import NotDeterministic, WrongClass

EPSILON_GRID = (1e-2, 1e-4, 1e-6)


def _tau_equation(t: float) -> float:
    return 2.0 * t - math.exp(t - 1.0)


def solve_tau() -> float:
    """Root in (0, 1) of ``2 t = exp(t - 1)``, i.e. ``-W(-1/(2e))``."""
    return bisect_newton(_tau_equation, lambda t: 2.0 - math.exp(t - 1.0), 0.0, 1.0)


def _gamma_poly(g: float) -> float:
    return 1.0 - 2.0 * g - 4.0 * g * g - 2.0 * g**3


def solve_gamma() -> float:
    """Root in (0, 1) of ``1 - 2g - 4g^2 - 2g^3``."""
    return bisect_newton(_gamma_poly, lambda g: -2.0 - 8.0 * g - 6.0 * g * g, 0.0, 1.0)


@dataclass(frozen=True)
class Constants:
    tau: float
    phi: float
    inv_phi: float
    rho_bim: float
    rho_eim: float
    eim_breakpoint: float
    gamma: float
    beta: float
    rho_general: float
    tau_residual: float
    gamma_residual: float
    beta_denominator_residual: float

    def to_json(self) -> dict:
        return asdict(self)


@lru_cache(maxsize=None)
def constants() -> Constants:
    tau = solve_tau()
    gamma = solve_gamma()
    beta = 1.0 / (1.0 + gamma)
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    rho_eim = 7.0 - 4.0 * math.sqrt(2.0)
    return Constants(
        tau=tau,
        phi=phi,
        inv_phi=1.0 / phi,
        rho_bim=(1.0 + 3.0 * tau) / (1.0 + tau),
        rho_eim=rho_eim,
        eim_breakpoint=(3.0 - rho_eim) / 2.0,
        gamma=gamma,
        beta=beta,
        rho_general=general_lb_value(gamma, beta),
        tau_residual=abs(_tau_equation(tau)),
        gamma_residual=abs(_gamma_poly(gamma)),
        beta_denominator_residual=abs(beta * (1.0 + gamma) - 1.0),
    )


def general_lb_value(gamma: float | None = None, beta: float | None = None) -> float:
    """Unconditional lower bound ``(b + 2bg - g^2) / (b (1 + g))``."""
    if gamma is None:
        gamma = solve_gamma()
    if beta is None:
        beta = 1.0 / (1.0 + gamma)
    return (beta + 2.0 * beta * gamma - gamma**2) / (beta * (1.0 + gamma))


def general_lb_multipliers(gamma: float | None = None) -> tuple[float, float, float, float]:
    """The four non-negative weights of the linear combination behind
    :func:`general_lb_value`; all must be positive for the bound to hold."""
    if gamma is None:
        gamma = solve_gamma()
    beta = 1.0 / (1.0 + gamma)
    den = beta + 2.0 * beta * gamma - gamma**2
    return (
        gamma / den,
        (beta - gamma) / den,
        (beta - gamma) * (1.0 + gamma) / den,
        beta * (1.0 + gamma) / den,
    )


def bid_independent_lb_value() -> float:
    """``(1 - 3W) / (1 - W)`` with ``W = W(-1/(2e)) = -tau``."""
    w = -solve_tau()
    return (1.0 - 3.0 * w) / (1.0 - w)


def ordinal_lb_curve(p):
    """Ratio forced on an ordinal mechanism that picks the middle option with probability ``p``."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p >= 1)):
        raise ValueError("p must lie in [0, 1)")
    out = np.maximum(1.0 / (1.0 - p), 2.0 / (1.0 + p))
    return float(out) if out.ndim == 0 else out


def always_sell_lb_curve(p):
    """Ratio forced on an always-sell mechanism whose low-bidder probability is ``p``."""
    p = np.asarray(p, dtype=float)
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p must lie in [0, 1]")
    out = np.maximum(3.0 / (2.0 + p), 2.0 / (2.0 - p))
    return float(out) if out.ndim == 0 else out


def minimize_curve(curve, lo: float, hi: float, grid: int = 1001) -> tuple[float, float]:
    """Grid scan then golden-section refinement; returns ``(argmin, min)``."""
    ps = np.linspace(lo, hi, grid)
    vals = curve(ps)
    k = int(np.argmin(vals))
    step = ps[1] - ps[0]
    a, b = max(lo, ps[k] - step), min(hi, ps[k] + step)
    p, v, _ = golden_section_min(lambda t: float(curve(t)), a, b, tol=1e-13)
    if vals[k] < v:
        return float(ps[k]), float(vals[k])
    return p, v


@dataclass(frozen=True)
class BoundCertificate:
    """Largest ratio a mechanism realizes on an adversarial family.

    ``limit`` marks values that the family only approaches as its
    parameter tends to zero.
    """

    mechanism: str
    family: str
    value: float
    epsilon: float
    limit: bool = True

    def __float__(self) -> float:
        return self.value


def _realized_ratio(mechanism, profile: Profile) -> float:
    lottery = mechanism.evaluate(profile)
    return optimal_welfare(profile)[1] / expected_welfare(lottery, profile)


def _require(mechanism, tag: str) -> None:
    if tag not in mechanism.tags:
        raise WrongClass(f"{mechanism.name} is not tagged {tag}")


def deterministic_probe_profiles(eps: float) -> tuple[Profile, Profile]:
    """Expert favours no sale, the low-bidder B is second with value
    ``1 - eps`` (left) or ``eps / phi^2`` (right); bids ``(1, 1/phi)``."""
    c = constants()
    left = Profile(0.0, 1.0 - eps, 1.0, 1.0, c.inv_phi)
    right = Profile(0.0, eps / c.phi**2, 1.0, 1.0, c.inv_phi)
    return left, right


def deterministic_lb_probe(mechanism, eps: float = 1e-3) -> float:
    if not 0.0 < eps < 0.1:
        raise ValueError("eps must lie in (0, 0.1)")
    ratios = []
    for profile in deterministic_probe_profiles(eps):
        if not mechanism.evaluate(profile).is_point_mass():
            raise NotDeterministic(f"{mechanism.name} randomizes on {profile}")
        ratios.append(_realized_ratio(mechanism, profile))
    return max(ratios)


def ordinal_family(eps: float) -> tuple[Profile, Profile]:
    """Expert favours no sale; B is second with value ``eps`` or ``1 - eps``
    and bids exactly that much against A's bid of 1."""
    return (
        Profile(0.0, eps, 1.0, 1.0, eps),
        Profile(0.0, 1.0 - eps, 1.0, 1.0, 1.0 - eps),
    )


def always_sell_family(eps: float) -> tuple[Profile, Profile]:
    """High-bidder A (value 0 to the expert), low-bidder B at half A's bid
    valued 1 or ``eps``; no sale valued 0 or 1."""
    return (
        Profile(0.0, 1.0, 0.0, 1.0, 0.5),
        Profile(0.0, eps, 1.0, 1.0, 0.5),
    )


def _family_sup(mechanism, family, name: str, epsilons) -> BoundCertificate:
    best, best_eps = -math.inf, math.nan
    for eps in epsilons:
        value = max(_realized_ratio(mechanism, prof) for prof in family(eps))
        if value > best:
            best, best_eps = value, eps
    return BoundCertificate(mechanism.name, name, best, best_eps)


def ordinal_adversary(mechanism, epsilons=EPSILON_GRID) -> BoundCertificate:
    _require(mechanism, "ordinal")
    return _family_sup(mechanism, ordinal_family, "ordinal", epsilons)


def always_sell_adversary(mechanism, epsilons=EPSILON_GRID) -> BoundCertificate:
    _require(mechanism, "always-sell")
    return _family_sup(mechanism, always_sell_family, "always-sell", epsilons)
