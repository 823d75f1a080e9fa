"""Truthful mechanisms for one expert and two bidders.

The expert reports values over selling to A, selling to B or not selling;
the bidders report monetary bids.  The package evaluates mechanism
lotteries, computes Myerson payments, audits truthfulness and searches
for worst-case approximation ratios of social welfare.
"""

from .bounds import constants
from .core import (
    AgentsView,
    ExpertView,
    Lottery,
    Option,
    Profile,
    agents_view,
    canonicalize,
    expected_welfare,
    expert_view,
    optimal_welfare,
    social_welfare,
)
from .estimators import MechanismClassifier
from .exceptions import HybridMechError
from .mechanisms import Mechanism, lookup, names, registry
from .payments import myerson_payment, myerson_payments, outcome_with_payments
from .ratio import worst_case_ratio
from .verify import audit, black_box_ic_audit, class_checks

__version__ = "0.1.0"

__all__ = [
    "AgentsView",
    "ExpertView",
    "HybridMechError",
    "Lottery",
    "Mechanism",
    "MechanismClassifier",
    "Option",
    "Profile",
    "agents_view",
    "audit",
    "black_box_ic_audit",
    "canonicalize",
    "class_checks",
    "constants",
    "expected_welfare",
    "expert_view",
    "lookup",
    "myerson_payment",
    "myerson_payments",
    "names",
    "optimal_welfare",
    "outcome_with_payments",
    "registry",
    "social_welfare",
    "worst_case_ratio",
]
