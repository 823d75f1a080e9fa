"""Input validation for batches of profiles.

A profile batch is an ``(n, 5)`` array with columns
``vA, vB, vNone, wA, wB``.
"""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .core import NORMALIZATION_TOL, normalize_expert_rows
from .exceptions import DegenerateBids, InvalidProfile

PROFILE_COLUMNS = ("vA", "vB", "vNone", "wA", "wB")


def check_profiles(X, *, normalize: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Validate a profile batch and split it into expert values and bids.

    With ``normalize`` the expert columns are affinely rescaled to min 0
    and max 1 per row; otherwise rows that are not already normalized are
    rejected.
    """
    try:
        X = check_array(X, dtype=float, ensure_2d=True, ensure_all_finite=True)
    except ValueError as err:
        raise InvalidProfile(str(err)) from None
    if X.shape[1] != len(PROFILE_COLUMNS):
        raise InvalidProfile(f"expected {len(PROFILE_COLUMNS)} columns {PROFILE_COLUMNS}, got {X.shape[1]}")
    V, W = X[:, :3], X[:, 3:]
    if np.any(W < 0):
        row = int(np.flatnonzero((W < 0).any(axis=1))[0])
        raise InvalidProfile(f"row {row}: bids must be non-negative")
    both_zero = (W == 0).all(axis=1)
    if np.any(both_zero):
        raise DegenerateBids(f"row {int(np.flatnonzero(both_zero)[0])}: both bids are zero")
    if normalize:
        V = normalize_expert_rows(V)
    else:
        off = (np.abs(V.max(axis=1) - 1.0) > NORMALIZATION_TOL) | (np.abs(V.min(axis=1)) > NORMALIZATION_TOL)
        if np.any(off):
            raise InvalidProfile(f"row {int(np.flatnonzero(off)[0])}: expert values must have max 1 and min 0")
    return np.ascontiguousarray(V), np.ascontiguousarray(W)
