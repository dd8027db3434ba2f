"""Input validation helpers shared by the functional API and the estimator."""

import numpy as np

from .exceptions import DimensionMismatch, InvalidParameter, NegativeProbability, SumNotOne

PROB_SUM_TOL = 1e-9


def check_probability_vector(probs, *, tol=PROB_SUM_TOL):
    """Return ``probs`` as a float array summing exactly to 1.

    Raises if any entry is negative or the sum is off by more than ``tol``;
    small deviations are removed by renormalizing.
    """
    p = np.asarray(probs, dtype=float).reshape(-1)
    if p.size == 0:
        raise DimensionMismatch("probability vector is empty")
    if not np.all(np.isfinite(p)):
        raise NegativeProbability("probabilities must be finite")
    if np.any(p < 0):
        raise NegativeProbability(f"negative probability at index {int(np.argmax(p < 0))}")
    total = p.sum()
    if abs(total - 1.0) > tol:
        raise SumNotOne(f"probabilities sum to {total!r}, expected 1")
    return p / total


def check_loss_vector(z, n=None, name="loss"):
    z = np.asarray(z, dtype=float).reshape(-1)
    if n is not None and z.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {z.shape[0]}, expected {n}")
    if not np.all(np.isfinite(z)):
        raise DimensionMismatch(f"{name} has non-finite entries")
    return z


def check_loss_matrix(X, n_scenarios=None):
    """Validate a (scenarios, agents) loss matrix."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"expected a 2-d loss matrix, got shape {X.shape}")
    if n_scenarios is not None and X.shape[0] != n_scenarios:
        raise DimensionMismatch(f"loss matrix has {X.shape[0]} scenarios, expected {n_scenarios}")
    if not np.all(np.isfinite(X)):
        raise DimensionMismatch("loss matrix has non-finite entries")
    return X


def check_beta(beta):
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise InvalidParameter(f"beta out of (0,1]: {beta!r}")
    return beta
