"""Coherent risk measures evaluated through their risk sets.

Each measure is ``r(Z) = max{E[Z Y] : Y in D}`` for a set ``D`` of densities
(nonnegative, unit mean under the scenario probabilities). The ``*_density``
functions return a maximizing ``Y``; densities are with respect to the base
measure, so ``E[Z Y] = sum(p * Z * Y)``.
"""

from __future__ import annotations

import numpy as np

from .core import Agent, CVaR, GoodDeal, Polyhedral, ScenarioSpace
from .exceptions import InvalidParameter, UnsupportedRiskMeasure
from .validation import check_beta, check_loss_vector

GOODDEAL_TOL = 1e-11
GOODDEAL_MAX_ITER = 200


def _fill(z, probs, upper):
    """Greedy density: cap ``upper`` on the worst scenarios until mass 1.

    Ties in ``z`` are filled in ascending scenario order. This is the exact
    optimum of ``max E[ZY]`` over ``{0 <= Y <= upper, E[Y] = 1}``.
    """
    n = z.shape[0]
    order = np.lexsort((np.arange(n), -z))
    caps = (probs * upper)[order]
    before = np.cumsum(caps) - caps
    take = np.clip(1.0 - before, 0.0, caps)
    mass = np.empty(n)
    mass[order] = take
    y = np.zeros(n)
    pos = probs > 0
    y[pos] = mass[pos] / probs[pos]
    return y


def _is_constant(z):
    return z.max() == z.min()


def cvar_density(Z, space: ScenarioSpace, beta: float) -> np.ndarray:
    beta = check_beta(beta)
    z = check_loss_vector(Z, space.n)
    if _is_constant(z):
        return np.ones(space.n)
    return _fill(z, space.probs, np.full(space.n, 1.0 / beta))


def cvar(Z, space: ScenarioSpace, beta: float) -> float:
    """CVaR at level ``beta``: the mean of the worst ``beta`` fraction of losses."""
    z = check_loss_vector(Z, space.n)
    y = cvar_density(z, space, beta)
    return float(space.probs @ (z * y))


def cvar_primal(Z, space: ScenarioSpace, beta: float) -> tuple[float, float]:
    """Minimize ``eta + E[(Z - eta)+] / beta`` over ``eta``.

    The objective is piecewise linear with kinks at the loss values, so the
    minimum sits on one of them. Returns ``(value, eta)``.
    """
    beta = check_beta(beta)
    z = check_loss_vector(Z, space.n)
    order = np.argsort(z, kind="stable")
    zs, ps = z[order], space.probs[order]
    # E[(Z - zs[j])+] from suffix sums over strictly larger losses
    tail_p = np.concatenate([np.cumsum(ps[::-1])[::-1][1:], [0.0]])
    tail_pz = np.concatenate([np.cumsum((ps * zs)[::-1])[::-1][1:], [0.0]])
    excess = np.maximum(tail_pz - zs * tail_p, 0.0)
    obj = zs + excess / beta
    j = int(np.argmin(obj))
    return float(obj[j]), float(zs[j])


def polyhedral_density(Z, space: ScenarioSpace, upper) -> np.ndarray:
    z = check_loss_vector(Z, space.n)
    upper = Polyhedral(upper).density_caps(space)
    if _is_constant(z):
        # any feasible density; prefer uniform when it is inside the set
        if np.all(upper >= 1.0):
            return np.ones(space.n)
    return _fill(z, space.probs, upper)


def polyhedral(Z, space: ScenarioSpace, upper) -> float:
    z = check_loss_vector(Z, space.n)
    return float(space.probs @ (z * polyhedral_density(z, space, upper)))


def _gd_ratio(z, p, lam):
    x = np.maximum(z - lam, 0.0)
    m1 = p @ x
    if m1 <= 0.0:
        # nothing left above lam: the ratio blows up
        return np.inf
    return (p @ (x * x)) / (m1 * m1)


def _gd_polish(z, p, nu2, support):
    """Solve for the shift exactly once the support of Y is known."""
    a = p[support].sum()
    m1 = p[support] @ z[support]
    m2 = p[support] @ (z[support] ** 2)
    qa = a - nu2 * a * a
    qb = -2.0 * m1 + 2.0 * nu2 * a * m1
    qc = m2 - nu2 * m1 * m1
    if abs(qa) < 1e-15:
        return [-qc / qb] if qb != 0 else []
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return []
    r = np.sqrt(disc)
    return [(-qb - r) / (2 * qa), (-qb + r) / (2 * qa)]


def gooddeal_density(Z, space: ScenarioSpace, nu: float) -> np.ndarray:
    """Maximizer of E[ZY] over ``{Y >= 0, E[Y] = 1, E[Y^2] <= nu^2}``.

    The optimum has the form ``Y = (Z - lam)+ / mu``; ``mu`` is fixed by the
    unit-mean condition and ``lam`` by making the second-moment bound tight,
    unless concentrating on the worst scenarios already satisfies it.
    """
    nu = GoodDeal(nu).nu
    z = check_loss_vector(Z, space.n)
    p = space.probs
    live = p > 0
    y = np.zeros(space.n)
    zl = z[live]
    if zl.max() == zl.min():
        y[live] = 1.0
        return y
    nu2 = nu * nu
    # the maximizer is unchanged by positive affine maps of Z; rescaling to
    # [0, 1] keeps tiny or huge loss spreads away from under/overflow
    lo_z, hi_z = zl.min(), zl.max()
    z = np.where(live, (z - lo_z) / (hi_z - lo_z), 0.0)
    zmax, zmin = 1.0, 0.0
    top = live & (z == zmax)
    ptop = p[top].sum()
    if 1.0 / ptop <= nu2:
        y[top] = 1.0 / ptop
        return y
    mean = p @ z
    var = p @ (z - mean) ** 2
    lam = mean - np.sqrt(var / (nu2 - 1.0))
    if lam > zmin:
        lo, hi = zmin, zmax
        for _ in range(GOODDEAL_MAX_ITER):
            lam = 0.5 * (lo + hi)
            if _gd_ratio(z[live], p[live], lam) > nu2:
                hi = lam
            else:
                lo = lam
            if hi - lo <= GOODDEAL_TOL:
                break
        lam = 0.5 * (lo + hi)
        support = live & (z > lam)
        zs_below = z[live & ~support]
        lower = zs_below.max() if zs_below.size else -np.inf
        upper = z[support].min()
        for root in _gd_polish(z, p, nu2, support):
            if lower - 1e-12 <= root < upper:
                lam = root
                break
    x = np.where(live, np.maximum(z - lam, 0.0), 0.0)
    y = x / (p @ x)
    return y


def gooddeal(Z, space: ScenarioSpace, nu: float) -> float:
    z = check_loss_vector(Z, space.n)
    return float(space.probs @ (z * gooddeal_density(z, space, nu)))


def risk_density(risk, Z, space: ScenarioSpace) -> np.ndarray:
    if isinstance(risk, CVaR):
        return cvar_density(Z, space, risk.beta)
    if isinstance(risk, GoodDeal):
        return gooddeal_density(Z, space, risk.nu)
    if isinstance(risk, Polyhedral):
        return polyhedral_density(Z, space, risk.upper)
    raise UnsupportedRiskMeasure(f"unknown risk measure {risk!r}")


def evaluate(risk, Z, space: ScenarioSpace) -> float:
    """Value of a bare risk measure (CVaR, GoodDeal or Polyhedral) at ``Z``."""
    z = check_loss_vector(Z, space.n)
    return float(space.probs @ (z * risk_density(risk, z, space)))


def risk_value(agent: Agent, Z, space: ScenarioSpace) -> float:
    """Risk the agent assigns to loss ``Z``."""
    if not isinstance(agent, Agent):
        raise InvalidParameter("risk_value expects an Agent")
    return evaluate(agent.risk, Z, space)
