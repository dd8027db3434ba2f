"""Dense revised simplex for bounded-variable linear programs.

Problems are stated as::

    minimize    c @ x
    subject to  A_eq @ x == b_eq
                A_le @ x <= b_le
                lb <= x <= ub        (entries of lb/ub may be infinite)

and solved by a two-phase revised simplex that keeps an explicit dense basis
inverse, refactored periodically. The solution carries the simplex multipliers
of every row and the reduced cost of every variable, so callers can read
prices straight off the final basis and certify optimality with
:func:`verify_kkt`.

Sign convention: duals are Lagrange multipliers of the minimization, so
``y_le <= 0`` for every ``<=`` row and a reduced cost is positive on a variable
resting at its lower bound.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, NumericalFailure

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
FEAS_TOL = 1e-9
OPT_TOL = 1e-9
REFACTOR_EVERY = 64

# nonbasic states
_BASIC, _AT_LB, _AT_UB, _FREE, _FIXED = 0, 1, 2, 3, 4


class Status(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


def _as_matrix(a, n_cols, name):
    if a is None:
        return np.zeros((0, n_cols))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, n_cols))
    if a.shape[1] != n_cols:
        raise DimensionMismatch(f"{name} has {a.shape[1]} columns, expected {n_cols}")
    return a


def _as_vector(v, n, name, default):
    if v is None:
        return np.full(n, default, dtype=float)
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.shape[0] != n:
        raise DimensionMismatch(f"{name} has length {v.shape[0]}, expected {n}")
    return v


@dataclass(frozen=True)
class LpProblem:
    """A linear program in the inequality/equality/bounds form above.

    Missing constraint blocks default to empty; missing bounds default to
    ``lb = 0`` and ``ub = +inf``.
    """

    c: np.ndarray
    A_eq: np.ndarray = None
    b_eq: np.ndarray = None
    A_le: np.ndarray = None
    b_le: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = c.shape[0]
        A_eq = _as_matrix(self.A_eq, n, "A_eq")
        A_le = _as_matrix(self.A_le, n, "A_le")
        b_eq = _as_vector(self.b_eq, A_eq.shape[0], "b_eq", 0.0)
        b_le = _as_vector(self.b_le, A_le.shape[0], "b_le", 0.0)
        lb = _as_vector(self.lb, n, "lb", 0.0)
        ub = _as_vector(self.ub, n, "ub", np.inf)
        for name, arr in (("c", c), ("A_eq", A_eq), ("A_le", A_le), ("b_eq", b_eq), ("b_le", b_le)):
            if not np.all(np.isfinite(arr)):
                raise DimensionMismatch(f"{name} has non-finite entries")
        if np.any(np.isnan(lb)) or np.any(np.isnan(ub)) or np.any(lb == np.inf) or np.any(ub == -np.inf):
            raise DimensionMismatch("invalid variable bounds")
        for name, arr in (("c", c), ("A_eq", A_eq), ("b_eq", b_eq), ("A_le", A_le), ("b_le", b_le), ("lb", lb), ("ub", ub)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_eq(self) -> int:
        return self.A_eq.shape[0]

    @property
    def n_le(self) -> int:
        return self.A_le.shape[0]


@dataclass(frozen=True)
class LpSolution:
    status: Status
    x: np.ndarray | None = None
    y_eq: np.ndarray | None = None
    y_le: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    objective: float = float("nan")
    dual_objective: float = float("nan")
    iterations: int = 0
    basis: tuple = field(default=(), repr=False)

    @property
    def gap(self) -> float:
        return self.objective - self.dual_objective

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


class _Simplex:
    def __init__(self, p: LpProblem, max_iter=None):
        n, me, ml = p.n_vars, p.n_eq, p.n_le
        m = me + ml
        self.n, self.me, self.ml, self.m = n, me, ml, m

        A = np.zeros((m, n + ml))
        A[:me, :n] = p.A_eq
        A[me:, :n] = p.A_le
        A[me:, n:] = np.eye(ml)
        b = np.concatenate([p.b_eq, p.b_le])
        lb = np.concatenate([p.lb, np.zeros(ml)])
        ub = np.concatenate([p.ub, np.full(ml, np.inf)])

        x = np.where(np.isfinite(lb), lb, np.where(np.isfinite(ub), ub, 0.0))
        resid = b - A @ x
        basis = np.full(m, -1, dtype=int)
        for i in range(ml):
            if resid[me + i] >= 0:
                basis[me + i] = n + i
                x[n + i] = resid[me + i]
        art_rows = np.flatnonzero(basis < 0)
        n_art = art_rows.size
        art = np.zeros((m, n_art))
        signs = np.where(resid[art_rows] >= 0, 1.0, -1.0)
        art[art_rows, np.arange(n_art)] = signs
        self.n_real = n + ml
        self.A = np.hstack([A, art])
        self.b = b
        self.lb = np.concatenate([lb, np.zeros(n_art)])
        self.ub = np.concatenate([ub, np.full(n_art, np.inf)])
        self.x = np.concatenate([x, np.abs(resid[art_rows])])
        basis[art_rows] = self.n_real + np.arange(n_art)
        self.basis = basis
        self.N = self.A.shape[1]

        state = np.full(self.N, _AT_LB, dtype=int)
        fin_lb, fin_ub = np.isfinite(self.lb), np.isfinite(self.ub)
        state[~fin_lb & fin_ub] = _AT_UB
        state[~fin_lb & ~fin_ub] = _FREE
        state[fin_lb & fin_ub & (self.lb == self.ub)] = _FIXED
        state[basis] = _BASIC
        self.state = state

        self.Binv = np.zeros((m, m))
        if m:
            self.Binv[np.arange(m), np.arange(m)] = 1.0
            self.Binv[art_rows, art_rows] = signs
        self.since_refactor = 0
        self.iterations = 0
        self.max_iter = max_iter or 50 * (m + self.N) + 1000

    # -- linear algebra ------------------------------------------------
    def refactor(self):
        if self.m == 0:
            return
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis") from exc
        nb = self.state != _BASIC
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs
        self.since_refactor = 0

    def _pivot(self, r, alpha):
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.since_refactor += 1

    # -- one phase -----------------------------------------------------
    def run(self, cost) -> Status:
        bland_after = 5 * (self.m + self.N)
        phase_iters = 0
        verified = False
        while True:
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
            y = cost[self.basis] @ self.Binv if self.m else np.zeros(0)
            d = cost - y @ self.A
            st = self.state
            inc = ((st == _AT_LB) | (st == _FREE)) & (d < -OPT_TOL)
            dec = ((st == _AT_UB) | (st == _FREE)) & (d > OPT_TOL)
            elig = inc | dec
            if not elig.any():
                if verified or self.since_refactor == 0:
                    return Status.OPTIMAL
                self.refactor()
                verified = True
                continue
            verified = False
            bland = phase_iters >= bland_after
            if bland:
                q = int(np.flatnonzero(elig)[0])
            else:
                q = int(np.argmax(np.where(elig, np.abs(d), -1.0)))
            delta = 1.0 if d[q] < 0 else -1.0

            alpha = self.Binv @ self.A[:, q] if self.m else np.zeros(0)
            g = delta * alpha
            r, theta = self._ratio(g, bland)
            rng = self.ub[q] - self.lb[q]
            self.iterations += 1
            phase_iters += 1
            if self.iterations > self.max_iter:
                raise NumericalFailure(f"iteration limit {self.max_iter} reached")

            if np.isfinite(rng) and rng <= theta:
                # bound flip, basis unchanged
                self.x[q] += delta * rng
                if self.m:
                    self.x[self.basis] -= rng * g
                self.state[q] = _AT_UB if delta > 0 else _AT_LB
                continue
            if r < 0:
                return Status.UNBOUNDED
            self.x[q] += delta * theta
            self.x[self.basis] -= theta * g
            leave = self.basis[r]
            if g[r] > 0:
                self.x[leave] = self.lb[leave]
                self.state[leave] = _FIXED if self.lb[leave] == self.ub[leave] else _AT_LB
            else:
                self.x[leave] = self.ub[leave]
                self.state[leave] = _FIXED if self.lb[leave] == self.ub[leave] else _AT_UB
            self.basis[r] = q
            self.state[q] = _BASIC
            self._pivot(r, alpha)

    def _ratio(self, g, bland):
        """Return (row, step); row -1 when no basic variable blocks."""
        if self.m == 0:
            return -1, np.inf
        xb = self.x[self.basis]
        lbb = self.lb[self.basis]
        ubb = self.ub[self.basis]
        pos = (g > PIVOT_TOL) & np.isfinite(lbb)
        neg = (g < -PIVOT_TOL) & np.isfinite(ubb)
        if not (pos.any() or neg.any()):
            return -1, np.inf
        ratio = np.full(self.m, np.inf)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio[pos] = (xb[pos] - lbb[pos]) / g[pos]
            ratio[neg] = (ubb[neg] - xb[neg]) / (-g[neg])
        if bland:
            best = ratio.min()
            ties = np.flatnonzero(ratio <= best + 1e-12 * max(1.0, abs(best)))
            r = int(ties[np.argmin(self.basis[ties])])
            return r, max(ratio[r], 0.0)
        # Harris two-pass: relax bounds by FEAS_TOL, then take the largest pivot
        relaxed = np.full(self.m, np.inf)
        with np.errstate(invalid="ignore", divide="ignore"):
            relaxed[pos] = (xb[pos] - lbb[pos] + FEAS_TOL) / g[pos]
            relaxed[neg] = (ubb[neg] - xb[neg] + FEAS_TOL) / (-g[neg])
        limit = relaxed.min()
        cand = np.flatnonzero(ratio <= limit)
        r = int(cand[np.argmax(np.abs(g[cand]))])
        return r, max(ratio[r], 0.0)

    # -- phase transitions ---------------------------------------------
    def drop_artificials(self):
        arts = np.arange(self.n_real, self.N)
        self.ub[arts] = 0.0
        self.lb[arts] = 0.0
        for r in range(self.m):
            if self.basis[r] < self.n_real:
                continue
            row = self.Binv[r] @ self.A[:, : self.n_real]
            row[self.state[: self.n_real] == _BASIC] = 0.0
            row[self.state[: self.n_real] == _FIXED] = 0.0
            j = int(np.argmax(np.abs(row)))
            if abs(row[j]) <= 1e-9:
                continue  # redundant row, artificial stays basic at zero
            alpha = self.Binv @ self.A[:, j]
            leave = self.basis[r]
            self.basis[r] = j
            self.state[j] = _BASIC
            self.state[leave] = _FIXED
            self.x[leave] = 0.0
            self._pivot(r, alpha)
        self.state[arts[self.state[arts] != _BASIC]] = _FIXED
        self.refactor()


def solve_lp(p: LpProblem, *, max_iter: int | None = None, dump_path=None) -> LpSolution:
    """Solve ``p`` and return primal and dual solutions.

    Raises :class:`NumericalFailure` if the basis becomes singular or the
    iteration cap is hit; infeasibility and unboundedness are reported through
    ``status`` instead.
    """
    s = _Simplex(p, max_iter)
    n_art = s.N - s.n_real
    if n_art:
        cost1 = np.zeros(s.N)
        cost1[s.n_real:] = 1.0
        s.run(cost1)
        s.refactor()
        infeas = s.x[s.n_real:].sum()
        scale = 1.0 + (np.abs(s.b).max() if s.m else 0.0)
        if infeas > 1e-8 * scale:
            logger.debug("phase 1 ended with infeasibility %.3g", infeas)
            return LpSolution(Status.INFEASIBLE, iterations=s.iterations)
        s.drop_artificials()
    cost = np.zeros(s.N)
    cost[: s.n] = p.c
    status = s.run(cost)
    if status is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, iterations=s.iterations)
    s.refactor()

    y = cost[s.basis] @ s.Binv if s.m else np.zeros(0)
    d = cost - y @ s.A
    x = s.x[: s.n].copy()
    objective = float(p.c @ x)
    dr = d[: s.n_real]
    lbr, ubr = s.lb[: s.n_real], s.ub[: s.n_real]
    zl = np.where((dr > 0) & np.isfinite(lbr), dr, 0.0)
    zu = np.where((dr < 0) & np.isfinite(ubr), -dr, 0.0)
    dual_obj = float(s.b @ y + np.where(zl > 0, lbr, 0.0) @ zl - np.where(zu > 0, ubr, 0.0) @ zu)
    sol = LpSolution(
        Status.OPTIMAL,
        x=x,
        y_eq=y[: s.me].copy(),
        y_le=y[s.me:].copy(),
        reduced_costs=d[: s.n].copy(),
        objective=objective,
        dual_objective=dual_obj,
        iterations=s.iterations,
        basis=tuple(int(v) for v in s.basis),
    )
    if dump_path is not None:
        dump_lp(p, sol, dump_path)
    return sol


@dataclass(frozen=True)
class KktReport:
    primal_residual: float
    dual_residual: float
    complementarity: float
    gap: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.primal_residual, self.dual_residual, self.complementarity) <= self.tol

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"KKT {verdict}: primal={self.primal_residual:.3g} dual={self.dual_residual:.3g} "
            f"compl={self.complementarity:.3g} gap={self.gap:.3g} (tol {self.tol:g})"
        )


def verify_kkt(p: LpProblem, s: LpSolution, tol: float = 1e-7) -> KktReport:
    """Check primal feasibility, dual feasibility and complementary slackness.

    Everything is recomputed from ``p`` and the vectors in ``s``; nothing the
    solver reports about itself is trusted.
    """
    x = s.x
    r_eq = p.A_eq @ x - p.b_eq
    r_le = p.A_le @ x - p.b_le
    primal = max(
        np.abs(r_eq).max(initial=0.0),
        np.maximum(r_le, 0.0).max(initial=0.0),
        np.maximum(p.lb - x, 0.0).max(initial=0.0),
        np.maximum(x - p.ub, 0.0).max(initial=0.0),
    )
    d = p.c - p.A_eq.T @ s.y_eq - p.A_le.T @ s.y_le
    zl = np.maximum(d, 0.0)
    zu = np.maximum(-d, 0.0)
    dual = max(
        np.maximum(s.y_le, 0.0).max(initial=0.0),
        np.where(np.isfinite(p.lb), 0.0, zl).max(initial=0.0),
        np.where(np.isfinite(p.ub), 0.0, zu).max(initial=0.0),
    )
    with np.errstate(invalid="ignore"):
        gap_lb = np.where(np.isfinite(p.lb), x - p.lb, 0.0)
        gap_ub = np.where(np.isfinite(p.ub), p.ub - x, 0.0)
    compl = max(
        np.abs(s.y_le * r_le).max(initial=0.0),
        np.abs(zl * gap_lb).max(initial=0.0),
        np.abs(zu * gap_ub).max(initial=0.0),
    )
    with np.errstate(invalid="ignore"):
        # infinite bounds carry no term; a nonzero d there is a dual residual
        bound_terms = np.where(np.isfinite(p.lb), zl * p.lb, 0.0) - np.where(np.isfinite(p.ub), zu * p.ub, 0.0)
    dual_obj = p.b_eq @ s.y_eq + p.b_le @ s.y_le + bound_terms.sum()
    gap = float(p.c @ x - dual_obj)
    return KktReport(float(primal), float(dual), float(compl), gap, tol)


def dump_lp(p: LpProblem, s: LpSolution | None, path) -> None:
    """Write a plain-text listing of the problem and its final basis."""
    with open(path, "w") as fh:
        fh.write(f"# vars={p.n_vars} eq={p.n_eq} le={p.n_le}\n")
        fh.write("c " + " ".join(f"{v:.12g}" for v in p.c) + "\n")
        for name, A, b, op in (("eq", p.A_eq, p.b_eq, "="), ("le", p.A_le, p.b_le, "<=")):
            for i in range(A.shape[0]):
                nz = np.flatnonzero(A[i])
                terms = " ".join(f"{A[i, j]:+.12g}*x{j}" for j in nz)
                fh.write(f"{name}{i}: {terms} {op} {b[i]:.12g}\n")
        for j in range(p.n_vars):
            if p.lb[j] != 0.0 or p.ub[j] != np.inf:
                fh.write(f"bound x{j}: [{p.lb[j]:.12g}, {p.ub[j]:.12g}]\n")
        if s is not None:
            fh.write(f"# status={s.status.value} objective={s.objective:.12g} iterations={s.iterations}\n")
            if s.basis:
                fh.write("basis " + " ".join(map(str, s.basis)) + "\n")
