"""Monotone market completion by refining the tradable instruments.

A refinement scheme is an ordered list of instrument sets, each spanning the
previous one. Solving every stage and checking that welfare (total risk,
minimized) never goes up is the finite-scenario form of "refinement can only
help". The module also carries the zero-price refinement check and the
pairing-gap diagnostic used to watch prices converge.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .core import InstrumentSet, MarketInstance, Partition, ScenarioSpace, from_partition, tail_instruments
from .equilibrium import EquilibriumResult, complete_market_value, solve_equilibrium
from .exceptions import (
    BundleNotZeroPriced,
    InvalidSplit,
    MonotonicityViolation,
    NonDivisible,
    NotZeroSum,
    RefinementNotNested,
)

logger = logging.getLogger(__name__)

ZERO_PRICE_TOL = 1e-7
WELFARE_TOL = 1e-8
NESTED_TOL = 1e-9


# -- partitions --------------------------------------------------------------


def dyadic_refinement(n: int, m: int) -> Partition:
    """``2**m`` contiguous bundles of equal size, in index order."""
    if m < 0:
        raise NonDivisible(f"level must be nonnegative, got {m}")
    parts = 1 << m
    if n % parts:
        raise NonDivisible(f"{parts} bundles do not divide {n} scenarios")
    size = n // parts
    return Partition(n, tuple(tuple(range(j * size, (j + 1) * size)) for j in range(parts)))


def refine_bundle(p: Partition, j: int, split) -> Partition:
    """Replace bundle ``j`` by the two parts in ``split``."""
    if not 0 <= j < len(p):
        raise InvalidSplit(f"no bundle {j}")
    first, second = (set(int(s) for s in part) for part in split)
    if not first or not second:
        raise InvalidSplit("both parts of a split must be nonempty")
    if first & second:
        raise InvalidSplit("split parts overlap")
    if first | second != set(p.bundles[j]):
        raise InvalidSplit(f"split parts do not reassemble bundle {j}")
    bundles = list(p.bundles[:j]) + [tuple(first), tuple(second)] + list(p.bundles[j + 1:])
    return Partition(p.n, tuple(bundles))


def median_split(p: Partition, j: int) -> Partition:
    b = p.bundles[j]
    if len(b) < 2:
        raise InvalidSplit(f"bundle {j} has a single scenario")
    half = len(b) // 2
    return refine_bundle(p, j, (b[:half], b[half:]))


def merge_bundles(p: Partition, i: int, j: int) -> Partition:
    if i == j:
        raise InvalidSplit("cannot merge a bundle with itself")
    merged = p.bundles[i] + p.bundles[j]
    rest = [b for k, b in enumerate(p.bundles) if k not in (i, j)]
    return Partition(p.n, tuple(rest + [merged]))


def split_at(p: Partition, cut: int) -> Partition:
    """Split the bundle holding scenario ``cut`` into ``< cut`` and ``>= cut``."""
    j = p.bundle_of(cut)
    b = p.bundles[j]
    lo = tuple(s for s in b if s < cut)
    hi = tuple(s for s in b if s >= cut)
    return refine_bundle(p, j, (lo, hi))


# -- schemes -----------------------------------------------------------------


def dyadic_scheme(n: int, levels: Sequence[int]) -> list[InstrumentSet]:
    return [from_partition(n, dyadic_refinement(n, m)) for m in levels]


def tail_scheme(n: int, counts: Sequence[int]) -> list[InstrumentSet]:
    return [tail_instruments(n, k) for k in counts]


def split_scheme(n: int, cuts: Sequence[int]) -> list[InstrumentSet]:
    """Start from one bundle and apply ``split_at`` for each cut in turn."""
    p = Partition(n, (tuple(range(n)),))
    out = [from_partition(n, p)]
    for cut in cuts:
        p = split_at(p, cut)
        out.append(from_partition(n, p))
    return out


# -- completion ----------------------------------------------------------------


@dataclass(frozen=True)
class Stage:
    label: int
    instruments: InstrumentSet
    result: EquilibriumResult
    gap_to_complete: float
    max_pairing_gap: float = float("nan")

    @property
    def welfare(self) -> float:
        return self.result.welfare


@dataclass
class CompletionTrace:
    stages: list = field(default_factory=list)
    complete_value: float = float("nan")

    @property
    def welfare(self) -> np.ndarray:
        return np.array([s.welfare for s in self.stages])

    @property
    def gaps(self) -> np.ndarray:
        return np.array([s.gap_to_complete for s in self.stages])

    @property
    def pairing_gaps(self) -> np.ndarray:
        return np.array([s.max_pairing_gap for s in self.stages])


def _solve(args):
    market, instruments, dump_path = args
    return solve_equilibrium(market, instruments, dump_path=dump_path)


def run_completion(
    market: MarketInstance,
    scheme: Sequence[InstrumentSet] | Callable[[int], InstrumentSet],
    stages: int | None = None,
    *,
    labels: Sequence[int] | None = None,
    pairing_W: Sequence[np.ndarray] = (),
    tol: float = WELFARE_TOL,
    max_workers: int = 1,
    dump_dir=None,
) -> CompletionTrace:
    """Solve every stage of ``scheme`` and check the completion invariants.

    ``scheme`` is a list of instrument sets or a callable mapping a stage
    index to one; ``stages`` truncates the list (and is required for a
    callable). Raises :class:`RefinementNotNested` if a stage fails to span
    its predecessor and :class:`MonotonicityViolation` if welfare rises by
    more than ``tol`` from one stage to the next. With ``dump_dir`` set, each
    stage's LP and solution are written to ``stage_<label>.lp.txt`` there.
    """
    if callable(scheme):
        if stages is None:
            raise ValueError("stages is required when scheme is callable")
        sets = [scheme(i) for i in range(stages)]
    else:
        sets = list(scheme)[:stages] if stages is not None else list(scheme)
    labels = list(labels) if labels is not None else list(range(len(sets)))
    for prev, cur in zip(sets, sets[1:]):
        if not cur.spans(prev, NESTED_TOL):
            raise RefinementNotNested("a stage does not span the previous stage's payoffs")

    if dump_dir is not None:
        dump_dir = Path(dump_dir)
        dump_dir.mkdir(parents=True, exist_ok=True)
        dumps = [dump_dir / f"stage_{label}.lp.txt" for label in labels]
    else:
        dumps = [None] * len(sets)
    jobs = list(zip([market] * len(sets), sets, dumps))
    if max_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_solve, jobs))
    else:
        results = [_solve(j) for j in jobs]

    cmv = complete_market_value(market)
    trace = CompletionTrace(complete_value=cmv)
    for label, inst, res in zip(labels, sets, results):
        pg = max((abs(pairing_gap(res, W, market.space)) for W in pairing_W), default=float("nan"))
        trace.stages.append(Stage(label, inst, res, res.welfare - cmv, pg))
        logger.info("stage %s: %d instruments, welfare %.10g", label, inst.k, res.welfare)

    w = trace.welfare
    rises = np.diff(w)
    if rises.size and rises.max() > tol:
        k = int(np.argmax(rises))
        raise MonotonicityViolation(f"welfare rose from {w[k]!r} to {w[k + 1]!r} between stages {labels[k]} and {labels[k + 1]}")
    if trace.stages and trace.stages[-1].gap_to_complete < -tol:
        raise MonotonicityViolation("final stage beats the complete market")
    return trace


@dataclass(frozen=True)
class ZeroPriceReport:
    bundle: int
    price: float
    welfare_before: float
    welfare_after: float
    tol: float

    @property
    def delta(self) -> float:
        return self.welfare_after - self.welfare_before

    @property
    def passed(self) -> bool:
        return abs(self.delta) <= self.tol


def zero_price_refinement_check(
    market: MarketInstance,
    partition: Partition,
    j: int,
    *,
    threshold: float = ZERO_PRICE_TOL,
    tol: float = ZERO_PRICE_TOL,
    before: EquilibriumResult | None = None,
) -> ZeroPriceReport:
    """Split only bundle ``j`` (median split) and compare welfare.

    Raises :class:`BundleNotZeroPriced` if bundle ``j`` carries a price above
    ``threshold``; a zero-priced bundle should gain nothing from the split.
    """
    if before is None:
        before = solve_equilibrium(market, from_partition(market.space, partition))
    price = float(before.prices[j])
    if abs(price) > threshold:
        raise BundleNotZeroPriced(f"bundle {j} has price {price:.3g}")
    refined = median_split(partition, j)
    after = solve_equilibrium(market, from_partition(market.space, refined))
    return ZeroPriceReport(j, price, before.welfare, after.welfare, tol)


def pairing_gap(result: EquilibriumResult, W, space: ScenarioSpace | None = None) -> float:
    """``sum_i E[W_i Y_i]`` for a zero-sum allocation ``W`` (agents x scenarios).

    Densities are stored as probability masses, so this is ``sum(W * pi)``.
    """
    W = np.asarray(W, dtype=float)
    if W.shape != result.densities.shape:
        raise NotZeroSum(f"W has shape {W.shape}, densities {result.densities.shape}")
    if space is not None and W.shape[1] != space.n:
        raise NotZeroSum("W does not match the scenario count")
    scale = max(1.0, np.abs(W).max())
    if np.abs(W.sum(axis=0)).max() > 1e-9 * scale:
        raise NotZeroSum("allocations must sum to zero in every scenario")
    return float(np.sum(W * result.densities))


def random_zero_sum(n_agents: int, n: int, rng: np.random.Generator) -> np.ndarray:
    W = rng.standard_normal((n_agents, n))
    W[-1] = -W[:-1].sum(axis=0)
    return W
