"""Experiment configuration files.

Configs are YAML documents::

    name: example1
    space:
      uniform: 256            # or  probs: [...]  or  poisson: {mu: 1, truncate: 30}
    agents:
      - loss: example1_z1     # named generator, or an explicit list
        risk: {cvar: 0.2}     # {cvar: beta} | {gooddeal: nu} | {polyhedral: [caps]}
      - loss: example1_z2
        risk: {cvar: 0.25}
    scheme:
      kind: dyadic            # dyadic | tail | splits
      start: 0                # first level (dyadic) or instrument count (tail)
      cuts: [129, 65]         # splits only: 1-based first scenario of the upper part
    stages: 9
    seed: 0                   # seeds the random zero-sum allocations
    pairing_draws: 10

Scenario numbers in configs are 1-based. Every error is a
:class:`ConfigError` carrying the line of the offending key when known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .analytic import example7_points, truncate_poisson
from .completion import dyadic_scheme, split_scheme, tail_scheme
from .core import Agent, CVaR, GoodDeal, InstrumentSet, MarketInstance, Polyhedral, ScenarioSpace
from .exceptions import ConfigError, RiskMarketError


def _example1_z1(n):
    s = np.arange(1, n + 1)
    return 2.0 * s / n


def _example1_z2(n):
    s = np.arange(1, n + 1)
    half = n // 2
    return np.where(s <= half, s / n, 1.0 - (s - half - 1) / n)


def _example2_z(n):
    s = np.arange(1, n + 1)
    z = s / n
    if n >= 64:
        z[63] += 0.05
    return z


LOSS_GENERATORS = {
    "example1_z1": _example1_z1,
    "example1_z2": _example1_z2,
    "example2_z": _example2_z,
    "example7_z1": lambda n: 2.0 * example7_points(n),
    "example7_z2": lambda n: 1.0 - example7_points(n),
    "constant_one": lambda n: np.ones(n),
    "scenario_index": lambda n: np.arange(n, dtype=float),
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    market: MarketInstance
    scheme: list
    labels: list
    seed: int = 0
    pairing_draws: int = 10
    source: str | None = None


class _Lines:
    """Map key paths in a YAML document to 1-based line numbers."""

    def __init__(self, text):
        self.lines = {}
        try:
            node = yaml.compose(text)
        except yaml.YAMLError:
            node = None
        if node is not None:
            self._walk(node, ())

    def _walk(self, node, path):
        self.lines.setdefault(path, node.start_mark.line + 1)
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                key = path + (k.value,)
                self.lines[key] = k.start_mark.line + 1
                self._walk(v, key)
        elif isinstance(node, yaml.SequenceNode):
            for i, v in enumerate(node.value):
                self._walk(v, path + (i,))

    def __call__(self, *path):
        while path and path not in self.lines:
            path = path[:-1]
        return self.lines.get(path)


def _number(value, what, line):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}", line)
    if not math.isfinite(value):
        raise ConfigError(f"{what} must be finite", line)
    return float(value)


def _integer(value, what, line):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{what} must be an integer, got {value!r}", line)
    return value


def _space(cfg, at):
    spec = cfg.get("space")
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError("space must have exactly one of: uniform, probs, poisson", at("space"))
    (kind, value), = spec.items()
    line = at("space", kind)
    try:
        if kind == "uniform":
            n = _integer(value, "space.uniform", line)
            if n < 1:
                raise ConfigError("space.uniform must be positive", line)
            return ScenarioSpace.uniform(n)
        if kind == "probs":
            if not isinstance(value, list):
                raise ConfigError("space.probs must be a list", line)
            return ScenarioSpace([_number(v, "probability", at("space", kind, i)) for i, v in enumerate(value)])
        if kind == "poisson":
            if not isinstance(value, dict):
                raise ConfigError("space.poisson needs mu and truncate", line)
            mu = _number(value.get("mu", 1.0), "poisson.mu", at("space", kind, "mu"))
            N = _integer(value.get("truncate"), "poisson.truncate", at("space", kind, "truncate"))
            return truncate_poisson(mu, N)[0]
    except ConfigError:
        raise
    except RiskMarketError as exc:
        raise ConfigError(str(exc), line) from exc
    raise ConfigError(f"unknown space kind {kind!r}", line)


def _risk(spec, line):
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError("risk must be one of {cvar: beta}, {gooddeal: nu}, {polyhedral: [caps]}", line)
    (kind, value), = spec.items()
    try:
        if kind == "cvar":
            return CVaR(_number(value, "beta", line))
        if kind == "gooddeal":
            return GoodDeal(_number(value, "nu", line))
        if kind == "polyhedral":
            if not isinstance(value, list):
                raise ConfigError("polyhedral caps must be a list", line)
            return Polyhedral([_number(v, "cap", line) for v in value])
    except ConfigError:
        raise
    except RiskMarketError as exc:
        raise ConfigError(str(exc), line) from exc
    raise ConfigError(f"unknown risk measure {kind!r}", line)


def _loss(spec, n, line):
    if isinstance(spec, str):
        if spec not in LOSS_GENERATORS:
            raise ConfigError(f"unknown loss generator {spec!r}; known: {', '.join(sorted(LOSS_GENERATORS))}", line)
        return LOSS_GENERATORS[spec](n)
    if isinstance(spec, list):
        z = [_number(v, "loss entry", line) for v in spec]
        if len(z) != n:
            raise ConfigError(f"loss has {len(z)} entries, space has {n} scenarios", line)
        return np.array(z)
    raise ConfigError("loss must be a generator name or a list", line)


def _scheme(cfg, n, stages, at):
    spec = cfg.get("scheme", {"kind": "dyadic"})
    if not isinstance(spec, dict):
        raise ConfigError("scheme must be a mapping", at("scheme"))
    kind = spec.get("kind", "dyadic")
    line = at("scheme", "kind")
    try:
        if kind == "dyadic":
            start = _integer(spec.get("start", 0), "scheme.start", at("scheme", "start"))
            if stages is None:
                stages = int(math.log2(n)) - start + 1
                if stages < 1:
                    raise ConfigError(f"dyadic start {start} is past the complete market for {n} scenarios", at("scheme", "start"))
            labels = list(range(start, start + stages))
            return dyadic_scheme(n, labels), labels
        if kind == "tail":
            start = _integer(spec.get("start", 1), "scheme.start", at("scheme", "start"))
            if stages is None:
                stages = n - start + 1
            labels = list(range(start, start + stages))
            return tail_scheme(n, labels), labels
        if kind == "splits":
            cuts = spec.get("cuts")
            if not isinstance(cuts, list) or not cuts:
                raise ConfigError("splits scheme needs a nonempty cuts list", at("scheme", "cuts"))
            cuts0 = []
            for i, c in enumerate(cuts):
                c = _integer(c, "cut", at("scheme", "cuts", i))
                if not 2 <= c <= n:
                    raise ConfigError(f"cut {c} out of range 2..{n}", at("scheme", "cuts", i))
                cuts0.append(c - 1)
            sets = split_scheme(n, cuts0)
            if stages is not None:
                sets = sets[:stages]
            return sets, list(range(len(sets)))
    except ConfigError:
        raise
    except RiskMarketError as exc:
        raise ConfigError(str(exc), line) from exc
    raise ConfigError(f"unknown scheme kind {kind!r}", line)


def parse_config_text(text: str, *, stages: int | None = None, source: str | None = None) -> ExperimentConfig:
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"malformed config: {getattr(exc, 'problem', exc)}", mark.line + 1 if mark else None) from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping", 1)
    at = _Lines(text)

    space = _space(cfg, at)
    agents_spec = cfg.get("agents")
    if not isinstance(agents_spec, list) or len(agents_spec) < 2:
        raise ConfigError("agents must list at least two agents", at("agents"))
    agents = []
    for i, a in enumerate(agents_spec):
        if not isinstance(a, dict) or "loss" not in a or "risk" not in a:
            raise ConfigError(f"agent {i + 1} needs loss and risk", at("agents", i))
        z = _loss(a["loss"], space.n, at("agents", i, "loss"))
        r = _risk(a["risk"], at("agents", i, "risk"))
        agents.append(Agent(z, r))
    try:
        market = MarketInstance(space, tuple(agents))
    except RiskMarketError as exc:
        raise ConfigError(str(exc), at("agents")) from exc

    if stages is None and "stages" in cfg:
        stages = _integer(cfg["stages"], "stages", at("stages"))
    if stages is not None and stages < 1:
        raise ConfigError("stages must be positive", at("stages"))
    scheme, labels = _scheme(cfg, space.n, stages, at)
    seed = _integer(cfg.get("seed", 0), "seed", at("seed"))
    draws = _integer(cfg.get("pairing_draws", 10), "pairing_draws", at("pairing_draws"))
    name = str(cfg.get("name", "custom"))
    return ExperimentConfig(name, market, scheme, labels, seed, draws, source)


def parse_config(path, *, stages: int | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_config_text(text, stages=stages, source=str(path))


def bundled_config(name: str) -> Path:
    return Path(__file__).parent / "configs" / f"{name}.cfg"


def instrument_label(inst: InstrumentSet, j: int) -> tuple[int, int]:
    """1-based first and last paying scenario of instrument ``j``."""
    lo, hi = inst.support_range(j)
    return lo + 1, hi + 1
