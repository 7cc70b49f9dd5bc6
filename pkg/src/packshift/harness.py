"""Trace generation, experiment orchestration and report export."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .core import (
    Event,
    Item,
    Solution,
    ValidationError,
    as_rational,
    check_trace,
    depart,
    fmt_rational,
    insert,
    item_size,
    read_trace,
)
from .framework import RobustRunner, StepDiagnostics, vector_opt_oracle
from .offline import offline_repacker
from .problems import ITEM_KIND, PROBLEMS, check_problem, make_item, online_algorithm

CSV_COLUMNS = (
    "t", "op", "id", "cost", "live_cost", "lb", "phase_end",
    "migrated", "ledger_factor", "bound", "bound_ok",
)
GENERATORS = ("uniform", "powerlaw", "churn", "adversarial-phase-burst")


# -- traces ------------------------------------------------------------------


class _Sampler:
    def __init__(self, spec: dict, seed: int):
        self.rng = np.random.default_rng(seed)
        self.problem = spec.get("problem", "strip2d")
        check_problem(self.problem, int(spec.get("d", 2)))
        self.d = int(spec.get("d", 2))
        self.den = int(spec.get("den", 1000))
        self.low = as_rational(spec.get("low", Fraction(1, self.den)))
        self.high = as_rational(spec.get("high", 1))
        self.exponent = float(spec.get("exponent", 2.0))
        self.powerlaw = spec["kind"] == "powerlaw"
        if not 0 < self.low <= self.high <= 1:
            raise ValidationError("need 0 < low <= high <= 1")
        self.counter = 0

    def length(self) -> Fraction:
        if self.powerlaw:
            u = float(self.rng.random())
            k = max(1, math.floor((1.0 - u) ** self.exponent * self.den))
            return Fraction(k, self.den)
        lo = max(1, math.ceil(self.low * self.den))
        hi = math.floor(self.high * self.den)
        if hi < lo:
            raise ValidationError("size range holds no multiple of 1/den")
        return Fraction(int(self.rng.integers(lo, hi + 1)), self.den)

    def next_id(self) -> str:
        self.counter += 1
        return f"i{self.counter}"

    def item(self) -> Item:
        kind = ITEM_KIND[self.problem]
        n = 1 if kind == "hypercube" else self.d
        dims = [self.length() for _ in range(n)]
        if kind == "hypercube":
            dims = dims * self.d
        return make_item(self.problem, self.next_id(), dims)

    def fixed(self, length: Fraction) -> Item:
        return make_item(self.problem, self.next_id(), [length] * self.d)


def generate_trace(spec: dict, seed: int = 0) -> list[Event]:
    """Build a trace from a generator spec; the same (spec, seed) gives the same trace.

    ``spec["kind"]`` selects the generator:

    * ``uniform`` / ``powerlaw``: ``n`` insertions.
    * ``churn``: ``n`` events, each a departure with probability ``p`` (or when
      ``max_live`` items are live), otherwise an insertion.
    * ``adversarial-phase-burst``: insert large items until the volume reaches
      ``base_volume``, then alternate bursts of identical small items
      (side ``burst_side``) inserted and removed, each burst just over
      ``epsilon * base_volume`` in volume.
    """
    kind = spec.get("kind")
    if kind not in GENERATORS:
        raise ValidationError(f"unknown generator {kind!r}")
    n = int(spec.get("n", 0))
    if n < 0:
        raise ValidationError("n must be nonnegative")
    sampler = _Sampler(spec, seed)
    rng = sampler.rng
    events: list[Event] = []

    if kind in ("uniform", "powerlaw"):
        for t in range(n):
            events.append(insert(t, sampler.item()))

    elif kind == "churn":
        p = float(spec.get("p", 0.3))
        max_live = spec.get("max_live")
        live: list[str] = []
        for t in range(n):
            full = max_live is not None and len(live) >= int(max_live)
            if live and (full or rng.random() < p):
                victim = live.pop(int(rng.integers(len(live))))
                events.append(depart(t, victim))
            else:
                it = sampler.item()
                live.append(it.id)
                events.append(insert(t, it))

    else:
        eps = as_rational(spec.get("epsilon", Fraction(1, 10)))
        base = as_rational(spec.get("base_volume", 10))
        side = as_rational(spec.get("burst_side", Fraction(1, 10)))
        big = dict(spec, kind="uniform", low=spec.get("big_low", "1/2"), high=1)
        big_sampler = _Sampler(big, seed)
        big_sampler.rng = rng
        vol = Fraction(0)
        t = 0
        while t < n and vol < base:
            it = big_sampler.item()
            vol += item_size(it)
            events.append(insert(t, it))
            t += 1
        sampler.counter = big_sampler.counter
        burst: list[str] = []
        inserting = True
        while t < n:
            if inserting:
                it = sampler.fixed(side)
                burst.append(it.id)
                events.append(insert(t, it))
                if len(burst) * item_size(it) > eps * base:
                    inserting = False
            else:
                events.append(depart(t, burst.pop()))
                inserting = not burst
            t += 1

    check_trace(events)
    return events


def orient_rotation(item: Item) -> Item:
    """Rotate so every rectangle is vertical (w <= h) and hyperrectangle sides ascend."""
    if item.kind == "rect2d":
        w, h = item.dims
        return Item(item.id, "rect2d", (w, h) if w <= h else (h, w))
    if item.kind == "hyperrect":
        return Item(item.id, "hyperrect", tuple(sorted(item.dims)))
    return item


def rotate_trace(events: Sequence[Event]) -> list[Event]:
    return [insert(ev.t, orient_rotation(ev.item)) if ev.op == "insert" else ev for ev in events]


# -- experiments ----------------------------------------------------------------


@dataclass
class ExperimentConfig:
    problem: str
    d: int = 2
    epsilon: str = "1/10"
    offline: str = "restart"
    offline_order: str = "volume-desc"
    oracle: Optional[str] = None  # "vector-exact" enables optimum-based monitors
    rotation: str = "off"  # off | normalize
    seed: int = 0
    trace: Optional[str] = None
    generator: Optional[dict] = None
    check: bool = False
    strict: bool = False

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValidationError(f"unknown problem {self.problem!r}")
        check_problem(self.problem, self.d)
        self.epsilon = fmt_rational(as_rational(self.epsilon))
        eps = as_rational(self.epsilon)
        if not 0 < eps <= Fraction(1, 2):
            raise ValidationError(f"epsilon {self.epsilon} outside (0, 1/2]")
        if self.rotation not in ("off", "normalize"):
            raise ValidationError(f"unknown rotation mode {self.rotation!r}")
        if self.oracle not in (None, "vector-exact"):
            raise ValidationError(f"unknown oracle {self.oracle!r}")
        offline_repacker(self.offline, self.problem, self.d, self.offline_order)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ValidationError(f"unknown config keys {sorted(extra)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunReport:
    config: dict
    rows: list[StepDiagnostics] = field(default_factory=list)
    certified: dict = field(default_factory=dict)
    solution: Optional[Solution] = field(default=None, repr=False)  # final state, not exported

    @property
    def summary(self) -> dict:
        """Aggregates recomputed from the rows."""
        factors = [r.ledger_factor for r in self.rows if r.ledger_factor is not None]
        ratios = [r.cost / r.lb for r in self.rows if r.lb > 0]
        return {
            "events": len(self.rows),
            "phase_ends": sum(r.phase_end for r in self.rows),
            "max_migration_factor": fmt_rational(max(factors)) if factors else None,
            "max_cost_lb_ratio": fmt_rational(max(ratios)) if ratios else None,
            "violations": sum(len(r.violations) for r in self.rows),
            "certified": self.certified,
        }

    @property
    def ok(self) -> bool:
        return all(not r.violations for r in self.rows)

    def violations(self) -> list[str]:
        return [f"t={r.t}: {v}" for r in self.rows for v in r.violations]

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "certified": self.certified,
            "rows": [r.to_json() for r in self.rows],
            "summary": self.summary,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunReport":
        return cls(
            obj["config"],
            [StepDiagnostics.from_json(r) for r in obj["rows"]],
            obj.get("certified", {}),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunReport):
            return NotImplemented
        return self.to_json() == other.to_json()


def load_events(config: ExperimentConfig) -> list[Event]:
    if config.trace is not None:
        return read_trace(config.trace)
    if config.generator is not None:
        spec = dict(config.generator)
        spec.setdefault("problem", config.problem)
        spec.setdefault("d", config.d)
        return generate_trace(spec, config.seed)
    return []


def run_experiment(config: ExperimentConfig, events: Optional[Sequence[Event]] = None) -> RunReport:
    """Replay a trace through the combined algorithm and collect per-event rows."""
    if events is None:
        events = load_events(config)
    events = list(events)
    check_trace(events)
    if config.rotation == "normalize":
        events = rotate_trace(events)
    online = online_algorithm(config.problem, config.d)
    offline = offline_repacker(config.offline, config.problem, config.d, config.offline_order)
    oracle = vector_opt_oracle() if config.oracle == "vector-exact" else None
    runner = RobustRunner(
        config.problem,
        config.d,
        as_rational(config.epsilon),
        online=online,
        offline=offline,
        check=config.check,
        strict=config.strict,
        opt_oracle=oracle,
    )
    q = lambda x: None if x is None else fmt_rational(x)  # noqa: E731
    report = RunReport(
        config.to_dict(),
        certified={
            "online": online.name,
            "beta": q(online.beta),
            "c_on": q(online.c_on),
            "offline": offline.name,
            "migration_factor_bound": fmt_rational(1 / as_rational(config.epsilon) + 1),
        },
    )
    for ev in events:
        report.rows.append(runner.step(ev))
    report.solution = runner.solution
    res = runner.last_offline
    if res is not None:
        report.certified.update(
            gamma=q(res.gamma), c_off=q(res.additive),
            gamma_relative_to=res.relative_to, provenance=res.provenance,
        )
    return report


def export(report: RunReport, format: str = "csv") -> bytes:
    """Serialize a report; rationals are written as ``"p/q"``."""
    if format == "json":
        return (json.dumps(report.to_json(), sort_keys=True, indent=1) + "\n").encode()
    if format != "csv":
        raise ValueError(f"unknown format {format!r}")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.rows:
        obj = r.to_json()
        row = []
        for col in CSV_COLUMNS:
            v = obj[col]
            if isinstance(v, bool):
                v = "true" if v else "false"
            row.append("" if v is None else v)
        writer.writerow(row)
    return buf.getvalue().encode()
