"""Online packing with phase-wise offline repacking and amortized migration.

Arrivals are packed by a flexible online algorithm on top of the current
solution; departing items stay where they are as ghosts.  Once the volume
inserted plus departed since the last repack exceeds ``epsilon`` times the
volume present at that repack, the live items are repacked from scratch by
an offline algorithm and the next phase starts.

With ``check=True`` every inequality the guarantees rest on is evaluated
after each event and reported in :class:`StepDiagnostics`; ``strict=True``
turns any failure into a :class:`MonitorViolation`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

from .core import (
    Event,
    Item,
    MigrationLedger,
    Solution,
    TraceError,
    ValidationError,
    as_rational,
    fmt_rational,
    item_size,
    volume,
)
from .geometry import IncrementalValidator, validate_packing
from .offline import LowerBoundTracker, OfflineResult, Repacker, exact_vector_opt, offline_repacker
from .problems import OnlineAlgorithm, check_item, check_problem, empty_solution, online_algorithm

OptOracle = Callable[[Sequence[Item]], Optional[Fraction]]


class MonitorViolation(RuntimeError):
    def __init__(self, diag: "StepDiagnostics"):
        super().__init__(f"t={diag.t}: " + "; ".join(diag.violations))
        self.diagnostics = diag


def combined_bound(gamma, beta, epsilon, c_on, c_off, opt) -> Fraction:
    """Competitive bound of the combined algorithm at any time.

    ``(gamma + eps + 2 (gamma + eps + 1) beta eps) opt + (gamma + eps + 1) c_on + c_off``
    """
    g, b, e, con, coff, o = (as_rational(x) for x in (gamma, beta, epsilon, c_on, c_off, opt))
    if min(g, b, e, con, coff, o) < 0:
        raise ValueError("all arguments must be nonnegative")
    if e > Fraction(1, 2):
        raise ValueError("epsilon must be at most 1/2")
    return (g + e + 2 * (g + e + 1) * b * e) * o + (g + e + 1) * con + coff


def migration_bound_factor(epsilon: Fraction) -> Fraction:
    return 1 / as_rational(epsilon) + 1


@dataclass
class StepDiagnostics:
    t: int
    op: str
    id: str
    cost: Fraction
    live_cost: Fraction
    lb: Fraction
    phase_end: bool
    migrated: Fraction
    ledger_factor: Optional[Fraction]
    bound: Optional[Fraction] = None
    bound_ok: Optional[bool] = None
    opt: Optional[Fraction] = None
    claim_ok: Optional[bool] = None
    violations: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        def q(x):
            return None if x is None else fmt_rational(x)

        return {
            "t": self.t,
            "op": self.op,
            "id": self.id,
            "cost": q(self.cost),
            "live_cost": q(self.live_cost),
            "lb": q(self.lb),
            "phase_end": self.phase_end,
            "migrated": q(self.migrated),
            "ledger_factor": q(self.ledger_factor),
            "bound": q(self.bound),
            "bound_ok": self.bound_ok,
            "opt": q(self.opt),
            "claim_ok": self.claim_ok,
            "violations": list(self.violations),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StepDiagnostics":
        def q(x):
            return None if x is None else Fraction(x)

        return cls(
            t=obj["t"],
            op=obj["op"],
            id=obj["id"],
            cost=q(obj["cost"]),
            live_cost=q(obj["live_cost"]),
            lb=q(obj["lb"]),
            phase_end=obj["phase_end"],
            migrated=q(obj["migrated"]),
            ledger_factor=q(obj["ledger_factor"]),
            bound=q(obj.get("bound")),
            bound_ok=obj.get("bound_ok"),
            opt=q(obj.get("opt")),
            claim_ok=obj.get("claim_ok"),
            violations=list(obj.get("violations", [])),
        )


def vector_opt_oracle(limit: int = 12) -> OptOracle:
    """Exact optimum for small vector instances, memoized; None above ``limit``."""
    cache: dict = {}

    def oracle(items: Sequence[Item]) -> Optional[Fraction]:
        if len(items) > limit:
            return None
        key = tuple(sorted(it.dims for it in items))
        if key not in cache:
            cache[key] = Fraction(exact_vector_opt(list(items), limit))
        return cache[key]

    return oracle


class RobustRunner:
    """Drives one dynamic instance through the online/offline combination."""

    def __init__(
        self,
        problem: str,
        d: int = 2,
        epsilon=Fraction(1, 10),
        online: Optional[OnlineAlgorithm] = None,
        offline: Optional[Repacker] = None,
        check: bool = False,
        strict: bool = False,
        opt_oracle: Optional[OptOracle] = None,
    ):
        check_problem(problem, d)
        eps = as_rational(epsilon)
        if not 0 < eps <= Fraction(1, 2):
            raise ValidationError(f"epsilon {eps} outside (0, 1/2]")
        self.problem = problem
        self.d = d
        self.epsilon = eps
        self.online = online or online_algorithm(problem, d)
        self.offline = offline or offline_repacker("restart", problem, d)
        self.check = check or strict
        self.strict = strict
        self.opt_oracle = opt_oracle

        self.solution = empty_solution(problem, d)
        self.state = self.online.flexify(self.solution)
        self.ledger = MigrationLedger()
        self.ledger.open_phase(0, Fraction(0))
        self.v_total = Fraction(0)
        self.v_changed = Fraction(0)
        self.phase_inserted = Fraction(0)
        self.phase_departed = Fraction(0)
        self.phase_base_cost = Fraction(0)
        self.phase_start_items: list[Item] = []
        self.gamma: Optional[Fraction] = None
        self.c_off: Optional[Fraction] = None
        self.last_offline: Optional[OfflineResult] = None
        self.repacks = 0

        self._bounds = LowerBoundTracker(problem, d)
        self._live: dict[str, Item] = {}  # internal key -> item, insertion order
        self._key: dict[str, str] = {}  # external id -> internal key
        self._uses: dict[str, int] = {}
        self._validator = IncrementalValidator(self.solution) if self.check else None

    # -- event handling -------------------------------------------------------

    def _fresh_key(self, id: str) -> str:
        n = self._uses.get(id, 0)
        self._uses[id] = n + 1
        return id if n == 0 else f"{id}#{n}"

    def live_items(self) -> list[Item]:
        return list(self._live.values())

    def step(self, event: Event) -> StepDiagnostics:
        t = event.t
        violations: list[str] = []
        new_key = None
        if event.op == "insert":
            if event.id in self._key:
                raise TraceError(f"t={t}: {event.id!r} inserted while live")
            check_item(self.problem, self.d, event.item)
            new_key = self._fresh_key(event.id)
            item = event.item if new_key == event.id else event.item.with_id(new_key)
            placement = self.state.place(item)
            self.solution.place(item, placement)
            if self.solution.domain == "strip":
                self.solution.floor = self.state.cost
            self._live[new_key] = item
            self._bounds.add(item)
            self._key[event.id] = new_key
            v = item_size(item)
            self.ledger.record("insert", v)
            self.phase_inserted += v
            if self._validator is not None:
                rep = self._validator.check(new_key)
                if rep:
                    violations.append(f"invalid placement of {event.id}: {rep.to_json()}")
        else:
            key = self._key.pop(event.id, None)
            if key is None:
                raise TraceError(f"t={t}: depart of non-live id {event.id!r}")
            item = self._live.pop(key)
            self._bounds.remove(item)
            self.solution.mark_departed(key)
            v = item_size(item)
            self.ledger.record("depart", v)
            self.phase_departed += v

        self.v_changed += v
        phase_end = self.v_changed > self.epsilon * self.v_total
        migrated = Fraction(0)
        if phase_end:
            migrated, repack_violations = self._end_phase(t, exclude=new_key)
            violations.extend(repack_violations)

        diag = StepDiagnostics(
            t=t,
            op=event.op,
            id=event.id,
            cost=self.solution.cost,
            live_cost=self.solution.live_cost(),
            lb=self._bounds.value(),
            phase_end=phase_end,
            migrated=migrated,
            ledger_factor=self.ledger.factor(),
        )
        diag.violations = violations
        if self.check:
            self._monitor(diag)
        if self.strict and diag.violations:
            raise MonitorViolation(diag)
        return diag

    def end_phase_repack(self, t: int) -> Fraction:
        """Force a repack now; returns the volume migrated."""
        migrated, violations = self._end_phase(t)
        if self.strict and violations:
            raise RuntimeError("; ".join(violations))
        return migrated

    def _end_phase(self, t: int, exclude: Optional[str] = None) -> tuple[Fraction, list[str]]:
        violations = []
        live = self.live_items()
        try:
            result = self.offline(live)
        except Exception as exc:
            raise RuntimeError(f"t={t}: offline repacker {self.offline.name} failed: {exc}") from exc
        new = result.solution
        if set(new.placements) != set(self._live):
            raise RuntimeError(f"t={t}: offline solution does not place exactly the live items")
        old = self.solution
        migrated = Fraction(0)
        for key, item in self._live.items():
            if key == exclude:
                continue  # arrived this step; not in the previous instance
            if self._position(old, key) != self._position(new, key):
                migrated += item_size(item)
        self.ledger.record("migrate", migrated)

        if self.check:
            phase_volume = self.phase_inserted + self.phase_departed
            limit = migration_bound_factor(self.epsilon) * phase_volume
            if migrated > limit:
                violations.append(f"phase migration {migrated} > {limit}")
            rep = validate_packing(new)
            if rep:
                violations.append(f"offline solution invalid: {rep.to_json()}")
            if result.relative_to == "volume" and result.gamma is not None:
                cap = result.gamma * volume(live) + result.additive
                if new.cost > cap:
                    violations.append(f"offline cost {new.cost} > {cap}")

        self.solution = new
        self.state = self.online.flexify(new)
        self.v_total = volume(live)
        self.v_changed = Fraction(0)
        self.phase_inserted = Fraction(0)
        self.phase_departed = Fraction(0)
        self.phase_base_cost = new.cost
        self.phase_start_items = live
        self.last_offline = result
        self.gamma, self.c_off = result.gamma, result.additive
        self.repacks += 1
        self.ledger.open_phase(t, self.v_total)
        if self._validator is not None:
            self._validator = IncrementalValidator(new)
        return migrated, violations

    def _position(self, sol: Solution, key: str):
        p = sol.placements[key]
        return p.bin if sol.domain == "vector" else p.position

    # -- monitors --------------------------------------------------------------

    def _monitor(self, diag: StepDiagnostics) -> None:
        v = diag.violations
        eps = self.epsilon
        try:
            self.solution.check_consistent()
        except ValidationError as exc:
            v.append(str(exc))
        if self.solution.cost != self.state.cost:
            v.append(f"solution cost {self.solution.cost} != algorithm cost {self.state.cost}")
        v.extend(self.state.check_invariants(coverage=self._coverage_certified()))

        live_vol = self._bounds.vol
        factor = migration_bound_factor(eps)
        if self.ledger.migrated_vol > factor * (self.ledger.inserted_vol + self.ledger.departed_vol):
            v.append(f"cumulative migration {self.ledger.migrated_vol} above bound")

        if diag.phase_end:
            if self.solution.recomputed_cost() != (diag.cost, diag.live_cost):
                v.append("cached cost differs from the placements")
            res = self.last_offline
            if res is not None and res.relative_to == "volume" and res.gamma is not None:
                diag.bound = res.gamma * live_vol + res.additive
        else:
            if live_vol < (1 - eps) * self.v_total:
                v.append(f"volume {live_vol} below (1-eps) V_tau = {(1 - eps) * self.v_total}")
            if self.online.certified:
                diag.bound = self.phase_base_cost + self.online.beta * self.phase_inserted + self.online.c_on
        if diag.bound is not None:
            # a lone all-zero vector opens a bin with no volume behind it, so
            # the strict form only holds once some volume has arrived
            if self.online.strict and not diag.phase_end and self.phase_inserted > 0:
                diag.bound_ok = diag.cost < diag.bound
            else:
                diag.bound_ok = diag.cost <= diag.bound
            if not diag.bound_ok:
                v.append(f"cost {diag.cost} exceeds bound {diag.bound}")

        if self.opt_oracle is not None:
            opt = self.opt_oracle(self.live_items())
            diag.opt = opt
            if opt is not None:
                if diag.lb > opt:
                    v.append(f"lower bound {diag.lb} above optimum {opt}")
                if self.online.certified and self.gamma is not None:
                    cb = combined_bound(self.gamma, self.online.beta, eps,
                                        self.online.c_on, self.c_off, opt)
                    if diag.cost > cb:
                        v.append(f"cost {diag.cost} exceeds combined bound {cb}")
                if not diag.phase_end:
                    diag.claim_ok = monitor_claim_opt_tau(self, self.opt_oracle)
                    if diag.claim_ok is False:
                        v.append("opt(I_tau) above opt(I_t) + beta eps V_tau + c_on")

    def _coverage_certified(self) -> bool:
        if self.problem in ("bin-hypercube", "strip2d", "strip-hypercube"):
            return True
        return self.d == 2 or (self.problem == "strip-d" and self.d == 3)

    def run(self, events: Sequence[Event]) -> list[StepDiagnostics]:
        return [self.step(ev) for ev in events]


def end_phase_repack(runner: RobustRunner, t: int) -> Fraction:
    return runner.end_phase_repack(t)


def step(runner: RobustRunner, event: Event) -> StepDiagnostics:
    return runner.step(event)


def monitor_claim_opt_tau(runner: RobustRunner, oracle: OptOracle) -> Optional[bool]:
    """Whether opt at the phase start is within ``beta eps V_tau + c_on`` of opt now.

    None when the oracle refuses either instance or the online algorithm has
    no certified constants.
    """
    if not runner.online.certified:
        return None
    opt_now = oracle(runner.live_items())
    opt_start = oracle(runner.phase_start_items)
    if opt_now is None or opt_start is None:
        return None
    slack = runner.online.beta * runner.epsilon * runner.v_total + runner.online.c_on
    return opt_start <= opt_now + slack
