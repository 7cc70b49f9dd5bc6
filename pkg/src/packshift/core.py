"""Problem-agnostic data model: items, events, solutions and migration accounting.

All lengths, volumes and costs are :class:`fractions.Fraction`.  Size classes
are half-open power-of-two intervals, so float rounding would put boundary
items into the wrong class.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

Rational = Union[Fraction, int, str, float]

GEOMETRIC_KINDS = ("rect2d", "hyperrect", "hypercube")
ITEM_KINDS = GEOMETRIC_KINDS + ("vector",)


class ValidationError(ValueError):
    """Malformed item, event or trace."""


class TraceError(ValidationError):
    """An event stream that is not a valid online instance."""


def as_rational(x: Rational) -> Fraction:
    """Convert ``x`` to an exact Fraction.

    Strings may be ``"p/q"`` or decimals (``"0.6"`` becomes 3/5).  Floats go
    through their shortest repr, so ``0.6`` also becomes 3/5 rather than the
    nearest binary double.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise ValidationError(f"not a number: {x!r}")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(repr(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse rational {x!r}") from exc
    raise ValidationError(f"not a number: {x!r}")


def fmt_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Item:
    """A rectangle, hyperrectangle, hypercube or vector.

    ``dims`` holds the side lengths (geometric kinds) or the components
    (vectors).  A hypercube stores its side ``d`` times.
    """

    id: str
    kind: str
    dims: tuple[Fraction, ...]

    def __post_init__(self):
        if self.kind not in ITEM_KINDS:
            raise ValidationError(f"unknown item kind {self.kind!r}")
        if not self.dims:
            raise ValidationError(f"item {self.id!r} has no dimensions")
        if self.kind == "rect2d" and len(self.dims) != 2:
            raise ValidationError("rect2d needs exactly two sides")
        if self.kind == "hypercube" and len(set(self.dims)) != 1:
            raise ValidationError("hypercube sides must be equal")
        for x in self.dims:
            if self.kind == "vector":
                if not 0 <= x <= 1:
                    raise ValidationError(f"vector component {x} of {self.id!r} outside [0,1]")
            elif not 0 < x <= 1:
                raise ValidationError(f"side {x} of {self.id!r} outside (0,1]")

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def geometric(self) -> bool:
        return self.kind != "vector"

    @property
    def w(self) -> Fraction:
        return self.dims[0]

    @property
    def h(self) -> Fraction:
        """Extent in the last dimension (the strip's height axis)."""
        return self.dims[-1]

    @property
    def side(self) -> Fraction:
        if self.kind != "hypercube":
            raise AttributeError("only hypercubes have a single side")
        return self.dims[0]

    @cached_property
    def size(self) -> Fraction:
        """Product of the sides for geometric items, mean component for vectors."""
        if self.kind == "vector":
            return sum(self.dims, Fraction(0)) / self.d
        v = Fraction(1)
        for s in self.dims:
            v *= s
        return v

    def with_id(self, new_id: str) -> "Item":
        return replace(self, id=new_id)


def rect2d(id: str, w: Rational, h: Rational) -> Item:
    return Item(str(id), "rect2d", (as_rational(w), as_rational(h)))


def hyperrect(id: str, sides: Sequence[Rational]) -> Item:
    return Item(str(id), "hyperrect", tuple(as_rational(s) for s in sides))


def hypercube(id: str, side: Rational, d: int) -> Item:
    if d < 1:
        raise ValidationError("dimension must be positive")
    s = as_rational(side)
    return Item(str(id), "hypercube", (s,) * d)


def vector(id: str, components: Sequence[Rational]) -> Item:
    return Item(str(id), "vector", tuple(as_rational(c) for c in components))


def item_size(item: Item) -> Fraction:
    """The scalar size used for volume and migration accounting."""
    return item.size


def volume(items: Iterable[Item]) -> Fraction:
    return sum((item_size(i) for i in items), Fraction(0))


# -- events and traces -------------------------------------------------------


@dataclass(frozen=True)
class Event:
    t: int
    op: str  # "insert" | "depart"
    id: str
    item: Optional[Item] = None

    def __post_init__(self):
        if self.op not in ("insert", "depart"):
            raise ValidationError(f"unknown op {self.op!r}")
        if self.op == "insert" and self.item is None:
            raise ValidationError("insert event without an item")
        if self.t < 0:
            raise ValidationError("negative time index")


def insert(t: int, item: Item) -> Event:
    return Event(t, "insert", item.id, item)


def depart(t: int, id: str) -> Event:
    return Event(t, "depart", str(id))


def check_trace(events: Sequence[Event]) -> None:
    """Raise TraceError unless each event changes the live set by exactly one item.

    An id may be inserted again once it has departed.
    """
    live: set[str] = set()
    last_t = -1
    for ev in events:
        if ev.t <= last_t:
            raise TraceError(f"time index {ev.t} not increasing")
        last_t = ev.t
        if ev.op == "insert":
            if ev.id in live:
                raise TraceError(f"t={ev.t}: {ev.id!r} inserted while live")
            if ev.item is None or ev.item.id != ev.id:
                raise TraceError(f"t={ev.t}: insert id mismatch")
            live.add(ev.id)
        else:
            if ev.id not in live:
                raise TraceError(f"t={ev.t}: depart of non-live id {ev.id!r}")
            live.remove(ev.id)


def live_after(events: Sequence[Event], upto: Optional[int] = None) -> dict[str, Item]:
    """Live items (insertion order) after the first ``upto`` events."""
    live: dict[str, Item] = {}
    for ev in events[:upto]:
        if ev.op == "insert":
            live[ev.id] = ev.item
        else:
            live.pop(ev.id, None)
    return live


def event_to_json(ev: Event) -> dict:
    out: dict = {"t": ev.t, "op": ev.op, "id": ev.id}
    if ev.op == "insert":
        item = ev.item
        out["kind"] = item.kind
        if item.kind == "rect2d":
            out["w"] = fmt_rational(item.dims[0])
            out["h"] = fmt_rational(item.dims[1])
        elif item.kind == "hypercube":
            out["side"] = fmt_rational(item.side)
            out["d"] = item.d
        elif item.kind == "hyperrect":
            out["sides"] = [fmt_rational(s) for s in item.dims]
        else:
            out["components"] = [fmt_rational(c) for c in item.dims]
    return out


def event_from_json(obj: Mapping) -> Event:
    try:
        t = int(obj["t"])
        op = obj["op"]
        id_ = str(obj["id"])
        if op == "depart":
            return depart(t, id_)
        kind = obj["kind"]
        if kind == "rect2d":
            item = rect2d(id_, obj["w"], obj["h"])
        elif kind == "hypercube":
            item = hypercube(id_, obj["side"], int(obj["d"]))
        elif kind == "hyperrect":
            item = hyperrect(id_, obj["sides"])
        elif kind == "vector":
            item = vector(id_, obj["components"])
        else:
            raise ValidationError(f"unknown kind {kind!r}")
    except KeyError as exc:
        raise ValidationError(f"missing field {exc} in {dict(obj)!r}") from exc
    return Event(t, op, id_, item)


def dumps_trace(events: Iterable[Event]) -> str:
    return "".join(json.dumps(event_to_json(ev), separators=(",", ":")) + "\n" for ev in events)


def loads_trace(text: str) -> list[Event]:
    events = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from exc
        events.append(event_from_json(obj))
    check_trace(events)
    return events


def read_trace(path) -> list[Event]:
    with open(path) as fh:
        return loads_trace(fh.read())


def write_trace(path, events: Iterable[Event]) -> None:
    with open(path, "w") as fh:
        fh.write(dumps_trace(events))


# -- solutions ---------------------------------------------------------------


@dataclass(frozen=True)
class Placement:
    """Where an item sits: a bin index (bin problems) and an offset vector.

    ``tag`` records the pool (orientation, permutation or container type) and
    is informational; it is not part of an item's position.
    """

    bin: Optional[int]
    offset: tuple[Fraction, ...]
    tag: Optional[str] = None

    def __post_init__(self):
        if any(x < 0 for x in self.offset):
            raise ValidationError(f"negative offset {self.offset}")

    @property
    def position(self) -> tuple:
        return (self.bin, self.offset)


@dataclass
class Solution:
    """Placements of live and departed-but-still-placed ("ghost") items.

    ``domain`` is ``"strip"``, ``"bin"`` or ``"vector"``.  For strips ``floor``
    is the height reserved by the packing structure (containers may extend
    above the highest item); the cost is the larger of it and the top item.
    For bins the cost is the number of distinct bins holding an item.
    """

    domain: str
    d: int
    placements: dict[str, Placement] = field(default_factory=dict)
    live: set[str] = field(default_factory=set)
    ghosts: set[str] = field(default_factory=set)
    floor: Fraction = Fraction(0)
    items: dict[str, Item] = field(default_factory=dict)

    def __post_init__(self):
        if self.domain not in ("strip", "bin", "vector"):
            raise ValidationError(f"unknown domain {self.domain!r}")
        # cost caches, kept in step by place() and mark_departed()
        self._top = Fraction(0)
        self._live_tops: list[tuple[Fraction, str]] = []
        self._bins: Counter = Counter()
        self._live_bins: Counter = Counter()
        for i in self.placements:
            self._account(i, i in self.live)

    def _account(self, i: str, live: bool) -> None:
        p = self.placements[i]
        if self.domain == "strip":
            top = p.offset[-1] + self.items[i].h
            self._top = max(self._top, top)
            if live:
                heapq.heappush(self._live_tops, (-top, i))
        else:
            self._bins[p.bin] += 1
            if live:
                self._live_bins[p.bin] += 1

    def place(self, item: Item, placement: Placement) -> None:
        if item.id in self.placements:
            raise ValidationError(f"{item.id!r} already placed")
        self.placements[item.id] = placement
        self.items[item.id] = item
        self.live.add(item.id)
        self._account(item.id, True)

    def mark_departed(self, id: str) -> None:
        if id not in self.live:
            raise TraceError(f"depart of non-live id {id!r}")
        self.live.remove(id)
        self.ghosts.add(id)
        if self.domain != "strip":
            b = self.placements[id].bin
            self._live_bins[b] -= 1
            if not self._live_bins[b]:
                del self._live_bins[b]

    @property
    def cost(self) -> Fraction:
        if self.domain == "strip":
            return max(self.floor, self._top)
        return Fraction(len(self._bins))

    def live_cost(self) -> Fraction:
        if self.domain == "strip":
            heap = self._live_tops
            while heap and heap[0][1] not in self.live:
                heapq.heappop(heap)
            return -heap[0][0] if heap else Fraction(0)
        return Fraction(len(self._live_bins))

    def recomputed_cost(self) -> tuple[Fraction, Fraction]:
        """(cost, live cost) straight from the placements, bypassing the caches."""
        floor = self.floor if self.domain == "strip" else Fraction(0)
        return max(floor, placement_cost(self, self.placements)), placement_cost(self, self.live)

    def check_consistent(self) -> None:
        if set(self.placements) != self.live | self.ghosts:
            raise ValidationError("placements do not cover live and ghost ids exactly")
        if self.live & self.ghosts:
            raise ValidationError("an id is both live and ghost")

    def copy(self) -> "Solution":
        return Solution(
            self.domain,
            self.d,
            dict(self.placements),
            set(self.live),
            set(self.ghosts),
            self.floor,
            dict(self.items),
        )

    def max_bin(self) -> int:
        """Largest bin index in use, -1 when there is none."""
        return max((p.bin for p in self.placements.values()), default=-1)


def placement_cost(sol: Solution, ids: Iterable[str]) -> Fraction:
    """Cost of the given placed ids, ignoring any reserved structure."""
    if sol.domain == "strip":
        top = Fraction(0)
        for i in ids:
            t = sol.placements[i].offset[-1] + sol.items[i].h
            if t > top:
                top = t
        return top
    return Fraction(len({sol.placements[i].bin for i in ids}))


def restrict_solution(sol: Solution, keep: Iterable[str]) -> Solution:
    """The solution induced by ``keep``; every kept placement is left as is."""
    keep = set(keep)
    missing = keep - set(sol.placements)
    if missing:
        raise ValidationError(f"not placed: {sorted(missing)}")
    return Solution(
        sol.domain,
        sol.d,
        {i: p for i, p in sol.placements.items() if i in keep},
        sol.live & keep,
        sol.ghosts & keep,
        sol.floor,
        {i: it for i, it in sol.items.items() if i in keep},
    )


def solution_to_json(sol: Solution) -> dict:
    """Placements only; item shapes travel separately in the trace."""
    return {
        "domain": sol.domain,
        "d": sol.d,
        "floor": fmt_rational(sol.floor),
        "placements": {
            i: {
                "bin": p.bin,
                "offset": [fmt_rational(x) for x in p.offset],
                "tag": p.tag,
            }
            for i, p in sorted(sol.placements.items())
        },
        "ghosts": sorted(sol.ghosts),
    }


def solution_from_json(obj: Mapping, items: Mapping[str, Item]) -> Solution:
    try:
        sol = Solution(obj["domain"], int(obj["d"]), floor=as_rational(obj.get("floor", 0)))
        ghosts = set(obj.get("ghosts", []))
        for i, p in obj["placements"].items():
            if i not in items:
                raise ValidationError(f"no item spec for {i!r}")
            offset = tuple(as_rational(x) for x in p["offset"])
            sol.place(items[i], Placement(p.get("bin"), offset, p.get("tag")))
            if i in ghosts:
                sol.mark_departed(i)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed solution: {exc}") from exc
    return sol


# -- migration ledger --------------------------------------------------------


@dataclass
class PhaseRecord:
    start: int
    volume_at_start: Fraction
    inserted: Fraction = Fraction(0)
    departed: Fraction = Fraction(0)
    migrated: Fraction = Fraction(0)
    end: Optional[int] = None


@dataclass
class MigrationLedger:
    """Cumulative inserted, departed and migrated volume, with a per-phase breakdown."""

    inserted_vol: Fraction = Fraction(0)
    departed_vol: Fraction = Fraction(0)
    migrated_vol: Fraction = Fraction(0)
    phases: list[PhaseRecord] = field(default_factory=list)

    def record(self, kind: str, vol: Fraction) -> None:
        vol = as_rational(vol)
        if vol < 0:
            raise ValueError("negative volume")
        if kind == "insert":
            self.inserted_vol += vol
            if self.phases:
                self.phases[-1].inserted += vol
        elif kind == "depart":
            self.departed_vol += vol
            if self.phases:
                self.phases[-1].departed += vol
        elif kind == "migrate":
            self.migrated_vol += vol
            if self.phases:
                self.phases[-1].migrated += vol
        else:
            raise ValueError(f"unknown ledger entry {kind!r}")

    def open_phase(self, t: int, vol_at_start: Fraction) -> None:
        if self.phases and self.phases[-1].end is None:
            self.phases[-1].end = t
        self.phases.append(PhaseRecord(t, vol_at_start))

    def factor(self) -> Optional[Fraction]:
        """migrated / (inserted + departed); None while nothing has changed."""
        denom = self.inserted_vol + self.departed_vol
        if denom == 0:
            return None
        return self.migrated_vol / denom


def ledger_record(ledger: MigrationLedger, kind: str, vol: Rational) -> MigrationLedger:
    ledger.record(kind, as_rational(vol))
    return ledger


def ledger_factor(ledger: MigrationLedger) -> Optional[Fraction]:
    return ledger.factor()
