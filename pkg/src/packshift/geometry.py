"""Axis-aligned box predicates and packing validity checks.

Interiors must be disjoint; touching faces are fine.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .core import Item, Solution, fmt_rational


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    origin: tuple[Fraction, ...]
    sides: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.origin) != len(self.sides):
            raise DimensionMismatch("origin and sides differ in length")

    @property
    def d(self) -> int:
        return len(self.sides)

    @property
    def end(self) -> tuple[Fraction, ...]:
        return tuple(o + s for o, s in zip(self.origin, self.sides))


def unit_box(d: int) -> Box:
    return Box((Fraction(0),) * d, (Fraction(1),) * d)


def _same_dim(a: Box, b: Box) -> None:
    if a.d != b.d:
        raise DimensionMismatch(f"{a.d}-dimensional vs {b.d}-dimensional box")


def boxes_disjoint(a: Box, b: Box) -> bool:
    _same_dim(a, b)
    for k in range(a.d):
        if a.origin[k] + a.sides[k] <= b.origin[k] or b.origin[k] + b.sides[k] <= a.origin[k]:
            return True
    return False


def contains(outer: Box, inner: Box) -> bool:
    _same_dim(outer, inner)
    return all(
        outer.origin[k] <= inner.origin[k]
        and inner.origin[k] + inner.sides[k] <= outer.origin[k] + outer.sides[k]
        for k in range(outer.d)
    )


@dataclass
class ValidityReport:
    overlaps: list[tuple[str, str]] = field(default_factory=list)
    out_of_bounds: list[str] = field(default_factory=list)
    overloaded: list[tuple[int, int, Fraction]] = field(default_factory=list)  # (bin, dim, load)
    other: list[str] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not (self.overlaps or self.out_of_bounds or self.overloaded or self.other)

    def __bool__(self) -> bool:
        # truthy when there is something to report
        return not self.valid

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "overlaps": [list(p) for p in self.overlaps],
            "out_of_bounds": list(self.out_of_bounds),
            "overloaded": [
                {"bin": b, "dim": k, "load": fmt_rational(v)} for b, k, v in self.overloaded
            ],
            "other": list(self.other),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def item_box(item: Item, offset: tuple[Fraction, ...]) -> Box:
    return Box(tuple(offset), tuple(item.dims))


def _in_domain(box: Box, domain: str) -> bool:
    for k in range(box.d):
        if box.origin[k] < 0:
            return False
        if domain == "strip" and k == box.d - 1:
            continue
        if box.origin[k] + box.sides[k] > 1:
            return False
    return True


def _sweep_overlaps(boxes: list[tuple[str, Box]], axis: int) -> list[tuple[str, str]]:
    """Pairwise overlap test, pruned by sorting on one axis."""
    boxes = sorted(boxes, key=lambda kb: (kb[1].origin[axis], kb[0]))
    found = []
    active: list[tuple[str, Box]] = []
    for key, box in boxes:
        start = box.origin[axis]
        active = [kb for kb in active if kb[1].origin[axis] + kb[1].sides[axis] > start]
        for other_key, other in active:
            if not boxes_disjoint(box, other):
                found.append(tuple(sorted((other_key, key))))
        active.append((key, box))
    return found


def validate_packing(
    sol: Solution,
    items: Optional[Mapping[str, Item]] = None,
    domain: Optional[str] = None,
    d: Optional[int] = None,
) -> ValidityReport:
    """Check every placed item (live and ghost) for overlap and containment.

    Bins are unit hypercubes; a strip has a unit cross-section and unbounded
    last dimension; vector bins need every per-dimension sum to be at most 1.
    """
    items = sol.items if items is None else items
    domain = domain or sol.domain
    d = d or sol.d
    report = ValidityReport()
    ids = sorted(sol.placements)
    for i in ids:
        if i not in items:
            report.other.append(f"no item spec for {i}")
    ids = [i for i in ids if i in items]

    if domain == "vector":
        loads: dict[int, list[Fraction]] = {}
        for i in ids:
            b = sol.placements[i].bin
            if b is None:
                report.other.append(f"{i} has no bin")
                continue
            acc = loads.setdefault(b, [Fraction(0)] * d)
            for k, c in enumerate(items[i].dims):
                acc[k] += c
        for b in sorted(loads):
            for k, s in enumerate(loads[b]):
                if s > 1:
                    report.overloaded.append((b, k, s))
        return report

    groups: dict[Optional[int], list[tuple[str, Box]]] = {}
    for i in ids:
        p = sol.placements[i]
        it = items[i]
        if it.d != d or len(p.offset) != d:
            report.other.append(f"{i} has wrong dimension")
            continue
        if domain == "bin" and p.bin is None:
            report.other.append(f"{i} has no bin")
            continue
        box = item_box(it, p.offset)
        if not _in_domain(box, domain):
            report.out_of_bounds.append(i)
        groups.setdefault(p.bin if domain == "bin" else None, []).append((i, box))

    axis = d - 1 if domain == "strip" else 0
    for key in sorted(groups, key=lambda b: -1 if b is None else b):
        report.overlaps.extend(_sweep_overlaps(groups[key], axis))
    return report


class IncrementalValidator:
    """Checks each newly placed item against the items it could touch.

    Geometric items are bucketed by bin, or by unit-height band of the strip,
    so a check costs time proportional to the neighbourhood rather than the
    whole packing.  Use :func:`validate_packing` for a full audit.
    """

    def __init__(self, sol: Solution):
        self.sol = sol
        self._buckets: dict = {}
        self._loads: dict[int, list[Fraction]] = {}
        for i in sorted(sol.placements):
            self._register(i)

    def _keys(self, i: str):
        p = self.sol.placements[i]
        if self.sol.domain == "bin":
            return [p.bin]
        lo = p.offset[-1]
        hi = lo + self.sol.items[i].h
        return list(range(int(lo), max(int(lo) + 1, -(-hi.numerator // hi.denominator))))

    def _register(self, i: str) -> None:
        if self.sol.domain == "vector":
            b = self.sol.placements[i].bin
            acc = self._loads.setdefault(b, [Fraction(0)] * self.sol.d)
            for k, c in enumerate(self.sol.items[i].dims):
                acc[k] += c
            return
        for key in self._keys(i):
            self._buckets.setdefault(key, []).append(i)

    def check(self, new_id: str) -> ValidityReport:
        """Validate ``new_id`` (already in the solution) and start tracking it."""
        sol = self.sol
        report = ValidityReport()
        p = sol.placements[new_id]
        it = sol.items[new_id]
        if sol.domain == "vector":
            self._register(new_id)
            for k, s in enumerate(self._loads[p.bin]):
                if s > 1:
                    report.overloaded.append((p.bin, k, s))
            return report
        if len(p.offset) != sol.d or it.d != sol.d:
            report.other.append(f"{new_id} has wrong dimension")
            return report
        box = item_box(it, p.offset)
        if not _in_domain(box, sol.domain):
            report.out_of_bounds.append(new_id)
        seen = set()
        for key in self._keys(new_id):
            for i in self._buckets.get(key, ()):
                if i in seen:
                    continue
                seen.add(i)
                if not boxes_disjoint(box, item_box(sol.items[i], sol.placements[i].offset)):
                    report.overlaps.append(tuple(sorted((i, new_id))))
        self._register(new_id)
        return report


def covered_fraction(region: Box, boxes: Iterable[Box]) -> Fraction:
    """Volume of ``boxes`` (assumed disjoint and inside ``region``) over the region volume."""
    total = Fraction(0)
    for b in boxes:
        v = Fraction(1)
        for s in b.sides:
            v *= s
        total += v
    rv = Fraction(1)
    for s in region.sides:
        rv *= s
    return total / rv
