"""Flexible online strip packing with shelves ("containers").

Every algorithm here stacks full-width containers on top of whatever was
packed before and never reuses space below ``base``.  Each container type
has at most one active container; a new one opens only when the active one
of that type cannot take the arriving item, and the old one is closed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import Item, Placement, Solution, hyperrect, item_size
from .slots import SlotPacker, VectorPacker, size_class

HALF = Fraction(1, 2)


@dataclass
class ShelfContainer:
    type: int
    base: Fraction
    height: Fraction
    cursor: Fraction | int = Fraction(0)
    closed: bool = False
    filled: Fraction = Fraction(0)
    items: list[str] = field(default_factory=list)


def sp_classify(r: Item) -> int:
    """Container type of a rectangle: 0 for wide items, else its height class."""
    w, h = r.dims
    if w >= HALF:
        return 0
    return size_class(h)


def shelf_height(i: int) -> Fraction:
    return Fraction(1) if i == 0 else Fraction(1, 2 ** (i - 1))


class _StripBase:
    def __init__(self, base: Fraction = Fraction(0)):
        self.base = Fraction(base)
        self.top = self.base
        self.containers: list[ShelfContainer] = []
        self.active: dict[int, ShelfContainer] = {}
        self.volume = Fraction(0)

    @classmethod
    def from_solution(cls, prev: Solution, *args, **kwargs):
        return cls(*args, base=prev.cost, **kwargs)

    @property
    def cost(self) -> Fraction:
        return self.top

    @property
    def opened(self) -> Fraction:
        return self.top - self.base

    def _open(self, i: int, height: Fraction) -> ShelfContainer:
        old = self.active.get(i)
        if old is not None:
            old.closed = True
        c = ShelfContainer(i, self.top, height)
        self.top += height
        self.containers.append(c)
        self.active[i] = c
        return c

    def check_invariants(self, coverage: bool = False) -> list[str]:
        problems = []
        seen = set()
        for c in self.containers:
            if not c.closed:
                if c.type in seen:
                    problems.append(f"two active containers of type {c.type}")
                seen.add(c.type)
        expected = self.base + sum((c.height for c in self.containers), Fraction(0))
        if expected != self.top:
            problems.append(f"top {self.top} != base + container heights {expected}")
        return problems


class ShelfPacker(_StripBase):
    """Two-dimensional shelf algorithm.

    Items at least half as wide as the strip stack upward in type-0
    containers of height 1; narrower items with height in
    ``(2**-i, 2**-(i-1)]`` go left to right in type-``i`` containers of
    height ``2**-(i-1)``.
    """

    d = 2

    def __init__(self, base: Fraction = Fraction(0)):
        super().__init__(base)

    def place(self, r: Item) -> Placement:
        if r.d != 2:
            raise ValueError("ShelfPacker takes rectangles")
        w, h = r.dims
        i = sp_classify(r)
        extent = h if i == 0 else w
        c = self.active.get(i)
        if c is None or c.cursor + extent > 1:
            c = self._open(i, shelf_height(i))
        offset = (Fraction(0), c.base + c.cursor) if i == 0 else (c.cursor, c.base)
        c.cursor += extent
        v = item_size(r)
        c.filled += v
        self.volume += v
        c.items.append(r.id)
        return Placement(None, offset, f"g{i}")

    def check_invariants(self, coverage: bool = False) -> list[str]:
        problems = super().check_invariants()
        if coverage:
            problems.extend(self.closed_volume_ok())
        return problems

    def closed_volume_ok(self) -> list[str]:
        """Per type, packed volume >= (sum of container heights)/4 - 2**-(i-1)."""
        problems = []
        by_type: dict[int, list[ShelfContainer]] = {}
        for c in self.containers:
            by_type.setdefault(c.type, []).append(c)
        for i, cs in by_type.items():
            vol = sum((c.filled for c in cs), Fraction(0))
            heights = sum((c.height for c in cs), Fraction(0))
            if vol < heights / 4 - Fraction(2) / 2**i:
                problems.append(f"type {i}: volume {vol} below bound")
        return problems


class HypercubeStripPacker(_StripBase):
    """Hypercubes with side in ``(2**-i, 2**-(i-1)]`` fill a grid of cubic slots.

    A type-``i`` container has height ``2**-(i-1)`` and a cross-section grid
    of ``2**(i-1)`` slots per axis, filled in lexicographic order.
    """

    def __init__(self, d: int, base: Fraction = Fraction(0)):
        if d < 2:
            raise ValueError("hypercube strip packing needs d >= 2")
        super().__init__(base)
        self.d = d

    @classmethod
    def from_solution(cls, prev: Solution, d: Optional[int] = None):
        return cls(d or prev.d, base=prev.cost)

    def place(self, c: Item) -> Placement:
        if c.d != self.d or len(set(c.dims)) != 1:
            raise ValueError(f"expected a {self.d}-dimensional hypercube")
        i = size_class(c.dims[0])
        per_axis = 2 ** (i - 1)
        capacity = per_axis ** (self.d - 1)
        cont = self.active.get(i)
        if cont is None or cont.cursor >= capacity:
            cont = self._open(i, Fraction(1, per_axis))
            cont.cursor = 0
        k = cont.cursor
        digits = []
        for _ in range(self.d - 1):
            k, r = divmod(k, per_axis)
            digits.append(r)
        side = Fraction(1, per_axis)
        offset = tuple(x * side for x in reversed(digits)) + (cont.base,)
        cont.cursor += 1
        v = item_size(c)
        cont.filled += v
        self.volume += v
        cont.items.append(c.id)
        return Placement(None, offset, f"g{i}")

    def check_invariants(self, coverage: bool = False) -> list[str]:
        problems = super().check_invariants()
        if coverage:
            problems.extend(self.coverage_ok())
        return problems

    def coverage_ok(self) -> list[str]:
        """Every closed container holds at least ``2**-d`` times its height in volume."""
        return [
            f"container at {c.base} covered {c.filled}"
            for c in self.containers
            if c.closed and c.filled * 2**self.d < c.height
        ]


class DStripPacker(_StripBase):
    """d-dimensional strip packing by projection.

    An item with last side in ``(2**-(i+1), 2**-i]`` belongs to height class
    ``i``.  Its first ``d-1`` sides are packed by a flexible bin algorithm
    (first-fit when ``d == 2``, slot splitting otherwise); every bin of that
    algorithm becomes a container of height ``2**-i`` opened at the top.
    """

    def __init__(self, d: int, base: Fraction = Fraction(0)):
        if d < 2:
            raise ValueError("strip packing needs d >= 2")
        super().__init__(base)
        self.d = d
        self.delegates: dict[int, SlotPacker | VectorPacker] = {}
        self.bin_container: dict[tuple[int, int], ShelfContainer] = {}

    @classmethod
    def from_solution(cls, prev: Solution, d: Optional[int] = None):
        return cls(d or prev.d, base=prev.cost)

    def _delegate(self, i: int):
        if i not in self.delegates:
            self.delegates[i] = VectorPacker(1) if self.d == 2 else SlotPacker(self.d - 1)
        return self.delegates[i]

    def place(self, r: Item) -> Placement:
        if r.d != self.d:
            raise ValueError(f"expected a {self.d}-dimensional item")
        i = size_class(r.dims[-1]) - 1
        proj = hyperrect(r.id, r.dims[:-1])
        p = self._delegate(i).place(proj)
        key = (i, p.bin)
        cont = self.bin_container.get(key)
        if cont is None:
            # delegates keep several bins open, so containers are never closed here
            cont = ShelfContainer(i, self.top, Fraction(1, 2**i))
            self.top += cont.height
            self.containers.append(cont)
            self.bin_container[key] = cont
        v = item_size(r)
        cont.filled += v
        self.volume += v
        cont.items.append(r.id)
        return Placement(None, tuple(p.offset) + (cont.base,), f"g{i}")

    def check_invariants(self, coverage: bool = False) -> list[str]:
        problems = []
        expected = self.base + sum((c.height for c in self.containers), Fraction(0))
        if expected != self.top:
            problems.append(f"top {self.top} != base + container heights {expected}")
        for i, dlg in self.delegates.items():
            problems.extend(f"class {i}: {p}" for p in dlg.check_invariants(coverage))
        return problems


# -- operation-level entry points --------------------------------------------


def sp_flexify(prev: Solution) -> ShelfPacker:
    return ShelfPacker(base=prev.cost)


def sp_place(state: ShelfPacker, r: Item) -> Placement:
    return state.place(r)


def hsp_place(state: HypercubeStripPacker, c: Item) -> Placement:
    return state.place(c)


def dsp_place(state: DStripPacker, r: Item) -> Placement:
    return state.place(r)


def strip_cost(state: _StripBase) -> Fraction:
    return state.top
