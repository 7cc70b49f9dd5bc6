"""Flexible online bin packing: recursive slot splitting and vector first-fit.

One :class:`SlotPacker` covers rectangles, hyperrectangles and hypercubes.
Items are grouped into pools by the permutation that sorts their sides (in
2-D the two pools are "vertical" and "horizontal"), and each pool keeps at
most two open bins: one holding class-1 items stacked along the minor axis,
and one split into power-of-two hypercube slots for the smaller classes.

A slot of class ``j`` has side ``2**-(j-1)``.  An item is in class ``j`` when
its largest side lies in ``(2**-j, 2**-(j-1)]`` and is *square-like* when its
smallest side also exceeds ``2**-j``; a square-like item alone covers at
least ``2**-d`` of its slot, so its slot is closed at once.  Other items share
a reserved slot, stacked along their minor axis until the stack reaches half
the slot side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Optional

import numpy as np

from .core import Item, Placement, Solution, item_size

HALF = Fraction(1, 2)
FLOAT_SLACK = 1e-9  # far above float rounding of values in [0, 1]


def size_class(x: Fraction) -> int:
    """The ``j >= 1`` with ``x`` in ``(2**-j, 2**-(j-1)]``."""
    if not 0 < x <= 1:
        raise ValueError(f"length {x} outside (0,1]")
    # 2**(j-1) <= 1/x < 2**j, and floor(log2(1/x)) = floor(log2(floor(1/x)))
    return (x.denominator // x.numerator).bit_length()


def class_side(j: int) -> Fraction:
    return Fraction(1, 2 ** (j - 1))


def side_permutation(sides) -> tuple[int, ...]:
    """Axes ordered by increasing side; ties keep the lower axis first."""
    return tuple(sorted(range(len(sides)), key=lambda k: (sides[k], k)))


def pool_tag(perm: tuple[int, ...]) -> str:
    if perm == (0, 1):
        return "vertical"
    if perm == (1, 0):
        return "horizontal"
    return "pi=" + ",".join(str(k + 1) for k in perm)


def bp2_classify(r: Item) -> tuple[str, int, bool]:
    """Orientation, size class and square-like flag of a rectangle."""
    w, h = r.dims
    orientation = "vertical" if w <= h else "horizontal"
    major, minor = (h, w) if w <= h else (w, h)
    j = size_class(major)
    return orientation, j, minor > Fraction(1, 2**j)


@dataclass
class Slot:
    origin: tuple[Fraction, ...]
    cls: int
    status: str = "empty"  # empty | reserved | closed
    cursor: Fraction = Fraction(0)
    filled: Fraction = Fraction(0)  # item volume inside
    items: list[str] = field(default_factory=list)

    @property
    def side(self) -> Fraction:
        return class_side(self.cls)

    def split(self) -> list["Slot"]:
        half = self.side / 2
        d = len(self.origin)
        # product() yields children in lexicographic origin order
        return [
            Slot(tuple(o + b * half for o, b in zip(self.origin, bits)), self.cls + 1)
            for bits in product((0, 1), repeat=d)
        ]


@dataclass
class SlotBin:
    index: int
    pool: str
    d: int
    role: str  # "class1" | "small"
    open: bool = True
    empty: dict[int, list[Slot]] = field(default_factory=dict)
    reserved: dict[int, Slot] = field(default_factory=dict)
    closed: list[Slot] = field(default_factory=list)

    def empty_count(self, j: int) -> int:
        return len(self.empty.get(j, ()))

    def slots(self):
        for group in self.empty.values():
            yield from group
        yield from self.reserved.values()
        yield from self.closed

    def covered(self) -> Fraction:
        return sum((s.filled for s in self.slots()), Fraction(0))


class SlotPacker:
    """Flexible online packer for hyperrectangles (any d >= 1) and hypercubes.

    New bins are numbered from ``first_bin``; bins of an earlier solution are
    never touched.
    """

    def __init__(self, d: int, first_bin: int = 0, prior_bins: int = 0):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.d = d
        self.first_bin = first_bin
        self.prior_bins = prior_bins
        self.bins: list[SlotBin] = []
        self.pools: dict[tuple[int, ...], dict[str, Optional[SlotBin]]] = {}
        self.volume = Fraction(0)

    @classmethod
    def from_solution(cls, prev: Solution, d: Optional[int] = None) -> "SlotPacker":
        return cls(d or prev.d, prev.max_bin() + 1, int(prev.cost))

    # -- bookkeeping --------------------------------------------------------

    @property
    def opened(self) -> int:
        return len(self.bins)

    @property
    def cost(self) -> Fraction:
        return Fraction(self.prior_bins + len(self.bins))

    def _new_bin(self, perm, role) -> SlotBin:
        b = SlotBin(self.first_bin + len(self.bins), pool_tag(perm), self.d, role)
        if role == "small":
            b.empty[2] = Slot((Fraction(0),) * self.d, 1).split()
        self.bins.append(b)
        return b

    # -- placement ----------------------------------------------------------

    def place(self, item: Item) -> Placement:
        sides = item.dims
        if len(sides) != self.d:
            raise ValueError(f"expected a {self.d}-dimensional item, got {len(sides)}")
        perm = side_permutation(sides)
        minor_axis = perm[0]
        minor = sides[minor_axis]
        j = size_class(sides[perm[-1]])
        square_like = minor > Fraction(1, 2**j)
        pool = self.pools.setdefault(perm, {"class1": None, "small": None})
        vol = item_size(item)
        self.volume += vol
        tag = pool_tag(perm)

        if j == 1:
            if square_like:
                b = self._new_bin(perm, "class1")
                slot = Slot((Fraction(0),) * self.d, 1, "closed", filled=vol, items=[item.id])
                b.closed.append(slot)
                b.open = False
                return Placement(b.index, slot.origin, tag)
            b = pool["class1"]
            if b is None:
                b = pool["class1"] = self._new_bin(perm, "class1")
                b.reserved[1] = Slot((Fraction(0),) * self.d, 1, "reserved")
            slot = b.reserved[1]
            offset = self._stack(slot, item.id, minor_axis, minor, vol)
            if slot.cursor >= HALF:
                self._close_slot(b, slot)
                b.open = False
                pool["class1"] = None
            return Placement(b.index, offset, tag)

        b = pool["small"]
        slot = self._find_slot(b, j, square_like) if b is not None else None
        if slot is None:
            if b is not None:
                b.open = False
            b = pool["small"] = self._new_bin(perm, "small")
            slot = self._find_slot(b, j, square_like)
        offset = self._stack(slot, item.id, minor_axis, minor, vol)
        if square_like or slot.cursor >= Fraction(1, 2**j):
            self._close_slot(b, slot)
        return Placement(b.index, offset, tag)

    def _stack(self, slot: Slot, id: str, axis: int, extent: Fraction, vol: Fraction):
        offset = list(slot.origin)
        offset[axis] += slot.cursor
        slot.cursor += extent
        slot.filled += vol
        slot.items.append(id)
        return tuple(offset)

    def _close_slot(self, b: SlotBin, slot: Slot) -> None:
        if b.reserved.get(slot.cls) is slot:
            del b.reserved[slot.cls]
        slot.status = "closed"
        b.closed.append(slot)

    def _find_slot(self, b: SlotBin, j: int, square_like: bool) -> Optional[Slot]:
        if not square_like and j in b.reserved:
            return b.reserved[j]
        candidates = [c for c, group in b.empty.items() if c <= j and group]
        if not candidates:
            return None
        best = max(candidates)
        group = b.empty[best]
        slot = min(group, key=lambda s: s.origin)
        group.remove(slot)
        while slot.cls < j:
            children = slot.split()
            slot = children[0]
            b.empty.setdefault(slot.cls, []).extend(children[1:])
        slot.status = "reserved"
        if not square_like:
            b.reserved[j] = slot
        return slot

    # -- invariants ---------------------------------------------------------

    def check_invariants(self, coverage: bool = False) -> list[str]:
        """Empty-slot bound, reserved-slot uniqueness and open-bin count.

        With ``coverage`` also require every closed slot to be at least
        ``2**-d`` covered.
        """
        problems = []
        limit = 2**self.d - 1
        for b in self.bins:
            for j, group in b.empty.items():
                if len(group) > limit:
                    problems.append(f"bin {b.index}: {len(group)} empty slots of class {j}")
            for j, s in b.reserved.items():
                if s.cls != j or s.status != "reserved":
                    problems.append(f"bin {b.index}: bad reserved slot for class {j}")
            if coverage:
                for s in b.closed:
                    if s.filled * 2**self.d < s.side**self.d:
                        problems.append(
                            f"bin {b.index}: closed slot at {s.origin} covered {s.filled}"
                        )
        for perm, pool in self.pools.items():
            open_bins = [b for b in self.bins if b.open and b.pool == pool_tag(perm)]
            if len(open_bins) > 2:
                problems.append(f"pool {pool_tag(perm)}: {len(open_bins)} open bins")
        return problems

    def max_empty_slots(self) -> int:
        return max((len(g) for b in self.bins for g in b.empty.values()), default=0)


class VectorPacker:
    """First-fit over the bins opened since the last flexify.

    The placement offset records each dimension's load before the vector
    was added, i.e. the interval it occupies in that dimension.
    """

    def __init__(self, d: int, first_bin: int = 0, prior_bins: int = 0):
        self.d = d
        self.first_bin = first_bin
        self.prior_bins = prior_bins
        self.loads: list[list[Fraction]] = []
        self.volume = Fraction(0)
        # float copy of the free capacity; only used to skip bins that
        # cannot possibly fit, the exact check below decides
        self._room = np.ones((8, d))

    @classmethod
    def from_solution(cls, prev: Solution, d: Optional[int] = None) -> "VectorPacker":
        return cls(d or prev.d, prev.max_bin() + 1, int(prev.cost))

    @property
    def opened(self) -> int:
        return len(self.loads)

    @property
    def cost(self) -> Fraction:
        return Fraction(self.prior_bins + len(self.loads))

    def place(self, item: Item) -> Placement:
        w = item.dims
        if len(w) != self.d:
            raise ValueError(f"expected {self.d} components, got {len(w)}")
        self.volume += item_size(item)
        n = len(self.loads)
        need = np.array([float(c) for c in w]) - FLOAT_SLACK
        candidates = np.flatnonzero((self._room[:n] >= need).all(axis=1))
        for k in candidates:
            load = self.loads[k]
            if all(l + c <= 1 for l, c in zip(load, w)):
                break
        else:
            k = n
            self.loads.append([Fraction(0)] * self.d)
            if k == len(self._room):
                self._room = np.vstack([self._room, np.ones_like(self._room)])
        k = int(k)
        load = self.loads[k]
        offset = tuple(load)
        for m, c in enumerate(w):
            load[m] += c
            self._room[k, m] = float(1 - load[m])
        return Placement(self.first_bin + k, offset)

    def check_invariants(self, coverage: bool = False) -> list[str]:
        return [
            f"bin {self.first_bin + k} overloaded"
            for k, load in enumerate(self.loads)
            if any(l > 1 for l in load)
        ]


# -- operation-level entry points --------------------------------------------


def bp_flexify(prev: Solution, problem: str = "bin") -> "SlotPacker | VectorPacker":
    if prev.domain == "vector" or problem == "vector":
        return VectorPacker.from_solution(prev)
    return SlotPacker.from_solution(prev)


def bp2_place(state: SlotPacker, r: Item) -> Placement:
    if r.d != 2:
        raise ValueError("bp2_place takes rectangles")
    return state.place(r)


def dbp_place(state: SlotPacker, r: Item) -> Placement:
    return state.place(r)


def hyper_place(state: SlotPacker, c: Item) -> Placement:
    if len(set(c.dims)) != 1:
        raise ValueError("hyper_place takes hypercubes")
    return state.place(c)


def vp_place(state: VectorPacker, w: Item) -> Placement:
    return state.place(w)


def bin_cost(state, include_prev: Optional[int] = None) -> int:
    prior = state.prior_bins if include_prev is None else include_prev
    return prior + state.opened
