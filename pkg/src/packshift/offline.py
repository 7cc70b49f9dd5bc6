"""Offline repackers and small-instance oracles.

The repackers plug into :class:`~packshift.framework.RobustRunner` at phase
ends.  The oracles (exact vector packing, bottom-left search, lower bounds)
bracket the optimum in tests.
"""

from __future__ import annotations

import heapq
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Optional, Sequence

from .core import Item, Placement, Solution, ValidationError, item_size, volume
from .problems import DOMAIN, online_algorithm

HALF = Fraction(1, 2)
ORDERS = ("as-given", "volume-desc", "major-side-desc")
VECTOR_EXACT_LIMIT = 12
BOTTOM_LEFT_LIMIT = 8


class InstanceTooLarge(ValueError):
    """Oracle refused an instance above its size limit."""


@dataclass
class OfflineResult:
    """A repacked solution with the repacker's guarantee, if it has one.

    ``relative_to`` says what the guarantee multiplies: ``"volume"`` for
    restart repackers, ``"opt"`` for the others.  ``provenance`` is
    ``"this-work"`` for constants proven for the algorithms in this package
    and ``"external-classical"`` for textbook bounds of stand-in heuristics.
    """

    solution: Solution
    gamma: Optional[Fraction] = None
    additive: Optional[Fraction] = None
    relative_to: str = "volume"
    provenance: str = "this-work"


def _ordered(items: Sequence[Item], order: str) -> list[Item]:
    items = list(items)
    if order == "as-given":
        return items
    if order == "volume-desc":
        return sorted(items, key=lambda it: -item_size(it))
    if order == "major-side-desc":
        return sorted(items, key=lambda it: -max(it.dims))
    raise ValidationError(f"unknown order {order!r}")


def restart_repack(
    items: Sequence[Item], problem: str, d: int, order: str = "volume-desc"
) -> OfflineResult:
    """Replay the problem's flexible online algorithm from scratch.

    Its flexible ratio becomes a volume-relative guarantee for the result.
    """
    algo = online_algorithm(problem, d)
    state = algo.fresh()
    sol = Solution(DOMAIN[problem], d)
    for it in _ordered(items, order):
        sol.place(it, state.place(it))
    if sol.domain == "strip":
        sol.floor = state.cost
    return OfflineResult(sol, algo.beta, algo.c_on, "volume")


def ffdh(rects: Sequence[Item]) -> OfflineResult:
    """First-fit decreasing height shelves for 2-D strip packing."""
    sol = Solution("strip", 2)
    shelves: list[list[Fraction]] = []  # [base, height, used width]
    top = Fraction(0)
    for r in sorted(rects, key=lambda r: (-r.h, r.id)):
        w, h = r.dims
        for shelf in shelves:
            if shelf[2] + w <= 1:
                break
        else:
            shelf = [top, h, Fraction(0)]
            shelves.append(shelf)
            top += h
        sol.place(r, Placement(None, (shelf[2], shelf[0]), "ffdh"))
        shelf[2] += w
    sol.floor = top
    hmax = max((r.h for r in rects), default=Fraction(0))
    return OfflineResult(sol, Fraction(17, 10), hmax, "opt", "external-classical")


# -- exact vector packing ----------------------------------------------------


def _scaled(vectors: Sequence[Item]) -> tuple[list[tuple[int, ...]], int]:
    den = reduce(math.lcm, (c.denominator for v in vectors for c in v.dims), 1)
    return [tuple(int(c * den) for c in v.dims) for v in vectors], den


def exact_vector_pack(vectors: Sequence[Item], limit: int = VECTOR_EXACT_LIMIT) -> list[int]:
    """Bin index for each vector in an optimal packing (branch and bound)."""
    n = len(vectors)
    if n > limit:
        raise InstanceTooLarge(f"{n} vectors exceed the exact-oracle limit of {limit}")
    if n == 0:
        return []
    d = vectors[0].d
    ints, cap = _scaled(vectors)
    order = sorted(range(n), key=lambda k: (-sum(ints[k]), k))
    lb = max(
        max(-(-sum(v[m] for v in ints) // cap) for m in range(d)),
        1,
    )

    # first-fit decreasing gives the initial incumbent
    best_assign = [0] * n
    loads: list[list[int]] = []
    for k in order:
        for b, load in enumerate(loads):
            if all(load[m] + ints[k][m] <= cap for m in range(d)):
                break
        else:
            b = len(loads)
            loads.append([0] * d)
        best_assign[k] = b
        for m in range(d):
            loads[b][m] += ints[k][m]
    best = [len(loads), best_assign[:]]

    assign = [0] * n
    loads = []

    def search(pos: int) -> None:
        if best[0] == lb:
            return
        if pos == n:
            if len(loads) < best[0]:
                best[0] = len(loads)
                best[1] = assign[:]
            return
        k = order[pos]
        vec = ints[k]
        tried = set()
        for b, load in enumerate(loads):
            key = tuple(load)
            if key in tried:
                continue
            tried.add(key)
            if all(load[m] + vec[m] <= cap for m in range(d)):
                for m in range(d):
                    load[m] += vec[m]
                assign[k] = b
                search(pos + 1)
                for m in range(d):
                    load[m] -= vec[m]
        if len(loads) + 1 < best[0]:
            loads.append(list(vec))
            assign[k] = len(loads) - 1
            search(pos + 1)
            loads.pop()

    search(0)
    return best[1]


def exact_vector_opt(vectors: Sequence[Item], limit: int = VECTOR_EXACT_LIMIT) -> int:
    """Minimum number of bins for at most ``limit`` vectors."""
    assign = exact_vector_pack(vectors, limit)
    return len(set(assign))


def exact_vector_repack(vectors: Sequence[Item], d: int) -> OfflineResult:
    assign = exact_vector_pack(vectors)
    sol = Solution("vector", d)
    loads: dict[int, list[Fraction]] = {}
    for v, b in zip(vectors, assign):
        load = loads.setdefault(b, [Fraction(0)] * d)
        sol.place(v, Placement(b, tuple(load)))
        for m, c in enumerate(v.dims):
            load[m] += c
    return OfflineResult(sol, Fraction(1), Fraction(0), "opt")


# -- bottom-left search --------------------------------------------------------


def _bottom_left_position(placed, w, h):
    xs = sorted({Fraction(0)} | {x + pw for x, y, pw, ph in placed})
    ys = sorted({Fraction(0)} | {y + ph for x, y, pw, ph in placed})
    for y in ys:
        for x in xs:
            if x + w > 1:
                break
            if all(
                x + w <= px or px + pw <= x or y + h <= py or py + ph <= y
                for px, py, pw, ph in placed
            ):
                return x, y
    raise AssertionError("unreachable: the top candidate row is always free")


def bottom_left(rects: Sequence[Item]) -> Solution:
    """Place rectangles in the given order at their lowest, then leftmost, spot."""
    sol = Solution("strip", 2)
    placed = []
    for r in rects:
        w, h = r.dims
        x, y = _bottom_left_position(placed, w, h)
        placed.append((x, y, w, h))
        sol.place(r, Placement(None, (x, y), "bl"))
    return sol


def bottom_left_search(rects: Sequence[Item], limit: int = BOTTOM_LEFT_LIMIT) -> Fraction:
    """Lowest strip height bottom-left placement reaches over all item orders.

    An upper bound on the optimum, not the optimum itself.
    """
    if len(rects) > limit:
        raise InstanceTooLarge(f"{len(rects)} rectangles exceed the search limit of {limit}")
    if not rects:
        return Fraction(0)
    dims = [r.dims for r in rects]
    best = [sum((h for _, h in dims), Fraction(0))]

    def search(remaining: list[int], placed, height):
        if height >= best[0]:
            return
        if not remaining:
            best[0] = height
            return
        seen = set()
        for k in remaining:
            if dims[k] in seen:
                continue
            seen.add(dims[k])
            w, h = dims[k]
            x, y = _bottom_left_position(placed, w, h)
            rest = [m for m in remaining if m != k]
            search(rest, placed + [(x, y, w, h)], max(height, y + h))

    search(list(range(len(rects))), [], Fraction(0))
    return best[0]


# -- lower bounds ------------------------------------------------------------


def volume_lower_bound(items: Sequence[Item], problem: str) -> Fraction:
    """Largest of the simple lower bounds on the optimum that apply."""
    items = list(items)
    if not items:
        return Fraction(0)
    vol = volume(items)
    domain = DOMAIN.get(problem, problem)
    if domain == "strip":
        return max(vol, max(it.h for it in items))
    bound = Fraction(math.ceil(vol))
    if domain == "vector":
        d = items[0].d
        for m in range(d):
            load = sum((it.dims[m] for it in items), Fraction(0))
            bound = max(bound, Fraction(math.ceil(load)))
        # an item with a component above 1/2 cannot share that dimension
        # with another such item
        for m in range(d):
            big = sum(1 for it in items if it.dims[m] > HALF)
            bound = max(bound, Fraction(big))
    else:
        big = sum(1 for it in items if all(s > HALF for s in it.dims))
        bound = max(bound, Fraction(big), Fraction(1))
    return bound


class LowerBoundTracker:
    """Maintains :func:`volume_lower_bound` of a changing item set in O(d log n) per update."""

    def __init__(self, problem: str, d: int):
        self.domain = DOMAIN.get(problem, problem)
        self.d = d
        self.count = 0
        self.vol = Fraction(0)
        self.loads = [Fraction(0)] * d
        self.big = [0] * d  # vector: components above 1/2, per dimension
        self.big_all = 0  # bins: items with every side above 1/2
        self._heights: list[Fraction] = []  # max-heap by negation, lazy deletion
        self._height_count: Counter = Counter()

    def _update(self, item: Item, sign: int) -> None:
        self.count += sign
        self.vol += sign * item_size(item)
        if self.domain == "vector":
            for m, c in enumerate(item.dims):
                self.loads[m] += sign * c
                if c > HALF:
                    self.big[m] += sign
        elif self.domain == "bin":
            if all(s > HALF for s in item.dims):
                self.big_all += sign
        else:
            h = item.h
            self._height_count[h] += sign
            if sign > 0 and self._height_count[h] == 1:
                heapq.heappush(self._heights, -h)

    def add(self, item: Item) -> None:
        self._update(item, 1)

    def remove(self, item: Item) -> None:
        self._update(item, -1)

    def value(self) -> Fraction:
        if self.count == 0:
            return Fraction(0)
        if self.domain == "strip":
            while self._height_count[-self._heights[0]] == 0:
                del self._height_count[-heapq.heappop(self._heights)]
            return max(self.vol, -self._heights[0])
        bound = Fraction(math.ceil(self.vol))
        if self.domain == "vector":
            for m in range(self.d):
                bound = max(bound, Fraction(math.ceil(self.loads[m])), Fraction(self.big[m]))
            return bound
        return max(bound, Fraction(self.big_all), Fraction(1))


# -- repacker handles for the runner ------------------------------------------


@dataclass(frozen=True)
class Repacker:
    name: str
    problem: str
    d: int
    order: str = "volume-desc"

    def __call__(self, items: Sequence[Item]) -> OfflineResult:
        if self.name == "restart":
            return restart_repack(items, self.problem, self.d, self.order)
        if self.name == "ffdh":
            return ffdh(items)
        if self.name == "exact-vector":
            return exact_vector_repack(items, self.d)
        raise ValidationError(f"unknown repacker {self.name!r}")


def offline_repacker(name: str, problem: str, d: int, order: str = "volume-desc") -> Repacker:
    if order not in ORDERS:
        raise ValidationError(f"unknown order {order!r}")
    if name == "ffdh" and problem != "strip2d":
        raise ValidationError("ffdh only packs 2-D strips")
    if name == "exact-vector" and problem != "vector":
        raise ValidationError("exact-vector only packs vectors")
    if name not in ("restart", "ffdh", "exact-vector"):
        raise ValidationError(f"unknown repacker {name!r}")
    return Repacker(name, problem, d, order)
