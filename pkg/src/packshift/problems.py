"""Problem catalogue: domains, item kinds and the certified online constants.

``beta`` and ``c_on`` are the flexible-ratio constants: a run started on top
of a solution ``S`` costs at most ``cost(S) + beta * (new volume) + c_on``.
``None`` means no guarantee is claimed for that configuration.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .core import Item, Solution, ValidationError, hypercube, hyperrect, rect2d, vector
from .shelf import DStripPacker, HypercubeStripPacker, ShelfPacker
from .slots import SlotPacker, VectorPacker

PROBLEMS = ("strip2d", "strip-d", "strip-hypercube", "bin2d", "bin-d", "bin-hypercube", "vector")

DOMAIN = {
    "strip2d": "strip",
    "strip-d": "strip",
    "strip-hypercube": "strip",
    "bin2d": "bin",
    "bin-d": "bin",
    "bin-hypercube": "bin",
    "vector": "vector",
}

ITEM_KIND = {
    "strip2d": "rect2d",
    "strip-d": "hyperrect",
    "strip-hypercube": "hypercube",
    "bin2d": "rect2d",
    "bin-d": "hyperrect",
    "bin-hypercube": "hypercube",
    "vector": "vector",
}


@dataclass(frozen=True)
class OnlineAlgorithm:
    name: str
    problem: str
    d: int
    beta: Optional[Fraction]
    c_on: Optional[Fraction]
    factory: Callable[[Solution], object]
    strict: bool = False  # the ratio bound holds with "<"

    @property
    def certified(self) -> bool:
        return self.beta is not None

    def flexify(self, prev: Solution):
        return self.factory(prev)

    def fresh(self):
        return self.factory(empty_solution(self.problem, self.d))


def check_problem(problem: str, d: int) -> None:
    if problem not in PROBLEMS:
        raise ValidationError(f"unknown problem {problem!r}")
    if problem in ("strip2d", "bin2d") and d != 2:
        raise ValidationError(f"{problem} is two-dimensional")
    if d < 1 or (DOMAIN[problem] != "vector" and d < 2):
        raise ValidationError(f"dimension {d} not supported for {problem}")


def empty_solution(problem: str, d: int) -> Solution:
    return Solution(DOMAIN[problem], d)


def online_algorithm(problem: str, d: int = 2) -> OnlineAlgorithm:
    check_problem(problem, d)
    if problem == "strip2d":
        return OnlineAlgorithm("shelf", problem, 2, Fraction(4), Fraction(16),
                               lambda prev: ShelfPacker(base=prev.cost))
    if problem == "strip-hypercube":
        return OnlineAlgorithm("hypercube-shelf", problem, d, Fraction(2**d), Fraction(2),
                               lambda prev: HypercubeStripPacker(d, base=prev.cost))
    if problem == "strip-d":
        # first-fit delegate (d=2) or the certified 2-D slot delegate (d=3);
        # each height class adds its delegate's additive constant times 2**-i
        beta, c = {2: (Fraction(4), Fraction(2)), 3: (Fraction(96, 5), Fraction(8))}.get(d, (None, None))
        return OnlineAlgorithm("projection-shelf", problem, d, beta, c,
                               lambda prev: DStripPacker(d, base=prev.cost))
    if problem in ("bin2d", "bin-d"):
        beta, c = (Fraction(48, 5), Fraction(4)) if d == 2 else (None, None)
        return OnlineAlgorithm("slots", problem, d, beta, c,
                               lambda prev: SlotPacker.from_solution(prev, d))
    if problem == "bin-hypercube":
        return OnlineAlgorithm("hypercube-slots", problem, d,
                               Fraction(2 ** (2 * d), 2**d - 1), Fraction(1),
                               lambda prev: SlotPacker.from_solution(prev, d))
    return OnlineAlgorithm("first-fit", problem, d, Fraction(2 * d), Fraction(1),
                           lambda prev: VectorPacker.from_solution(prev, d), strict=True)


def make_item(problem: str, id: str, dims) -> Item:
    kind = ITEM_KIND[problem]
    if kind == "rect2d":
        return rect2d(id, *dims)
    if kind == "hyperrect":
        return hyperrect(id, dims)
    if kind == "hypercube":
        return hypercube(id, dims[0], len(dims))
    return vector(id, dims)


def check_item(problem: str, d: int, item: Item) -> None:
    kind = ITEM_KIND[problem]
    ok = item.kind == kind or (kind == "hyperrect" and item.kind in ("rect2d", "hypercube"))
    if not ok or item.d != d:
        raise ValidationError(f"{item.kind} item of dimension {item.d} does not fit {problem} (d={d})")
