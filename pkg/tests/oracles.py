"""Reference implementations the tests compare against.

Nothing here imports the algorithms under test.  Each oracle is the
slowest, most literal version of its rule: pairwise overlap checks,
exhaustive set partitions, a direct shelf simulation.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

HALF = Fraction(1, 2)


def size(kind: str, dims) -> Fraction:
    if kind == "vector":
        return Fraction(sum(dims, Fraction(0)), len(dims))
    return math.prod(dims, start=Fraction(1))


def height_class(x: Fraction) -> int:
    """Smallest j >= 1 with x > 2**-j, by repeated halving."""
    j = 1
    while x <= Fraction(1, 2**j):
        j += 1
    return j


# -- geometry ----------------------------------------------------------------


def overlapping_pairs(boxes: dict[str, tuple[tuple, tuple]]) -> list[tuple[str, str]]:
    """All pairs of (origin, size) boxes whose open interiors meet."""
    out = []
    for (a, (oa, sa)), (b, (ob, sb)) in combinations(sorted(boxes.items()), 2):
        if all(x < y + t and y < x + s for x, s, y, t in zip(oa, sa, ob, sb)):
            out.append((a, b))
    return out


def packing_violations(sol) -> list[str]:
    """Pairwise check of a Solution: containment, overlap, vector loads."""
    problems = []
    if sol.domain == "vector":
        loads: dict = {}
        for i, p in sol.placements.items():
            acc = loads.setdefault(p.bin, [Fraction(0)] * sol.d)
            for m, c in enumerate(sol.items[i].dims):
                acc[m] += c
        for b, acc in loads.items():
            problems += [f"bin {b} dim {m} load {x}" for m, x in enumerate(acc) if x > 1]
        return problems
    groups: dict = {}
    for i, p in sol.placements.items():
        dims = sol.items[i].dims
        limit = len(dims) if sol.domain == "bin" else len(dims) - 1
        for m in range(len(dims)):
            if p.offset[m] < 0 or (m < limit and p.offset[m] + dims[m] > 1):
                problems.append(f"{i} outside the container")
        groups.setdefault(p.bin if sol.domain == "bin" else None, {})[i] = (p.offset, dims)
    for g in groups.values():
        problems += [f"{a} overlaps {b}" for a, b in overlapping_pairs(g)]
    return problems


# -- shelf algorithm -------------------------------------------------------------


def shelf_heights(rects, base=Fraction(0)) -> list[Fraction]:
    """Strip height after each rectangle under the shelf rules, simulated literally.

    Wide items (w >= 1/2) stack in height-1 shelves; others go left to
    right in shelves of height 2**-(j-1) where j is their height class.
    """
    top = base
    fill: dict[int, Fraction] = {}
    heights = []
    for w, h in rects:
        kind = 0 if w >= HALF else height_class(h)
        extent = h if kind == 0 else w
        if kind not in fill or fill[kind] + extent > 1:
            top += 1 if kind == 0 else Fraction(1, 2 ** (kind - 1))
            fill[kind] = Fraction(0)
        fill[kind] += extent
        heights.append(top)
    return heights


# -- vector optimum ------------------------------------------------------------


def _partitions(seq):
    if not seq:
        yield []
        return
    first, rest = seq[0], seq[1:]
    for part in _partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def brute_vector_opt(vectors: list[tuple]) -> int:
    """Fewest bins over every set partition (n <= 9 or so)."""
    if not vectors:
        return 0
    d = len(vectors[0])
    best = len(vectors)
    for part in _partitions(list(range(len(vectors)))):
        if len(part) >= best:
            continue
        if all(sum(vectors[k][m] for k in block) <= 1 for block in part for m in range(d)):
            best = len(part)
    return best


def first_fit_bins(vectors: list[tuple]) -> list[int]:
    loads: list[list[Fraction]] = []
    out = []
    for v in vectors:
        for k, load in enumerate(loads):
            if all(l + c <= 1 for l, c in zip(load, v)):
                break
        else:
            k = len(loads)
            loads.append([Fraction(0)] * len(v))
        for m, c in enumerate(v):
            loads[k][m] += c
        out.append(k)
    return out


# -- bounds ------------------------------------------------------------------------


def combined_bound_ref(gamma, beta, eps, c_on, c_off, opt) -> Fraction:
    """Competitive bound of the combiner, written out term by term.

    Phase-end cost is gamma*opt + c_off; mid-phase the online algorithm adds
    at most beta*eps*V_tau + c_on on top, and V_tau <= opt/(1-eps) <= 2*opt
    is folded in as the factor 2(gamma+eps+1).
    """
    gamma, beta, eps, c_on, c_off, opt = map(Fraction, (gamma, beta, eps, c_on, c_off, opt))
    a = gamma + eps + 1
    return (gamma + eps + 2 * a * beta * eps) * opt + a * c_on + c_off
