from fractions import Fraction as F

import pytest

from packshift.core import Placement, Solution, hypercube, hyperrect, item_size, rect2d, vector
from packshift.geometry import validate_packing
from packshift.slots import (
    Slot,
    SlotPacker,
    VectorPacker,
    bin_cost,
    bp2_classify,
    bp2_place,
    bp_flexify,
    dbp_place,
    hyper_place,
    side_permutation,
    size_class,
    vp_place,
)

from oracles import first_fit_bins, height_class


def counts(b):
    return {j: len(g) for j, g in b.empty.items() if g}


class TestClasses:
    @pytest.mark.parametrize("x", [F(1), F(3, 5), F(1, 2), F(3, 10), F(1, 4), F(1, 10), F(1, 1000)])
    def test_size_class_matches_halving(self, x):
        assert size_class(x) == height_class(x)

    def test_boundaries_are_half_open(self):
        assert size_class(F(1, 2)) == 2
        assert size_class(F(1, 2) + F(1, 10**9)) == 1

    def test_side_permutation_ties_keep_lower_axis(self):
        assert side_permutation((F(1, 2), F(1, 2), F(1, 4))) == (2, 0, 1)

    def test_split_tiles_parent(self):
        kids = Slot((F(0), F(1, 2)), 2).split()
        assert [k.origin for k in kids] == [(0, F(1, 2)), (0, F(3, 4)), (F(1, 4), F(1, 2)), (F(1, 4), F(3, 4))]
        assert all(k.cls == 3 for k in kids)


class TestBp2Classify:
    def test_thin_vertical(self):
        assert bp2_classify(rect2d("a", "0.2", "0.3")) == ("vertical", 2, False)

    def test_square_is_vertical(self):
        assert bp2_classify(rect2d("a", "0.3", "0.3")) == ("vertical", 2, True)

    def test_big_horizontal(self):
        assert bp2_classify(rect2d("a", "0.7", "0.6")) == ("horizontal", 1, True)


class TestBp2Place:
    def test_first_small_item_reserves_a_class2_slot(self):
        st = SlotPacker(2)
        p = bp2_place(st, rect2d("a", "0.2", "0.3"))
        assert p.bin == 0 and p.offset == (0, 0)
        (b,) = st.bins
        assert counts(b) == {2: 3}
        assert b.reserved[2].origin == (0, 0)

    def test_tiny_item_splits_down_to_class4(self):
        st = SlotPacker(2)
        bp2_place(st, rect2d("a", "0.2", "0.3"))
        p = bp2_place(st, rect2d("b", "0.1", "0.1"))
        (b,) = st.bins
        # one class-2 slot split into class 3, one class-3 slot split into class 4;
        # (0.1, 0.1) is square-like in class 4 so its slot closes at once
        assert counts(b) == {2: 2, 3: 3, 4: 3}
        assert p.bin == 0 and p.offset == (0, F(1, 2))
        assert st.check_invariants(coverage=True) == []

    def test_big_square_like_item_gets_a_closed_bin(self):
        st = SlotPacker(2)
        p = bp2_place(st, rect2d("a", "0.7", "0.6"))
        assert p.offset == (0, 0)
        assert not st.bins[0].open

    def test_thin_class1_items_share_a_bin_until_half_full(self):
        st = SlotPacker(2)
        offs = [bp2_place(st, rect2d(f"r{k}", "0.2", "0.9")).offset for k in range(2)]
        assert offs == [(0, 0), (F(1, 5), 0)]
        assert st.opened == 1 and st.bins[0].open
        assert bp2_place(st, rect2d("r2", "0.2", "0.9")).offset == (F(2, 5), 0)
        assert not st.bins[0].open  # stacked width 3/5 >= 1/2
        assert bp2_place(st, rect2d("r3", "0.2", "0.9")).bin == 1

    def test_horizontal_items_use_their_own_pool(self):
        st = SlotPacker(2)
        a = bp2_place(st, rect2d("a", "0.2", "0.3"))
        b = bp2_place(st, rect2d("b", "0.3", "0.2"))
        assert a.bin != b.bin
        assert (a.tag, b.tag) == ("vertical", "horizontal")

    def test_invariants_on_random_input(self, rng):
        st = SlotPacker(2)
        sol = Solution("bin", 2)
        vol = F(0)
        for k in range(400):
            r = rect2d(f"r{k}", *(F(int(x), 1000) for x in rng.integers(1, 1001, 2)))
            sol.place(r, bp2_place(st, r))
            vol += item_size(r)
            assert st.check_invariants(coverage=True) == []
            assert st.opened <= F(48, 5) * vol + 4
        assert validate_packing(sol).valid
        assert st.max_empty_slots() <= 3


class TestDbpPlace:
    def test_long_item_is_class1(self):
        st = SlotPacker(3)
        p = dbp_place(st, hyperrect("a", ["0.1", "0.2", "0.6"]))
        assert p.tag == "pi=1,2,3" and p.bin == 0 and p.offset == (0, 0, 0)
        assert st.bins[0].role == "class1"

    def test_cube_like_item_takes_a_half_slot(self):
        st = SlotPacker(3)
        p = dbp_place(st, hyperrect("a", ["0.3", "0.3", "0.3"]))
        (b,) = st.bins
        assert p.offset == (0, 0, 0)
        assert counts(b) == {2: 7}
        assert b.closed[0].side == F(1, 2)

    def test_empty_slot_bound(self, rng):
        st = SlotPacker(3)
        sol = Solution("bin", 3)
        for k in range(300):
            r = hyperrect(f"r{k}", [F(int(x), 100) for x in rng.integers(1, 101, 3)])
            sol.place(r, dbp_place(st, r))
            assert st.max_empty_slots() <= 7
            assert st.check_invariants() == []
        assert validate_packing(sol).valid


class TestHyperPlace:
    def test_slightly_over_quarter(self):
        st = SlotPacker(2)
        p = hyper_place(st, hypercube("a", "0.26", 2))
        slot = st.bins[0].closed[0]
        assert slot.side == F(1, 2) and p.offset == (0, 0)
        assert slot.filled / slot.side**2 == F(169, 625)
        assert slot.filled / slot.side**2 >= F(1, 4)

    def test_sixteen_cubes_in_four_bins(self):
        st = SlotPacker(2)
        bins = [hyper_place(st, hypercube(f"c{k}", "0.26", 2)).bin for k in range(16)]
        assert bins == [k // 4 for k in range(16)]

    @pytest.mark.parametrize("d", [2, 3])
    def test_ratio(self, rng, d):
        st = SlotPacker(d)
        vol = F(0)
        for k in range(300):
            c = hypercube(f"c{k}", F(int(rng.integers(1, 101)), 100), d)
            hyper_place(st, c)
            vol += item_size(c)
            assert st.opened <= F(2 ** (2 * d), 2**d - 1) * vol + 1
            assert st.check_invariants(coverage=True) == []


class TestVectors:
    def test_two_vectors_two_bins(self):
        st = VectorPacker(2)
        a = vp_place(st, vector("a", ["0.6", "0.1"]))
        b = vp_place(st, vector("b", ["0.6", "0.1"]))
        assert (a.bin, b.bin) == (0, 1)
        assert st.opened < 1 + 2 * 2 * F(7, 10)
        assert bin_cost(st) == 2

    def test_three_small_vectors_share(self):
        st = VectorPacker(2)
        assert {vp_place(st, vector(f"v{k}", ["0.3", "0.3"])).bin for k in range(3)} == {0}

    def test_offsets_record_loads(self):
        st = VectorPacker(2)
        vp_place(st, vector("a", ["0.3", "0.5"]))
        assert vp_place(st, vector("b", ["0.3", "0.1"])).offset == (F(3, 10), F(1, 2))

    def test_matches_reference_first_fit(self, rng):
        vecs = [tuple(F(int(x), 100) for x in rng.integers(0, 101, 3)) for _ in range(200)]
        st = VectorPacker(3)
        got = [st.place(vector(f"v{k}", v)).bin for k, v in enumerate(vecs)]
        assert got == first_fit_bins(vecs)

    @pytest.mark.parametrize("d", [1, 2, 5])
    def test_ratio(self, rng, d):
        st = VectorPacker(d)
        vol = F(0)
        for k in range(300):
            v = vector(f"v{k}", [F(int(x), 100) for x in rng.integers(0, 101, d)])
            vp_place(st, v)
            vol += item_size(v)
            assert st.opened < 1 + 2 * d * vol


class TestFlexify:
    def test_empty_previous(self):
        st = bp_flexify(Solution("bin", 2))
        assert bp2_place(st, rect2d("a", "0.2", "0.3")).bin == 0
        assert bin_cost(st) == 1

    def test_numbering_continues_after_previous_bins(self):
        prev = Solution("vector", 2)
        for k in range(7):
            prev.place(vector(f"p{k}", [1, 1]), Placement(k, (F(0), F(0))))
        st = bp_flexify(prev)
        assert vp_place(st, vector("a", ["0.6", "0.1"])).bin == 7
        vp_place(st, vector("b", ["0.6", "0.1"]))
        assert bin_cost(st) == 9

    def test_fresh_cost(self):
        assert bin_cost(SlotPacker(2)) == 0
