"""
Online packing on its own
=========================

Feed a uniform stream of rectangles to the shelf strip packer and the slot
bin packer and watch cost against volume.  No repacking happens here.
"""

# %%
from fractions import Fraction

from packshift.core import Solution, item_size
from packshift.harness import generate_trace
from packshift.problems import online_algorithm

events = generate_trace({"kind": "uniform", "n": 500, "problem": "strip2d"}, seed=1)
items = [ev.item for ev in events]

# %% [markdown]
# The shelf algorithm keeps one open container per height class and stacks
# new containers on top.  Its height stays under 4 vol + 16.

# %%
shelf = online_algorithm("strip2d").fresh()
vol = Fraction(0)
for k, it in enumerate(items, 1):
    shelf.place(it)
    vol += item_size(it)
    if k % 100 == 0:
        print(f"{k:4d} items  height {float(shelf.cost):7.3f}  bound {float(4 * vol + 16):7.3f}")

# %% [markdown]
# Same items, unit bins.  The slot algorithm splits bins into power-of-two
# slots; it never keeps more than three empty slots of a class in a bin.

# %%
slots = online_algorithm("bin2d").fresh()
vol = Fraction(0)
for k, it in enumerate(items, 1):
    slots.place(it)
    vol += item_size(it)
print("bins", slots.cost, "volume", float(vol), "bound", float(Fraction(48, 5) * vol + 4))
print("most empty slots of one class in one bin:", slots.max_empty_slots())

# %% [markdown]
# Flexibility: start a second run on top of the first packing.  Every earlier
# placement stays where it was; the new run only adds above or beside it.

# %%
algo = online_algorithm("strip2d")
prev = Solution("strip", 2)
state = algo.flexify(prev)
for it in items[:100]:
    prev.place(it, state.place(it))
    prev.floor = state.cost
print("height after 100 items:", prev.cost)
state = algo.flexify(prev)
first = state.place(items[100].with_id("late"))
print("next item lands at height", first.offset[1])
