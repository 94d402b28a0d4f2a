from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from treerep import automorphism as au
from treerep import measure as me
from treerep import tree as tr
from treerep.errors import (
    CylinderTooShallowError,
    DepthBudgetError,
    MalformedAddressError,
    PartitionError,
    PruningError,
    RefinementError,
)

P2 = tr.TreeParams(2)
P3 = tr.TreeParams(3)


def seeded_word(params, rng, max_factors=2):
    word = []
    for _ in range(rng.integers(1, max_factors + 1)):
        kind = rng.integers(0, 3)
        inverted = bool(rng.integers(0, 2))
        if kind == 0:
            word.append((au.PortraitGen(au.random_portrait(params, 2, rng)), inverted))
        elif kind == 1:
            word.append((au.EdgeInversionGen(), inverted))
        else:
            word.append((au.StepTranslationGen(), inverted))
    return au.TreeAutomorphism(params, word)


# -- cells and their measures -------------------------------------------------


def test_cell_measures_match_counting():
    for params, q in ((P2, 2), (P3, 3)):
        assert me.cell_measure(params, me.whole_boundary()) == 1
        for depth in range(1, 5):
            mu = oracles.uniform_cell_measure(q, depth)
            base = (1,) + (1,) * (depth - 1)
            assert me.cell_measure(params, me.Cylinder(base)) == mu
    assert me.cell_measure(P2, me.Cylinder((2,))) == Fraction(1, 3)
    assert me.cell_measure(P2, me.Cylinder((2, 1))) == Fraction(1, 6)
    assert me.cell_measure(P3, me.Cylinder((4, 2, 3))) == Fraction(1, 36)


def test_halftree_complement_measure():
    c = me.canonicalize(P2, me.Halftree((1,), ()))
    assert isinstance(c, me.Halftree)
    assert me.cell_measure(P2, c) == Fraction(2, 3)
    deeper = me.canonicalize(P2, me.Halftree((1, 2), (1,)))
    assert me.cell_measure(P2, deeper) == Fraction(5, 6)


def test_canonicalize_collapses_outward_halftrees():
    assert me.canonicalize(P2, me.Halftree((), (1,))) == me.Cylinder((1,))
    assert me.canonicalize(P2, me.Halftree((1,), (1, 2))) == me.Cylinder((1, 2))
    with pytest.raises(MalformedAddressError):
        me.canonicalize(P2, me.Halftree((1,), (2, 1)))  # not adjacent
    with pytest.raises(MalformedAddressError):
        me.canonicalize(P2, me.Halftree((1,), (1,)))


def test_cell_json_round_trip():
    for cell in (me.Cylinder(()), me.Cylinder((2, 1)), me.Halftree((1,), ())):
        obj = cell.to_json_obj()
        assert me.cell_from_json_obj(obj) == cell
    assert me.Cylinder((2, 1)).to_json_obj() == {"kind": "cylinder", "base": "2.1"}
    assert me.Halftree((1,), ()).to_json_obj() == {
        "kind": "halftree",
        "from": "1",
        "to": "-",
    }


def test_measure_string_round_trip():
    assert me.measure_to_str(Fraction(2, 3)) == "2/3"
    assert me.measure_from_str("2/3") == Fraction(2, 3)
    assert me.measure_from_str("1") == Fraction(1)


# -- refinement ---------------------------------------------------------------


def test_refine_cylinder_exactly_partitions():
    pieces = me.refine_to_depth(P2, me.Cylinder((1,)), 3)
    assert len(pieces) == 4
    assert sorted(pieces, key=lambda c: c.base) == pieces
    assert sum(me.cell_measure(P2, c) for c in pieces) == Fraction(1, 3)
    bases = {c.base for c in pieces}
    assert bases == {(1, a, b) for a in (1, 2) for b in (1, 2)}


def test_refine_complement_exactly_partitions():
    cell = me.canonicalize(P2, me.Halftree((1, 1), (1,)))
    for depth in (2, 3, 4):
        pieces = me.refine_to_depth(P2, cell, depth)
        assert sum(me.cell_measure(P2, c) for c in pieces) == me.cell_measure(P2, cell)
        assert len({c.base for c in pieces}) == len(pieces)


def test_refine_errors():
    with pytest.raises(RefinementError):
        me.refine_to_depth(P2, me.Cylinder((1, 1)), 1)
    with pytest.raises(DepthBudgetError):
        me.refine_to_depth(P2, me.Cylinder((1,)), 9)


def test_whole_boundary_refines_to_full_level():
    for depth in (1, 2, 3):
        pieces = me.refine_to_depth(P3, me.whole_boundary(), depth)
        assert len(pieces) == oracles.cylinder_count(3, depth)
        assert sum(me.cell_measure(P3, c) for c in pieces) == 1


def test_cell_index_ranges_agree_with_refinement():
    for cell in (
        me.Cylinder((1,)),
        me.Cylinder((2, 1)),
        me.canonicalize(P2, me.Halftree((1,), ())),
        me.canonicalize(P2, me.Halftree((2, 1), (2,))),
    ):
        for depth in (3, 4):
            want = {
                tr.address_index(P2, c.base)
                for c in me.refine_to_depth(P2, cell, depth)
            }
            got = set()
            for lo, hi in me.cell_index_ranges(P2, cell, depth):
                got.update(range(lo, hi))
            assert got == want


def test_assert_partition():
    me.assert_partition(P2, [me.Cylinder((1,)), me.canonicalize(P2, me.Halftree((1,), ()))], 2)
    with pytest.raises(PartitionError):
        me.assert_partition(P2, [me.Cylinder((1,)), me.Cylinder((1, 1))], 2)  # overlap
    with pytest.raises(PartitionError):
        me.assert_partition(P2, [me.Cylinder((1,)), me.Cylinder((2,))], 2)  # gap


# -- stabilizer orbits ---------------------------------------------------------


def test_orbit_cells_of_balls():
    for params, q in ((P2, 2), (P3, 3)):
        for radius in (1, 2, 3):
            ball = tr.closed_neighborhood(tr.FiniteSubtree(params, [()]), radius)
            cells = me.orbit_cells(ball)
            assert len(cells) == (q + 1) * q ** (radius - 1)
            assert sum(me.cell_measure(params, c) for c in cells) == 1
            assert len(set(cells)) == len(cells)


def test_orbit_cells_of_the_edge():
    cells = me.orbit_cells(tr.FiniteSubtree(P2, [(), (1,)]))
    measures = sorted(me.cell_measure(P2, c) for c in cells)
    assert measures == [Fraction(1, 3), Fraction(2, 3)]


def test_orbit_cells_singleton_is_whole_boundary():
    assert me.orbit_cells(tr.FiniteSubtree(P2, [()])) == [me.whole_boundary()]


def test_orbit_merge_full_contract():
    ball = tr.closed_neighborhood(tr.FiniteSubtree(P2, [(), (1,)]), 1)
    small = tr.FiniteSubtree(P2, ball.vertices - {(1, 1), (1, 2)})
    merge = me.orbit_merge_under_pruning(ball, small)
    assert set(merge) == set(me.orbit_cells(ball))
    assert set(merge.values()) == set(me.orbit_cells(small))
    counts = {}
    for v in merge.values():
        counts[v] = counts.get(v, 0) + 1
    merged_target = [c for c, n in counts.items() if n > 1]
    assert len(merged_target) == 1
    sources = [c for c, v in merge.items() if v == merged_target[0]]
    assert len(sources) == P2.q
    assert me.cell_measure(P2, merged_target[0]) == sum(
        me.cell_measure(P2, c) for c in sources
    )
    for c, v in merge.items():
        if v != merged_target[0]:
            assert me.cell_measure(P2, c) == me.cell_measure(P2, v)


def test_orbit_merge_rejects_bad_prunings():
    ball = tr.closed_neighborhood(tr.FiniteSubtree(P2, [(), (1,)]), 1)
    with pytest.raises(PruningError):
        me.orbit_merge_under_pruning(ball, ball)  # nothing removed
    with pytest.raises(PruningError):
        # removes one leaf only, not all q around a vertex
        me.orbit_merge_under_pruning(ball, tr.FiniteSubtree(P2, ball.vertices - {(1, 1)}))
    with pytest.raises(PruningError):
        # removed leaves sit around two different interior vertices
        me.orbit_merge_under_pruning(ball, tr.FiniteSubtree(P2, ball.vertices - {(1, 1), (2,)}))
    big = tr.closed_neighborhood(tr.FiniteSubtree(P2, [()]), 2)
    with pytest.raises(PruningError):
        # pruned tree not complete: removing a single grandchild pair keeps
        # (1,) full but leaves (2,),(3,) full and their children... removing
        # children of (1,) only makes (1,) a leaf while the rest is intact
        me.orbit_merge_under_pruning(
            big, tr.FiniteSubtree(P2, big.vertices - {(1, 1)})
        )


# -- boundary action and the measure cocycle ----------------------------------


def test_map_cell_basics():
    h = au.edge_inversion(P2)
    assert me.map_cell(h, me.whole_boundary()) == me.whole_boundary()
    assert me.map_cell(h, me.Cylinder((2,))) == me.Cylinder((1, 1))
    assert me.map_cell(h, me.Cylinder((1, 1))) == me.Cylinder((2,))
    # image of cyl(1) is everything through h(1)=eps away from h(eps)=(1,)
    img = me.map_cell(h, me.Cylinder((1,)))
    assert img == me.canonicalize(P2, me.Halftree((1,), ()))


def test_map_cell_is_functorial():
    rng = np.random.default_rng(13)
    cells = [
        me.Cylinder((1, 2, 1, 1)),
        me.Cylinder((2, 1, 2, 2)),
        me.canonicalize(P2, me.Halftree((3, 1, 1, 1), (3, 1, 1))),
    ]
    for _ in range(20):
        g = seeded_word(P2, rng)
        h = seeded_word(P2, rng)
        comp = au.compose(g, h)
        for c in cells:
            assert me.map_cell(comp, c) == me.map_cell(g, me.map_cell(h, c))


def test_map_cell_of_inverse_inverts():
    rng = np.random.default_rng(14)
    for _ in range(20):
        g = seeded_word(P2, rng)
        for c in (me.Cylinder((1, 1, 1, 2)), me.Cylinder((3, 2, 1, 1))):
            assert me.map_cell(g.inverse(), me.map_cell(g, c)) == c


def test_rn_cocycle_identity_is_one():
    e = au.identity(P2)
    for cell in (me.Cylinder((1,)), me.Cylinder((2, 1)), me.canonicalize(P2, me.Halftree((1,), ()))):
        assert me.rn_cocycle(e, cell) == 1


def test_rn_cocycle_examples():
    h = au.edge_inversion(P2)  # h . basepoint = its first neighbour
    assert me.rn_cocycle(h, me.Cylinder((1,))) == Fraction(2)
    assert me.rn_cocycle(h, me.Cylinder((2,))) == Fraction(1, 2)
    assert me.rn_cocycle(h, me.Cylinder((1, 2))) == Fraction(2)
    # constant across the complement of cyl(1): both pieces see B = -1
    comp = me.canonicalize(P2, me.Halftree((1,), ()))
    assert me.rn_cocycle(h, comp) == Fraction(1, 2)
    h3 = au.edge_inversion(P3)
    assert me.rn_cocycle(h3, me.Cylinder((1,))) == Fraction(3)


def test_rn_cocycle_shallow_cells_rejected():
    h = au.edge_inversion(P2)
    with pytest.raises(CylinderTooShallowError):
        me.rn_cocycle(h, me.whole_boundary())
    # complement of cyl(1.1) straddles both sides of the moved edge
    mixed = me.canonicalize(P2, me.Halftree((1, 1), (1,)))
    with pytest.raises(CylinderTooShallowError):
        me.rn_cocycle(h, mixed)


def test_rn_cocycle_matches_pushforward_enumeration():
    # mu(g^{-1}.c) = rn(g, c) * mu(c), both sides exact rationals
    rng = np.random.default_rng(15)
    for params, q in ((P2, 2), (P3, 3)):
        for _ in range(15):
            g = seeded_word(params, rng)
            base_depth = g.displacement + 1
            letters = tuple(
                int(rng.integers(1, (q + 2) if k == 0 else (q + 1)))
                for k in range(base_depth)
            )
            cell = me.Cylinder(letters)
            rn = me.rn_cocycle(g, cell)
            enum_depth = base_depth + g.inverse().word_cost()
            direct = oracles.pushforward_measure(g, letters, enum_depth)
            assert direct == rn * me.cell_measure(params, cell), (g, letters)


def test_rn_cocycle_composition_law():
    rng = np.random.default_rng(16)
    for _ in range(25):
        g = seeded_word(P2, rng)
        h = seeded_word(P2, rng)
        comp = au.compose(g, h)
        base = tuple(
            int(np.random.default_rng(trial).integers(1, 3))
            for trial in range(comp.displacement + g.displacement + 2)
        )
        cell = me.Cylinder((1,) + base[1:])
        lhs = me.rn_cocycle(comp, cell)
        rhs = me.rn_cocycle(g, cell) * me.rn_cocycle(h, me.map_cell(g.inverse(), cell))
        assert lhs == rhs


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_rn_cocycle_values_are_powers_of_q(seed):
    rng = np.random.default_rng(seed)
    g = seeded_word(P2, rng)
    cell = me.Cylinder(
        tuple(int(rng.integers(1, 3)) for _ in range(g.displacement + 1)) or (1,)
    )
    rn = me.rn_cocycle(g, cell)
    # exact power of q: num or den is a power of 2, the other is 1
    num, den = rn.numerator, rn.denominator
    assert num == 1 or den == 1
    val = max(num, den)
    while val % 2 == 0:
        val //= 2
    assert val == 1
