"""Lattice primitives: canonical edges, box indexing, enclosure."""
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fpplab.lattice import (
    Annulus,
    Edge,
    LatticeBox,
    edges_in_box,
    encloses_origin,
    neighbors,
    star_neighbors,
)

coords = st.integers(min_value=-50, max_value=50)


def test_edge_between_canonicalizes_order():
    e = Edge.between((1, 0), (0, 0))
    assert e == Edge(base=(0, 0), axis=0)
    assert e == Edge.between((0, 0), (1, 0))
    assert e.endpoints == ((0, 0), (1, 0))


def test_edge_between_rejects_non_neighbors():
    with pytest.raises(ValueError):
        Edge.between((0, 0), (1, 1))
    with pytest.raises(ValueError):
        Edge.between((0, 0), (0, 0))
    with pytest.raises(ValueError):
        Edge.between((0, 0), (2, 0))
    with pytest.raises(ValueError):
        Edge.between((0, 0), (0, 0, 0))


@given(st.tuples(coords, coords, coords), st.integers(0, 2))
def test_edge_between_inverts_other(base, axis):
    e = Edge(base, axis)
    assert Edge.between(e.base, e.other) == e


def test_neighbor_counts():
    assert len(neighbors((0, 0))) == 4
    assert len(neighbors((1, 2, 3))) == 6
    assert len(star_neighbors((0, 0))) == 8
    assert len(star_neighbors((0, 0, 0))) == 26
    assert (1, 1) in star_neighbors((0, 0))
    assert (1, 1) not in neighbors((0, 0))


@given(st.tuples(coords, coords))
def test_neighbors_are_symmetric(v):
    for u in neighbors(v):
        assert v in neighbors(u)


def test_box_index_round_trip():
    box = LatticeBox(3)
    seen = set()
    for v in box.vertices(2):
        idx = box.index(v)
        assert box.vertex_at(idx, 2) == v
        seen.add(idx)
    assert seen == set(range(box.vertex_count(2)))


def test_box_indexing_is_row_major():
    box = LatticeBox(2)
    assert box.index((-2, -2)) == 0
    assert box.index((-2, -1)) == 1
    assert box.index((-1, -2)) == box.side()


def test_box_membership_predicates():
    box = LatticeBox(2)
    assert box.contains((2, -2))
    assert not box.strictly_contains((2, 0))
    assert box.on_face((2, 0))
    assert not box.on_face((1, 1))
    assert not box.contains((3, 0))
    with pytest.raises(ValueError):
        box.index((3, 0))
    with pytest.raises(ValueError):
        LatticeBox(-1)


def test_edges_in_box_count():
    for r, d in [(1, 2), (2, 2), (1, 3)]:
        box = LatticeBox(r)
        edges = list(edges_in_box(box, d))
        assert len(edges) == d * box.side() ** (d - 1) * 2 * r
        assert len(set(edges)) == len(edges)
        for e in edges:
            assert box.contains(e.base) and box.contains(e.other)


def test_annulus_uses_floor_radii():
    ann = Annulus(2.7, 5.3)
    assert not ann.contains((2, 0))
    assert ann.contains((3, 0))
    assert ann.contains((0, 5))
    assert not ann.contains((6, 0))
    with pytest.raises(ValueError):
        Annulus(3.0, 3.0)


def test_enclosure_ring_around_origin():
    ring = [
        (1, 0), (1, 1), (0, 1), (-1, 1),
        (-1, 0), (-1, -1), (0, -1), (1, -1),
    ]
    guard = LatticeBox(3)
    assert encloses_origin(ring, guard)
    broken = [v for v in ring if v != (0, 1)]
    assert not encloses_origin(broken, guard)


def test_enclosure_star_diagonal_gap_leaks():
    # an l-infinity circle with one diagonal-only corner still blocks
    # nearest-neighbor escape when the corner vertex is present, but a
    # missing side vertex opens a door
    diamond = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    assert encloses_origin(diamond, LatticeBox(3))


def test_enclosure_input_validation():
    guard = LatticeBox(2)
    assert not encloses_origin([], guard)
    with pytest.raises(ValueError):
        encloses_origin([(0, 0)], guard)
    with pytest.raises(ValueError):
        encloses_origin([(2, 0)], guard)
    with pytest.raises(ValueError):
        encloses_origin([(1, 0), (0, 1, 1)], LatticeBox(3))
