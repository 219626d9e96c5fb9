"""Lattice primitives: vertices, canonical edges, boxes, annuli, adjacency.

Vertices are plain integer tuples.  An edge is stored in canonical form as
(base, axis) where base is the endpoint with the smaller coordinate along
axis; the two endpoints of the edge are base and base + e_axis.  Hot loops
elsewhere work on dense row-major arrays and only convert to these value
types at the API boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, NamedTuple

Vertex = tuple[int, ...]

SUPPORTED_DIMS = (2, 3, 4)

# Bond-percolation thresholds used as guards against supercritical zero mass.
PC_BOND: dict[int, float] = {2: 0.5, 3: 0.2488, 4: 0.1601}


def check_dim(d: int) -> int:
    if d not in SUPPORTED_DIMS:
        raise ValueError(f"dimension must be one of {SUPPORTED_DIMS}, got {d}")
    return d


class Edge(NamedTuple):
    """Canonical nearest-neighbor edge: endpoints base and base + e_axis."""

    base: Vertex
    axis: int

    @staticmethod
    def between(x: Vertex, y: Vertex) -> "Edge":
        """Canonical edge between two adjacent vertices, in either order."""
        if len(x) != len(y):
            raise ValueError("endpoint dimensions differ")
        diff_axis = -1
        for i, (a, b) in enumerate(zip(x, y)):
            if a != b:
                if diff_axis >= 0 or abs(a - b) != 1:
                    raise ValueError(f"vertices {x} and {y} are not adjacent")
                diff_axis = i
        if diff_axis < 0:
            raise ValueError(f"vertices {x} and {y} are not adjacent")
        return Edge(x if x[diff_axis] < y[diff_axis] else y, diff_axis)

    @property
    def other(self) -> Vertex:
        b = list(self.base)
        b[self.axis] += 1
        return tuple(b)

    @property
    def endpoints(self) -> tuple[Vertex, Vertex]:
        return self.base, self.other


def neighbors(x: Vertex) -> list[Vertex]:
    """The 2d nearest neighbors, in fixed axis order: +e1, -e1, +e2, -e2, ..."""
    out = []
    for i in range(len(x)):
        for step in (1, -1):
            y = list(x)
            y[i] += step
            out.append(tuple(y))
    return out


def star_neighbors(x: Vertex) -> list[Vertex]:
    """All y != x with max-norm distance 1 (3^d - 1 of them), deterministic order."""
    out = []
    for offs in product((-1, 0, 1), repeat=len(x)):
        if any(offs):
            out.append(tuple(c + o for c, o in zip(x, offs)))
    return out


@dataclass(frozen=True)
class LatticeBox:
    """Centered box S(r) = [-r, r]^d.  The dimension comes from the vertices."""

    radius: int

    def __post_init__(self) -> None:
        if self.radius < 0:
            raise ValueError("box radius must be nonnegative")

    def side(self) -> int:
        return 2 * self.radius + 1

    def vertex_count(self, d: int) -> int:
        return self.side() ** d

    def contains(self, v: Vertex) -> bool:
        return all(abs(c) <= self.radius for c in v)

    def strictly_contains(self, v: Vertex) -> bool:
        return all(abs(c) < self.radius for c in v)

    def on_face(self, v: Vertex) -> bool:
        return self.contains(v) and any(abs(c) == self.radius for c in v)

    def index(self, v: Vertex) -> int:
        """Row-major flat index; coordinate x maps to offset x + radius."""
        idx = 0
        side = self.side()
        for c in v:
            if abs(c) > self.radius:
                raise ValueError(f"vertex {v} outside box of radius {self.radius}")
            idx = idx * side + (c + self.radius)
        return idx

    def vertex_at(self, idx: int, d: int) -> Vertex:
        side = self.side()
        if not 0 <= idx < side**d:
            raise ValueError("flat index out of range")
        coords = []
        for _ in range(d):
            idx, rem = divmod(idx, side)
            coords.append(rem - self.radius)
        return tuple(reversed(coords))

    def vertices(self, d: int) -> Iterator[Vertex]:
        rng = range(-self.radius, self.radius + 1)
        return product(rng, repeat=d)


@dataclass(frozen=True)
class Annulus:
    """S(outer) minus S(inner), by floor of the real radii."""

    inner: float
    outer: float

    def __post_init__(self) -> None:
        if not self.inner < self.outer:
            raise ValueError("annulus needs inner < outer")

    def contains(self, v: Vertex) -> bool:
        r = max(abs(c) for c in v)
        return int(self.inner) < r <= int(self.outer)


def edges_in_box(box: LatticeBox, d: int) -> Iterator[Edge]:
    """Every canonical edge with both endpoints in the box.

    There are d * (2r+1)^(d-1) * 2r of them.
    """
    check_dim(d)
    r = box.radius
    for base in box.vertices(d):
        for axis in range(d):
            if base[axis] < r:
                yield Edge(base, axis)


def encloses_origin(w: Iterable[Vertex], guard: LatticeBox) -> bool:
    """Whether every infinite nearest-neighbor path from the origin meets w.

    Decided by escape: flood from the origin through the complement of w
    inside the guard box; reaching the guard face means some path escapes,
    and the guard being strictly larger than w makes that test exact.
    """
    wset = set(w)
    if not wset:
        return False
    if guard.radius < 1:
        raise ValueError("guard box must have radius >= 1")
    d = len(next(iter(wset)))
    origin = (0,) * d
    if origin in wset:
        raise ValueError("origin must not belong to the candidate contour")
    for v in wset:
        if len(v) != d:
            raise ValueError("contour vertices have mixed dimensions")
        if not guard.strictly_contains(v):
            raise ValueError(f"contour vertex {v} touches or leaves the guard box")
    seen = {origin}
    stack = [origin]
    while stack:
        v = stack.pop()
        if guard.on_face(v):
            return False
        for y in neighbors(v):
            if y not in seen and y not in wset and guard.contains(y):
                seen.add(y)
                stack.append(y)
    return True
