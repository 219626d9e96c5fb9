"""Star-connected vertex sets around the origin.

Exhaustive enumeration of small star-connected sets (adjacency: l-infinity
distance one), the exponential counting bound they obey, the subfamily that
fences the origin in, a heavy-edge badness classifier, and the check that
an exterior vertex boundary forms a single star-connected piece.

Enumeration is exact and deliberately small-n; the point is trustworthy
ground truth for the counting bound, not scale.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import ndimage

from .boundary import decompose_complement
from .growth import PassageField, compute_passage
from .lattice import (
    Edge,
    LatticeBox,
    Vertex,
    check_dim,
    encloses_origin,
    star_neighbors,
)
from .weights import EdgeWeightField, WeightModel, containment_constant, seed_stream

# budgets keep exhaustive enumeration honest: past these sizes a single
# pass needs minutes, and the counting bound is already exercised well
_SIZE_BUDGET = {2: 8, 3: 5, 4: 4}


def star_offsets(d: int) -> tuple[Vertex, ...]:
    """The 3^d - 1 nonzero offsets of the star neighborhood, sorted."""
    check_dim(d)
    return tuple(
        o for o in itertools.product((-1, 0, 1), repeat=d) if any(c != 0 for c in o)
    )


def star_connected(vertices: frozenset[Vertex]) -> bool:
    """Whether the set is connected under l-infinity distance-one adjacency."""
    if not vertices:
        return False
    start = next(iter(vertices))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for u in star_neighbors(v):
            if u in vertices and u not in seen:
                seen.add(u)
                stack.append(u)
    return len(seen) == len(vertices)


@dataclass(frozen=True)
class Contour:
    """A finite star-connected vertex set."""

    vertices: frozenset[Vertex]

    @classmethod
    def from_vertices(cls, vertices) -> "Contour":
        vs = frozenset(vertices)
        if not vs:
            raise ValueError("a contour needs at least one vertex")
        dims = {len(v) for v in vs}
        if len(dims) != 1:
            raise ValueError("mixed dimensions in contour vertices")
        if not star_connected(vs):
            raise ValueError("vertices do not form a star-connected set")
        return cls(vertices=vs)

    def __len__(self) -> int:
        return len(self.vertices)


def _check_offsets(offsets, d: int) -> tuple[Vertex, ...]:
    if offsets is None:
        return star_offsets(d)
    got = tuple(tuple(int(c) for c in o) for o in offsets)
    if set(got) != set(star_offsets(d)) or len(got) != 3**d - 1:
        raise ValueError("offsets must be a permutation of the star neighborhood")
    return got


def iter_origin_star_sets(
    n_max: int, d: int = 2, offsets=None
) -> Iterator[frozenset[Vertex]]:
    """Every star-connected set containing the origin, sizes 1 to n_max.

    Binary-partition enumeration: branch on the first frontier vertex being
    in or out, so each set is emitted exactly once.  The offsets argument
    only permutes discovery order; the emitted family is order-independent,
    which the tests exploit.
    """
    check_dim(d)
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if n_max > _SIZE_BUDGET[d]:
        raise ValueError(
            f"n_max {n_max} exceeds the exhaustive budget {_SIZE_BUDGET[d]} in d={d}"
        )
    offs = _check_offsets(offsets, d)
    origin = (0,) * d

    def frontier(current: tuple[Vertex, ...], excluded: set[Vertex]) -> list[Vertex]:
        seen = set(current) | excluded
        out = []
        for v in current:
            for o in offs:
                u = tuple(v[i] + o[i] for i in range(d))
                if u not in seen:
                    seen.add(u)
                    out.append(u)
        return out

    def rec(current: tuple[Vertex, ...], excluded: set[Vertex]):
        yield frozenset(current)
        if len(current) == n_max:
            return
        ex = set(excluded)
        for u in frontier(current, excluded):
            yield from rec(current + (u,), ex)
            ex.add(u)

    yield from rec((origin,), set())


def star_animal_counts(n_max: int, d: int = 2, offsets=None) -> dict[int, int]:
    """#(star-connected sets of size k containing the origin) for k <= n_max."""
    counts = {k: 0 for k in range(1, n_max + 1)}
    for s in iter_origin_star_sets(n_max, d, offsets):
        counts[len(s)] += 1
    return counts


def star_contour_bound(n: int, d: int = 2) -> float:
    """Exponential upper bound on the number of enclosing contours of size n.

    Base m^m / (m-1)^(m-1) with m = 3^d, times n for the anchor choice.
    """
    check_dim(d)
    if n < 1:
        raise ValueError("n must be at least 1")
    m = 3**d
    base = m**m / (m - 1) ** (m - 1)
    return float(n) * base**n


def enclosing_contour_sets(n: int, d: int = 2) -> list[frozenset[Vertex]]:
    """All star-connected n-sets that avoid the origin yet fence it in.

    Any such set meets the positive first-axis ray within n - 1 steps, so
    translating the origin-rooted family along that ray and filtering for
    enclosure is exhaustive.
    """
    check_dim(d)
    if n < 1:
        raise ValueError("n must be at least 1")
    guard = LatticeBox(2 * n + 2)
    origin = (0,) * d
    found: set[frozenset[Vertex]] = set()
    rooted = [s for s in iter_origin_star_sets(n, d) if len(s) == n]
    for s in rooted:
        for k in range(1, n):
            w = frozenset(
                (v[0] + k,) + tuple(v[1:]) for v in s
            )
            if origin in w or w in found:
                continue
            if not encloses_origin(w, guard):
                continue
            found.add(w)
    return sorted(found, key=lambda ws: tuple(sorted(ws)))


def enclosing_contour_count(n: int, d: int = 2) -> int:
    return len(enclosing_contour_sets(n, d))


def heavy_vertices(
    vertices: frozenset[Vertex], weight_source, alpha: float
) -> frozenset[Vertex]:
    """Vertices with at least one incident edge of weight above alpha."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    out = []
    for v in vertices:
        d = len(v)
        for a in range(d):
            lower = tuple(c - 1 if i == a else c for i, c in enumerate(v))
            if (
                weight_source.weight(Edge(v, a)) > alpha
                or weight_source.weight(Edge(lower, a)) > alpha
            ):
                out.append(v)
                break
    return frozenset(out)


def is_alpha_bad(contour: Contour, weight_source, alpha: float) -> bool:
    """True when at least half the contour's vertices are heavy."""
    heavy = heavy_vertices(contour.vertices, weight_source, alpha)
    return 2 * len(heavy) >= len(contour)


def _exterior_vertex_mask(pf: PassageField, s: float):
    dec = decompose_complement(pf, s)
    structure = ndimage.generate_binary_structure(dec.d, 1)
    grown = ndimage.binary_dilation(dec.ball, structure=structure)
    return grown & dec.exterior, dec.offset


def exterior_component_count(pf: PassageField, s: float) -> int:
    """Number of star-connected pieces of the exterior vertex boundary."""
    mask, _ = _exterior_vertex_mask(pf, s)
    full = ndimage.generate_binary_structure(mask.ndim, mask.ndim)
    _, n = ndimage.label(mask, structure=full)
    return int(n)


def exterior_is_star_connected(pf: PassageField, s: float) -> bool:
    return exterior_component_count(pf, s) == 1


def exterior_vertex_contour(pf: PassageField, s: float) -> Contour:
    """The exterior vertex boundary as a contour (single-piece expected)."""
    mask, offset = _exterior_vertex_mask(pf, s)
    coords = np.argwhere(mask) + offset
    return Contour.from_vertices(
        tuple(int(c) for c in row) for row in coords
    )


@dataclass(frozen=True)
class BadSample:
    """One exterior contour probe: its size and heavy-vertex tally."""

    size: int
    heavy_count: int
    bad: bool


@dataclass(frozen=True)
class BadRateReport:
    """Bad-contour frequency against contour size, with a log-linear fit.

    slope is the fitted decay rate of log frequency per unit of size; nan
    when fewer than two horizons produced a nonzero frequency.
    """

    horizons: tuple[float, ...]
    mean_sizes: tuple[float, ...]
    bad_fractions: tuple[float, ...]
    slope: float
    slope_stderr: float
    samples: tuple[BadSample, ...]


def _log_decay_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if len(x) < 2:
        return math.nan, math.nan
    xm = x - x.mean()
    denom = float(np.sum(xm * xm))
    if denom == 0.0:
        return math.nan, math.nan
    slope = float(np.sum(xm * y) / denom)
    if len(x) == 2:
        return slope, math.nan
    resid = y - (y.mean() + slope * xm)
    sigma2 = float(np.sum(resid * resid)) / (len(x) - 2)
    return slope, math.sqrt(sigma2 / denom)


def bad_contour_rate(
    model: WeightModel,
    alpha: float,
    horizons,
    replications: int,
    base_seed: int,
    d: int = 2,
) -> BadRateReport:
    """Estimate how the heavy-half frequency of exterior contours falls off
    with contour size, by growing balls to several horizons.

    Each replication draws a fresh weight field, grows to the horizon, and
    classifies the exterior vertex boundary at that time.
    """
    check_dim(d)
    if replications < 1:
        raise ValueError("need at least one replication")
    m = containment_constant(model, d)
    samples: list[BadSample] = []
    mean_sizes = []
    fractions = []
    rep_index = 0
    for horizon in horizons:
        radius = int(math.ceil(2 * m * horizon))
        box = LatticeBox(radius)
        sizes = []
        bads = []
        for _ in range(replications):
            field = EdgeWeightField(model, seed_stream(base_seed, rep_index))
            rep_index += 1
            pf = compute_passage(field, box, float(horizon), d)
            contour = exterior_vertex_contour(pf, float(horizon))
            heavy = heavy_vertices(contour.vertices, field, alpha)
            bad = 2 * len(heavy) >= len(contour)
            samples.append(BadSample(len(contour), len(heavy), bad))
            sizes.append(len(contour))
            bads.append(bad)
        mean_sizes.append(float(np.mean(sizes)))
        fractions.append(float(np.mean(bads)))
    x = np.array(
        [ms for ms, f in zip(mean_sizes, fractions) if f > 0], dtype=np.float64
    )
    y = np.array([math.log(f) for f in fractions if f > 0], dtype=np.float64)
    slope, stderr = _log_decay_fit(x, y)
    return BadRateReport(
        horizons=tuple(float(h) for h in horizons),
        mean_sizes=tuple(mean_sizes),
        bad_fractions=tuple(fractions),
        slope=slope,
        slope_stderr=stderr,
        samples=tuple(samples),
    )
