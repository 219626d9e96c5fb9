"""Bond percolation views of a weight field.

Thresholding weights at M turns the field into bond percolation with
p = P(weight <= M).  This module labels open clusters, measures chemical
distance inside them, compares passage times against linear distance, and
counts heavily-fenced vertices in annuli, the candidates for unit holes.

The largest in-box cluster stands in for the infinite cluster; callers
choose boxes large enough for that identification to be stable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.stats import chi2_contingency

from .growth import compute_passage
from .lattice import Annulus, Edge, LatticeBox, Vertex, check_dim
from .weights import (
    EdgeWeightField,
    Exponential,
    WeightModel,
    seed_stream,
)


def _grid_table(weight_source, box: LatticeBox, d: int) -> np.ndarray:
    if isinstance(weight_source, np.ndarray):
        table = weight_source
    else:
        table = weight_source.grid_weights(box.radius, d)
    if table.shape != (d, box.vertex_count(d)):
        raise ValueError("weight table shape does not match the box")
    return table


@dataclass
class PercolationView:
    """Open-cluster labelling of one box at one threshold.

    Cluster ids are relabelled by decreasing size (ties broken by first
    cell in scan order), so the largest cluster is always id 0.
    """

    box: LatticeBox
    d: int
    threshold: float
    labels: np.ndarray
    cluster_sizes: np.ndarray
    open_edge_count: int
    edge_count: int
    adjacency: sparse.csr_matrix = dataclass_field(repr=False, default=None)

    @property
    def cluster_count(self) -> int:
        return len(self.cluster_sizes)

    @property
    def largest_size(self) -> int:
        return int(self.cluster_sizes[0])

    @property
    def open_fraction(self) -> float:
        return self.open_edge_count / self.edge_count

    def label_of(self, v: Vertex) -> int:
        return int(self.labels[self.box.index(v)])

    def in_largest(self, v: Vertex) -> bool:
        return self.label_of(v) == 0

    def spanning(self) -> bool:
        """Whether the largest cluster touches all 2d faces of the box."""
        side = self.box.side()
        lab = self.labels.reshape((side,) * self.d)
        for a in range(self.d):
            lo = tuple(0 if i == a else slice(None) for i in range(self.d))
            hi = tuple(side - 1 if i == a else slice(None) for i in range(self.d))
            if not (lab[lo] == 0).any() or not (lab[hi] == 0).any():
                return False
        return True


def label_clusters(weight_source, threshold: float, box: LatticeBox, d: int) -> PercolationView:
    """Label the open clusters of the box at the given weight threshold.

    weight_source is either an edge weight field or a precomputed
    (d, side^d) weight table; off-box slots are infinite, hence closed.
    """
    check_dim(d)
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    table = _grid_table(weight_source, box, d)
    n = box.vertex_count(d)
    side = box.side()
    open_mask = table <= threshold
    rows = []
    cols = []
    for a in range(d):
        stride = side ** (d - 1 - a)
        idx = np.flatnonzero(open_mask[a])
        # upper-face slots hold no edge; drop them even if a fixture table
        # left them finite
        idx = idx[(idx // stride) % side < side - 1]
        rows.append(idx)
        cols.append(idx + stride)
    r = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.empty(0, dtype=np.int64)
    adj = sparse.coo_matrix(
        (np.ones(len(r), dtype=np.int8), (r, c)), shape=(n, n)
    ).tocsr()
    n_comp, raw = csgraph.connected_components(adj, directed=False)
    sizes = np.bincount(raw, minlength=n_comp)
    _, first = np.unique(raw, return_index=True)
    order = np.lexsort((first, -sizes))
    perm = np.empty(n_comp, dtype=np.int64)
    perm[order] = np.arange(n_comp)
    labels = perm[raw]
    return PercolationView(
        box=box,
        d=d,
        threshold=float(threshold),
        labels=labels,
        cluster_sizes=sizes[order],
        open_edge_count=int(open_mask.sum()),
        edge_count=d * (side - 1) * side ** (d - 1),
        adjacency=adj,
    )


def chemical_distances_from(view: PercolationView, x: Vertex) -> np.ndarray:
    """Hop counts from x through open edges; -1 marks unreachable cells."""
    src = view.box.index(x)
    dist = csgraph.dijkstra(
        view.adjacency, directed=False, unweighted=True, indices=src
    )
    out = np.full(len(dist), -1, dtype=np.int64)
    reached = np.isfinite(dist)
    out[reached] = dist[reached].astype(np.int64)
    return out


def chemical_distance(view: PercolationView, x: Vertex, y: Vertex) -> int | None:
    """Open-path hop distance between x and y, None across clusters."""
    dist = chemical_distances_from(view, x)
    val = int(dist[view.box.index(y)])
    return None if val < 0 else val


@dataclass(frozen=True)
class PassageDistanceTable:
    """Passage time against l-infinity distance over the largest cluster."""

    linf: np.ndarray
    time: np.ndarray
    threshold: float
    horizon: float
    min_distance: int

    @property
    def max_ratio(self) -> float:
        far = self.linf >= self.min_distance
        if not far.any():
            return math.nan
        return float(np.max(self.time[far] / self.linf[far]))


def passage_vs_linf(
    field: EdgeWeightField,
    threshold: float,
    box: LatticeBox,
    horizon: float,
    d: int,
    min_distance: int = 8,
) -> PassageDistanceTable:
    """Tabulate T(0, x) against ||x|| over reached largest-cluster vertices.

    The max of T / ||x|| past min_distance estimates the linear-growth
    constant; it requires the origin to sit in the largest cluster.
    """
    view = label_clusters(field, threshold, box, d)
    origin = (0,) * d
    if not view.in_largest(origin):
        raise ValueError("origin is not in the largest open cluster")
    pf = compute_passage(field, box, horizon, d)
    times = pf.times.ravel()
    keep = (view.labels == 0) & np.isfinite(times)
    keep[view.box.index(origin)] = False
    side = box.side()
    idx = np.flatnonzero(keep)
    linf = np.zeros(len(idx), dtype=np.int64)
    for a in range(d):
        coord = (idx // side ** (d - 1 - a)) % side - box.radius
        linf = np.maximum(linf, np.abs(coord))
    return PassageDistanceTable(
        linf=linf,
        time=times[idx],
        threshold=float(threshold),
        horizon=float(horizon),
        min_distance=min_distance,
    )


@dataclass(frozen=True)
class HoleCandidateSpec:
    """Geometry of the level-n census of heavily-fenced cluster vertices.

    Built from a cluster threshold and two linear-comparison constants: a
    lower passage-speed constant d1 and a chemical-distance stretch d4.
    The derived contraction delta must land in (0, 1/2) for the annulus
    ladder to make sense.
    """

    level: int
    threshold: float
    d1: float
    d4: float

    def __post_init__(self) -> None:
        if self.level < 0:
            raise ValueError("level must be nonnegative")
        if min(self.threshold, self.d1, self.d4) <= 0:
            raise ValueError("threshold, d1, d4 must be positive")
        if not 0 < self.delta < 0.5:
            raise ValueError(
                f"delta = {self.delta} outside (0, 1/2); adjust the constants"
            )

    @property
    def delta(self) -> float:
        return self.d1 / (16.0 * self.d4 * self.threshold)

    @property
    def growth(self) -> float:
        """Annulus growth factor, strictly between 1 and 2."""
        return 1.0 / (1.0 - self.delta)

    @property
    def weight_cut(self) -> float:
        """All 2d edges at a candidate must exceed this weight."""
        return 4.0 * self.d4 * self.threshold * self.growth ** (self.level + 1)

    @property
    def annulus(self) -> Annulus:
        return Annulus(self.growth**self.level, self.growth ** (self.level + 1))

    @property
    def min_radius(self) -> int:
        return int(math.ceil(self.growth ** (self.level + 1))) + 1


def hole_candidates(
    weight_source: EdgeWeightField,
    spec: HoleCandidateSpec,
    box: LatticeBox,
    d: int = 2,
) -> list[Vertex]:
    """Vertices v = w + e1 with w a largest-cluster point of the sparse
    annulus grid and every edge at v heavier than the level cut.

    The sparse grid (step 3) keeps candidates' edge neighborhoods disjoint,
    which is what makes their counts behave independently.
    """
    check_dim(d)
    if box.radius < spec.min_radius:
        raise ValueError(
            f"box radius {box.radius} below the level minimum {spec.min_radius}"
        )
    view = label_clusters(weight_source, spec.threshold, box, d)
    outer = int(spec.annulus.outer)
    cut = spec.weight_cut
    out: list[Vertex] = []
    grid = range(-3 * (outer // 3), outer + 1, 3)
    for w in _grid_points(grid, d):
        if not spec.annulus.contains(w):
            continue
        if view.label_of(w) != 0:
            continue
        v = (w[0] + 1,) + w[1:]
        if _min_incident_weight(weight_source, v, d) > cut:
            out.append(v)
    return out


def _grid_points(axis_range, d: int):
    if d == 1:
        for x in axis_range:
            yield (x,)
        return
    for x in axis_range:
        for rest in _grid_points(axis_range, d - 1):
            yield (x,) + rest


def _min_incident_weight(field: EdgeWeightField, v: Vertex, d: int) -> float:
    w = math.inf
    for a in range(d):
        lower = tuple(c - 1 if i == a else c for i, c in enumerate(v))
        w = min(w, field.weight(Edge(v, a)), field.weight(Edge(lower, a)))
    return w


def count_hole_candidates(
    weight_source: EdgeWeightField,
    spec: HoleCandidateSpec,
    box: LatticeBox,
    d: int = 2,
) -> int:
    return len(hole_candidates(weight_source, spec, box, d))


def calibrate_speed_floor(
    model: WeightModel,
    d: int,
    horizon: float,
    seed: int,
    quantile_level: float = 0.001,
) -> float:
    """Empirical lower constant for T(0, x) >= const * ||x||_1.

    Grows one ball and takes a low quantile of T / ||x||_1 over reached
    vertices beyond a short-range cutoff, discounted for safety.
    """
    from .weights import containment_constant

    m = containment_constant(model, d)
    box = LatticeBox(int(math.ceil(2 * m * horizon)))
    pf = compute_passage(EdgeWeightField(model, seed), box, horizon, d)
    times = pf.times.ravel()
    side = box.side()
    idx = np.flatnonzero(np.isfinite(times))
    l1 = np.zeros(len(idx), dtype=np.int64)
    for a in range(d):
        coord = (idx // side ** (d - 1 - a)) % side - box.radius
        l1 += np.abs(coord)
    far = l1 >= 8
    if not far.any():
        raise ValueError("horizon too small to reach past the cutoff")
    ratios = times[idx][far] / l1[far]
    return 0.9 * float(np.quantile(ratios, quantile_level))


def calibrate_stretch(
    threshold: float,
    model: WeightModel,
    d: int,
    radius: int,
    pairs: int,
    seed: int,
    quantile_level: float = 0.999,
) -> float:
    """Empirical upper constant for chemical distance over ||x - y||_inf
    within the largest cluster, padded for safety."""
    box = LatticeBox(radius)
    view = label_clusters(EdgeWeightField(model, seed), threshold, box, d)
    in_largest = np.flatnonzero(view.labels == 0)
    if len(in_largest) < 2:
        raise ValueError("largest cluster too small to sample pairs")
    rng = np.random.default_rng(seed)
    side = box.side()
    ratios = []
    attempts = 0
    while len(ratios) < pairs and attempts < 20 * pairs:
        attempts += 1
        i, j = rng.choice(in_largest, size=2, replace=False)
        x = box.vertex_at(int(i), d)
        y = box.vertex_at(int(j), d)
        gap = max(abs(a - b) for a, b in zip(x, y))
        if gap < 4:
            continue
        hops = chemical_distance(view, x, y)
        if hops is None:
            continue
        ratios.append(hops / gap)
    if len(ratios) < pairs:
        raise ValueError("could not collect enough usable pairs")
    return 1.1 * float(np.quantile(ratios, quantile_level))


# -- shielded independence -------------------------------------------------

_RING_2D = tuple(
    (dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if (dx, dy) != (0, 0)
)


def _ring_edge_slots(v: Vertex, box: LatticeBox) -> list[tuple[int, int]]:
    """The eight edges linking consecutive cells of v's star ring, as
    (axis, flat slot) pairs of the canonical grid layout."""
    cells = [(v[0] + dx, v[1] + dy) for dx, dy in _RING_2D]
    slots = set()
    for p in cells:
        for q in cells:
            if abs(p[0] - q[0]) + abs(p[1] - q[1]) != 1:
                continue
            base = min(p, q)
            axis = 0 if p[1] == q[1] else 1
            slots.add((axis, box.index(base)))
    return sorted(slots)


def _incident_slots(v: Vertex, box: LatticeBox, d: int) -> list[tuple[int, int]]:
    out = []
    for a in range(d):
        lower = tuple(c - 1 if i == a else c for i, c in enumerate(v))
        out.append((a, box.index(v)))
        out.append((a, box.index(lower)))
    return out


def _face_reach(open_grid: tuple[np.ndarray, np.ndarray], blocked: np.ndarray) -> np.ndarray:
    """Cells connected to the box face through open edges, never entering
    blocked cells.  Fixed-point propagation on the 2d masks."""
    a0, a1 = open_grid
    side = blocked.shape[0]
    allowed = ~blocked
    reach = np.zeros_like(allowed)
    reach[0, :] = allowed[0, :]
    reach[-1, :] = allowed[-1, :]
    reach[:, 0] |= allowed[:, 0]
    reach[:, -1] |= allowed[:, -1]
    while True:
        nxt = reach.copy()
        nxt[1:, :] |= reach[:-1, :] & a0[:-1, :]
        nxt[:-1, :] |= reach[1:, :] & a0[:-1, :]
        nxt[:, 1:] |= reach[:, :-1] & a1[:, :-1]
        nxt[:, :-1] |= reach[:, 1:] & a1[:, :-1]
        nxt &= allowed
        if (nxt == reach).all():
            return reach
        reach = nxt


@dataclass(frozen=True)
class ShieldReport:
    """Outcome of the fenced-count independence experiment."""

    replications: int
    event_count: int
    fenced_given_event: tuple[int, ...]
    fenced_without_event: tuple[int, ...]
    chi2_p: float
    slots_disjoint: bool
    flip_invariant: bool


def _chi2_p(table: np.ndarray) -> float:
    table = table[:, table.sum(axis=0) > 0]
    if table.shape[1] < 2 or (table.sum(axis=1) == 0).any():
        return 1.0
    while table.shape[1] > 2:
        total = table.sum()
        expected = np.outer(table.sum(axis=1), table.sum(axis=0)) / total
        if expected.min() >= 5:
            break
        j = int(np.argmin(table.sum(axis=0)))
        keep = [c for c in range(table.shape[1]) if c != j]
        nearest = keep[int(np.argmin([abs(c - j) for c in keep]))]
        table[:, nearest] += table[:, j]
        table = table[:, keep]
    return float(chi2_contingency(table, correction=False).pvalue)


def shielded_independence_check(
    replications: int = 10_000,
    base_seed: int = 0,
    rate: float = 1.0,
    threshold: float = 2.19,
    box_radius: int = 8,
) -> ShieldReport:
    """Verify that the heavily-fenced count over a chosen candidate set is
    statistically independent of selecting that set by a shielded event.

    The selection event only reads edges not incident to the chosen
    candidates: cluster connectivity is probed on the graph with those
    vertices deleted, and the ring condition reads edges one step away.
    Two guarantees are recorded per replication: the analytic slot sets
    stay disjoint, and flipping every candidate-incident edge leaves the
    event unchanged.  The chi-squared test then compares the fenced-count
    distribution with and without the event.
    """
    if replications < 100:
        raise ValueError("too few replications for a stable contingency test")
    d = 2
    model = Exponential(rate)
    heavy_cut = math.log(2.0) / (2 * d)
    box = LatticeBox(box_radius)
    side = box.side()
    ws = sorted(
        w
        for w in _grid_points(range(-3, 4, 3), 2)
        if max(abs(w[0]), abs(w[1])) == 3
    )
    vs = [(w[0] + 1, w[1]) for w in ws]
    chosen_idx = (0, 2, 5)
    chosen = [vs[i] for i in chosen_idx]
    target = np.array([i in chosen_idx for i in range(len(vs))])

    blocked = np.zeros((side, side), dtype=bool)
    for v in chosen:
        blocked[v[0] + box_radius, v[1] + box_radius] = True
    ring_slots = [_ring_edge_slots(v, box) for v in vs]
    seed_cells = [(w[0] + box_radius, w[1] + box_radius) for w in ws]
    chosen_slots = sorted(
        {s for v in chosen for s in _incident_slots(v, box, d)}
    )
    event_slot_set = set()
    for slots in ring_slots:
        event_slot_set.update(slots)
    flat_v = {box.index(v) for v in chosen}
    # graph slots: every in-box edge whose endpoints both avoid the chosen
    # vertices, enumerated via the layout stride
    for a in range(d):
        stride = side ** (d - 1 - a)
        for i in range(box.vertex_count(d)):
            coord = (i // stride) % side
            if coord == side - 1:
                continue
            if i in flat_v or (i + stride) in flat_v:
                continue
            event_slot_set.add((a, i))
    slots_disjoint = event_slot_set.isdisjoint(chosen_slots)

    def event_of(open_flat: np.ndarray) -> bool:
        a0 = open_flat[0].reshape(side, side)
        a1 = open_flat[1].reshape(side, side)
        reach = _face_reach((a0, a1), blocked)
        ok = np.empty(len(vs), dtype=bool)
        for i, v in enumerate(vs):
            escapes = reach[seed_cells[i]]
            ring_open = all(open_flat[a][s] for a, s in ring_slots[i])
            ok[i] = escapes and ring_open
        return bool((ok == target).all())

    flip_invariant = True
    n_events = 0
    hist = np.zeros((2, len(chosen) + 1), dtype=np.int64)
    for rep in range(replications):
        field = EdgeWeightField(model, seed_stream(base_seed, rep))
        table = field.grid_weights(box_radius, d)
        open_flat = table <= threshold
        happened = event_of(open_flat)
        flipped = open_flat.copy()
        for a, s in chosen_slots:
            flipped[a, s] = ~flipped[a, s]
        if event_of(flipped) != happened:
            flip_invariant = False
        fenced = 0
        for v in chosen:
            if all(table[a, s] > heavy_cut for a, s in _incident_slots(v, box, d)):
                fenced += 1
        n_events += int(happened)
        hist[int(happened), fenced] += 1
    p = _chi2_p(hist.astype(np.float64))
    return ShieldReport(
        replications=replications,
        event_count=n_events,
        fenced_given_event=tuple(int(x) for x in hist[1]),
        fenced_without_event=tuple(int(x) for x in hist[0]),
        chi2_p=p,
        slots_disjoint=slots_disjoint,
        flip_invariant=flip_invariant,
    )
