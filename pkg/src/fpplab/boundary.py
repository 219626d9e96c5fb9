"""Boundary analysis of the growing ball.

Three views of the ball's edge at a probe time s:

* the edge boundary, edges with exactly one endpoint in the ball, tracked
  exactly over all s at once by a piecewise-constant timeline;
* the exterior edge boundary, the subset whose outside endpoint escapes to
  the box face through the complement;
* holes, the complement components that do not escape.

Escape-to-face is an exact surrogate for escape-to-infinity as long as the
ball stays strictly inside the analyzed region, which every operation here
enforces before trusting a flood fill.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import ndimage

from .growth import GuardError, PassageField, require_containment
from .lattice import Edge, Vertex, edges_in_box


def edge_boundary_interval(e: Edge, pf: PassageField) -> tuple[float, float] | None:
    """Time interval during which e sits on the ball's edge boundary.

    The edge is on the boundary for s in [min(Tx,Ty), max(Tx,Ty)), clipped
    to [0, horizon].  An unreached endpoint pushes the right end to the
    horizon; equal times mean the edge is never on the boundary.
    """
    x, y = e.endpoints
    tx = pf.time_of(x)
    ty = pf.time_of(y)
    lo, hi = (tx, ty) if tx <= ty else (ty, tx)
    if not math.isfinite(lo):
        return None
    right = hi if math.isfinite(hi) else pf.horizon
    right = min(right, pf.horizon)
    if right <= lo:
        return None
    return (lo, right)


@dataclass(frozen=True)
class BoundaryTimeline:
    """Piecewise-constant s -> #(boundary edges of the ball at s).

    counts[i] holds on [breakpoints[i], breakpoints[i+1]), the last interval
    extending to the horizon.  Edges whose far endpoint was never reached
    stay counted through the horizon.
    """

    breakpoints: np.ndarray
    counts: np.ndarray
    horizon: float

    def __post_init__(self) -> None:
        if len(self.breakpoints) != len(self.counts) or len(self.counts) == 0:
            raise ValueError("breakpoints and counts must align and be nonempty")
        if self.breakpoints[0] != 0.0:
            raise ValueError("timeline must start at 0")
        if int(self.counts.min()) < 0:
            raise ValueError("negative boundary count")

    def count_at(self, s):
        s_arr = np.asarray(s, dtype=np.float64)
        if np.any(s_arr < 0) or np.any(s_arr > self.horizon):
            raise ValueError("probe time outside [0, horizon]")
        idx = np.searchsorted(self.breakpoints, s_arr, side="right") - 1
        out = self.counts[idx]
        return int(out) if np.isscalar(s) or s_arr.ndim == 0 else out

    def integral(self, upto: float | None = None) -> float:
        """Integral of the count over [0, upto] (default: the horizon)."""
        t = self.horizon if upto is None else upto
        if not 0 <= t <= self.horizon:
            raise ValueError("integration limit outside [0, horizon]")
        ends = np.minimum(np.append(self.breakpoints[1:], t), t)
        widths = np.maximum(ends - np.minimum(self.breakpoints, t), 0.0)
        return float(np.sum(self.counts * widths))

    def to_rows(self) -> list[tuple[float, float, int]]:
        """(s_lo, s_hi, count) rows, zero-width intervals dropped."""
        his = np.append(self.breakpoints[1:], self.horizon)
        return [
            (float(lo), float(hi), int(c))
            for lo, hi, c in zip(self.breakpoints, his, self.counts)
            if hi > lo
        ]


def _axis_interval_arrays(view: np.ndarray, d: int):
    """Per-axis (lo, hi, active) arrays for all edges inside the view.

    lo/hi are the sorted endpoint times of the edge from each cell to its
    +axis neighbor; active marks edges that spend any time on the boundary.
    """
    for a in range(d):
        sl0 = tuple(slice(0, -1) if i == a else slice(None) for i in range(d))
        sl1 = tuple(slice(1, None) if i == a else slice(None) for i in range(d))
        t0 = view[sl0]
        t1 = view[sl1]
        lo = np.minimum(t0, t1)
        hi = np.maximum(t0, t1)
        active = np.isfinite(lo) & (hi > lo)
        yield a, lo, hi, active


def boundary_timeline(
    pf: PassageField, containment: float | None = None
) -> BoundaryTimeline:
    """Exact edge-boundary counts for every s in [0, horizon].

    Each edge contributes +1 at the earlier endpoint time and -1 at the
    later one; an edge whose far endpoint stayed unreached never emits the
    -1, so the count at the horizon is exact.  Pass a containment constant
    to fail loudly when the ball escaped the trusted region.
    """
    if containment is not None:
        require_containment(pf, containment)
    view, _ = pf.crop(margin=1)
    starts = []
    ends = []
    for _, lo, hi, active in _axis_interval_arrays(view, pf.d):
        starts.append(lo[active])
        closed = active & np.isfinite(hi)
        ends.append(hi[closed])
    start_times = np.concatenate(starts) if starts else np.empty(0)
    end_times = np.concatenate(ends) if ends else np.empty(0)
    if len(start_times) == 0:
        return BoundaryTimeline(np.zeros(1), np.zeros(1, dtype=np.int64), pf.horizon)
    events = np.concatenate([start_times, end_times])
    deltas = np.concatenate(
        [np.ones(len(start_times)), -np.ones(len(end_times))]
    )
    uniq, inverse = np.unique(events, return_inverse=True)
    per_time = np.bincount(inverse, weights=deltas)
    counts = np.cumsum(per_time)
    counts = np.rint(counts).astype(np.int64)
    if uniq[0] > 0.0:
        uniq = np.concatenate([[0.0], uniq])
        counts = np.concatenate([[0], counts])
    return BoundaryTimeline(uniq, counts, pf.horizon)


def boundary_count_at(pf: PassageField, s: float) -> int:
    """#(edge boundary at s) by direct endpoint-membership comparison."""
    if not 0 <= s <= pf.horizon:
        raise ValueError("probe time outside [0, horizon]")
    view, _ = pf.crop(margin=1)
    total = 0
    for a in range(pf.d):
        sl0 = tuple(slice(0, -1) if i == a else slice(None) for i in range(pf.d))
        sl1 = tuple(slice(1, None) if i == a else slice(None) for i in range(pf.d))
        total += int(np.sum((view[sl0] <= s) != (view[sl1] <= s)))
    return total


def edge_boundary_at(pf: PassageField, s: float) -> frozenset[Edge]:
    """The boundary edge set at s, by scanning every edge of the box.

    Deliberately naive reference path; quadratic-feeling but obviously
    correct, for cross-checking the vectorized routes on small fixtures.
    """
    if not 0 <= s <= pf.horizon:
        raise ValueError("probe time outside [0, horizon]")
    out = []
    for e in edges_in_box(pf.box, pf.d):
        x, y = e.endpoints
        if (pf.time_of(x) <= s) != (pf.time_of(y) <= s):
            out.append(e)
    return frozenset(out)


@dataclass(frozen=True)
class RegionDecomposition:
    """Ball / escaping-complement / hole partition of the analyzed view.

    Masks live on a cropped window; offset maps window index 0 to absolute
    coordinates.  hole_labels carries the component id of every complement
    cell (0 on ball cells), with hole_ids listing the ids that never touch
    the window face.
    """

    ball: np.ndarray
    exterior: np.ndarray
    hole_labels: np.ndarray
    hole_ids: np.ndarray
    offset: np.ndarray

    @property
    def d(self) -> int:
        return self.ball.ndim


def _face_shell(shape: tuple[int, ...]) -> np.ndarray:
    shell = np.zeros(shape, dtype=bool)
    for a in range(len(shape)):
        sl_lo = tuple(0 if i == a else slice(None) for i in range(len(shape)))
        sl_hi = tuple(-1 if i == a else slice(None) for i in range(len(shape)))
        shell[sl_lo] = True
        shell[sl_hi] = True
    return shell


def decompose_complement(pf: PassageField, s: float) -> RegionDecomposition:
    """Split the view around B(s) into escaping complement and holes.

    A complement component reaching the window face escapes to infinity
    (walk outward from the face, never re-entering the ball); the rest are
    holes.  This is exact only while the ball sits strictly inside the
    window, so a ball cell on the face raises GuardError.
    """
    if not 0 <= s <= pf.horizon:
        raise ValueError("probe time outside [0, horizon]")
    view, offset = pf.crop(margin=1)
    ball = view <= s
    shell = _face_shell(ball.shape)
    if bool((ball & shell).any()):
        raise GuardError(
            f"ball at s={s} touches the analysis face; enlarge the box"
        )
    comp = ~ball
    structure = ndimage.generate_binary_structure(pf.d, 1)
    labels, n_comp = ndimage.label(comp, structure=structure)
    face_ids = np.unique(labels[shell])
    face_ids = face_ids[face_ids > 0]
    exterior = comp & np.isin(labels, face_ids)
    all_ids = np.arange(1, n_comp + 1)
    hole_ids = all_ids[~np.isin(all_ids, face_ids)]
    labels[exterior] = 0
    return RegionDecomposition(
        ball=ball, exterior=exterior, hole_labels=labels, hole_ids=hole_ids,
        offset=offset,
    )


@dataclass(frozen=True)
class ExteriorBoundary:
    """Exterior vertex and edge boundary of the ball at one probe time."""

    vertex_part: frozenset[Vertex]
    edge_part: frozenset[Edge]


def _mask_vertices(mask: np.ndarray, offset: np.ndarray) -> frozenset[Vertex]:
    coords = np.argwhere(mask) + offset
    return frozenset(tuple(int(c) for c in row) for row in coords)


def exterior_boundary_at(pf: PassageField, s: float) -> ExteriorBoundary:
    dec = decompose_complement(pf, s)
    structure = ndimage.generate_binary_structure(dec.d, 1)
    grown = ndimage.binary_dilation(dec.ball, structure=structure)
    vertex_part = _mask_vertices(grown & dec.exterior, dec.offset)
    edges: list[Edge] = []
    d = dec.d
    for a in range(d):
        sl0 = tuple(slice(0, -1) if i == a else slice(None) for i in range(d))
        sl1 = tuple(slice(1, None) if i == a else slice(None) for i in range(d))
        mixed = (dec.ball[sl0] & dec.exterior[sl1]) | (
            dec.exterior[sl0] & dec.ball[sl1]
        )
        for row in np.argwhere(mixed) + dec.offset:
            edges.append(Edge(tuple(int(c) for c in row), a))
    return ExteriorBoundary(vertex_part=vertex_part, edge_part=frozenset(edges))


def exterior_counts_at(pf: PassageField, s: float) -> tuple[int, int, int]:
    """(exterior edge count, hole count, size-one hole count) at s."""
    dec = decompose_complement(pf, s)
    d = dec.d
    ext_edges = 0
    for a in range(d):
        sl0 = tuple(slice(0, -1) if i == a else slice(None) for i in range(d))
        sl1 = tuple(slice(1, None) if i == a else slice(None) for i in range(d))
        ext_edges += int(np.sum(dec.ball[sl0] & dec.exterior[sl1]))
        ext_edges += int(np.sum(dec.exterior[sl0] & dec.ball[sl1]))
    if len(dec.hole_ids) == 0:
        return ext_edges, 0, 0
    sizes = np.bincount(dec.hole_labels.ravel())[dec.hole_ids]
    return ext_edges, len(dec.hole_ids), int(np.sum(sizes == 1))


@dataclass(frozen=True)
class HoleCensus:
    """Sizes and representatives of the finite complement components."""

    components: tuple[tuple[int, Vertex], ...]

    @property
    def count(self) -> int:
        return len(self.components)

    @property
    def size_one_count(self) -> int:
        return sum(1 for size, _ in self.components if size == 1)

    def total_size(self) -> int:
        return sum(size for size, _ in self.components)


def hole_census_at(pf: PassageField, s: float) -> HoleCensus:
    dec = decompose_complement(pf, s)
    if len(dec.hole_ids) == 0:
        return HoleCensus(components=())
    flat = dec.hole_labels.ravel()
    sizes = np.bincount(flat)
    uniq, first = np.unique(flat, return_index=True)
    first_of = dict(zip(uniq.tolist(), first.tolist()))
    comps = []
    for hid in dec.hole_ids.tolist():
        rep_idx = np.unravel_index(first_of[hid], dec.hole_labels.shape)
        rep = tuple(int(c + o) for c, o in zip(rep_idx, dec.offset))
        comps.append((int(sizes[hid]), rep))
    return HoleCensus(components=tuple(comps))


def _vectorize_psi(psi: Callable) -> Callable:
    try:
        probe = psi(np.array([0.5, 1.0]))
        if np.shape(probe) == (2,):
            return psi
    except (TypeError, ValueError):
        pass
    return np.vectorize(psi, otypes=[np.float64])


def rough_time_density(
    tl: BoundaryTimeline,
    a: float,
    psi: Callable,
    d: int,
    t: float | None = None,
) -> float:
    """Fraction of [0, t] where the count exceeds a * s^(d-1) * psi(s).

    The threshold curve is nondecreasing when psi is, so inside each
    constant-count interval the qualifying set is a prefix whose right end
    is found by lockstep bisection across all intervals at once.
    """
    if a <= 0:
        raise ValueError("threshold multiplier must be positive")
    t = tl.horizon if t is None else t
    if not 0 < t <= tl.horizon:
        raise ValueError("t outside (0, horizon]")
    psi_v = _vectorize_psi(psi)

    def g(s: np.ndarray) -> np.ndarray:
        return a * np.power(s, d - 1) * psi_v(s)

    keep = tl.breakpoints < t
    b = tl.breakpoints[keep]
    c = tl.counts[keep].astype(np.float64)
    e = np.minimum(np.append(b[1:], t), t)
    starts_ok = g(b) <= c
    full = starts_ok & (g(e) <= c)
    partial = starts_ok & ~full
    measure = float(np.sum((e - b)[full]))
    if partial.any():
        lo = b[partial].copy()
        hi = e[partial].copy()
        cp = c[partial]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            below = g(mid) <= cp
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        measure += float(np.sum(lo - b[partial]))
    return measure / t


def exterior_probe_rows(
    pf: PassageField, n_probes: int = 64, t: float | None = None
) -> np.ndarray:
    """Stratified exterior/hole counts: rows of (probe_s, exterior edge
    count, hole count, size-one hole count) at midpoints of n equal strata.
    """
    if n_probes < 1:
        raise ValueError("need at least one probe")
    t = pf.horizon if t is None else t
    rows = np.empty((n_probes, 4))
    for j in range(n_probes):
        s = (j + 0.5) * t / n_probes
        ext, holes, ones = exterior_counts_at(pf, s)
        rows[j] = (s, ext, holes, ones)
    return rows


def rough_density_from_probes(
    probe_s: np.ndarray,
    counts: np.ndarray,
    a: float,
    d: int,
    psi: Callable | None = None,
) -> float:
    """Riemann estimate of the rough-time density from stratified probes."""
    if a <= 0:
        raise ValueError("threshold multiplier must be positive")
    s = np.asarray(probe_s, dtype=np.float64)
    c = np.asarray(counts, dtype=np.float64)
    thresh = a * np.power(s, d - 1)
    if psi is not None:
        thresh = thresh * _vectorize_psi(psi)(s)
    return float(np.mean(c >= thresh))


@dataclass(frozen=True)
class ArrayIdentityReport:
    """Cross-check census: time-integral of the count vs summed per-edge
    interval lengths, plus the per-edge weight cap on each length."""

    integral: float
    interval_sum: float
    rel_error: float
    max_excess: float
    edges_checked: int
    rel_tol: float

    @property
    def ok(self) -> bool:
        return self.rel_error <= self.rel_tol and self.max_excess <= 0.0


def array_method_identity_check(
    pf: PassageField, rel_tol: float = 1e-9, weights: np.ndarray | None = None
) -> ArrayIdentityReport:
    """Verify that integrating the boundary count over time equals summing
    each edge's time on the boundary, and that no edge outstays its weight.

    The second check allows rel_tol of slack per unit weight: passage sums
    are floating point, so an interval can exceed its weight cap by a few
    ulps without indicating a real violation.
    """
    tl = boundary_timeline(pf)
    integral = tl.integral()
    view, offset = pf.crop(margin=1)
    total = 0.0
    bases = []
    axes = []
    lengths = []
    for a, lo, hi, active in _axis_interval_arrays(view, pf.d):
        right = np.minimum(hi, pf.horizon)
        seg = (right - lo)[active]
        total += float(seg.sum())
        lengths.append(seg)
        bases.append(np.argwhere(active) + offset)
        axes.append(np.full(len(seg), a, dtype=np.int64))
    interval_sum = total
    rel_error = abs(integral - interval_sum) / max(abs(integral), 1.0)
    all_bases = np.concatenate(bases) if bases else np.empty((0, pf.d), dtype=np.int64)
    all_axes = np.concatenate(axes) if axes else np.empty(0, dtype=np.int64)
    all_lengths = np.concatenate(lengths) if lengths else np.empty(0)
    if weights is not None:
        r = pf.box.radius
        side = pf.box.side()
        flat = np.zeros(len(all_bases), dtype=np.int64)
        for c in range(pf.d):
            flat = flat * side + (all_bases[:, c] + r)
        w = weights[all_axes, flat]
    elif pf.field is not None:
        w = pf.field.weights(all_bases, all_axes)
    else:
        raise ValueError("no weight source: field is synthetic and weights not given")
    cap = np.minimum(w, pf.horizon)
    slack = rel_tol * np.maximum(1.0, w)
    excess = all_lengths - cap - slack
    max_excess = float(excess.max()) if len(excess) else 0.0
    return ArrayIdentityReport(
        integral=integral,
        interval_sum=interval_sum,
        rel_error=rel_error,
        max_excess=max_excess,
        edges_checked=len(all_lengths),
        rel_tol=rel_tol,
    )


def isoperimetric_envelope(volume: int, d: int) -> tuple[float, float]:
    """Edge-boundary bounds for a finite set of the given cardinality:
    2d * volume^((d-1)/d) from the discrete isoperimetric inequality below,
    2d * volume from counting incident edges above."""
    if volume < 1:
        raise ValueError("volume must be positive")
    return 2 * d * volume ** ((d - 1) / d), 2 * d * float(volume)
