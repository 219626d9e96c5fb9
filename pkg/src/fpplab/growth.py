"""Growth engine: passage times from the origin and the adoption schedule.

compute_passage runs a lazy Dijkstra on a centered box, truncated at a
horizon.  Entries that the ball never reaches within the horizon keep an
explicit +inf sentinel rather than a fake large number, so comparisons with
probe times stay honest.  A pure-Python Bellman-Ford reimplementation with
no shared traversal code acts as the exact oracle.
"""
from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field as dataclass_field

import numpy as np

from . import _kernels
from .lattice import Edge, LatticeBox, Vertex, check_dim, neighbors
from .weights import EdgeWeightField, assert_subcritical_zero

_DUMP_MAGIC = b"FPPTIME1"


class GuardError(RuntimeError):
    """The ball reached territory a containment guard promised it would not."""


@dataclass(frozen=True)
class PassageField:
    """Passage times T(0, x) on a box, truncated at a horizon.

    times is the row-major (2r+1)^d array of passage times with +inf where
    T exceeds the horizon.  field is the weight environment that produced
    the table; synthetic fixtures may omit it.
    """

    box: LatticeBox
    d: int
    horizon: float
    times: np.ndarray
    field: EdgeWeightField | None = None

    @classmethod
    def from_times(
        cls,
        times: np.ndarray,
        horizon: float,
        field: EdgeWeightField | None = None,
    ) -> "PassageField":
        times = np.asarray(times, dtype=np.float64)
        d = times.ndim
        check_dim(d)
        side = times.shape[0]
        if any(s != side for s in times.shape) or side % 2 != 1:
            raise ValueError("times must be a centered hypercube with odd side")
        return cls(
            box=LatticeBox((side - 1) // 2), d=d, horizon=float(horizon), times=times, field=field
        )

    def time_of(self, v: Vertex) -> float:
        if len(v) != self.d:
            raise ValueError("vertex dimension mismatch")
        if not self.box.contains(v):
            raise ValueError(f"vertex {v} outside the computed box")
        return float(self.times[tuple(c + self.box.radius for c in v)])

    def reached_mask(self, s: float | None = None) -> np.ndarray:
        cutoff = self.horizon if s is None else s
        return self.times <= cutoff

    def reached_count(self, s: float | None = None) -> int:
        return int(self.reached_mask(s).sum())

    def crop(self, margin: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """View of the smallest subbox holding all reached cells plus margin.

        Returns (times view, offset) where offset maps subarray index 0 to an
        absolute coordinate.  The margin ring keeps every neighbor of a
        reached cell inside the view whenever the guard held.
        """
        finite = np.isfinite(self.times)
        if not finite.any():
            raise ValueError("no reached vertices to crop around")
        r = self.box.radius
        lo = np.empty(self.d, dtype=np.int64)
        hi = np.empty(self.d, dtype=np.int64)
        for a in range(self.d):
            axes = tuple(i for i in range(self.d) if i != a)
            proj = finite.any(axis=axes)
            nz = np.flatnonzero(proj)
            lo[a] = max(nz[0] - margin, 0)
            hi[a] = min(nz[-1] + margin, 2 * r)
        view = self.times[tuple(slice(int(l), int(h) + 1) for l, h in zip(lo, hi))]
        return view, lo - r


@dataclass(frozen=True)
class AdoptionSchedule:
    """Reached vertices ordered by (time, lexicographic vertex)."""

    d: int
    times: np.ndarray
    vertices: np.ndarray  # (n, d) int64

    def __len__(self) -> int:
        return len(self.times)

    @property
    def events(self) -> list[tuple[float, Vertex]]:
        return [
            (float(t), tuple(int(c) for c in v)) for t, v in zip(self.times, self.vertices)
        ]

    def prefix_set(self, s: float) -> set[Vertex]:
        cut = np.searchsorted(self.times, s, side="right")
        return {tuple(int(c) for c in v) for v in self.vertices[:cut]}


def compute_passage(
    field: EdgeWeightField,
    box: LatticeBox,
    horizon: float,
    d: int,
    out: np.ndarray | None = None,
) -> PassageField:
    """Passage times from the origin, restricted to the box.

    Paths are confined to the box, so values near the boundary are only
    trustworthy under a containment guard (check_containment).  Passing a
    preallocated flat array via out avoids churn across replications.
    """
    check_dim(d)
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ValueError("horizon must be finite and nonnegative")
    if box.radius == 0 and horizon > 0:
        raise ValueError("degenerate: radius-0 box cannot support growth")
    assert_subcritical_zero(field.model, d)
    n = box.vertex_count(d)
    if out is None:
        times = np.full(n, np.inf)
    else:
        if out.shape != (n,) or out.dtype != np.float64:
            raise ValueError("out buffer has the wrong shape or dtype")
        times = out
        times.fill(np.inf)
    seed_u = np.uint64(field.seed)
    code, params = field.model.kernel_spec()
    _kernels._dijkstra_field(d, box.radius, float(horizon), seed_u, code, params, times)
    shaped = times.reshape((box.side(),) * d)
    return PassageField(box=box, d=d, horizon=float(horizon), times=shaped, field=field)


def compute_passage_dense(
    weights: np.ndarray,
    box: LatticeBox,
    horizon: float,
    d: int,
    field: EdgeWeightField | None = None,
) -> PassageField:
    """Passage times from an explicit grid-weight table (fixtures, couplings).

    weights uses the (d, side^d) canonical layout of
    EdgeWeightField.grid_weights.
    """
    check_dim(d)
    n = box.vertex_count(d)
    if weights.shape != (d, n):
        raise ValueError("weights table does not match the box")
    if np.any(weights < 0):
        raise ValueError("negative edge weight")
    times = np.full(n, np.inf)
    _kernels._dijkstra_dense(d, box.radius, float(horizon), weights, times)
    shaped = times.reshape((box.side(),) * d)
    return PassageField(box=box, d=d, horizon=float(horizon), times=shaped, field=field)


def adoption_schedule(pf: PassageField) -> AdoptionSchedule:
    flat = pf.times.reshape(-1)
    reached = np.flatnonzero(np.isfinite(flat))
    t = flat[reached]
    side = pf.box.side()
    coords = np.empty((len(reached), pf.d), dtype=np.int64)
    rem = reached.copy()
    for a in range(pf.d - 1, -1, -1):
        coords[:, a] = rem % side - pf.box.radius
        rem //= side
    keys = tuple(coords[:, a] for a in range(pf.d - 1, -1, -1)) + (t,)
    order = np.lexsort(keys)
    return AdoptionSchedule(d=pf.d, times=t[order], vertices=coords[order])


def check_containment(pf: PassageField, m: float) -> bool:
    """Whether every reached vertex lies in S(ceil(m * horizon)).

    The box must already cover that region, otherwise the question is not
    decidable from the data and a ValueError is raised.
    """
    if not m > 0:
        raise ValueError("containment constant must be positive")
    limit = math.ceil(m * pf.horizon)
    if limit > pf.box.radius:
        raise ValueError(
            f"box radius {pf.box.radius} cannot certify containment at radius {limit}"
        )
    reached = np.isfinite(pf.times)
    if not reached.any():
        return True
    r = pf.box.radius
    idx = np.flatnonzero(reached.reshape(-1))
    side = pf.box.side()
    linf = np.zeros(len(idx), dtype=np.int64)
    rem = idx.copy()
    for _ in range(pf.d):
        c = rem % side - r
        np.maximum(linf, np.abs(c), out=linf)
        rem //= side
    return int(linf.max()) <= limit


def require_containment(pf: PassageField, m: float) -> None:
    if not check_containment(pf, m):
        raise GuardError(
            f"ball escaped S(ceil({m} * {pf.horizon})); statistics would be truncated"
        )


def passage_at_real_point(pf: PassageField, p: tuple[float, ...]) -> float:
    """T extended to real points: the value at the cell floor(p) + [0,1)^d."""
    if len(p) != pf.d:
        raise ValueError("point dimension mismatch")
    cell = tuple(int(math.floor(c)) for c in p)
    return pf.time_of(cell)


def bellman_ford_reference(
    field: EdgeWeightField, box: LatticeBox, horizon: float, d: int
) -> np.ndarray:
    """Exact reference passage times by relaxation to a fixed point.

    Deliberately naive: dict-of-vertices sweeps with no heap, no pruning,
    sharing only the weight environment with the engine.  Entries above the
    horizon are replaced by +inf to match the engine's truncation contract.
    """
    check_dim(d)
    assert_subcritical_zero(field.model, d)
    verts = list(box.vertices(d))
    weight_of: dict[tuple[Vertex, Vertex], float] = {}
    for v in verts:
        for u in neighbors(v):
            if box.contains(u):
                weight_of[(v, u)] = field.weight(Edge.between(v, u))
    dist: dict[Vertex, float] = {v: math.inf for v in verts}
    dist[(0,) * d] = 0.0
    changed = True
    while changed:
        changed = False
        for v in verts:
            dv = dist[v]
            if not math.isfinite(dv):
                continue
            for u in neighbors(v):
                if not box.contains(u):
                    continue
                cand = dv + weight_of[(v, u)]
                if cand < dist[u]:
                    dist[u] = cand
                    changed = True
    side = box.side()
    out = np.full((side,) * d, np.inf)
    for v, t in dist.items():
        if t <= horizon:
            out[tuple(c + box.radius for c in v)] = t
    return out


def _model_digest(field: EdgeWeightField) -> bytes:
    return hashlib.sha256(field.model.descriptor().encode()).digest()[:16]


def dump_passage(pf: PassageField, path) -> None:
    """Cache a passage table: fixed header, then row-major float64 payload.

    Unreached entries are stored as NaN; the in-memory sentinel +inf is
    restored on load.
    """
    if pf.field is None:
        raise ValueError("cannot dump a synthetic field without provenance")
    header = struct.pack(
        "<8sIId Q16s",
        _DUMP_MAGIC,
        pf.d,
        pf.box.radius,
        pf.horizon,
        pf.field.seed,
        _model_digest(pf.field),
    )
    payload = np.where(np.isfinite(pf.times), pf.times, np.nan)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.astype("<f8").tobytes())


def load_passage(path, field: EdgeWeightField | None = None) -> PassageField:
    """Load a cached passage table, verifying provenance when field is given."""
    with open(path, "rb") as fh:
        header = fh.read(struct.calcsize("<8sIId Q16s"))
        magic, d, radius, horizon, seed, digest = struct.unpack("<8sIId Q16s", header)
        if magic != _DUMP_MAGIC:
            raise ValueError("not a passage dump")
        if field is not None:
            if field.seed != seed or _model_digest(field) != digest:
                raise ValueError("dump provenance does not match the supplied field")
        raw = np.frombuffer(fh.read(), dtype="<f8")
    side = 2 * radius + 1
    times = raw.reshape((side,) * d).copy()
    times[~np.isfinite(times)] = np.inf
    return PassageField(
        box=LatticeBox(radius), d=d, horizon=horizon, times=times, field=field
    )
