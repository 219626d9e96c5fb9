"""Scaling laws and concentration checks.

Four independent instruments share this module: a verifier for the
averaged bound on rough times (step profiles whose running integral is
controlled spend little time above a matching threshold curve), a
truncated-sum concentration experiment with its explicit exponential
bound, log-log exponent fitting, and a sector decomposition of a planar
annulus used to localize boundary counts by direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .boundary import BoundaryTimeline, rough_time_density
from .growth import PassageField, passage_at_real_point
from .lattice import check_dim
from .weights import (
    BernoulliZero,
    Dirac,
    ParetoEdgeTail,
    TowerTail,
    Uniform,
    WeightModel,
    YStatistic,
)


class HypothesisError(ValueError):
    """An input profile fails the requirements of the averaged bound."""


class CoverageError(RuntimeError):
    """A sector decomposition misses part of its annulus."""


@dataclass(frozen=True)
class RegularityCheck:
    """One evaluation of the rough-time density bound."""

    measured: float
    bound: float
    a: float
    t: float
    s0: float
    c_ratio: float

    @property
    def passed(self) -> bool:
        return self.measured <= self.bound + 1e-12


def _as_timeline(phi, t: float) -> BoundaryTimeline | None:
    if isinstance(phi, BoundaryTimeline):
        return phi
    if isinstance(phi, tuple) and len(phi) == 2:
        b = np.asarray(phi[0], dtype=np.float64)
        v = np.asarray(phi[1])
        return BoundaryTimeline(b, v, t)
    return None


def regularity_bound_check(
    phi,
    psi: Callable,
    c_ratio: float,
    s0: float,
    a: float,
    d: int,
    t: float,
    grid: int = 4096,
) -> RegularityCheck:
    """Check the averaged bound: the fraction of [0, t] where phi meets or
    exceeds a * s^(d-1) * psi(s) is at most 2*s0/t + 2^(d+1)*c_ratio/a.

    phi may be a boundary timeline, a (breakpoints, values) step pair, or a
    plain callable (then densities are midpoint estimates).  Hypotheses are
    enforced, not assumed: psi must be positive, nondecreasing, and at most
    doubling on [0, t], and the running integral of phi up to tau must stay
    below c_ratio * tau^d * psi(tau) for every probed tau past s0.
    """
    check_dim(d)
    if min(a, t, c_ratio) <= 0 or s0 < 0:
        raise ValueError("a, t, c_ratio must be positive and s0 nonnegative")
    psi_grid = np.linspace(t / grid, t, grid)
    psi_vals = np.asarray([float(psi(s)) for s in psi_grid])
    if np.any(psi_vals <= 0):
        raise HypothesisError("psi must be positive on (0, t]")
    if np.any(np.diff(psi_vals) < -1e-12 * psi_vals[:-1]):
        raise HypothesisError("psi must be nondecreasing on (0, t]")
    half = psi_grid <= t / 2
    doubled = np.asarray([float(psi(2 * s)) for s in psi_grid[half]])
    if np.any(doubled > 2 * psi_vals[half] * (1 + 1e-12)):
        raise HypothesisError("psi must satisfy psi(2s) <= 2 psi(s)")

    tl = _as_timeline(phi, t)
    taus = psi_grid[psi_grid > s0]
    if tl is not None:
        integrals = np.asarray([tl.integral(min(tau, tl.horizon)) for tau in taus])
    else:
        mids = psi_grid - t / (2 * grid)
        phi_mid = np.asarray([float(phi(s)) for s in mids])
        if np.any(phi_mid < 0):
            raise HypothesisError("phi must be nonnegative")
        cum = np.cumsum(phi_mid) * (t / grid)
        integrals = cum[psi_grid > s0]
    caps = c_ratio * taus**d * np.asarray([float(psi(s)) for s in taus])
    if np.any(integrals > caps * (1 + 1e-9)):
        raise HypothesisError(
            "running integral of phi exceeds c_ratio * tau^d * psi(tau)"
        )

    if tl is not None:
        measured = rough_time_density(tl, a, psi, d, t=min(t, tl.horizon))
    else:
        mids = psi_grid - t / (2 * grid)
        thresh = a * mids ** (d - 1) * np.asarray([float(psi(s)) for s in mids])
        measured = float(np.mean(phi_mid >= thresh))
    bound = 2 * s0 / t + 2 ** (d + 1) * c_ratio / a
    return RegularityCheck(
        measured=measured, bound=bound, a=a, t=t, s0=s0, c_ratio=c_ratio
    )


@dataclass(frozen=True)
class SweepReport:
    """Randomized regularity sweep summary."""

    instances: int
    violations: int
    max_density: float
    min_slack: float

    @property
    def passed(self) -> bool:
        return self.violations == 0


def randomized_regularity_sweep(
    instances: int, seed: int, d: int = 2, breakpoints: int = 32
) -> SweepReport:
    """Stress the averaged bound on random admissible step profiles.

    Each instance draws a log-uniform step profile and a doubling-safe psi
    of the form (1 + s)^gamma, sets c_ratio to the profile's own worst
    integral ratio past s0 (so the hypothesis holds by construction), then
    picks the threshold multiplier a = 2^(d+1) * c_ratio / u with u drawn
    in (0, 1).  That keeps the asserted bound below 2 s0 / t + 1, so the
    check has teeth instead of comparing densities against slack far above
    one.  The bound must hold every time; a violation is a defect.
    """
    check_dim(d)
    rng = np.random.default_rng(seed)
    violations = 0
    max_density = 0.0
    min_slack = math.inf
    for _ in range(instances):
        t = float(rng.uniform(8.0, 128.0))
        s0 = float(rng.uniform(t / 64, t / 8))
        gamma = float(rng.uniform(0.0, 1.0))
        b = np.concatenate([[0.0], np.sort(rng.uniform(0.0, t, breakpoints - 1))])
        v = np.floor(np.exp(rng.uniform(0.0, 14.0, breakpoints))).astype(np.int64)
        tl = BoundaryTimeline(b, v, t)

        def psi(s, gamma=gamma):
            return (1.0 + s) ** gamma

        taus = np.linspace(t / 512, t, 512)
        taus = np.unique(np.concatenate([taus, b[b > 0]]))
        taus = taus[taus > s0]
        ints = np.asarray([tl.integral(tau) for tau in taus])
        ratios = ints / (taus**d * (1.0 + taus) ** gamma)
        c_ratio = max(float(ratios.max()) * 1.001, 1e-9)
        u = float(rng.uniform(0.05, 0.9))
        a = 2 ** (d + 1) * c_ratio / u
        chk = regularity_bound_check(tl, psi, c_ratio, s0, a, d, t, grid=512)
        max_density = max(max_density, chk.measured)
        min_slack = min(min_slack, chk.bound - chk.measured)
        if not chk.passed:
            violations += 1
    return SweepReport(
        instances=instances,
        violations=violations,
        max_density=max_density,
        min_slack=min_slack,
    )


def bernstein_bound(deviation: float, max_term: float, variance_sum: float) -> float:
    """Exponential tail bound for a centered sum of bounded terms:
    2 exp(-u^2 / (2 (V + b u / 3))), clipped to 1."""
    if deviation < 0:
        raise ValueError("deviation must be nonnegative")
    if max_term <= 0 or variance_sum < 0:
        raise ValueError("max_term must be positive, variance_sum nonnegative")
    if deviation == 0:
        return 1.0
    expo = deviation**2 / (2.0 * (variance_sum + max_term * deviation / 3.0))
    return min(2.0 * math.exp(-expo), 1.0)


def _model_knots(model: WeightModel) -> list[float]:
    if isinstance(model, Dirac):
        return [model.value]
    if isinstance(model, BernoulliZero):
        return [model.high]
    if isinstance(model, Uniform):
        return [model.lo, model.hi]
    if isinstance(model, ParetoEdgeTail):
        return [model.floor]
    if isinstance(model, TowerTail):
        return model.atoms()
    return []


def second_moment_truncated(ys: YStatistic, cap: float) -> float:
    """E[(Y ^ cap)^2] by quadrature of 2 y P(Y > y) over [0, cap]."""
    if cap < 0:
        raise ValueError("cap must be nonnegative")
    if cap == 0:
        return 0.0
    pts = [k for k in _model_knots(ys.model) if 0 < k < cap]
    val, _ = integrate.quad(
        lambda y: 2.0 * y * float(ys.tail(y)), 0.0, cap, points=pts or None,
        limit=200,
    )
    return float(val)


@dataclass(frozen=True)
class BernsteinReport:
    """Empirical deviation frequencies next to their explicit bound."""

    deviations: tuple[float, ...]
    empirical: tuple[float, ...]
    bounds: tuple[float, ...]
    n_terms: int
    replications: int

    @property
    def ok(self) -> bool:
        return all(e <= b for e, b in zip(self.empirical, self.bounds))


def bernstein_experiment(
    model: WeightModel,
    d: int,
    n_terms: int,
    cap: float,
    deviations: Sequence[float],
    replications: int,
    seed: int,
) -> BernsteinReport:
    """Measure P(|sum - mean| >= u) for capped vertex minima against the
    explicit exponential bound with b = cap and the summed second moment."""
    ys = YStatistic(model, d)
    mean_z = float(ys.expected_truncated(cap))
    var_sum = n_terms * second_moment_truncated(ys, cap)
    rng = np.random.default_rng(seed)
    sums = np.empty(replications)
    block = max(1, 10_000_000 // max(n_terms, 1))
    done = 0
    while done < replications:
        take = min(block, replications - done)
        z = np.minimum(ys.sample(rng, take * n_terms), cap).reshape(take, n_terms)
        sums[done : done + take] = z.sum(axis=1)
        done += take
    dev = np.abs(sums - n_terms * mean_z)
    empirical = tuple(float(np.mean(dev >= u)) for u in deviations)
    bounds = tuple(bernstein_bound(float(u), cap, var_sum) for u in deviations)
    return BernsteinReport(
        deviations=tuple(float(u) for u in deviations),
        empirical=empirical,
        bounds=bounds,
        n_terms=n_terms,
        replications=replications,
    )


@dataclass(frozen=True)
class TruncationReport:
    """Capped-sum overshoot frequencies across sample sizes.

    A sum overshoots when it exceeds twice its expectation.  cap_rule(n)
    scaled by n^(1/d) fixes each cap; the overshoot frequency should fall
    as n grows."""

    n_values: tuple[int, ...]
    caps: tuple[float, ...]
    overshoot_freq: tuple[float, ...]
    mean_gap_sigmas: tuple[float, ...]

    @property
    def nonincreasing(self) -> bool:
        f = self.overshoot_freq
        return all(f[i + 1] <= f[i] for i in range(len(f) - 1))


def truncation_check(
    model: WeightModel,
    d: int,
    n_values: Sequence[int],
    cap_rule: Callable[[int], float] | float,
    replications: int,
    seed: int,
) -> TruncationReport:
    """Estimate how often a capped vertex-minimum sum exceeds twice its
    closed-form mean, for each sample size n with cap cap_rule(n) * n^(1/d).

    Also reports, per n, the Monte Carlo mean's distance from the closed
    form in standard-error units, a consistency control on the sampler.
    """
    ys = YStatistic(model, d)
    rng = np.random.default_rng(seed)
    freqs = []
    caps = []
    gaps = []
    for n in n_values:
        if n < 1:
            raise ValueError("sample sizes must be positive")
        c_n = cap_rule(n) if callable(cap_rule) else float(cap_rule)
        if c_n < 0:
            raise ValueError("cap_rule must be nonnegative")
        cap = c_n * n ** (1.0 / d)
        mean_z = float(ys.expected_truncated(cap))
        sums = np.empty(replications)
        block = max(1, 10_000_000 // n)
        done = 0
        while done < replications:
            take = min(block, replications - done)
            z = np.minimum(ys.sample(rng, take * n), cap).reshape(take, n)
            sums[done : done + take] = z.sum(axis=1)
            done += take
        freqs.append(float(np.mean(sums > 2.0 * n * mean_z)))
        caps.append(cap)
        se = float(np.std(sums, ddof=1)) / math.sqrt(replications)
        gaps.append(abs(float(np.mean(sums)) - n * mean_z) / max(se, 1e-300))
    return TruncationReport(
        n_values=tuple(int(n) for n in n_values),
        caps=tuple(caps),
        overshoot_freq=tuple(freqs),
        mean_gap_sigmas=tuple(gaps),
    )


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares slope of log(value) against log(t)."""

    points: tuple[tuple[float, float], ...]
    slope: float
    intercept: float
    stderr: float
    r_squared: float

    def to_json(self, model: str, seed_range: tuple[int, int]) -> dict:
        return {
            "points": [[t, v] for t, v in self.points],
            "slope": self.slope,
            "stderr": self.stderr,
            "r_squared": self.r_squared,
            "model": model,
            "seed_range": list(seed_range),
        }


def fit_exponent(points: Sequence[tuple[float, float]]) -> ExponentFit:
    """Fit value ~ t^slope through positive (t, value) pairs."""
    if len(points) < 3:
        raise ValueError("need at least three points for a slope with error")
    t = np.asarray([p[0] for p in points], dtype=np.float64)
    v = np.asarray([p[1] for p in points], dtype=np.float64)
    if np.any(t <= 0) or np.any(v <= 0):
        raise ValueError("points must be strictly positive for a log-log fit")
    x = np.log(t)
    y = np.log(v)
    xm = x - x.mean()
    denom = float(np.sum(xm * xm))
    if denom == 0.0:
        raise ValueError("need at least two distinct t values")
    slope = float(np.sum(xm * y) / denom)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    dof = len(points) - 2
    sigma2 = float(np.sum(resid * resid)) / dof
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid * resid)) / ss_tot
    return ExponentFit(
        points=tuple((float(a), float(b)) for a, b in points),
        slope=slope,
        intercept=intercept,
        stderr=math.sqrt(sigma2 / denom),
        r_squared=r2,
    )


@dataclass(frozen=True)
class ShapeDisk:
    """Euclidean-disk stand-in for the limit shape, radius_scale per unit
    time."""

    radius_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.radius_scale <= 0:
            raise ValueError("radius_scale must be positive")


@dataclass(frozen=True)
class SectorDecomposition:
    """Ray fan over the doubled-time disk, with a fluctuation annulus.

    Rays are full half-lines from the origin, spaced at most half a unit
    apart in arc length on the circle bounding the coverage disk.  That
    spacing forces every unit cell whose closure lies inside the disk to
    be crossed by at least one ray: the cell subtends an angular window of
    width at least 1/disk_radius, twice the angular step.
    """

    t: float
    disk_radius: float
    ray_count: int
    inner: float
    outer: float

    @property
    def ray_angles(self) -> np.ndarray:
        return np.arange(self.ray_count) * (2 * math.pi / self.ray_count)


def build_sectors(t: float, shape: ShapeDisk, c: float = 1.0) -> SectorDecomposition:
    """Sector decomposition of the fluctuation annulus at time t.

    The coverage disk doubles the horizon (radius 2t before shape scaling)
    so the annulus radii rho * (t -+ c * sqrt(t) * log t) sit well inside;
    the ray count is the disk circumference divided by the half-unit
    spacing target.
    """
    if t < 8:
        raise ValueError("t must be at least 8 for a meaningful annulus")
    if c <= 0:
        raise ValueError("c must be positive")
    rho = shape.radius_scale
    disk_radius = 2.0 * t * rho
    fluct = c * math.sqrt(t) * math.log(t)
    inner = max(rho * (t - fluct), 0.0)
    outer = rho * (t + fluct)
    ray_count = int(math.ceil(4 * math.pi * disk_radius))
    return SectorDecomposition(
        t=float(t),
        disk_radius=disk_radius,
        ray_count=ray_count,
        inner=inner,
        outer=outer,
    )


def _ray_hits_cube(
    theta: float, ax: float, ay: float, r_lo: float = 0.0, r_hi: float = math.inf
) -> bool:
    """Does {r*(cos theta, sin theta): r_lo <= r <= r_hi} meet the half-open
    cube [ax, ax+1) x [ay, ay+1)?

    Positive-length crossings of the closed cube pass through its interior,
    so they always count; zero-length grazes fall back to an exact
    half-open membership test of the single touch point.
    """
    ux = math.cos(theta)
    uy = math.sin(theta)
    lo, hi = r_lo, r_hi
    for u, c0 in ((ux, ax), (uy, ay)):
        if u == 0.0:
            # this coordinate is identically zero along the ray
            if not c0 <= 0.0 < c0 + 1.0:
                return False
            continue
        r0 = c0 / u
        r1 = (c0 + 1.0) / u
        if r0 > r1:
            r0, r1 = r1, r0
        lo = max(lo, r0)
        hi = min(hi, r1)
        if hi < lo:
            return False
    if hi > lo:
        return True
    px = lo * ux
    py = lo * uy
    return ax <= px < ax + 1.0 and ay <= py < ay + 1.0


def _candidate_rays(dec: SectorDecomposition, ax: int, ay: int) -> range:
    """Index range of rays whose angle can meet the cube at (ax, ay).

    Derived from the corner angles relative to the center direction; cubes
    hugging the origin just scan the whole fan.
    """
    near_x = min(abs(ax), abs(ax + 1)) if ax * (ax + 1) > 0 else 0
    near_y = min(abs(ay), abs(ay + 1)) if ay * (ay + 1) > 0 else 0
    if math.hypot(near_x, near_y) < 2.0:
        return range(dec.ray_count)
    step = 2 * math.pi / dec.ray_count
    center = math.atan2(ay + 0.5, ax + 0.5)
    rel_lo = 0.0
    rel_hi = 0.0
    for cx in (float(ax), ax + 1.0):
        for cy in (float(ay), ay + 1.0):
            rel = (math.atan2(cy, cx) - center + math.pi) % (2 * math.pi) - math.pi
            rel_lo = min(rel_lo, rel)
            rel_hi = max(rel_hi, rel)
    k0 = math.floor((center + rel_lo) / step) - 1
    k1 = math.ceil((center + rel_hi) / step) + 1
    return range(k0, k1 + 1)


def verify_sector_coverage(dec: SectorDecomposition) -> int:
    """Prove by enumeration that the ray fan covers the coverage disk.

    Every unit cell whose closure lies inside the disk must meet at least
    one full ray; returns the number of cells checked and raises
    CoverageError on the first miss.
    """
    reach = int(math.ceil(dec.disk_radius)) + 1
    checked = 0
    for ax in range(-reach, reach):
        for ay in range(-reach, reach):
            far = math.hypot(max(abs(ax), abs(ax + 1)), max(abs(ay), abs(ay + 1)))
            if far > dec.disk_radius:
                continue
            checked += 1
            step = 2 * math.pi / dec.ray_count
            hit = any(
                _ray_hits_cube((k % dec.ray_count) * step, ax, ay)
                for k in _candidate_rays(dec, ax, ay)
            )
            if not hit:
                raise CoverageError(f"cell ({ax}, {ay}) missed by every ray")
    return checked


@dataclass(frozen=True)
class SectorProfile:
    """Boundary edges of one ball tallied per ray sector.

    A sector collects the edges with an endpoint whose cell meets that
    ray's annulus segment, so one edge can land in several sectors and
    counts.sum() can exceed in_annulus."""

    counts: np.ndarray
    escaped: int
    total: int

    @property
    def in_annulus(self) -> int:
        return self.total - self.escaped


def sector_boundary_profile(
    pf: PassageField, dec: SectorDecomposition, s: float
) -> SectorProfile:
    """Tally the boundary edges at time s against the annulus sectors.

    An endpoint joins sector i when the point itself lies in the closed
    annulus and its half-open unit cell meets ray i clipped to the
    annulus; edges with no such endpoint are escaped.
    """
    if pf.d != 2:
        raise ValueError("sector profiles are planar")
    view, offset = pf.crop(margin=1)
    step = 2 * math.pi / dec.ray_count
    counts = np.zeros(dec.ray_count, dtype=np.int64)
    edges: list[tuple[tuple[int, int], tuple[int, int]]] = []
    for a in range(2):
        sl0 = tuple(slice(0, -1) if i == a else slice(None) for i in range(2))
        sl1 = tuple(slice(1, None) if i == a else slice(None) for i in range(2))
        mixed = (view[sl0] <= s) != (view[sl1] <= s)
        for base in np.argwhere(mixed) + offset:
            u = (int(base[0]), int(base[1]))
            v = (u[0] + 1, u[1]) if a == 0 else (u[0], u[1] + 1)
            edges.append((u, v))
    sectors_of: dict[tuple[int, int], frozenset[int]] = {}

    def vertex_sectors(y: tuple[int, int]) -> frozenset[int]:
        cached = sectors_of.get(y)
        if cached is not None:
            return cached
        if not dec.inner <= math.hypot(*y) <= dec.outer:
            out: frozenset[int] = frozenset()
        else:
            out = frozenset(
                k % dec.ray_count
                for k in _candidate_rays(dec, y[0], y[1])
                if _ray_hits_cube(
                    (k % dec.ray_count) * step, y[0], y[1], dec.inner, dec.outer
                )
            )
        sectors_of[y] = out
        return out

    escaped = 0
    for u, v in edges:
        hit = vertex_sectors(u) | vertex_sectors(v)
        if not hit:
            escaped += 1
            continue
        for k in hit:
            counts[k] += 1
    return SectorProfile(counts=counts, escaped=escaped, total=len(edges))


def directional_increment(
    pf: PassageField, direction: tuple[float, ...], k: float, l: float
) -> float:
    """T(0, k * direction) - T(0, l * direction), at floor-cell real points.

    Unreached points are an error: the caller must grow far enough first.
    """
    if not 0 <= l <= k:
        raise ValueError("need 0 <= l <= k")
    far = passage_at_real_point(pf, tuple(k * c for c in direction))
    near = passage_at_real_point(pf, tuple(l * c for c in direction))
    if not (math.isfinite(far) and math.isfinite(near)):
        raise ValueError("direction point unreached at this horizon")
    return far - near
