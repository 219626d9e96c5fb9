"""Experiment configuration and the recipe registry.

A run is a named recipe plus a flat key-value config.  Recipes write
delimited tables (and figures, on the report path) into an output
directory named by the config hash, so identical configs land in
identical files byte for byte.

Guard policy: replications whose ball escapes the trusted region are
excluded and counted; a run aborts when more than one percent fail,
because at that point the box calibration, not the sample, is suspect.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import figures, io
from .boundary import (
    boundary_count_at,
    boundary_timeline,
    exterior_counts_at,
    exterior_probe_rows,
)
from .contours import (
    enclosing_contour_count,
    star_animal_counts,
    star_contour_bound,
)
from .growth import GuardError, compute_passage, require_containment
from .lattice import LatticeBox, check_dim
from .percolation import shielded_independence_check
from .scaling import (
    ExponentFit,
    bernstein_experiment,
    fit_exponent,
    randomized_regularity_sweep,
    truncation_check,
)
from .weights import (
    EdgeWeightField,
    YStatistic,
    bound_ratio,
    containment_constant,
    parse_model,
    seed_stream,
)

MEMORY_BUDGET_BYTES = 2 * 1024**3
GUARD_FAILURE_LIMIT = 0.01


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat description of one run; every field round-trips through text."""

    recipe: str = "simulate"
    model: str = "exponential rate=1.0"
    d: int = 2
    horizons: tuple[float, ...] = (16.0,)
    replications: int = 1
    base_seed: int = 0
    probes: int = 64
    margin: float = 2.0
    contour_max: int = 6
    threads: int = 1
    out_dir: str = "runs"

    def __post_init__(self) -> None:
        check_dim(self.d)
        if not self.horizons or min(self.horizons) <= 0:
            raise ValueError("horizons must be a nonempty positive tuple")
        if self.replications < 1 or self.probes < 1 or self.threads < 1:
            raise ValueError("replications, probes, threads must be positive")
        if self.margin < 1.0:
            raise ValueError("margin below 1 defeats the containment guard")
        if self.contour_max < 1:
            raise ValueError("contour_max must be positive")

    def model_obj(self):
        return parse_model(self.model)

    def canonical_text(self) -> str:
        lines = [f"[{self.recipe}]"]
        for f in sorted(fields(self), key=lambda f: f.name):
            if f.name == "recipe":
                continue
            value = getattr(self, f.name)
            if f.name == "horizons":
                value = ",".join(repr(float(h)) for h in value)
            lines.append(f"{f.name} = {value}")
        return "\n".join(lines) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:12]

    def save(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.canonical_text())
        return path

    @classmethod
    def load(cls, path, recipe: str | None = None) -> "ExperimentConfig":
        parser = configparser.ConfigParser()
        with open(path) as f:
            parser.read_file(f)
        sections = parser.sections()
        if not sections:
            raise ValueError(f"{path} has no recipe sections")
        name = recipe or sections[0]
        if name not in sections:
            raise ValueError(f"recipe {name!r} not in {path} (has {sections})")
        raw = dict(parser[name])
        kwargs: dict = {"recipe": name}
        for f in fields(cls):
            if f.name == "recipe" or f.name not in raw:
                continue
            text = raw.pop(f.name)
            if f.name == "horizons":
                kwargs[f.name] = tuple(float(x) for x in text.split(",") if x)
            elif f.name in ("d", "replications", "base_seed", "probes",
                            "contour_max", "threads"):
                kwargs[f.name] = int(text)
            elif f.name == "margin":
                kwargs[f.name] = float(text)
            else:
                kwargs[f.name] = text
        if raw:
            raise ValueError(f"unknown config keys {sorted(raw)} in {path}")
        return cls(**kwargs)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)


def plan_box(config: ExperimentConfig, horizon: float) -> LatticeBox:
    """Box sized to margin * speed * horizon, with a memory preflight."""
    m = containment_constant(config.model_obj(), config.d)
    radius = int(math.ceil(config.margin * m * horizon))
    side = 2 * radius + 1
    needed = 4 * 8 * side**config.d
    if needed > MEMORY_BUDGET_BYTES:
        raise ValueError(
            f"box side {side}^{config.d} needs about {needed / 1e9:.1f} GB; "
            "reduce the horizon or margin"
        )
    return LatticeBox(radius)


class GuardTally:
    """Counts excluded replications and enforces the failure budget."""

    def __init__(self) -> None:
        self.total = 0
        self.failed = 0

    def record(self, ok: bool) -> None:
        self.total += 1
        self.failed += 0 if ok else 1

    def finalize(self) -> None:
        if self.total and self.failed / self.total > GUARD_FAILURE_LIMIT:
            raise RuntimeError(
                f"{self.failed} of {self.total} replications escaped the "
                "trusted region; the box calibration is suspect"
            )

    @property
    def used(self) -> int:
        return self.total - self.failed


@dataclass(frozen=True)
class RunRecord:
    """What one recipe run produced."""

    config: ExperimentConfig
    config_hash: str
    out_dir: Path
    outputs: tuple[Path, ...]
    summary: dict
    wall_time: float
    guard_failures: int


# -- library-level scans (recipes wrap these; tests call them directly) ----


def ball_statistic_scan(
    model,
    d: int,
    horizons,
    replications: int,
    base_seed: int,
    stat,
    margin: float = 2.0,
    threads: int = 1,
) -> tuple[np.ndarray, GuardTally]:
    """Per-time means of stat(pf, s) over guarded replications.

    One ball per replication, grown to the largest horizon; every grid
    time is read off the same passage field.  Sequential runs reuse one
    passage buffer; threaded runs trade that memory saving for overlap.
    """
    ts = sorted(float(t) for t in horizons)
    m = containment_constant(model, d)
    box = LatticeBox(int(math.ceil(margin * m * ts[-1])))
    tally = GuardTally()
    sums = np.zeros(len(ts))

    def measure(pf) -> np.ndarray | None:
        try:
            require_containment(pf, m)
        except GuardError:
            return None
        return np.asarray([stat(pf, s) for s in ts], dtype=np.float64)

    if threads == 1:
        out = None
        results = []
        for rep in range(replications):
            field = EdgeWeightField(model, seed_stream(base_seed, rep))
            pf = compute_passage(field, box, ts[-1], d, out=out)
            out = pf.times.reshape(-1)
            results.append(measure(pf))
    else:
        def worker(rep: int):
            field = EdgeWeightField(model, seed_stream(base_seed, rep))
            return measure(compute_passage(field, box, ts[-1], d))

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(worker, range(replications)))
    for res in results:
        tally.record(res is not None)
        if res is not None:
            sums += res
    tally.finalize()
    if tally.used == 0:
        raise RuntimeError("no replication survived the containment guard")
    means = sums / tally.used
    return np.column_stack([ts, means]), tally


def exponent_scan(
    model,
    d: int,
    horizons,
    replications: int,
    base_seed: int,
    margin: float = 2.0,
    threads: int = 1,
) -> tuple[list[tuple[float, float]], ExponentFit, GuardTally]:
    """Mean boundary-edge counts on a time grid, with a log-log fit."""
    table, tally = ball_statistic_scan(
        model, d, horizons, replications, base_seed,
        lambda pf, s: boundary_count_at(pf, s), margin, threads,
    )
    points = [(float(t), float(v)) for t, v in table]
    return points, fit_exponent(points), tally


def hole_scaling_scan(
    model,
    d: int,
    horizons,
    replications: int,
    base_seed: int,
    margin: float = 2.0,
    threads: int = 1,
) -> tuple[list[tuple[float, float, float]], GuardTally]:
    """Mean size-one hole counts per grid time against t^d * P(Y > t).

    Returns (t, mean count, reference) rows; the reference is the
    prediction the counts are supposed to track within a constant.
    """
    table, tally = ball_statistic_scan(
        model, d, horizons, replications, base_seed,
        lambda pf, s: exterior_counts_at(pf, s)[2], margin, threads,
    )
    ys = YStatistic(model, d)
    rows = [
        (float(t), float(v), float(t**d) * float(ys.tail(t)))
        for t, v in table
    ]
    return rows, tally


# -- recipes ---------------------------------------------------------------


def _run_simulate(cfg: ExperimentConfig, out: Path, render: bool):
    horizon = max(cfg.horizons)
    box = plan_box(cfg, horizon)
    model = cfg.model_obj()
    m = containment_constant(model, cfg.d)
    field = EdgeWeightField(model, seed_stream(cfg.base_seed, 0))
    pf = compute_passage(field, box, horizon, cfg.d)
    require_containment(pf, m)
    tl = boundary_timeline(pf)
    probes = exterior_probe_rows(pf, cfg.probes)
    h = cfg.config_hash()
    outputs = [
        io.write_csv(out / "ball_timeline.csv", ("s_lo", "s_hi", "count"),
                     tl.to_rows(), h),
        io.write_csv(
            out / "ball_probes.csv",
            ("probe_s", "ext_edge_count", "hole_count", "size1_holes"),
            [(float(r[0]), int(r[1]), int(r[2]), int(r[3])) for r in probes],
            h,
        ),
    ]
    if render:
        outputs.append(figures.save_timeline(
            out / "ball_timeline.png", tl, f"boundary edges, {cfg.model}"
        ))
        outputs.append(figures.save_probe_counts(
            out / "ball_probes.png", probes, f"complement census, {cfg.model}"
        ))
    summary = {
        "reached": pf.reached_count(),
        "final_boundary_edges": tl.count_at(horizon),
        "box_radius": box.radius,
    }
    return outputs, summary, 0


def _run_scan_exponent(cfg: ExperimentConfig, out: Path, render: bool):
    model = cfg.model_obj()
    points, fit, tally = exponent_scan(
        model, cfg.d, cfg.horizons, cfg.replications, cfg.base_seed,
        cfg.margin, cfg.threads,
    )
    h = cfg.config_hash()
    payload = fit.to_json(
        model=cfg.model,
        seed_range=(cfg.base_seed, cfg.base_seed + cfg.replications - 1),
    )
    outputs = [
        io.write_csv(
            out / "exponent_points.csv",
            ("t", "mean_edge_count", "replications_used"),
            [(t, v, tally.used) for t, v in points],
            h,
        ),
        io.write_json(out / "exponent_fit.json", payload),
    ]
    if render:
        outputs.append(figures.save_loglog_fit(
            out / "exponent_fit.png", fit, f"boundary growth, {cfg.model}"
        ))
    summary = {
        "slope": fit.slope,
        "stderr": fit.stderr,
        "r_squared": fit.r_squared,
        "excluded": tally.failed,
    }
    return outputs, summary, tally.failed


def _run_holes(cfg: ExperimentConfig, out: Path, render: bool):
    model = cfg.model_obj()
    rows, tally = hole_scaling_scan(
        model, cfg.d, cfg.horizons, cfg.replications, cfg.base_seed,
        cfg.margin, cfg.threads,
    )
    box = plan_box(cfg, max(cfg.horizons))
    field = EdgeWeightField(model, seed_stream(cfg.base_seed, 0))
    pf = compute_passage(field, box, max(cfg.horizons), cfg.d)
    probes = exterior_probe_rows(pf, cfg.probes)
    h = cfg.config_hash()
    scaled = [
        (t, mean, ref, (mean / ref if ref > 0 else math.nan))
        for t, mean, ref in rows
    ]
    outputs = [
        io.write_csv(
            out / "hole_scaling.csv",
            ("t", "mean_size1", "reference", "ratio"),
            scaled,
            h,
        ),
        io.write_csv(
            out / "hole_probes.csv",
            ("probe_s", "ext_edge_count", "hole_count", "size1_holes"),
            [(float(r[0]), int(r[1]), int(r[2]), int(r[3])) for r in probes],
            h,
        ),
    ]
    if render:
        outputs.append(figures.save_probe_counts(
            out / "hole_probes.png", probes, f"complement census, {cfg.model}"
        ))
    summary = {
        "size1_by_t": {repr(t): mean for t, mean, _, _ in scaled},
        "excluded": tally.failed,
    }
    return outputs, summary, tally.failed


def _run_contours(cfg: ExperimentConfig, out: Path, render: bool):
    counts = star_animal_counts(cfg.contour_max, cfg.d)
    h = cfg.config_hash()
    ns = sorted(counts)
    bound_rows = [
        (n, counts[n], star_contour_bound(n, cfg.d)) for n in ns
    ]
    enclosing_rows = []
    for n in range(1, min(cfg.contour_max, 5) + 1):
        enclosing_rows.append(
            (n, enclosing_contour_count(n, cfg.d), n * counts[n])
        )
    outputs = [
        io.write_csv(
            out / "contour_counts.csv",
            ("n", "exact_count", "counting_bound"),
            bound_rows,
            h,
        ),
        io.write_csv(
            out / "enclosing_counts.csv",
            ("n", "exact_count", "anchor_bound"),
            enclosing_rows,
            h,
        ),
    ]
    if render:
        outputs.append(figures.save_contour_counts(
            out / "contour_counts.png",
            ns,
            [counts[n] for n in ns],
            [star_contour_bound(n, cfg.d) for n in ns],
            f"origin-rooted star sets, d={cfg.d}",
        ))
    summary = {"counts": {str(n): counts[n] for n in ns}}
    return outputs, summary, 0


def _run_ratio_table(cfg: ExperimentConfig, out: Path, render: bool):
    model = cfg.model_obj()
    ys = YStatistic(model, cfg.d)
    rows = []
    for t in cfg.horizons:
        rb = bound_ratio(ys, t)
        rows.append((float(t), rb.lower, rb.upper, rb.ratio))
    h = cfg.config_hash()
    outputs = [
        io.write_csv(
            out / "ratio_table.csv", ("t", "lower", "upper", "ratio"), rows, h
        )
    ]
    if render:
        outputs.append(figures.save_ratio_curve(
            out / "ratio_table.png",
            [r[0] for r in rows],
            [r[1] for r in rows],
            [r[2] for r in rows],
            f"tail-mean comparison, {cfg.model}",
        ))
    summary = {"max_ratio": max(r[3] for r in rows)}
    return outputs, summary, 0


def _run_lemmas(cfg: ExperimentConfig, out: Path, render: bool):
    model = cfg.model_obj()
    reps = cfg.replications
    sweep = randomized_regularity_sweep(min(reps, 2000), cfg.base_seed, cfg.d)
    trunc = truncation_check(
        model, cfg.d, (100, 1000), 1.0, max(reps, 200), cfg.base_seed
    )
    bern = bernstein_experiment(
        model, cfg.d, 200, 2.0, (10.0, 20.0, 40.0), max(reps, 200), cfg.base_seed
    )
    shield = shielded_independence_check(
        max(min(reps, 2000), 100), cfg.base_seed
    )
    rows = [
        ("regularity_sweep_violations", float(sweep.violations), 0.0,
         sweep.passed),
        ("truncation_freq_monotone", 1.0 if trunc.nonincreasing else 0.0, 1.0,
         trunc.nonincreasing),
        ("bernstein_within_bound", 1.0 if bern.ok else 0.0, 1.0, bern.ok),
        ("shield_chi2_p", shield.chi2_p, 0.01,
         shield.chi2_p > 0.01 and shield.slots_disjoint),
    ]
    h = cfg.config_hash()
    outputs = [
        io.write_csv(
            out / "lemma_checks.csv",
            ("check", "statistic", "reference", "passed"),
            rows,
            h,
        ),
        io.write_json(out / "lemma_summary.json", {
            "regularity": {
                "instances": sweep.instances,
                "violations": sweep.violations,
                "min_slack": sweep.min_slack,
            },
            "truncation": {
                "n_values": list(trunc.n_values),
                "overshoot_freq": list(trunc.overshoot_freq),
            },
            "bernstein": {
                "deviations": list(bern.deviations),
                "empirical": list(bern.empirical),
                "bounds": list(bern.bounds),
            },
            "shield": {
                "events": shield.event_count,
                "chi2_p": shield.chi2_p,
                "slots_disjoint": shield.slots_disjoint,
                "flip_invariant": shield.flip_invariant,
            },
        }),
    ]
    summary = {"all_passed": all(r[3] for r in rows)}
    return outputs, summary, 0


def _run_report(cfg: ExperimentConfig, out: Path, render: bool):
    outputs = []
    summary = {}
    guard = 0
    for name in ("simulate", "scan-exponent", "holes", "ratio-table",
                 "contours"):
        sub = cfg.with_overrides(recipe=name)
        fn = RECIPES[name]
        o, s, g = fn(sub, out, True)
        outputs.extend(o)
        summary[name] = s
        guard += g
    outputs.append(io.write_json(out / "report_index.json", {
        "recipes": sorted(summary),
        "files": [p.name for p in outputs],
    }))
    return outputs, summary, guard


RECIPES = {
    "simulate": _run_simulate,
    "scan-exponent": _run_scan_exponent,
    "holes": _run_holes,
    "contours": _run_contours,
    "ratio-table": _run_ratio_table,
    "lemmas": _run_lemmas,
    "report": _run_report,
}

DEFAULT_CONFIGS = {
    "simulate": ExperimentConfig(recipe="simulate", horizons=(16.0,)),
    "scan-exponent": ExperimentConfig(
        recipe="scan-exponent", horizons=(8.0, 16.0, 32.0), replications=3
    ),
    "holes": ExperimentConfig(
        recipe="holes", horizons=(8.0, 16.0, 32.0), replications=3
    ),
    "contours": ExperimentConfig(recipe="contours", contour_max=6),
    "ratio-table": ExperimentConfig(
        recipe="ratio-table",
        model="tower levels=3 d=2",
        horizons=(2.9, 3.0, 9.0, 26.9, 27.0),
    ),
    "lemmas": ExperimentConfig(recipe="lemmas", replications=500),
    "report": ExperimentConfig(
        recipe="report", horizons=(8.0, 16.0), replications=2
    ),
}


def run_recipe(
    config: ExperimentConfig, out_dir=None, render: bool | None = None
) -> RunRecord:
    """Execute one recipe and collect its outputs.

    The output directory defaults to out_dir/<recipe>-<hash>, so identical
    configs always write to (and byte-identically overwrite) one place.
    """
    if config.recipe not in RECIPES:
        raise ValueError(f"unknown recipe {config.recipe!r}")
    base = Path(out_dir) if out_dir is not None else Path(config.out_dir)
    h = config.config_hash()
    out = base / f"{config.recipe}-{h}"
    out.mkdir(parents=True, exist_ok=True)
    if render is None:
        render = config.recipe == "report"
    t0 = time.perf_counter()
    outputs, summary, guard_failures = RECIPES[config.recipe](config, out, render)
    wall = time.perf_counter() - t0
    return RunRecord(
        config=config,
        config_hash=h,
        out_dir=out,
        outputs=tuple(outputs),
        summary=summary,
        wall_time=wall,
        guard_failures=guard_failures,
    )
