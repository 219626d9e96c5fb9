"""Edge-weight models and the deterministic weight field.

Six model families cover the regimes the lab measures: light tails, point
masses, an atom at zero, polynomial tails, and iterated-exponential tower
tails.  Each model knows its cdf in closed form; quantiles are evaluated by
the compiled kernel so that sampling has a single source of truth.

Y denotes the minimum of the 2d weights at a vertex.  Its tail and the
truncated mean E[Y ^ t] drive every boundary-size prediction, so both come
with closed forms here and a quadrature cross-check in the tests.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels
from .lattice import PC_BOND, Edge, check_dim

_MASK64 = (1 << 64) - 1


def _as_float_array(t):
    return np.asarray(t, dtype=np.float64)


@dataclass(frozen=True)
class Exponential:
    """Rate-lambda exponential weights."""

    rate: float = 1.0

    def __post_init__(self) -> None:
        if not self.rate > 0:
            raise ValueError("rate must be positive")

    zero_mass = 0.0

    def cdf(self, y):
        y = _as_float_array(y)
        return np.where(y < 0, 0.0, -np.expm1(-self.rate * y))

    def kernel_spec(self):
        return _kernels.CODE_EXPONENTIAL, np.array([self.rate, 0.0])

    def min_support(self) -> float:
        return 0.0

    def descriptor(self) -> str:
        return f"exponential rate={self.rate!r}"


@dataclass(frozen=True)
class Uniform:
    """Uniform weights on [lo, hi]."""

    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self) -> None:
        if not (0 <= self.lo < self.hi):
            raise ValueError("need 0 <= lo < hi")

    zero_mass = 0.0

    def cdf(self, y):
        y = _as_float_array(y)
        return np.clip((y - self.lo) / (self.hi - self.lo), 0.0, 1.0)

    def kernel_spec(self):
        return _kernels.CODE_UNIFORM, np.array([self.lo, self.hi])

    def min_support(self) -> float:
        return self.lo

    def descriptor(self) -> str:
        return f"uniform lo={self.lo!r} hi={self.hi!r}"


@dataclass(frozen=True)
class Dirac:
    """All edges share one value; growth is the exact l1 ball."""

    value: float = 1.0

    def __post_init__(self) -> None:
        if not self.value >= 0:
            raise ValueError("value must be nonnegative")

    @property
    def zero_mass(self) -> float:
        return 1.0 if self.value == 0 else 0.0

    def cdf(self, y):
        y = _as_float_array(y)
        return np.where(y >= self.value, 1.0, 0.0)

    def kernel_spec(self):
        return _kernels.CODE_DIRAC, np.array([self.value, 0.0])

    def min_support(self) -> float:
        return self.value

    def descriptor(self) -> str:
        return f"dirac value={self.value!r}"


@dataclass(frozen=True)
class BernoulliZero:
    """Mass p_zero at 0, the rest at a fixed positive value."""

    p_zero: float = 0.25
    high: float = 1.0

    def __post_init__(self) -> None:
        if not 0 <= self.p_zero < 1:
            raise ValueError("p_zero must lie in [0, 1)")
        if not self.high > 0:
            raise ValueError("high must be positive")

    @property
    def zero_mass(self) -> float:
        return self.p_zero

    def cdf(self, y):
        y = _as_float_array(y)
        return np.where(y < 0, 0.0, np.where(y < self.high, self.p_zero, 1.0))

    def kernel_spec(self):
        return _kernels.CODE_BERNOULLI_ZERO, np.array([self.p_zero, self.high])

    def min_support(self) -> float:
        return 0.0

    def descriptor(self) -> str:
        return f"bernoulli_zero p_zero={self.p_zero!r} high={self.high!r}"


@dataclass(frozen=True)
class ParetoEdgeTail:
    """Survival min(1, (y/floor)^-beta): a polynomial tail above a floor."""

    beta: float
    floor: float = 1.0

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.floor > 0:
            raise ValueError("floor must be positive")

    zero_mass = 0.0

    def cdf(self, y):
        y = _as_float_array(y)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(y <= self.floor, 1.0, (y / self.floor) ** (-self.beta))
        return 1.0 - tail

    def kernel_spec(self):
        return _kernels.CODE_PARETO, np.array([self.beta, self.floor])

    def min_support(self) -> float:
        return self.floor

    def descriptor(self) -> str:
        return f"pareto beta={self.beta!r} floor={self.floor!r}"


def tower_sequence(levels: int) -> list[float]:
    """x_1 = 3, x_{n+1} = x_n^x_n, up to x_levels.

    Level 4 already overflows float64 (x_3 = 27^27 ~ 4.4e38, x_4 = x_3^x_3),
    so the sequence is capped at three levels.
    """
    if levels < 2:
        raise ValueError("tower needs at least two levels")
    if levels > 3:
        raise ValueError("tower beyond three levels overflows float64")
    xs = [3.0]
    for _ in range(levels - 1):
        x = xs[-1]
        xs.append(x**x)
    return xs


def tower_survival(levels: int, d: int, t):
    """P(edge weight > t) for the truncated tower model.

    1 below 3; (log x_n)^(-1/2d) on [x_{n-1}, x_n); 0 at and beyond the
    terminal atom x_levels.
    """
    check_dim(d)
    xs = tower_sequence(levels)
    t = _as_float_array(t)
    out = np.zeros_like(t)
    out[t < xs[0]] = 1.0
    for n in range(1, levels):
        band = (t >= xs[n - 1]) & (t < xs[n])
        out[band] = math.log(xs[n]) ** (-1.0 / (2 * d))
    return out


@dataclass(frozen=True)
class TowerTail:
    """Iterated-exponential tail truncated at level k with an atom at x_k.

    Discrete with atoms exactly at the tower points; the d parameter enters
    the survival exponent 1/(2d).
    """

    levels: int
    d: int

    def __post_init__(self) -> None:
        check_dim(self.d)
        tower_sequence(self.levels)  # validates the level range

    zero_mass = 0.0

    def atoms(self) -> list[float]:
        return tower_sequence(self.levels)

    def atom_cdf(self) -> list[float]:
        xs = self.atoms()
        levels = []
        for n in range(1, self.levels):
            levels.append(1.0 - math.log(xs[n]) ** (-1.0 / (2 * self.d)))
        levels.append(1.0)
        return levels

    def cdf(self, y):
        return 1.0 - tower_survival(self.levels, self.d, y)

    def kernel_spec(self):
        xs = self.atoms()
        cs = self.atom_cdf()
        return _kernels.CODE_TOWER, np.array([float(self.levels)] + xs + cs)

    def min_support(self) -> float:
        return 3.0

    def descriptor(self) -> str:
        return f"tower levels={self.levels} d={self.d}"


WeightModel = Union[Exponential, Uniform, Dirac, BernoulliZero, ParetoEdgeTail, TowerTail]

_PARSERS = {
    "exponential": (Exponential, {"rate": float}),
    "uniform": (Uniform, {"lo": float, "hi": float}),
    "dirac": (Dirac, {"value": float}),
    "bernoulli_zero": (BernoulliZero, {"p_zero": float, "high": float}),
    "pareto": (ParetoEdgeTail, {"beta": float, "floor": float}),
    "tower": (TowerTail, {"levels": int, "d": int}),
}


def parse_model(text: str) -> WeightModel:
    """Inverse of descriptor(): 'name key=value ...' with numeric values."""
    parts = text.split()
    if not parts:
        raise ValueError("empty model descriptor")
    name = parts[0]
    if name not in _PARSERS:
        raise ValueError(f"unknown model {name!r}")
    cls, fields = _PARSERS[name]
    kwargs = {}
    for item in parts[1:]:
        key, _, raw = item.partition("=")
        if key not in fields:
            raise ValueError(f"unknown parameter {key!r} for model {name!r}")
        kwargs[key] = fields[key](raw)
    return cls(**kwargs)


def quantile(model: WeightModel, u: float) -> float:
    """Generalized inverse cdf, evaluated by the sampling kernel."""
    if not 0 <= u < 1:
        raise ValueError("u must lie in [0, 1)")
    code, params = model.kernel_spec()
    return float(_kernels._quantile(code, params, u))


def assert_subcritical_zero(model: WeightModel, d: int) -> None:
    """Growth stays at most linear only when P(weight = 0) < p_c(d)."""
    check_dim(d)
    if model.zero_mass >= PC_BOND[d]:
        raise ValueError(
            f"zero mass {model.zero_mass} is at or above p_c({d}) = {PC_BOND[d]};"
            " the ball would grow superlinearly"
        )


@dataclass(frozen=True)
class EdgeWeightField:
    """Deterministic weight environment keyed by (seed, edge).

    Weights are pure functions of the key, so two fields with equal seed and
    model agree on every edge no matter which boxes or query orders touch
    them.  Negative seeds are folded in by their two's complement.
    """

    model: WeightModel
    seed: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "seed", self.seed & _MASK64)

    def _spec(self):
        code, params = self.model.kernel_spec()
        return np.uint64(self.seed), code, params

    def weight(self, e: Edge) -> float:
        seed_u, code, params = self._spec()
        base = np.asarray(e.base, dtype=np.int64)
        return float(_kernels._edge_weight_scalar(seed_u, code, params, base, e.axis, base.size))

    def weights(self, bases: np.ndarray, axes: np.ndarray) -> np.ndarray:
        """Vectorized weight(): bases (n, d) int64 absolute coords, axes (n,)."""
        seed_u, code, params = self._spec()
        bases = np.ascontiguousarray(bases, dtype=np.int64)
        axes = np.ascontiguousarray(axes, dtype=np.int64)
        return _kernels._edge_weights_bulk(seed_u, code, params, bases, axes)

    def grid_weights(self, radius: int, d: int) -> np.ndarray:
        """All canonical in-box edge weights, shape (d, (2r+1)^d), inf off-box."""
        check_dim(d)
        seed_u, code, params = self._spec()
        return _kernels._grid_weights(d, radius, seed_u, code, params)


@dataclass(frozen=True)
class YStatistic:
    """Distribution of Y = min of the 2d weights meeting one vertex."""

    model: WeightModel
    d: int

    def __post_init__(self) -> None:
        check_dim(self.d)
        if isinstance(self.model, TowerTail) and self.model.d != self.d:
            raise ValueError("tower model dimension disagrees with the statistic")

    def tail(self, y):
        """P(Y > y) = survival(y)^(2d), elementwise."""
        surv = 1.0 - self.model.cdf(y)
        return surv ** (2 * self.d)

    def cdf(self, y):
        return 1.0 - self.tail(y)

    def expected_truncated(self, t):
        """E[Y ^ t] = integral of the tail over [0, t], in closed form."""
        t = _as_float_array(t)
        if np.any(t < 0):
            raise ValueError("truncation time must be nonnegative")
        out = self._expected_truncated(t)
        if out.ndim == 0:
            return float(out)
        return out

    def _expected_truncated(self, t):
        m = self.model
        k = 2 * self.d
        if isinstance(m, Exponential):
            r = k * m.rate
            return -np.expm1(-r * t) / r
        if isinstance(m, Dirac):
            return np.minimum(t, m.value)
        if isinstance(m, BernoulliZero):
            return (1.0 - m.p_zero) ** k * np.minimum(t, m.high)
        if isinstance(m, Uniform):
            w = m.hi - m.lo
            tc = np.clip(t, m.lo, m.hi)
            ramp = w / (k + 1) * (1.0 - ((m.hi - tc) / w) ** (k + 1))
            return np.minimum(t, m.lo) + np.where(t > m.lo, ramp, 0.0)
        if isinstance(m, ParetoEdgeTail):
            g = k * m.beta
            f = m.floor
            tc = np.maximum(t, f)
            if g == 1.0:
                ramp = f * np.log(tc / f)
            else:
                ramp = f * ((tc / f) ** (1.0 - g) - 1.0) / (1.0 - g)
            return np.minimum(t, f) + np.where(t > f, ramp, 0.0)
        if isinstance(m, TowerTail):
            # the tail of Y is piecewise constant: 1 below the first atom,
            # (log x_n)^(-1) on [x_{n-1}, x_n), zero past the terminal atom
            knots = np.array([0.0] + m.atoms())
            vals = np.array([1.0] + [1.0 / math.log(x) for x in m.atoms()[1:]] + [0.0])
            cum = np.concatenate(([0.0], np.cumsum(vals[:-1] * np.diff(knots))))
            seg = np.searchsorted(knots, t, side="right") - 1
            return cum[seg] + vals[seg] * (t - knots[seg])
        raise TypeError(f"unsupported model {type(m).__name__}")

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw Y directly, one uniform per variate through the inverse cdf."""
        u = rng.random(size)
        k = 2 * self.d
        m = self.model
        if isinstance(m, Exponential):
            return -np.log1p(-u) / (k * m.rate)
        if isinstance(m, Uniform):
            return m.lo + (m.hi - m.lo) * (1.0 - (1.0 - u) ** (1.0 / k))
        if isinstance(m, Dirac):
            return np.full(size, m.value)
        if isinstance(m, ParetoEdgeTail):
            return m.floor * (1.0 - u) ** (-1.0 / (k * m.beta))
        if isinstance(m, BernoulliZero):
            atoms, cdf = [0.0, m.high], [m.p_zero, 1.0]
        else:
            atoms, cdf = m.atoms(), m.atom_cdf()
        min_cdf = 1.0 - (1.0 - np.asarray(cdf)) ** k
        idx = np.searchsorted(min_cdf, u, side="right")
        return np.asarray(atoms, dtype=np.float64)[idx]


@dataclass(frozen=True)
class RatioBound:
    """Pieces of the tail-versus-mean comparison at one time."""

    lower: float
    upper: float

    @property
    def ratio(self) -> float:
        return self.upper / self.lower


def bound_ratio(ys: YStatistic, t: float) -> RatioBound:
    """Compare E[Y ^ t] against max(t * P(Y > t), 1).

    The ratio upper/lower stays bounded for light tails and grows without
    bound along tower scales, which is what separates the two regimes.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    lower = max(t * float(ys.tail(t)), 1.0)
    upper = float(ys.expected_truncated(t))
    return RatioBound(lower=lower, upper=upper)


def containment_constant(model: WeightModel, d: int = 2) -> float:
    """Radius multiplier M such that the ball at time t should stay inside
    the box of radius M * t.

    Models with weights bounded away from zero get the exact 1 / min bound.
    The rest get an empirical speed estimate with headroom; that is a guard
    calibration, not a theorem, and an atom at zero near criticality
    deserves a hand-picked value instead.
    """
    check_dim(d)
    ms = model.min_support()
    if ms > 0:
        return 1.0 / ms
    if isinstance(model, Exponential):
        return (1.8 + 0.85 * d) * model.rate
    if isinstance(model, Uniform):
        return (2.5 + 1.25 * d) / model.hi
    if isinstance(model, BernoulliZero):
        return 8.0 / model.high
    raise TypeError(f"no containment calibration for {type(model).__name__}")


def seed_stream(base_seed: int, index: int) -> int:
    """Seed for replication `index` of a run keyed by `base_seed`.

    The finalizer is a bijection of 64-bit words applied to an offset that
    is affine in the index, so distinct replications of one run never share
    a seed.  Constants are frozen; changing them changes every published
    number downstream.
    """
    if index < 0:
        raise ValueError("replication index must be nonnegative")
    z = ((base_seed & _MASK64) * 0x9E3779B97F4A7C15 + index + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)
