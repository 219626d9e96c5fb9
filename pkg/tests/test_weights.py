"""Weight models: closed forms against quadrature, sampling, seeds."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from fpplab.lattice import Edge
from fpplab.weights import (
    BernoulliZero,
    Dirac,
    EdgeWeightField,
    Exponential,
    ParetoEdgeTail,
    TowerTail,
    Uniform,
    YStatistic,
    assert_subcritical_zero,
    bound_ratio,
    containment_constant,
    parse_model,
    quantile,
    seed_stream,
    tower_survival,
)

ALL_MODELS = [
    Exponential(rate=1.0),
    Exponential(rate=2.5),
    Uniform(lo=0.0, hi=1.0),
    Uniform(lo=0.5, hi=2.0),
    Dirac(value=1.0),
    BernoulliZero(p_zero=0.3, high=4.0),
    ParetoEdgeTail(beta=0.5, floor=1.0),
    ParetoEdgeTail(beta=0.125, floor=1.0),
    TowerTail(levels=3, d=2),
]


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.descriptor())
def test_cdf_is_a_distribution_function(model):
    ys = np.linspace(0.0, 40.0, 400)
    vals = np.asarray([float(model.cdf(y)) for y in ys])
    assert np.all(vals >= 0) and np.all(vals <= 1)
    assert np.all(np.diff(vals) >= 0)
    assert float(model.cdf(-0.5)) == 0.0


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.descriptor())
def test_parse_round_trips_descriptor(model):
    assert parse_model(model.descriptor()) == model


def test_parse_rejects_malformed_text():
    for text in ["", "exp rate=1", "exponential rate=-1",
                 "uniform lo=2 hi=1", "dirac value=-3", "tower levels=9 d=2"]:
        with pytest.raises(ValueError):
            parse_model(text)


@given(st.floats(min_value=1e-9, max_value=1.0 - 1e-9))
@settings(max_examples=200)
def test_quantile_is_generalized_inverse_exponential(u):
    model = Exponential(rate=1.0)
    y = quantile(model, u)
    assert float(model.cdf(y)) == pytest.approx(u, abs=1e-12)


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.descriptor())
def test_quantile_level_is_attained(model):
    for u in (0.01, 0.25, 0.5, 0.9, 0.999):
        y = quantile(model, u)
        assert float(model.cdf(y)) >= u - 1e-12
        if y > 0:
            assert float(model.cdf(y * (1 - 1e-9) - 1e-12)) < u + 1e-9


def test_field_weight_is_deterministic_and_batched():
    field = EdgeWeightField(parse_model("exponential rate=1.0"), seed=99)
    edges = [Edge((0, 0), 0), Edge((0, 0), 1), Edge((-3, 7), 0), Edge((5, -2), 1)]
    singles = [field.weight(e) for e in edges]
    assert singles == [field.weight(e) for e in edges]
    bases = np.asarray([e.base for e in edges], dtype=np.int64)
    axes = np.asarray([e.axis for e in edges], dtype=np.int64)
    assert np.allclose(field.weights(bases, axes), singles, rtol=0, atol=0)
    other = EdgeWeightField(parse_model("exponential rate=1.0"), seed=100)
    assert other.weight(edges[0]) != singles[0]


def test_grid_weights_match_scalar_lookup():
    from fpplab.lattice import LatticeBox, edges_in_box

    field = EdgeWeightField(parse_model("uniform lo=0.0 hi=1.0"), seed=5)
    box = LatticeBox(3)
    table = field.grid_weights(3, 2)
    assert table.shape == (2, box.vertex_count(2))
    for e in edges_in_box(box, 2):
        assert table[e.axis, box.index(e.base)] == pytest.approx(
            field.weight(e), abs=0
        )
    # slots for edges leaving the box stay infinite
    assert np.isinf(table[0, box.index((3, 0))])


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.descriptor())
@pytest.mark.parametrize("d", [2, 3])
def test_truncated_mean_matches_quadrature(model, d):
    if isinstance(model, TowerTail) and model.d != d:
        pytest.skip("tower models are dimension-tagged")
    ys = YStatistic(model, d)
    for t in (0.5, 1.0, 3.7, 27.0):
        oracle, err = integrate.quad(
            lambda y: float(ys.tail(y)), 0.0, t, limit=300,
            points=[p for p in (0.5, 1.0, 3.0, t) if p < t],
        )
        assert float(ys.expected_truncated(t)) == pytest.approx(
            oracle, rel=1e-6, abs=max(err * 10, 1e-12)
        )


@pytest.mark.parametrize("model", ALL_MODELS, ids=lambda m: m.descriptor())
def test_truncated_mean_is_monotone_from_zero(model):
    ys = YStatistic(model, 2)
    ts = np.linspace(0.0, 30.0, 121)
    vals = np.asarray([float(ys.expected_truncated(t)) for t in ts])
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) >= -1e-12)


def test_tail_is_min_of_neighborhood_tails():
    model = Exponential(rate=1.0)
    for d in (2, 3, 4):
        ys = YStatistic(model, d)
        y = 0.63
        assert float(ys.tail(y)) == pytest.approx(
            (1 - float(model.cdf(y))) ** (2 * d), rel=1e-12
        )


def test_sample_matches_min_law_continuous():
    rng = np.random.default_rng(2024)
    ys = YStatistic(Exponential(rate=1.0), 2)
    draw = ys.sample(rng, 100_000)
    # min of 4 unit exponentials is exponential with rate 4
    res = stats.kstest(draw, stats.expon(scale=0.25).cdf)
    assert res.pvalue > 1e-3
    uy = YStatistic(Uniform(lo=0.0, hi=1.0), 2)
    draw_u = uy.sample(rng, 100_000)
    res_u = stats.kstest(draw_u, lambda y: 1 - (1 - np.clip(y, 0, 1)) ** 4)
    assert res_u.pvalue > 1e-3


def test_sample_matches_min_law_atomic():
    rng = np.random.default_rng(7)
    ys = YStatistic(BernoulliZero(p_zero=0.3, high=4.0), 2)
    draw = ys.sample(rng, 100_000)
    assert set(np.unique(draw)) == {0.0, 4.0}
    p_high = (1 - 0.3) ** 4  # all four incident edges heavy
    freq = float(np.mean(draw == 4.0))
    sigma = math.sqrt(p_high * (1 - p_high) / 100_000)
    assert abs(freq - p_high) < 5 * sigma


def test_tower_sample_uses_truncation_atoms():
    rng = np.random.default_rng(11)
    model = TowerTail(levels=3, d=2)
    draw = YStatistic(model, 2).sample(rng, 50_000)
    assert set(np.unique(draw)) <= set(float(a) for a in model.atoms())


def test_tower_survival_closed_form():
    # x1 = 3, x2 = 27, x3 = 27^27; survival jumps only at those knots
    assert float(tower_survival(3, 2, 1.0)) == 1.0
    assert float(tower_survival(3, 2, 5.0)) == pytest.approx(
        math.log(27.0) ** -0.25, abs=1e-15
    )
    assert float(tower_survival(3, 2, 27.0)) == pytest.approx(
        math.log(27.0**27) ** -0.25, abs=1e-15
    )
    assert float(tower_survival(3, 2, 27.0**27)) == 0.0


def test_tower_truncated_mean_closed_form():
    ys = YStatistic(TowerTail(levels=3, d=2), 2)
    log27 = math.log(27.0)
    assert float(ys.tail(1.0)) == 1.0
    assert float(ys.tail(5.0)) == pytest.approx(1 / log27, rel=1e-14)
    assert float(ys.tail(27.0)) == pytest.approx(1 / (27 * log27), rel=1e-14)
    assert float(ys.expected_truncated(27.0)) == pytest.approx(
        3.0 + 24.0 / log27, rel=1e-14
    )
    # paper-style lower bound on the same quantity
    assert float(ys.expected_truncated(27.0)) >= (27.0 - 3.0) / log27


def test_ratio_bound_exponential_stays_bounded():
    ys = YStatistic(Exponential(rate=1.0), 2)
    ratios = [bound_ratio(ys, t).ratio for t in (1.0, 2.0, 8.0, 32.0, 128.0)]
    assert all(r <= 0.25 + 1e-12 for r in ratios)


def test_ratio_bound_tower_spikes_at_the_knot():
    ys = YStatistic(TowerTail(levels=3, d=2), 2)
    rb = bound_ratio(ys, 27.0)
    assert rb.lower == 1.0
    assert rb.upper == pytest.approx(3.0 + 24.0 / math.log(27.0), rel=1e-12)
    assert rb.ratio >= 27.0 / (2 * math.log(27.0)) - 1e-9


def test_seed_stream_frozen_values():
    assert seed_stream(0, 0) == 16294208416658607535
    assert seed_stream(0, 1) == 10451216379200822465
    assert seed_stream(12345, 67) == 8326526284258080577


def test_seed_stream_injective_prefix():
    seen = {seed_stream(42, i) for i in range(10_000)}
    assert len(seen) == 10_000
    assert seed_stream(42, 3) != seed_stream(43, 3)
    with pytest.raises(ValueError):
        seed_stream(1, -1)


def test_containment_constants_by_family():
    assert containment_constant(Exponential(rate=1.0), 2) == pytest.approx(3.5)
    assert containment_constant(Exponential(rate=2.0), 2) == pytest.approx(7.0)
    assert containment_constant(Dirac(value=1.0), 2) == pytest.approx(1.0)
    assert containment_constant(Dirac(value=0.5), 2) == pytest.approx(2.0)
    assert containment_constant(ParetoEdgeTail(beta=0.125, floor=1.0), 2) == 1.0
    assert containment_constant(TowerTail(levels=3, d=2), 2) == pytest.approx(1 / 3.0)
    assert containment_constant(Uniform(lo=0.5, hi=2.0), 2) == pytest.approx(2.0)
    assert containment_constant(Uniform(lo=0.0, hi=2.0), 2) == pytest.approx(2.5)
    assert containment_constant(BernoulliZero(p_zero=0.3, high=2.0), 2) == 4.0


def test_containment_constant_certifies_real_growth():
    from fpplab.growth import compute_passage, require_containment
    from fpplab.lattice import LatticeBox

    model = parse_model("exponential rate=1.0")
    m = containment_constant(model, 2)
    for rep in range(10):
        field = EdgeWeightField(model, seed_stream(77, rep))
        pf = compute_passage(field, LatticeBox(int(math.ceil(m * 10.0)), ), 10.0, 2)
        require_containment(pf, m)


def test_zero_mass_guard():
    assert_subcritical_zero(BernoulliZero(p_zero=0.3, high=1.0), 2)
    with pytest.raises(ValueError):
        assert_subcritical_zero(BernoulliZero(p_zero=0.6, high=1.0), 2)
    with pytest.raises(ValueError):
        assert_subcritical_zero(BernoulliZero(p_zero=0.2, high=1.0), 4)
