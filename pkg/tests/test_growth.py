"""Growth engine against the naive relaxation oracle and closed forms."""
import math

import numpy as np
import pytest

from fpplab.growth import (
    GuardError,
    PassageField,
    adoption_schedule,
    bellman_ford_reference,
    check_containment,
    compute_passage,
    compute_passage_dense,
    dump_passage,
    load_passage,
    passage_at_real_point,
    require_containment,
)
from fpplab.lattice import LatticeBox
from fpplab.weights import EdgeWeightField, parse_model, seed_stream


def _agrees(a: np.ndarray, b: np.ndarray) -> bool:
    if not np.array_equal(np.isinf(a), np.isinf(b)):
        return False
    fin = np.isfinite(a)
    return np.allclose(a[fin], b[fin], rtol=0, atol=1e-11)


def test_dirac_ball_is_l1_ball(dirac_ball):
    r = dirac_ball.box.radius
    for x in (-r, 0, 3, r):
        for y in (-r, 0, -2, r):
            expect = abs(x) + abs(y)
            got = dirac_ball.time_of((x, y))
            if expect <= dirac_ball.horizon:
                assert got == expect
            else:
                assert math.isinf(got)


@pytest.mark.parametrize("model_text", [
    "exponential rate=1.0",
    "uniform lo=0.0 hi=1.0",
    "bernoulli_zero p_zero=0.3 high=1.0",
    "pareto beta=0.5 floor=1.0",
])
def test_engine_matches_relaxation_oracle(model_text):
    model = parse_model(model_text)
    for rep in range(4):
        field = EdgeWeightField(model, seed_stream(1000 + rep, rep))
        box = LatticeBox(4)
        oracle = bellman_ford_reference(field, box, 6.0, 2)
        pf = compute_passage(field, box, 6.0, 2)
        assert _agrees(oracle, pf.times)


def test_engine_matches_relaxation_oracle_3d():
    model = parse_model("exponential rate=1.0")
    field = EdgeWeightField(model, seed_stream(55, 0))
    box = LatticeBox(3)
    oracle = bellman_ford_reference(field, box, 3.0, 3)
    pf = compute_passage(field, box, 3.0, 3)
    assert _agrees(oracle, pf.times)


def test_dense_route_reproduces_lazy_route():
    model = parse_model("uniform lo=0.0 hi=1.0")
    field = EdgeWeightField(model, seed_stream(9, 9))
    box = LatticeBox(6)
    pf_lazy = compute_passage(field, box, 4.0, 2)
    pf_dense = compute_passage_dense(field.grid_weights(6, 2), box, 4.0, 2, field=field)
    assert _agrees(pf_lazy.times, pf_dense.times)


def test_zero_weight_edges_merge_instantly():
    table = np.full((2, 25), np.inf)
    box = LatticeBox(2)
    # free corridor along the x-axis from the origin to (2, 0)
    table[0, box.index((0, 0))] = 0.0
    table[0, box.index((1, 0))] = 0.0
    table[1, box.index((2, 0))] = 0.5
    pf = compute_passage_dense(table, box, 1.0, 2)
    assert pf.time_of((0, 0)) == 0.0
    assert pf.time_of((1, 0)) == 0.0
    assert pf.time_of((2, 0)) == 0.0
    assert pf.time_of((2, 1)) == 0.5
    assert math.isinf(pf.time_of((0, 1)))


def test_restriction_coupling_smaller_box_is_slower():
    model = parse_model("exponential rate=1.0")
    field = EdgeWeightField(model, seed_stream(31, 4))
    big = compute_passage(field, LatticeBox(12), 5.0, 2)
    small = compute_passage(field, LatticeBox(6), 5.0, 2)
    r = 6
    center = big.times[
        big.box.radius - r : big.box.radius + r + 1,
        big.box.radius - r : big.box.radius + r + 1,
    ]
    assert np.all(small.times >= center - 1e-12)


def test_monotone_coupling_in_the_weights():
    model = parse_model("uniform lo=0.0 hi=1.0")
    field = EdgeWeightField(model, seed_stream(8, 0))
    box = LatticeBox(5)
    table = field.grid_weights(5, 2)
    base = compute_passage_dense(table, box, 4.0, 2)
    slower = compute_passage_dense(table * 1.5, box, 4.0, 2)
    fin = np.isfinite(slower.times)
    assert np.all(slower.times[fin] >= base.times[fin] - 1e-12)
    assert slower.reached_count() <= base.reached_count()


def test_horizon_truncation_marks_far_cells_infinite(dirac_ball):
    assert math.isinf(dirac_ball.time_of((13, 0)))
    assert dirac_ball.time_of((12, 0)) == 12.0
    assert dirac_ball.reached_count() == 2 * 12 * (12 + 1) + 1


def test_adoption_schedule_orders_events(exp_ball):
    sched = adoption_schedule(exp_ball)
    assert len(sched) == exp_ball.reached_count()
    times = [t for t, _ in sched.events]
    assert times == sorted(times)
    assert sched.events[0] == (0.0, (0, 0))
    s = 4.0
    assert sched.prefix_set(s) == {
        tuple(v)
        for v in np.argwhere(exp_ball.reached_mask(s)) - exp_ball.box.radius
    }


def test_containment_guard_flags_escape():
    times = np.full((7, 7), np.inf)
    times[3, 3] = 0.0
    times[3, 6] = 0.9
    pf = PassageField.from_times(times, horizon=1.0)
    assert not check_containment(pf, 2.0)
    with pytest.raises(GuardError):
        require_containment(pf, 2.0)
    times2 = times.copy()
    times2[3, 6] = np.inf
    assert check_containment(PassageField.from_times(times2, horizon=1.0), 2.0)
    with pytest.raises(ValueError):
        check_containment(pf, 9.0)  # box cannot certify that radius


def test_real_points_read_their_floor_cell(dirac_ball):
    assert passage_at_real_point(dirac_ball, (2.3, -1.7)) == dirac_ball.time_of((2, -2))
    assert passage_at_real_point(dirac_ball, (0.0, 0.99)) == 0.0
    with pytest.raises(ValueError):
        passage_at_real_point(dirac_ball, (1.0, 2.0, 3.0))


def test_crop_offsets_map_back_to_absolute(exp_ball):
    view, offset = exp_ball.crop(margin=1)
    idx = np.argwhere(np.isfinite(view))[0]
    absolute = tuple(int(c) for c in idx + offset)
    assert exp_ball.time_of(absolute) == view[tuple(idx)]
    finite_abs = np.argwhere(np.isfinite(exp_ball.times)) - exp_ball.box.radius
    lo = finite_abs.min(axis=0)
    hi = finite_abs.max(axis=0)
    assert np.all(offset <= lo - 0)  # margin ring included
    assert view.shape[0] >= hi[0] - lo[0] + 1


def test_from_times_validates_shape():
    with pytest.raises(ValueError):
        PassageField.from_times(np.zeros((4, 4)), horizon=1.0)
    with pytest.raises(ValueError):
        PassageField.from_times(np.zeros((3, 5)), horizon=1.0)
    pf = PassageField.from_times(np.zeros((5, 5)), horizon=1.0)
    assert pf.box.radius == 2


def test_dump_load_round_trip(tmp_path):
    model = parse_model("exponential rate=1.0")
    field = EdgeWeightField(model, seed_stream(4, 2))
    pf = compute_passage(field, LatticeBox(5), 3.0, 2)
    path = tmp_path / "ball.fpp"
    dump_passage(pf, path)
    back = load_passage(path, field=field)
    assert back.box.radius == 5 and back.d == 2 and back.horizon == 3.0
    assert _agrees(back.times, pf.times)
    wrong = EdgeWeightField(model, seed_stream(4, 3))
    with pytest.raises(ValueError):
        load_passage(path, field=wrong)
    path.write_bytes(b"junkjunk" * 8)
    with pytest.raises(ValueError):
        load_passage(path)
