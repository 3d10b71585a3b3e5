import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nablats.timescale import (
    GapKind,
    PointNotInScaleError,
    Side,
    TimeScale,
    TimeScaleError,
    from_points,
    integers,
    q_scale,
    sampled_interval,
    uniform,
    union,
)


def junction_scale(n=4):
    """{0} followed by a sampled copy of [1, 2]."""
    pts = [0.0] + [1.0 + i / n for i in range(n)] + [2.0]
    kinds = [GapKind.SCATTERED] + [GapKind.DENSE_SAMPLE] * n
    return from_points(pts, kinds)


class TestJumpOperators:
    def test_integer_scale_interior(self):
        ts = integers(0, 5)
        assert ts.rho(3.0) == 2.0
        assert ts.sigma(3.0) == 4.0
        assert ts.nu(3.0) == 1.0

    def test_boundary_conventions(self):
        ts = integers(0, 5)
        assert ts.rho(0.0) == 0.0
        assert ts.sigma(5.0) == 5.0
        assert ts.nu(0.0) == 0.0

    def test_sampled_interval_is_dense(self):
        ts = sampled_interval(0.0, 1.0, 4)
        assert ts.points == (0.0, 0.25, 0.5, 0.75, 1.0)
        assert ts.rho(0.5) == 0.5
        assert ts.sigma(0.5) == 0.5
        assert ts.nu(0.5) == 0.0

    def test_q_scale(self):
        ts = q_scale(2.0, 1.0, 4)
        assert ts.points == (1.0, 2.0, 4.0, 8.0)
        assert ts.sigma(2.0) == 4.0
        assert ts.nu(8.0) == 4.0

    def test_off_grid_point_raises(self):
        ts = integers(0, 5)
        with pytest.raises(PointNotInScaleError):
            ts.rho(2.5)
        with pytest.raises(PointNotInScaleError):
            ts.nu(-1.0)


class TestClassify:
    def test_isolated(self):
        assert integers(0, 5).classify(3.0).is_isolated

    def test_dense(self):
        assert sampled_interval(0.0, 1.0, 4).classify(0.5).is_dense

    def test_junction(self):
        ts = junction_scale()
        cls = ts.classify(1.0)
        assert cls.left is Side.SCATTERED
        assert cls.right is Side.DENSE

    def test_boundary_classification(self):
        ts = integers(0, 5)
        assert ts.classify(0.0).left is Side.DENSE  # rho(min) = min
        assert ts.classify(0.0).right is Side.SCATTERED
        assert ts.classify(5.0).right is Side.DENSE  # sigma(max) = max


class TestKappaSet:
    def test_scattered_minimum_excluded(self):
        assert integers(0, 5).kappa_set() == (1.0, 2.0, 3.0, 4.0, 5.0)

    def test_dense_minimum_included(self):
        ts = sampled_interval(0.0, 1.0, 4)
        assert ts.kappa_set() == ts.points

    def test_junction_minimum_excluded(self):
        ts = junction_scale()
        assert 0.0 not in ts.kappa_set()
        assert ts.kappa_set()[0] == 1.0


class TestBuilders:
    def test_uniform_is_scattered(self):
        ts = uniform(0.0, 5.0, 1.0)
        assert ts.points == (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
        assert ts.all_scattered

    def test_uniform_bad_step(self):
        with pytest.raises(TimeScaleError):
            uniform(0.0, 1.0, 0.3)

    def test_union_junction_gap_is_scattered(self):
        ts = union([integers(0, 2), sampled_interval(5.0, 6.0, 2)])
        assert ts.points == (0.0, 1.0, 2.0, 5.0, 5.5, 6.0)
        assert ts.gap_kinds[2] is GapKind.SCATTERED
        assert ts.gap_kinds[3] is GapKind.DENSE_SAMPLE

    def test_union_overlap_raises(self):
        with pytest.raises(TimeScaleError):
            union([integers(0, 3), integers(2, 5)])

    def test_from_points_accepts_strings(self):
        ts = from_points([0.0, 1.0, 1.5], ["s", "d"])
        assert ts.gap_kinds == (GapKind.SCATTERED, GapKind.DENSE_SAMPLE)

    def test_non_monotone_raises(self):
        with pytest.raises(TimeScaleError):
            from_points([0.0, 1.0, 1.0], ["s", "s"])
        with pytest.raises(TimeScaleError):
            from_points([0.0], [])


points_strategy = st.lists(
    st.floats(min_value=-50.0, max_value=50.0, allow_nan=False),
    min_size=2,
    max_size=32,
    unique=True,
).map(sorted)


@given(pts=points_strategy, data=st.data())
@settings(max_examples=200, deadline=None)
def test_grid_invariants(pts, data):
    kinds = data.draw(
        st.lists(
            st.sampled_from([GapKind.SCATTERED, GapKind.DENSE_SAMPLE]),
            min_size=len(pts) - 1,
            max_size=len(pts) - 1,
        )
    )
    ts = from_points(pts, kinds)

    # round trip through the raw-parts builder
    assert from_points(ts.points, ts.gap_kinds) == ts

    for t in ts.points:
        assert ts.rho(t) <= t <= ts.sigma(t)
        assert (ts.nu(t) == 0.0) == (ts.classify(t).left is Side.DENSE)
        assert ts.nu(t) == t - ts.rho(t)

    # kappa set matches the right-scattered-minimum rule
    if ts.gap_kinds[0] is GapKind.SCATTERED:
        assert ts.kappa_set() == ts.points[1:]
    else:
        assert ts.kappa_set() == ts.points

    # interior isolated points: rho(sigma(t)) == t
    for t in ts.points[1:-1]:
        if ts.classify(t).is_isolated:
            assert ts.rho(ts.sigma(t)) == t
