import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subdiff.core import (
    Impulse,
    ProblemSpec,
    SolutionHistory,
    TemporalMesh,
    append_time,
    make_grid,
)


class TestProblemSpec:
    @pytest.mark.parametrize("gamma", [0.0, 1.0, 1.5, -0.2])
    def test_gamma_bounds(self, gamma):
        with pytest.raises(ValueError, match="0 < gamma < 1"):
            ProblemSpec(gamma)

    def test_unit_gamma_only_when_allowed(self):
        assert ProblemSpec(1.0, allow_unit_gamma=True).gamma == 1.0

    def test_rejects_bad_k_and_domain(self):
        with pytest.raises(ValueError, match="k_coeff"):
            ProblemSpec(0.5, k_coeff=0.0)
        with pytest.raises(ValueError, match="x_left < x_right"):
            ProblemSpec(0.5, domain=(1.0, 1.0))

    def test_rejects_non_dirichlet_bc(self):
        with pytest.raises(TypeError, match="Dirichlet"):
            ProblemSpec(0.5, bc=("neumann", 0.0))

    def test_boundary_values_constant_and_callable(self):
        spec = ProblemSpec(0.5, bc=(2.0, lambda t: 3.0 * t))
        assert spec.boundary_values(0.5) == (2.0, 1.5)

    def test_impulses_sorted_and_matched(self):
        spec = ProblemSpec(0.5, impulses=(Impulse(1.0, 0.0), Impulse(0.0, 0.5, 2.0)))
        assert [i.time for i in spec.impulses] == [0.0, 1.0]
        assert spec.impulses_at(1.0 + 1e-15) == [Impulse(1.0, 0.0)]
        assert spec.impulses_at(0.5) == []

    def test_impulse_outside_domain(self):
        with pytest.raises(ValueError, match="outside domain"):
            ProblemSpec(0.5, impulses=(Impulse(0.0, 2.0),))


class TestGrid:
    def test_point_source_grid(self):
        grid = make_grid((-10, 10), 100)
        assert grid.dx == pytest.approx(0.2, rel=1e-15)
        assert grid.nodes[0] == -10.0 and grid.nodes[-1] == 10.0
        assert grid.nodes[1] == pytest.approx(-9.8)
        assert grid.snap(0.0) == 50

    def test_smallest_grid(self):
        grid = make_grid((0, 1), 2)
        np.testing.assert_array_equal(grid.nodes, [0.0, 0.5, 1.0])

    @pytest.mark.parametrize("n", [1, 0, 2.5])
    def test_degenerate_grid(self, n):
        with pytest.raises(ValueError):
            make_grid((0, 1), n)

    def test_empty_interval(self):
        with pytest.raises(ValueError, match="empty interval"):
            make_grid((1, 1), 4)

    def test_snap_outside(self):
        with pytest.raises(ValueError):
            make_grid((0, 1), 4).snap(1.5)

    @given(
        st.floats(-100, 100),
        st.floats(1e-3, 100),
        st.integers(2, 500),
    )
    def test_node_count_and_width(self, left, width, n):
        grid = make_grid((left, left + width), n)
        assert grid.nodes.size == n + 1
        assert math.isclose(grid.nodes[-1] - grid.nodes[0], (left + width) - left, rel_tol=0, abs_tol=4 * np.spacing(abs(left) + width))
        assert np.allclose(np.diff(grid.nodes), grid.dx, rtol=1e-9, atol=1e-12)


class TestTemporalMesh:
    def test_append_examples(self):
        mesh = TemporalMesh()
        append_time(mesh, 0.5)
        np.testing.assert_array_equal(mesh.times, [0.0, 0.5])
        append_time(mesh, 0.25)
        np.testing.assert_array_equal(mesh.times, [0.0, 0.5, 0.75])

    def test_rejects_non_positive(self):
        with pytest.raises(ValueError):
            append_time(TemporalMesh(), -0.1)
        with pytest.raises(ValueError):
            append_time(TemporalMesh(), 0.0)

    def test_rejects_bad_start(self):
        with pytest.raises(ValueError):
            TemporalMesh([0.1, 0.2])
        with pytest.raises(ValueError):
            TemporalMesh([0.0, 0.2, 0.2])

    def test_times_view_is_read_only(self):
        mesh = TemporalMesh([0.0, 1.0])
        with pytest.raises(ValueError):
            mesh.times[0] = 5.0

    @given(st.lists(st.floats(1e-9, 10.0), min_size=1, max_size=300))
    def test_strictly_increasing(self, increments):
        mesh = TemporalMesh(capacity=2)
        for dt in increments:
            mesh.append(dt)
        assert len(mesh) == len(increments) + 1
        assert np.all(np.diff(mesh.times) > 0.0)


class TestSolutionHistory:
    def test_left_right_and_increments(self):
        h = SolutionHistory.start(np.zeros(3), capacity=1)
        h.set_latest_right(np.array([0.0, 5.0, 0.0]))
        h.append(np.array([1.0, 1.0, 1.0]))
        h.append(np.array([2.0, 2.0, 2.0]))
        assert len(h) == 3
        np.testing.assert_array_equal(h.v_right[1], h.u_left[1])
        np.testing.assert_array_equal(h.increments[0], [1.0, -4.0, 1.0])
        np.testing.assert_array_equal(h.increments[1], [1.0, 1.0, 1.0])
        assert h.nbytes_used == 3 * 3 * 3 * 8

    def test_shape_check(self):
        h = SolutionHistory.start(np.zeros(3))
        with pytest.raises(ValueError):
            h.append(np.zeros(4))

    @settings(max_examples=30)
    @given(st.integers(1, 200))
    def test_memory_linear_in_levels(self, levels):
        h = SolutionHistory.start(np.zeros(5), capacity=1)
        for _ in range(levels):
            h.append(np.ones(5))
        assert h.nbytes_used == 3 * (levels + 1) * 5 * 8
