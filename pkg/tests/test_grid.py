import numpy as np
import pytest

from morreylab.grid import (Ball, Box, DyadicCube, Grid, SampledFunction, build_grid, cube_slices,
                            dyadic_children, quad_integral, region_mask, root_cube, sample_on_grid)


def test_cell_centers_and_spacing():
    g = build_grid(1, 1.0, 8)
    assert g.spacing == 0.25
    np.testing.assert_allclose(g.axis_centers, -1 + (np.arange(8) + 0.5) * 0.25)
    assert g.shape == (8,)
    assert g.points.shape == (8, 1)


def test_grid_2d_points_c_order():
    g = build_grid(2, 2.0, 8)
    assert g.points.shape == (64, 2)
    assert g.points[1, 0] == g.points[0, 0]
    assert g.points[1, 1] > g.points[0, 1]
    assert g.cell_volume == pytest.approx(0.25)


@pytest.mark.parametrize("dim,N", [(3, 8), (1, 12), (1, 4), (2, 100)])
def test_grid_rejects_bad_shapes(dim, N):
    with pytest.raises(ValueError):
        build_grid(dim, 1.0, N)


def test_unsupported_dimension_message():
    with pytest.raises(ValueError, match="unsupported dimension"):
        build_grid(3, 1.0, 16)


def test_quadrature_of_constant_is_box_volume():
    for dim in (1, 2):
        g = build_grid(dim, 1.5, 16)
        f = sample_on_grid(lambda x: 1.0, g)
        assert quad_integral(f) == pytest.approx(3.0 ** dim, rel=1e-14)


def test_midpoint_rule_exact_for_linear_functions():
    g = build_grid(1, 1.0, 32)
    f = sample_on_grid(lambda x: 3 * x + 2, g)
    assert quad_integral(f) == pytest.approx(4.0, rel=1e-13)


def test_quadrature_converges_second_order():
    errs = []
    for N in (32, 64, 128):
        g = build_grid(1, 1.0, N)
        errs.append(abs(quad_integral(sample_on_grid(np.exp, g)) - (np.e - 1 / np.e)))
    assert errs[1] / errs[0] == pytest.approx(0.25, rel=0.02)
    assert errs[2] / errs[1] == pytest.approx(0.25, rel=0.02)


def test_sample_accepts_scalar_callables():
    g = build_grid(2, 1.0, 8)
    f = sample_on_grid(lambda p: float(p[0] * p[1]), g)
    np.testing.assert_allclose(f.flat, g.points[:, 0] * g.points[:, 1])


def test_sample_rejects_nonfinite():
    g = build_grid(1, 1.0, 8)
    with pytest.raises(ValueError, match="not finite"), np.errstate(divide="ignore"):
        sample_on_grid(lambda x: 1.0 / (x - g.axis_centers[3]), g)


def test_sampled_function_is_readonly_and_checked():
    g = build_grid(1, 1.0, 8)
    f = SampledFunction(g, np.arange(8.0))
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    with pytest.raises(ValueError):
        SampledFunction(g, np.arange(7.0))
    np.testing.assert_array_equal((2 * f - f).values, f.values)
    np.testing.assert_array_equal(abs(f * -1).values, f.values)


def test_shift_moves_values_and_fills_zero():
    g = build_grid(2, 1.0, 8)
    f = SampledFunction(g, np.arange(64.0))
    s = f.shifted((1, -2))
    assert s.values[1, 0] == f.values[0, 2]
    assert np.all(s.values[0, :] == 0) and np.all(s.values[:, -2:] == 0)
    assert not np.any(f.shifted((8, 0)).values)


def test_ball_membership_is_strict_on_lattice_ties():
    g = build_grid(1, 1.0, 8)
    c = g.axis_centers[3]
    # radius exactly two cells: neighbours at distance 2h are excluded
    m = region_mask(g, Ball((c,), 2 * g.spacing))
    assert m.sum() == 3


def test_box_and_cube_masks():
    g = build_grid(2, 1.0, 8)
    assert region_mask(g, Box((0.0, 0.0), (1.0, 1.0))).sum() == 16
    q = DyadicCube(1, (-1.0, -1.0), 1.0)
    assert region_mask(g, q).sum() == 16
    assert region_mask(g, None).all()


def test_dyadic_children_tile_parent():
    g = build_grid(2, 1.0, 16)
    root = root_cube(g)
    kids = dyadic_children(root, g)
    assert len(kids) == 4
    cover = np.zeros(g.shape, int)
    for q in kids:
        cover[cube_slices(g, q)] += 1
    assert np.all(cover == 1)
    assert sum(q.volume for q in kids) == pytest.approx(root.volume)


def test_children_refuse_below_cell_level():
    g = build_grid(1, 1.0, 8)
    q = DyadicCube(3, (-1.0,), g.spacing)
    with pytest.raises(ValueError, match="cell level"):
        dyadic_children(q, g)


def test_misaligned_cube_rejected():
    g = build_grid(1, 1.0, 8)
    with pytest.raises(ValueError, match="not aligned"):
        cube_slices(g, DyadicCube(1, (-0.9,), 0.5))


def test_cube_validation():
    with pytest.raises(ValueError):
        DyadicCube(0, (0.0,), 0.0)
    with pytest.raises(ValueError):
        Ball((0.0,), -1.0)
    assert Ball((0.0,), 1.0).dilate(3).radius == 3.0


def test_grid_is_hashable_value():
    assert Grid(1, 1.0, 8) == build_grid(1, 1, 8)
    assert hash(Grid(1, 1.0, 8)) == hash(build_grid(1, 1.0, 8))
