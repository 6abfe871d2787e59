"""
Tests for boxes, uniform cell grids and the occupancy counter.
"""

import math

import numpy as np
import pytest

from src.errors import CellIndexError, GridOverflowError, PointOutsideDomainError
from src.grid import Box, BoxCounter, cell_bounds, diameter, locate, project_box, quantize


def line_grid(divisions=4):
    return quantize(Box(lo=(-5.0,), hi=(5.0,)), divisions)


# ---- Box ------------------------------------------------------------------------


def test_box_rejects_inverted_and_infinite_bounds():
    with pytest.raises(ValueError):
        Box(lo=(1.0,), hi=(0.0,))
    with pytest.raises(ValueError):
        Box(lo=(0.0,), hi=(math.inf,))
    with pytest.raises(ValueError):
        Box(lo=(0.0, 0.0), hi=(1.0,))


def test_project_box():
    assert project_box(Box.cube(-5, 5, 3), [0, 1]) == Box.cube(-5, 5, 2)
    assert project_box(Box.cube(0, 1, 6), [2]) == Box.cube(0, 1, 1)
    box = Box(lo=(0.0, 1.0, 2.0), hi=(3.0, 4.0, 5.0))
    projected = project_box(box, [1, 2])
    assert projected.lo == (1.0, 2.0)
    assert projected.hi == (4.0, 5.0)


# ---- quantize / cell_bounds -----------------------------------------------------


def test_uniform_split_in_one_dimension():
    grid = line_grid()
    expected = [(-5.0, -2.5), (-2.5, 0.0), (0.0, 2.5), (2.5, 5.0)]
    for k, (a, b) in enumerate(expected):
        bounds = cell_bounds(grid, k)
        assert bounds.lo == (a,)
        assert bounds.hi == (b,)


def test_cell_count_of_a_large_grid():
    grid = quantize(Box.cube(-5, 5, 3), 128)
    assert grid.size == 2_097_152


def test_last_cell_closes_at_domain_bound():
    grid = quantize(Box.cube(0, 1, 6), 16)
    bounds = cell_bounds(grid, (15,) * 6)
    assert bounds.hi == (1.0,) * 6


def test_cell_bounds_rejects_out_of_range_ids():
    grid = line_grid()
    with pytest.raises(CellIndexError):
        cell_bounds(grid, 4)
    with pytest.raises(CellIndexError):
        cell_bounds(grid, -1)


def test_overflowing_grid_reports_requested_total():
    with pytest.raises(GridOverflowError) as excinfo:
        quantize(Box.cube(0, 1, 8), 2**10)
    assert str(2**80) in str(excinfo.value)


def test_edges_have_no_cumulative_drift():
    grid = quantize(Box(lo=(0.0,), hi=(0.3,)), 3)
    edges = grid.edges(0)
    assert edges[0] == 0.0
    assert edges[-1] == 0.3
    assert np.all(np.diff(edges) > 0)


# ---- locate ---------------------------------------------------------------------


def test_locate_half_open_convention():
    grid = line_grid()
    assert locate(grid, [0.0]).flat == 2
    assert locate(grid, [5.0]).flat == 3
    assert locate(grid, [-2.5]).flat == 1
    assert locate(grid, [-5.0]).flat == 0


def test_locate_closed_upper_corner_in_two_dimensions():
    grid = quantize(Box.cube(0, 1, 2), (2, 2))
    assert grid.size == 4
    assert locate(grid, [1.0, 1.0]).multi == (1, 1)


def test_locate_rejects_points_outside():
    with pytest.raises(PointOutsideDomainError):
        locate(line_grid(), [5.1])


def test_locate_is_total_and_consistent_with_bounds():
    grid = quantize(Box(lo=(-5.0, 0.0, -1.0), hi=(5.0, 1.0, 3.0)), (7, 5, 11))
    rng = np.random.default_rng(0)
    points = rng.uniform(grid.domain.lower, grid.domain.upper, size=(10_000, 3))
    flat = grid.locate_many(points)
    lo, hi = grid.bounds_of(flat)
    assert np.all(lo <= points)
    assert np.all(points <= hi)


# ---- addressing -----------------------------------------------------------------


def test_flat_multi_bijection_on_small_grid():
    grid = quantize(Box.cube(0, 1, 3), (3, 4, 5))
    flat = np.arange(grid.size)
    multi = grid.unravel(flat)
    assert np.array_equal(grid.ravel(multi), flat)
    # Dimension 0 is slowest
    assert tuple(multi[1]) == (0, 0, 1)
    assert tuple(multi[5]) == (0, 1, 0)


def test_flat_multi_bijection_on_random_large_indices():
    grid = quantize(Box.cube(-5, 5, 6), 128)
    rng = np.random.default_rng(1)
    flat = rng.integers(0, grid.size, size=1000)
    assert np.array_equal(grid.ravel(grid.unravel(flat)), flat)


# ---- diameter -------------------------------------------------------------------


def test_diameter():
    assert diameter(line_grid()) == 2.5
    assert math.isclose(diameter(quantize(Box.cube(-5, 5, 2), 4)), 2.5 * math.sqrt(2))
    assert diameter(quantize(Box(lo=(0.0,), hi=(1.0,)), 1)) == 1.0


def test_doubling_divisions_halves_diameter():
    box = Box(lo=(-5.0, 0.0), hi=(5.0, 1.0))
    coarse = diameter(quantize(box, (6, 10)))
    fine = diameter(quantize(box, (12, 20)))
    assert math.isclose(fine, coarse / 2)


# ---- rasterization --------------------------------------------------------------


def test_index_ranges_clip_and_count_contact():
    grid = line_grid()
    lo = np.array([[-11.0], [-6.0], [-2.5], [6.0], [-8.0]])
    hi = np.array([[-4.0], [1.0], [-2.5], [7.0], [-5.0]])
    ilo, ihi, hit = grid.index_ranges(lo, hi)
    assert hit.tolist() == [True, True, True, False, True]
    assert (ilo[0, 0], ihi[0, 0]) == (0, 0)
    assert (ilo[1, 0], ihi[1, 0]) == (0, 2)
    # A point image on an interior edge touches both neighbours
    assert (ilo[2, 0], ihi[2, 0]) == (0, 1)
    # Contact with the domain boundary
    assert (ilo[4, 0], ihi[4, 0]) == (0, 0)


def test_cells_in_ranges_enumerates_products():
    grid = quantize(Box.cube(0, 1, 2), (4, 4))
    ilo = np.array([[1, 1], [3, 0]])
    ihi = np.array([[2, 2], [3, 1]])
    owner, flat = grid.cells_in_ranges(ilo, ihi)
    assert owner.tolist() == [0, 0, 0, 0, 1, 1]
    assert flat.tolist() == [5, 6, 9, 10, 12, 13]


# ---- BoxCounter -----------------------------------------------------------------


def test_box_counter_matches_brute_force():
    grid = quantize(Box.cube(0, 1, 3), (5, 6, 7))
    rng = np.random.default_rng(4)
    members = np.unique(rng.integers(0, grid.size, size=80))
    counter = BoxCounter(grid, members)
    mask = np.zeros(grid.size, dtype=bool)
    mask[members] = True
    dense = mask.reshape(grid.divisions)

    a = rng.integers(0, [5, 6, 7], size=(200, 3))
    b = rng.integers(0, [5, 6, 7], size=(200, 3))
    ilo, ihi = np.minimum(a, b), np.maximum(a, b)
    counts = counter.count(ilo, ihi)
    for k in range(200):
        region = dense[ilo[k, 0]:ihi[k, 0] + 1, ilo[k, 1]:ihi[k, 1] + 1, ilo[k, 2]:ihi[k, 2] + 1]
        assert counts[k] == region.sum()


def test_box_counter_on_empty_set():
    grid = line_grid()
    counter = BoxCounter(grid, np.array([], dtype=np.int64))
    assert not counter.any(np.array([[0]]), np.array([[3]]))[0]
