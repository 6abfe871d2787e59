"""
Tests for the decentralized and distributed subsystem passes and the
missing-state estimation between chained subsystems.
"""

from types import SimpleNamespace

import numpy as np
import pytest
import sympy as sp

from src.decomposition import OverlapMap, decompose
from src.distributed import decentralized_pass, distributed_pass, estimate_missing, subsystem_grids
from src.dynamics import SystemModel, builtin_model, default_grouping
from src.errors import GridMismatchError
from src.grid import Box, CellSet, quantize
from src.invariance import i_plus, is_non_leaving
from src.symbolic_image import build_graph

# Upstream (x1, x2) and downstream (x2, x3) sharing x2, with x1 missing downstream
SHARED_X2 = OverlapMap(
    upstream=0,
    downstream=1,
    shared=(1,),
    upstream_positions=(1,),
    downstream_positions=(0,),
    missing=(0,),
    missing_positions=(0,),
)


def upstream_on(grid, multi) -> SimpleNamespace:
    return SimpleNamespace(grid=grid, cells=CellSet(grid, grid.ravel(np.array(multi))))


def edge_set(graph) -> set:
    src, dst = graph.edge_list()
    return set(zip(src.tolist(), dst.tolist()))


# ---- estimate_missing -----------------------------------------------------------


def test_matching_upstream_cells_merge_into_one_interval():
    up_grid = quantize(Box.cube(0, 4, 2), 4)
    target = quantize(Box.cube(0, 4, 2), 4)
    table = estimate_missing(upstream_on(up_grid, [[0, 2], [1, 2], [2, 2], [3, 0]]), target, SHARED_X2)
    # Target cells whose x2 index is 2 see the three upstream cells as one x1 range
    for x3 in range(4):
        cell = int(target.ravel(np.array([2, x3]))[0])
        assert table.intervals(cell) == [(0.0, 3.0)]
    cell = int(target.ravel(np.array([0, 1]))[0])
    assert table.intervals(cell) == [(3.0, 4.0)]
    cell = int(target.ravel(np.array([1, 1]))[0])
    assert table.intervals(cell) == []


def test_separated_cells_stay_disjoint_intervals():
    up_grid = quantize(Box.cube(0, 4, 2), 4)
    target = quantize(Box.cube(0, 4, 2), 4)
    table = estimate_missing(upstream_on(up_grid, [[0, 1], [1, 1], [3, 1]]), target, SHARED_X2)
    cell = int(target.ravel(np.array([1, 0]))[0])
    assert table.intervals(cell) == [(0.0, 2.0), (3.0, 4.0)]


def test_empty_upstream_gives_empty_entries():
    up_grid = quantize(Box.cube(0, 4, 2), 4)
    target = quantize(Box.cube(0, 4, 2), 4)
    table = estimate_missing(SimpleNamespace(grid=up_grid, cells=CellSet.empty(up_grid)), target, SHARED_X2)
    assert table.num_boxes == 0
    assert all(table.entry(cell) == [] for cell in range(target.size))
    owner, lo, hi = table.boxes_for(np.arange(target.size))
    assert owner.size == 0 and lo.shape == (0, 1)


def test_overlap_grids_must_match():
    up_grid = quantize(Box.cube(0, 4, 2), 4)
    target = quantize(Box.cube(0, 4, 2), (8, 4))
    with pytest.raises(GridMismatchError):
        estimate_missing(upstream_on(up_grid, [[0, 0]]), target, SHARED_X2)


def test_two_missing_dimensions_cover_the_projection_exactly():
    # Upstream (x1, x2, x3), downstream (x3, x4): x1 and x2 are missing, x3 shared
    overlap = OverlapMap(
        upstream=0,
        downstream=1,
        shared=(2,),
        upstream_positions=(2,),
        downstream_positions=(0,),
        missing=(0, 1),
        missing_positions=(0, 1),
    )
    up_grid = quantize(Box.cube(0, 1, 3), 6)
    target = quantize(Box.cube(0, 1, 2), 6)
    rng = np.random.default_rng(11)
    chosen = np.unique(rng.integers(0, up_grid.size, size=80))
    upstream = SimpleNamespace(grid=up_grid, cells=CellSet(up_grid, chosen))
    table = estimate_missing(upstream, target, overlap)

    multi = up_grid.unravel(chosen)
    for x3 in range(6):
        cell = int(target.ravel(np.array([x3, 0]))[0])
        boxes = table.entry(cell)
        expected = {tuple(m[:2]) for m in multi if m[2] == x3}
        # Boxes are disjoint unions of whole projected cells
        area = sum(np.prod(b.widths) for b in boxes)
        assert np.isclose(area, len(expected) / 36.0)
        covered = set()
        for b in boxes:
            lo = np.rint(np.asarray(b.lo) * 6).astype(int)
            hi = np.rint(np.asarray(b.hi) * 6).astype(int)
            covered |= {(i, j) for i in range(lo[0], hi[0]) for j in range(lo[1], hi[1])}
        assert covered == expected


def test_adjacent_subsystems_share_one_entry():
    model = builtin_model("example2")
    d = decompose(model, grouping=[[0], [1]])
    g1, g2 = subsystem_grids(d, 16)
    upstream = upstream_on(g1, [[3], [4], [9]])
    table = estimate_missing(upstream, g2, d.overlap_into(1))
    first = table.entry(0)
    assert len(first) == 2
    assert all(table.entry(cell) == first for cell in range(g2.size))
    assert table.covered_fraction() == 1.0


# ---- passes ---------------------------------------------------------------------


def test_subsystem_grids_are_projections_of_one_quantization():
    d = decompose(builtin_model("linear3"), grouping=[[0, 1], [1, 2]])
    g1, g2 = subsystem_grids(d, (8, 16, 32))
    assert g1.divisions == (8, 16)
    assert g2.divisions == (16, 32)
    assert g1.project([1]) == g2.project([0])


def test_single_subsystem_matches_the_centralized_solution():
    model = builtin_model("example2")
    d = decompose(model)
    (solution,) = decentralized_pass(d, 32)
    assert solution.cells == i_plus(build_graph(model, quantize(model.state_box, 32)))


def test_head_subsystem_matches_a_standalone_run():
    x1, x2, u1 = sp.symbols("x1 x2 u1")
    standalone = SystemModel(
        name="linear3-head",
        states=(x1, x2),
        inputs=(u1,),
        equations=(2 * x1 + u1, x1 + 2 * x2),
        state_box=Box.cube(-5, 5, 2),
        input_box=Box.cube(-1, 1, 1),
    )
    d = decompose(builtin_model("linear3"), grouping=[[0, 1], [1, 2]])
    solutions = decentralized_pass(d, 32)
    assert solutions[0].cells.indices.tolist() == i_plus(build_graph(standalone, quantize(standalone.state_box, 32))).indices.tolist()


def test_decentralized_downstream_is_larger_than_the_centralized_projection():
    model = builtin_model("example2")
    d = decompose(model, grouping=[[0], [1]])
    _, r2 = decentralized_pass(d, 64)
    centralized = i_plus(build_graph(model, quantize(model.state_box, 64)))
    projected = centralized.project([1])
    assert projected <= r2.cells
    assert len(r2.cells) > len(projected)


def test_distributed_pass_is_dominated_by_the_decentralized_pass():
    model = builtin_model("example2")
    d = decompose(model, grouping=[[0], [1]])
    dec = decentralized_pass(d, 64)
    dist = distributed_pass(d, 64)
    centralized = i_plus(build_graph(model, quantize(model.state_box, 64)))

    assert dist[0].cells == dec[0].cells
    assert dist[1].cells <= dec[1].cells
    assert len(dist[1].cells) < len(dec[1].cells)
    assert centralized.project([1]) <= dist[1].cells
    for sol in dist:
        assert is_non_leaving(sol.graph, sol.cells)


def test_seeded_pass_gives_the_same_solution():
    d = decompose(builtin_model("nonlinear3"), grouping=default_grouping("nonlinear3"))
    dec = decentralized_pass(d, 16)
    unseeded = distributed_pass(d, 16)
    seeded = distributed_pass(d, 16, seed=dec)
    for a, b in zip(unseeded, seeded):
        assert a.cells == b.cells
    assert set(seeded[1].graph.sources().tolist()) <= set(dec[1].cells.indices.tolist())


def test_parallel_decentralized_pass_matches_serial():
    d = decompose(builtin_model("linear3"), grouping=[[0, 1], [1, 2]])
    serial = decentralized_pass(d, 12)
    parallel = decentralized_pass(d, 12, workers=4)
    for a, b in zip(serial, parallel):
        assert a.cells == b.cells
        assert (a.graph.adjacency != b.graph.adjacency).nnz == 0


@pytest.mark.parametrize("seed", range(5))
def test_larger_missing_ranges_never_remove_edges(seed):
    model = builtin_model("example2")
    d = decompose(model, grouping=[[0], [1]])
    g1, g2 = subsystem_grids(d, 32)
    rng = np.random.default_rng(seed)
    small = CellSet(g1, rng.choice(g1.size, size=6, replace=False))
    large = small | CellSet(g1, rng.choice(g1.size, size=6, replace=False))
    s2 = d.subsystems[1].model
    overlap = d.overlap_into(1)
    narrow = build_graph(s2, g2, exogenous=estimate_missing(SimpleNamespace(grid=g1, cells=small), g2, overlap))
    wide = build_graph(s2, g2, exogenous=estimate_missing(SimpleNamespace(grid=g1, cells=large), g2, overlap))
    static = build_graph(s2, g2)
    assert edge_set(narrow) <= edge_set(wide) <= edge_set(static)
    assert i_plus(narrow) <= i_plus(wide)


def test_cstr6_small_grid_keeps_every_subsystem_non_empty():
    model = builtin_model("cstr6")
    for variant in ("reactor-pairs", "per-reactor"):
        d = decompose(model, grouping=default_grouping("cstr6", variant))
        solutions = distributed_pass(d, 6)
        assert len(solutions) == len(d.subsystems)
        assert all(not sol.cells.is_empty() for sol in solutions)


@pytest.mark.slow
def test_cstr6_at_16_divisions():
    model = builtin_model("cstr6")
    for variant in ("reactor-pairs", "per-reactor"):
        d = decompose(model, grouping=default_grouping("cstr6", variant))
        dec = decentralized_pass(d, 16, workers=4)
        dist = distributed_pass(d, 16, seed=dec, workers=4)
        assert all(not sol.cells.is_empty() for sol in dist)
