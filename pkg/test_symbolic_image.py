"""
Tests for image over-approximation and symbolic image construction.
"""

import numpy as np
import pytest
import scipy.sparse as sparse
import sympy as sp

from src.dynamics import SystemModel, builtin_model
from src.errors import DimensionMismatchError
from src.grid import Box, CellSet, quantize
from src.symbolic_image import InputStrategy, SymbolicImage, build_graph, default_strategy, image_overapprox, in_neighbors


def edge_set(graph: SymbolicImage) -> set:
    src, dst = graph.edge_list()
    return set(zip(src.tolist(), dst.tolist()))


def small_graph(successors: dict, size: int = 6) -> SymbolicImage:
    grid = quantize(Box(lo=(0.0,), hi=(float(size),)), size)
    return SymbolicImage.from_successors(grid, successors)


# ---- image_overapprox -----------------------------------------------------------


def test_whole_input_image_by_hand():
    model = builtin_model("doubling1")
    boxes = image_overapprox(model, Box(lo=(-5.0,), hi=(-2.5,)), InputStrategy.whole(), rounding=False)
    assert [(b.lo, b.hi) for b in boxes] == [((-11.0,), (-4.0,))]


def test_split_input_image_by_hand():
    model = builtin_model("doubling1")
    boxes = image_overapprox(model, Box(lo=(-5.0,), hi=(-2.5,)), InputStrategy.split(2), rounding=False)
    assert [(b.lo, b.hi) for b in boxes] == [((-11.0,), (-5.0,)), ((-10.0,), (-4.0,))]


def test_zero_width_cell_and_inputs_give_a_point():
    x, u = sp.symbols("x u")
    model = SystemModel(
        name="point",
        states=(x,),
        inputs=(u,),
        equations=(x**2 + u,),
        state_box=Box(lo=(-2.0,), hi=(2.0,)),
        input_box=Box(lo=(0.5,), hi=(0.5,)),
    )
    boxes = image_overapprox(model, Box.point((1.5,)), rounding=False)
    assert len(boxes) == 1
    assert boxes[0].lo == boxes[0].hi == (2.75,)


def test_default_strategy_depends_on_input_affinity():
    assert default_strategy(builtin_model("linear3")).mode == "whole"
    x, u = sp.symbols("x u")
    model = SystemModel(
        name="quadratic-input",
        states=(x,),
        inputs=(u,),
        equations=(x + u**2,),
        state_box=Box(lo=(-1.0,), hi=(1.0,)),
        input_box=Box(lo=(-1.0,), hi=(1.0,)),
    )
    strategy = default_strategy(model)
    assert strategy.mode == "split"
    assert strategy.count(1) == 8


def test_partition_tiles_input_box():
    lo, hi = InputStrategy.split((2, 3)).partition(Box.cube(-1, 1, 2))
    assert lo.shape == (6, 2)
    assert np.isclose(np.prod(hi - lo, axis=1).sum(), 4.0)


# ---- build_graph ---------------------------------------------------------------


def test_doubling_graph_successors_by_hand():
    model = builtin_model("doubling1")
    grid = quantize(model.state_box, 4)
    graph = build_graph(model, grid, InputStrategy.whole())
    assert graph.successors(0).tolist() == [0]
    assert graph.successors(1).tolist() == [0, 1, 2]


def test_identity_map_has_self_loops_and_touching_neighbours():
    x, u = sp.symbols("x u")
    model = SystemModel(
        name="identity",
        states=(x,),
        inputs=(u,),
        equations=(x + u,),
        state_box=Box(lo=(0.0,), hi=(1.0,)),
        input_box=Box(lo=(0.0,), hi=(0.0,)),
    )
    grid = quantize(model.state_box, 10)
    graph = build_graph(model, grid)
    for cell in range(10):
        succ = set(graph.successors(cell).tolist())
        assert cell in succ
        assert succ <= {cell - 1, cell, cell + 1}


def test_images_leaving_the_domain_produce_no_edges():
    x, u = sp.symbols("x u")
    model = SystemModel(
        name="shift",
        states=(x,),
        inputs=(u,),
        equations=(x + 10,),
        state_box=Box(lo=(0.0,), hi=(1.0,)),
        input_box=Box(lo=(0.0,), hi=(0.0,)),
    )
    graph = build_graph(model, quantize(model.state_box, 8))
    assert graph.num_edges == 0


def test_edge_soundness_on_random_samples():
    model = builtin_model("nonlinear3")
    grid = quantize(model.state_box, 8)
    graph = build_graph(model, grid)
    rng = np.random.default_rng(7)
    cells = rng.integers(0, grid.size, size=10_000)
    lo, hi = grid.bounds_of(cells)
    x = rng.uniform(lo, hi)
    u = rng.uniform(-1, 1, size=(cells.size, 1))
    fx = model.step(x, u)
    inside = grid.contains_points(fx)
    targets = grid.locate_many(fx[inside])
    for src, dst in zip(cells[inside], targets):
        assert dst in graph.successors(int(src))


def test_refining_the_input_partition_never_adds_edges():
    x, u = sp.symbols("x u")
    model = SystemModel(
        name="quadratic-input",
        states=(x,),
        inputs=(u,),
        equations=(x / 2 + u - u**2,),
        state_box=Box(lo=(-3.0,), hi=(3.0,)),
        input_box=Box(lo=(-1.0,), hi=(1.0,)),
    )
    grid = quantize(model.state_box, 64)
    coarse = edge_set(build_graph(model, grid, InputStrategy.split(2)))
    fine = edge_set(build_graph(model, grid, InputStrategy.split(8)))
    assert fine <= coarse
    assert len(fine) < len(coarse)


def test_parallel_build_matches_serial_build():
    model = builtin_model("example2")
    grid = quantize(model.state_box, 24)
    serial = build_graph(model, grid)
    parallel = build_graph(model, grid, workers=4, chunk_size=37)
    assert (serial.adjacency != parallel.adjacency).nnz == 0


def test_restricted_sources_reproduce_their_rows():
    model = builtin_model("example2")
    grid = quantize(model.state_box, 16)
    full = build_graph(model, grid)
    chosen = CellSet(grid, range(0, grid.size, 5))
    restricted = build_graph(model, grid, sources=chosen)
    assert set(restricted.sources().tolist()) <= set(chosen.indices.tolist())
    for cell in chosen:
        assert np.array_equal(restricted.successors(cell), full.successors(cell))


def test_grid_dimension_must_match_model():
    model = builtin_model("example1")
    with pytest.raises(DimensionMismatchError):
        build_graph(model, quantize(Box.cube(-5, 5, 3), 4))


# ---- adjacency queries ----------------------------------------------------------


def test_in_neighbors_examples():
    graph = small_graph({1: [2], 3: [2]})
    grid = graph.grid
    assert in_neighbors(graph, CellSet(grid, [2])).indices.tolist() == [1, 3]
    assert in_neighbors(graph, CellSet.empty(grid)).is_empty()
    loop = small_graph({1: [1]})
    assert in_neighbors(loop, CellSet(loop.grid, [1])).indices.tolist() == [1]


def test_reverse_adjacency_is_the_transpose():
    rng = np.random.default_rng(9)
    grid = quantize(Box(lo=(0.0,), hi=(1.0,)), 300)
    src = rng.integers(0, 300, size=2000)
    dst = rng.integers(0, 300, size=2000)
    graph = SymbolicImage.from_edges(grid, src, dst)
    assert (graph.reverse != sparse.csr_matrix(graph.adjacency.T)).nnz == 0
    for cell in range(0, 300, 13):
        expected = sorted(set(src[dst == cell].tolist()))
        assert graph.predecessors(cell).tolist() == expected


def test_successor_lists_are_sorted_and_unique():
    graph = small_graph({0: [5, 1, 1, 3]})
    assert graph.successors(0).tolist() == [1, 3, 5]
    assert graph.num_edges == 3
