"""
Tests for strongly connected components, non-leaving cells and graph products.
"""

import itertools

import networkx as nx
import numpy as np
import pytest

from src.config import SETTINGS
from src.dynamics import builtin_model
from src.errors import GridMismatchError, ProductSizeError
from src.grid import Box, CellSet, quantize
from src.invariance import cartesian_product, i_plus, is_non_leaving, nontrivial_components, scc, tensor_product
from src.symbolic_image import InputStrategy, SymbolicImage, build_graph


def graph_on(size: int, edges) -> SymbolicImage:
    grid = quantize(Box(lo=(0.0,), hi=(float(size),)), size)
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    return SymbolicImage.from_edges(grid, src, dst)


def as_sets(components) -> set:
    return {frozenset(c.tolist()) for c in components}


# ---- scc ------------------------------------------------------------------------


def test_scc_definition_examples():
    g = graph_on(4, [(1, 2), (2, 1), (3, 1)])
    assert {frozenset({1, 2}), frozenset({3})} <= as_sets(scc(g))
    assert as_sets(nontrivial_components(g)) == {frozenset({1, 2})}

    loop = graph_on(2, [(1, 1)])
    assert as_sets(nontrivial_components(loop)) == {frozenset({1})}

    assert nontrivial_components(graph_on(5, [])) == []


@pytest.mark.parametrize("seed", range(5))
def test_scc_partition_against_transitive_closure(seed):
    rng = np.random.default_rng(seed)
    size = int(rng.integers(20, 200))
    edges = rng.integers(0, size, size=(int(rng.integers(size, 3 * size)), 2))
    g = graph_on(size, edges.tolist())

    components = scc(g)
    covered = np.sort(np.concatenate(components))
    assert np.array_equal(covered, np.arange(size))

    reference = nx.DiGraph()
    reference.add_nodes_from(range(size))
    reference.add_edges_from(edges.tolist())
    closure = nx.transitive_closure(reference, reflexive=True)
    for component in components:
        for a, b in itertools.combinations(component.tolist(), 2):
            assert closure.has_edge(a, b) and closure.has_edge(b, a)
    assert as_sets(components) == {frozenset(c) for c in nx.strongly_connected_components(reference)}


# ---- i_plus ---------------------------------------------------------------------


def test_i_plus_examples():
    g = graph_on(6, [(1, 2), (2, 1), (3, 1), (4, 5)])
    assert i_plus(g).indices.tolist() == [1, 2, 3]

    identity = graph_on(5, [(k, k) for k in range(5)])
    assert len(i_plus(identity)) == 5


@pytest.mark.parametrize("seed", range(5))
def test_i_plus_fixpoint_and_brute_force(seed):
    rng = np.random.default_rng(100 + seed)
    size = 120
    edges = rng.integers(0, size, size=(150, 2)).tolist()
    g = graph_on(size, edges)
    result = i_plus(g)
    assert is_non_leaving(g, result)

    # Brute force: repeatedly drop vertices without a successor in the survivors
    alive = np.ones(size, dtype=bool)
    adjacency = g.adjacency
    while True:
        keep = np.array([alive[adjacency[v].indices].any() for v in range(size)]) & alive
        if np.array_equal(keep, alive):
            break
        alive = keep
    assert np.array_equal(result.mask(), alive)


def test_doubling_system_kernel():
    model = builtin_model("doubling1")
    grid = quantize(model.state_box, 128)
    result = i_plus(build_graph(model, grid))
    hull = result.hull()
    width = grid.widths[0]
    assert hull.lo[0] <= -1.0 and hull.hi[0] >= 1.0
    assert hull.lo[0] >= -1.0 - 2 * width and hull.hi[0] <= 1.0 + 2 * width
    # The kernel is an interval: the cells are contiguous
    assert np.all(np.diff(result.indices) == 1)


def test_example1_kernel_square():
    model = builtin_model("example1")
    grid = quantize(model.state_box, 128)
    hull = i_plus(build_graph(model, grid)).hull()
    width = grid.widths[0]
    for d in range(2):
        assert hull.lo[d] <= -1.0 and hull.hi[d] >= 1.0
        assert hull.lo[d] >= -1.0 - 2 * width and hull.hi[d] <= 1.0 + 2 * width


# ---- products -------------------------------------------------------------------


def test_cartesian_product_of_self_loops():
    g = cartesian_product(graph_on(1, [(0, 0)]), graph_on(1, [(0, 0)]))
    assert g.num_vertices == 1
    assert g.successors(0).tolist() == [0]


def test_cartesian_product_edge_count():
    g1 = graph_on(4, [(0, 1), (1, 2), (2, 0), (3, 2)])
    g2 = graph_on(3, [(0, 1), (1, 0)])
    g = cartesian_product(g1, g2)
    assert g.num_vertices == 12
    assert g.num_edges == g1.num_vertices * g2.num_edges + g2.num_vertices * g1.num_edges


def test_cartesian_product_edges_follow_definition():
    g1 = graph_on(3, [(0, 1), (1, 1), (2, 0)])
    g2 = graph_on(2, [(0, 1)])
    g = cartesian_product(g1, g2)
    src, dst = g.edge_list()
    edges = set(zip(src.tolist(), dst.tolist()))
    expected = set()
    for a, b in itertools.product(range(3), range(2)):
        for c, d in itertools.product(range(3), range(2)):
            if (a == c and d in g2.successors(b)) or (b == d and c in g1.successors(a)):
                expected.add((a * 2 + b, c * 2 + d))
    assert edges == expected


def test_cartesian_product_non_leaving_cells():
    """A product vertex keeps moving as long as either factor can."""
    model = builtin_model("doubling1")
    grid = quantize(model.state_box, 32)
    g1 = build_graph(model, grid)
    r1 = i_plus(g1)
    full = CellSet.full(grid)
    product = cartesian_product(g1, g1)
    expected = r1.product(full).union(full.product(r1))
    assert i_plus(product) == expected
    assert r1.product(r1) <= i_plus(product)


def test_disjoint_system_graph_is_the_tensor_product():
    doubling = builtin_model("doubling1")
    example1 = builtin_model("example1")
    g1 = build_graph(doubling, quantize(doubling.state_box, 16), InputStrategy.whole())
    full = build_graph(example1, quantize(example1.state_box, 16), InputStrategy.whole())
    assert (full.adjacency != tensor_product(g1, g1).adjacency).nnz == 0


def test_disjoint_exactness_at_64_divisions():
    doubling = builtin_model("doubling1")
    example1 = builtin_model("example1")
    r1 = i_plus(build_graph(doubling, quantize(doubling.state_box, 64)))
    centralized = i_plus(build_graph(example1, quantize(example1.state_box, 64)))
    assert centralized == r1.product(r1)


def test_product_size_limit(monkeypatch):
    monkeypatch.setattr(SETTINGS, "max_product_cells", 10)
    with pytest.raises(ProductSizeError):
        cartesian_product(graph_on(4, []), graph_on(4, []))


def test_set_operations_require_matching_grids():
    a = CellSet(quantize(Box.cube(0, 1, 1), 4), [0, 1])
    b = CellSet(quantize(Box.cube(0, 1, 1), 8), [0, 1])
    with pytest.raises(GridMismatchError):
        a.union(b)


def test_cell_set_projection_and_product():
    grid = quantize(Box.cube(0, 1, 2), (3, 4))
    cells = CellSet(grid, grid.ravel(np.array([[0, 1], [2, 1], [2, 3]])))
    assert cells.project([0]).indices.tolist() == [0, 2]
    assert cells.project([1]).indices.tolist() == [1, 3]
    left = CellSet(quantize(Box.cube(0, 1, 1), 3), [0, 2])
    right = CellSet(quantize(Box.cube(0, 1, 1), 4), [1, 3])
    product = left.product(right)
    assert product.grid == grid
    assert product.indices.tolist() == [1, 3, 9, 11]
