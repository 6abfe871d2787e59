"""
Tests for the overlapping decomposition of cascade models.
"""

import numpy as np
import pytest
import sympy as sp

from src.decomposition import check_cascade, decompose, project_box
from src.dynamics import CascadeStructure, SystemModel, builtin_model, default_grouping
from src.errors import CouplingError, GroupingError
from src.grid import Box


def local_matrix(model: SystemModel) -> list:
    jac = sp.Matrix(model.equations).jacobian(list(model.states))
    return [[int(v) for v in row] for row in jac.tolist()]


def test_project_box_examples():
    assert project_box(Box.cube(-5, 5, 3), [0, 1]) == Box.cube(-5, 5, 2)
    assert project_box(Box.cube(0, 1, 6), [2]) == Box.cube(0, 1, 1)
    box = Box(lo=(0.0, 1.0, 2.0), hi=(3.0, 4.0, 5.0))
    projected = project_box(box, [1, 2])
    assert projected.lo == (1.0, 2.0) and projected.hi == (4.0, 5.0)


def test_linear3_overlapping_subsystems():
    model = builtin_model("linear3")
    d = decompose(model, grouping=[[0, 1], [1, 2]])
    s1, s2 = d.subsystems

    assert s1.owned == (0, 1) and s1.missing == ()
    assert local_matrix(s1.model) == [[2, 0], [1, 2]]
    assert s1.model.m == 1 and s1.input_indices == (0,)

    assert s2.owned == (1, 2)
    assert s2.missing == (0,)
    assert s2.overlap_in == (1,)
    assert s2.model.m == 0
    x1, x2, x3 = model.states
    assert s2.model.exogenous == (x1,)
    assert s2.model.equations == (2 * x2 + x1, x2 + 2 * x3)
    assert s2.model.exogenous_box == Box.cube(-5, 5, 1)
    assert s2.model.state_box == Box.cube(-5, 5, 2)


def test_nonlinear3_downstream_equations():
    model = builtin_model("nonlinear3")
    d = decompose(model, grouping=default_grouping("nonlinear3"))
    x1, x2, x3 = model.states
    assert d.subsystems[1].model.equations == (x2**2 + x1, x3**2 + x2)


def test_single_group_is_the_full_model():
    model = builtin_model("nonlinear3")
    d = decompose(model)
    assert len(d.subsystems) == 1
    only = d.subsystems[0].model
    assert only.name == model.name
    assert only.equations == model.equations
    assert only.state_box == model.state_box
    assert d.subsystems[0].missing == ()
    assert d.overlaps == ()


@pytest.mark.parametrize("name", ["linear3", "nonlinear3", "cstr6"])
def test_local_maps_reproduce_the_global_map(name):
    model = builtin_model(name)
    d = decompose(model, grouping=default_grouping(name))
    rng = np.random.default_rng(3)
    x = rng.uniform(model.state_box.lower, model.state_box.upper, size=(200, model.n))
    u = rng.uniform(model.input_box.lower, model.input_box.upper, size=(200, model.m))
    full = model.step(x, u)
    for s in d.subsystems:
        local = s.model.step(x[:, list(s.owned)], u[:, list(s.input_indices)], x[:, list(s.missing)])
        assert np.array_equal(local, full[:, list(s.owned)])


def test_overlap_equations_agree_between_neighbours():
    model = builtin_model("cstr6")
    d = decompose(model, grouping=default_grouping("cstr6"))
    s1, s2 = d.subsystems
    for k in s2.overlap_in:
        assert s1.model.equations[s1.local_position(k)] == s2.model.equations[s2.local_position(k)]


@pytest.mark.parametrize(
    "name,grouping,expanded",
    [("linear3", [[0, 1], [1, 2]], 4), ("cstr6", [[0, 1], [1, 2]], 8), ("cstr6", [[0], [1], [2]], 6)],
)
def test_expanded_dimension_counts_the_overlaps(name, grouping, expanded):
    model = builtin_model(name)
    d = decompose(model, grouping=grouping)
    assert d.expanded_dim == expanded
    assert d.expanded_dim - model.n == d.overlap_count
    owned = sorted({k for s in d.subsystems for k in s.owned})
    assert owned == list(range(model.n))


def test_adjacent_groups_have_no_overlap():
    d = decompose(builtin_model("example2"), grouping=[[0], [1]])
    assert d.overlaps[0].shared == ()
    assert d.subsystems[1].missing == (0,)
    assert d.expanded_dim == 2


@pytest.mark.parametrize("grouping", [[[0], [2]], [[1, 2]], [[0, 1, 2], [1, 2]], [[0, 2]], [[]]])
def test_invalid_groupings(grouping):
    with pytest.raises(GroupingError):
        decompose(builtin_model("linear3"), grouping=grouping)


def test_coupling_beyond_the_upstream_block_is_rejected():
    x1, x2, x3 = sp.symbols("x1:4")
    model = SystemModel(
        name="skip",
        states=(x1, x2, x3),
        equations=(x1, x2 + x1, x3 + x1),
        state_box=Box.cube(-1, 1, 3),
        structure=CascadeStructure(blocks=[[0], [1], [2]]),
    )
    with pytest.raises(CouplingError):
        check_cascade(model, model.structure)
    with pytest.raises(CouplingError):
        decompose(model, grouping=[[0, 1], [1, 2]])
