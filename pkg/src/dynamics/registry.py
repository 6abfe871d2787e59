"""
Built-in example systems.

Linear examples use X = {|x|_inf <= 5}, U = {|u|_inf <= 1}; the reactor cascades
use X = [0, 1]^n, U = [0, 1] and are Euler-discretized with step 1.
"""

import logging
from typing import Callable, Dict, Literal, Sequence

import sympy as sp

from src.dynamics.model import CascadeStructure, OdeModel, SystemModel
from src.dynamics.ode import Scheme, discretize_ode
from src.errors import ConfigurationError, UnknownModelError
from src.grid.box import Box

logger = logging.getLogger(__name__)

CstrVariant = Literal["verbatim", "consumption"]

DA1 = 1
DA2 = 2


def _linear(name: str, a: Sequence[Sequence[int]], b: Sequence[Sequence[int]], blocks) -> SystemModel:
    n, m = len(a), len(b[0])
    x = sp.symbols(f"x1:{n + 1}")
    u = sp.symbols(f"u1:{m + 1}")
    rhs = sp.Matrix(a) * sp.Matrix(x) + sp.Matrix(b) * sp.Matrix(u)
    return SystemModel(
        name=name,
        states=tuple(x),
        inputs=tuple(u),
        equations=tuple(rhs),
        state_box=Box.cube(-5, 5, n),
        input_box=Box.cube(-1, 1, m),
        structure=CascadeStructure(blocks=blocks),
    )


def _example1(**_) -> SystemModel:
    return _linear("example1", [[2, 0], [0, 2]], [[1, 0], [0, 1]], [[0], [1]])


def _example2(**_) -> SystemModel:
    return _linear("example2", [[2, 0], [1, 2]], [[1, 0], [0, 1]], [[0], [1]])


def _linear3(**_) -> SystemModel:
    return _linear("linear3", [[2, 0, 0], [1, 2, 0], [0, 1, 2]], [[1], [0], [0]], [[0], [1], [2]])


def _doubling1(**_) -> SystemModel:
    return _linear("doubling1", [[2]], [[1]], [[0]])


def _nonlinear3(**_) -> SystemModel:
    x1, x2, x3 = sp.symbols("x1:4")
    (u1,) = sp.symbols("u1:2")
    return SystemModel(
        name="nonlinear3",
        states=(x1, x2, x3),
        inputs=(u1,),
        equations=(x1**2 + u1, x2**2 + x1, x3**2 + x2),
        state_box=Box.cube(-5, 5, 3),
        input_box=Box.cube(-1, 1, 1),
        structure=CascadeStructure(blocks=[[0], [1], [2]]),
    )


def _cstr_cascade(name: str, reactors: int, variant: CstrVariant) -> OdeModel:
    if variant not in ("verbatim", "consumption"):
        raise ConfigurationError(f"Unknown reactor variant '{variant}' (expected verbatim or consumption)")
    sign = 1 if variant == "verbatim" else -1
    x = sp.symbols(f"x1:{2 * reactors + 1}")
    (u1,) = sp.symbols("u1:2")
    fields = []
    for r in range(reactors):
        a, b = x[2 * r], x[2 * r + 1]
        feed_a = u1 if r == 0 else x[2 * r - 2]
        feed_b = 0 if r == 0 else x[2 * r - 1]
        fields.append(-a + sign * DA1 * a + feed_a)
        fields.append(-b + DA2 * b**2 - DA1 * a + feed_b)
    return OdeModel(
        name=name,
        states=tuple(x),
        inputs=(u1,),
        equations=tuple(fields),
        state_box=Box.cube(0, 1, 2 * reactors),
        input_box=Box.cube(0, 1, 1),
        structure=CascadeStructure(blocks=[[2 * r, 2 * r + 1] for r in range(reactors)]),
    )


_ODES: Dict[str, Callable[..., OdeModel]] = {
    "cstr2": lambda cstr_variant="verbatim", **_: _cstr_cascade("cstr2", 1, cstr_variant),
    "cstr6": lambda cstr_variant="verbatim", **_: _cstr_cascade("cstr6", 3, cstr_variant),
}


def _discretized(name: str) -> Callable[..., SystemModel]:
    def build(step: float = 1.0, scheme: Scheme = "euler", **options) -> SystemModel:
        return discretize_ode(builtin_ode(name, **options), step, scheme)

    return build


_MODELS: Dict[str, Callable[..., SystemModel]] = {
    "example1": _example1,
    "example2": _example2,
    "linear3": _linear3,
    "nonlinear3": _nonlinear3,
    "doubling1": _doubling1,
    "cstr2": _discretized("cstr2"),
    "cstr6": _discretized("cstr6"),
}

# Default groupings of cascade blocks (block indices, 0-based)
_GROUPINGS: Dict[str, Dict[str, list[list[int]]]] = {
    "example1": {"default": [[0], [1]]},
    "example2": {"default": [[0], [1]]},
    "linear3": {"default": [[0, 1], [1, 2]]},
    "nonlinear3": {"default": [[0, 1], [1, 2]]},
    "cstr6": {"reactor-pairs": [[0, 1], [1, 2]], "per-reactor": [[0], [1], [2]]},
}


def available_models() -> list[str]:
    return sorted(_MODELS)


def builtin_model(name: str, **options) -> SystemModel:
    """
    Build a registry model by name.

    Options: cstr_variant ("verbatim" | "consumption"), step and scheme for the
    discretized reactor cascades.
    """
    if name not in _MODELS:
        raise UnknownModelError(f"Unknown model '{name}'. Available: {', '.join(available_models())}")
    model = _MODELS[name](**options)
    logger.debug(f"Built registry model {name} (n={model.n}, m={model.m})")
    return model


def builtin_ode(name: str, **options) -> OdeModel:
    if name not in _ODES:
        raise UnknownModelError(f"Unknown continuous-time model '{name}'. Available: {', '.join(sorted(_ODES))}")
    return _ODES[name](**options)


def default_grouping(name: str, variant: str = "") -> list[list[int]]:
    """Block grouping used when none is given; for cstr6 the default is reactor pairs."""
    groupings = _GROUPINGS.get(name)
    if groupings is None:
        raise UnknownModelError(f"No default grouping for model '{name}'")
    if not variant:
        variant = "reactor-pairs" if name == "cstr6" else "default"
    if variant not in groupings:
        raise ConfigurationError(f"Unknown grouping '{variant}' for {name}. Available: {', '.join(groupings)}")
    return groupings[variant]
