import logging
from typing import Literal

import sympy as sp

from src.dynamics.model import OdeModel, SystemModel
from src.errors import ConfigurationError

logger = logging.getLogger(__name__)

Scheme = Literal["euler", "heun"]


def discretize_ode(ode: OdeModel, step: float, scheme: Scheme = "euler") -> SystemModel:
    """
    Turn a vector field into a one-step map.

    euler: x+ = x + h f(x, u)
    heun:  x+ = x + h/2 (f(x, u) + f(x + h f(x, u), u))
    """
    if not step > 0:
        raise ConfigurationError(f"Discretization step must be positive, got {step}")
    h = sp.nsimplify(step)
    states = list(ode.states)
    fields = list(ode.equations)

    if scheme == "euler":
        equations = [sp.expand(x + h * f) for x, f in zip(states, fields)]
    elif scheme == "heun":
        predictor = {x: x + h * f for x, f in zip(states, fields)}
        corrected = [f.subs(predictor, simultaneous=True) for f in fields]
        equations = [x + h / 2 * (f + g) for x, f, g in zip(states, fields, corrected)]
    else:
        raise ConfigurationError(f"Unknown discretization scheme '{scheme}' (expected euler or heun)")

    logger.debug(f"Discretized {ode.name} with {scheme}, step {step}")
    return SystemModel(
        name=ode.name,
        states=ode.states,
        inputs=ode.inputs,
        exogenous=ode.exogenous,
        equations=tuple(equations),
        state_box=ode.state_box,
        input_box=ode.input_box,
        exogenous_box=ode.exogenous_box,
        structure=ode.structure,
    )
