import json
import logging
from pathlib import Path
from typing import List, Literal, Optional

import sympy as sp
from pydantic import BaseModel, Field, ValidationError
from sympy.parsing.sympy_parser import parse_expr

from src.dynamics.model import CascadeStructure, OdeModel, SystemModel
from src.dynamics.ode import discretize_ode
from src.dynamics.registry import available_models, builtin_model
from src.errors import ModelDefinitionError, UnknownModelError
from src.grid.box import Box

logger = logging.getLogger(__name__)


class ModelDefinition(BaseModel):
    """JSON model file: one expression string per state equation."""

    name: str = Field(description="Model name used in artifacts and logs")
    kind: Literal["discrete", "continuous"] = Field(default="discrete", description="Map or vector field")
    step: float = Field(default=1.0, gt=0, description="Discretization step for continuous models")
    scheme: Literal["euler", "heun"] = Field(default="euler")
    states: List[str] = Field(min_length=1, description="State variable names, in order")
    inputs: List[str] = Field(default_factory=list)
    equations: List[str] = Field(description="One expression per state")
    state_bounds: List[List[float]] = Field(description="[lo, hi] per state")
    input_bounds: List[List[float]] = Field(default_factory=list)
    blocks: Optional[List[List[str]]] = Field(default=None, description="Cascade blocks as lists of state names")


def model_from_definition(definition: ModelDefinition) -> SystemModel:
    names = definition.states + definition.inputs
    if len(set(names)) != len(names):
        raise ModelDefinitionError(f"Duplicate variable names in {definition.name}")
    if len(definition.equations) != len(definition.states):
        raise ModelDefinitionError(
            f"{definition.name}: {len(definition.equations)} equations for {len(definition.states)} states"
        )
    symbols = {name: sp.Symbol(name) for name in names}
    try:
        equations = tuple(parse_expr(text, local_dict=dict(symbols)) for text in definition.equations)
    except (SyntaxError, TypeError, sp.SympifyError) as e:
        raise ModelDefinitionError(f"Cannot parse an equation of {definition.name}: {str(e)}") from e

    structure = None
    if definition.blocks:
        index = {name: k for k, name in enumerate(definition.states)}
        try:
            structure = CascadeStructure(blocks=[[index[s] for s in block] for block in definition.blocks])
        except KeyError as e:
            raise ModelDefinitionError(f"Block references unknown state {e}") from e

    fields = dict(
        name=definition.name,
        states=tuple(symbols[s] for s in definition.states),
        inputs=tuple(symbols[s] for s in definition.inputs),
        equations=equations,
        state_box=Box.from_bounds(definition.state_bounds),
        input_box=Box.from_bounds(definition.input_bounds),
        structure=structure,
    )
    if definition.kind == "continuous":
        return discretize_ode(OdeModel(**fields), definition.step, definition.scheme)
    return SystemModel(**fields)


def load_model(source: str, **options) -> SystemModel:
    """Resolve a registry name or a JSON model file."""
    if source in available_models():
        return builtin_model(source, **options)
    path = Path(source)
    if not path.exists():
        raise UnknownModelError(
            f"'{source}' is neither a registry model ({', '.join(available_models())}) nor an existing file"
        )
    try:
        definition = ModelDefinition(**json.loads(path.read_text(encoding="utf-8")))
        model = model_from_definition(definition)
    except json.JSONDecodeError as e:
        logger.error(f"Model file {path} is not valid JSON: {str(e)}")
        raise ModelDefinitionError(f"Model file {path} is not valid JSON: {str(e)}") from e
    except ValidationError as e:
        logger.error(f"Model file {path} failed validation: {str(e)}")
        raise ModelDefinitionError(f"Model file {path} failed validation: {str(e)}") from e
    logger.info(f"Loaded model {model.name} from {path} (n={model.n}, m={model.m})")
    return model
