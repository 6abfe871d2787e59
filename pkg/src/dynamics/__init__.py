from .interval import compile_interval
from .loader import ModelDefinition, load_model, model_from_definition
from .model import CascadeStructure, OdeModel, SystemModel, evaluate, evaluate_interval
from .ode import discretize_ode
from .registry import available_models, builtin_model, builtin_ode, default_grouping

__all__ = [
    "CascadeStructure",
    "ModelDefinition",
    "OdeModel",
    "SystemModel",
    "available_models",
    "builtin_model",
    "builtin_ode",
    "compile_interval",
    "default_grouping",
    "discretize_ode",
    "evaluate",
    "evaluate_interval",
    "load_model",
    "model_from_definition",
]
