from .model import (
    ActorClass,
    Aspect,
    Coupling,
    Finding,
    FramError,
    FramFunction,
    FramModel,
    FunctionGroup,
    ModelDiff,
    UnknownFunctionError,
    ValidationReport,
    Variability,
    ZERO_VARIABILITY,
    diff,
    neighborhood,
    validate,
)
from .propagation import propagate_variability
from .io import ParseError, load_model, model_from_dict, model_to_dict, save_model

__all__ = [
    "ActorClass",
    "Aspect",
    "Coupling",
    "Finding",
    "FramError",
    "FramFunction",
    "FramModel",
    "FunctionGroup",
    "ModelDiff",
    "ParseError",
    "UnknownFunctionError",
    "ValidationReport",
    "Variability",
    "ZERO_VARIABILITY",
    "diff",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "neighborhood",
    "propagate_variability",
    "save_model",
    "validate",
]
