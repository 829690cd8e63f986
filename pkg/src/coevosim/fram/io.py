"""Reading and writing model files.

The on-disk format is a JSON object:

    {
      "name": str,
      "functions": [{"id", "name", "actor_class", "group", "damping"}, ...],
      "couplings": [{"from", "to", "aspect", "label"}, ...],
      "sources": [id, ...]
    }

Aspect strings are input|time|control|precondition|resource. Unknown fields
are rejected so typos surface instead of silently vanishing on round-trip.
"""

from __future__ import annotations

import json
from pathlib import Path

from .model import (
    ActorClass,
    Aspect,
    Coupling,
    FramError,
    FramFunction,
    FramModel,
    FunctionGroup,
)


class ParseError(FramError):
    """A model file could not be parsed; carries a code and a context path."""

    def __init__(self, code: str, context: str, message: str):
        super().__init__(f"{code} at {context}: {message}")
        self.code = code
        self.context = context


_TOP_KEYS = {"name", "functions", "couplings", "sources"}
_FN_KEYS = {"id", "name", "actor_class", "group", "damping"}
_CPL_KEYS = {"from", "to", "aspect", "label"}


def _require_keys(obj: dict, allowed: set[str], required: set[str], ctx: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError("bad_shape", ctx, f"expected object, got {type(obj).__name__}")
    unknown = set(obj) - allowed
    if unknown:
        raise ParseError("unknown_field", ctx, f"unknown fields {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ParseError("missing_field", ctx, f"missing fields {sorted(missing)}")


def model_from_dict(data: dict) -> FramModel:
    _require_keys(data, _TOP_KEYS, {"name", "functions", "couplings"}, "$")
    if not isinstance(data["name"], str):
        raise ParseError("bad_shape", "$.name", "name must be a string")

    functions: list[FramFunction] = []
    for i, raw in enumerate(data["functions"]):
        ctx = f"$.functions[{i}]"
        _require_keys(raw, _FN_KEYS, {"id", "name", "actor_class", "group"}, ctx)
        try:
            actor = ActorClass(raw["actor_class"])
        except ValueError:
            raise ParseError("bad_actor_class", ctx, f"{raw['actor_class']!r}") from None
        try:
            group = FunctionGroup(raw["group"])
        except ValueError:
            raise ParseError("bad_group", ctx, f"{raw['group']!r}") from None
        functions.append(
            FramFunction(
                id=str(raw["id"]),
                name=str(raw["name"]),
                actor_class=actor,
                group=group,
                damping=bool(raw.get("damping", False)),
            )
        )

    couplings: list[Coupling] = []
    for i, raw in enumerate(data["couplings"]):
        ctx = f"$.couplings[{i}]"
        _require_keys(raw, _CPL_KEYS, {"from", "to", "aspect"}, ctx)
        aspect_raw = raw["aspect"]
        if aspect_raw == "output":
            raise ParseError(
                "aspect_misuse", ctx, "output is a source side, never a landing aspect"
            )
        try:
            aspect = Aspect(aspect_raw)
        except ValueError:
            raise ParseError("aspect_misuse", ctx, f"unknown aspect {aspect_raw!r}") from None
        couplings.append(
            Coupling(
                from_fn=str(raw["from"]),
                to_fn=str(raw["to"]),
                to_aspect=aspect,
                label=str(raw.get("label", "")),
            )
        )

    sources = data.get("sources", [])
    if not isinstance(sources, list):
        raise ParseError("bad_shape", "$.sources", "sources must be a list of ids")
    return FramModel(
        name=data["name"],
        functions=functions,
        couplings=couplings,
        sources=[str(s) for s in sources],
    )


def model_to_dict(model: FramModel) -> dict:
    return {
        "name": model.name,
        "functions": [
            {
                "id": f.id,
                "name": f.name,
                "actor_class": f.actor_class.value,
                "group": f.group.value,
                "damping": f.damping,
            }
            for f in model.functions
        ],
        "couplings": [
            {
                "from": c.from_fn,
                "to": c.to_fn,
                "aspect": c.to_aspect.value,
                "label": c.label,
            }
            for c in model.couplings
        ],
        "sources": list(model.sources),
    }


def load_model(path: str | Path) -> FramModel:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("invalid_json", f"line {exc.lineno}", exc.msg) from exc
    return model_from_dict(data)


def save_model(model: FramModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model_to_dict(model), indent=2) + "\n", encoding="utf-8"
    )
