"""Core types and structural checks for functional-resonance models.

A model is a set of named functions wired together by couplings. Every
coupling leaves the source function's output side and lands on one of five
aspects of the destination function: input, time, control, precondition, or
resource. Output is exclusively a source side, so it can never be a landing
aspect. Functions carry an actor class (robot, worker, external, world) and
a role group; a boolean ``damping`` flag marks functions that attenuate
incoming variability.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum


class FramError(Exception):
    """Base class for model errors."""


class UnknownFunctionError(FramError):
    """A function id was referenced that does not exist in the model."""


class ActorClass(str, Enum):
    AMR = "amr"
    WORKER = "worker"
    EXTERNAL = "external"
    WORLD = "world"


class FunctionGroup(str, Enum):
    RECOGNITION = "recognition"
    PREDICTION_LEARNING = "prediction_learning"
    JUDGMENT = "judgment"
    ACTION = "action"
    EXTERNAL = "external"
    WORLD = "world"


class Aspect(str, Enum):
    """Landing aspects of a coupling. Output never appears here."""

    INPUT = "input"
    TIME = "time"
    CONTROL = "control"
    PRECONDITION = "precondition"
    RESOURCE = "resource"


@dataclass(frozen=True)
class FramFunction:
    id: str
    name: str
    actor_class: ActorClass
    group: FunctionGroup
    damping: bool = False


@dataclass(frozen=True)
class Coupling:
    from_fn: str
    to_fn: str
    to_aspect: Aspect
    label: str = ""

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.from_fn, self.to_fn, self.to_aspect.value, self.label)


@dataclass(frozen=True)
class Variability:
    """Ordinal output-variability scores.

    timing: 0 on time, 1 too early, 2 too late, 3 omitted.
    precision: 0 precise, 1 acceptable, 2 imprecise.
    """

    timing: int = 0
    precision: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.timing <= 3:
            raise ValueError(f"timing score {self.timing} outside 0..3")
        if not 0 <= self.precision <= 2:
            raise ValueError(f"precision score {self.precision} outside 0..2")

    @property
    def total(self) -> int:
        return self.timing + self.precision

    def max_with(self, other: "Variability") -> "Variability":
        return Variability(
            max(self.timing, other.timing), max(self.precision, other.precision)
        )


ZERO_VARIABILITY = Variability(0, 0)


@dataclass
class FramModel:
    """A named set of functions plus the couplings between them.

    ``sources`` lists function ids that legitimately have no upstream on
    their input aspect (e.g. sensing functions fed by the physical world).
    """

    name: str
    functions: list[FramFunction] = field(default_factory=list)
    couplings: list[Coupling] = field(default_factory=list)
    sources: list[str] = field(default_factory=list)

    def function_ids(self) -> list[str]:
        return [f.id for f in self.functions]

    def get(self, fn_id: str) -> FramFunction:
        for f in self.functions:
            if f.id == fn_id:
                return f
        raise UnknownFunctionError(fn_id)

    def has(self, fn_id: str) -> bool:
        return any(f.id == fn_id for f in self.functions)

    def incoming(self, fn_id: str) -> list[Coupling]:
        return [c for c in self.couplings if c.to_fn == fn_id]

    def outgoing(self, fn_id: str) -> list[Coupling]:
        return [c for c in self.couplings if c.from_fn == fn_id]


@dataclass(frozen=True)
class Finding:
    code: str
    subject: str
    message: str


@dataclass
class ValidationReport:
    errors: list[Finding] = field(default_factory=list)
    warnings: list[Finding] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.errors


@dataclass
class ModelDiff:
    added_functions: set[str] = field(default_factory=set)
    removed_functions: set[str] = field(default_factory=set)
    added_couplings: set[tuple[str, str, str, str]] = field(default_factory=set)
    removed_couplings: set[tuple[str, str, str, str]] = field(default_factory=set)


def validate(model: FramModel) -> ValidationReport:
    """Collect every structural violation without mutating the model.

    Error codes: duplicate_function, empty_name, actor_group_mismatch,
    unknown_endpoint, aspect_misuse, duplicate_coupling, orphan_input,
    unknown_source. Self-loops are reported as warnings (code self_loop).
    """
    report = ValidationReport()
    seen_ids: set[str] = set()
    for fn in model.functions:
        if fn.id in seen_ids:
            report.errors.append(
                Finding("duplicate_function", fn.id, "function id declared twice")
            )
        seen_ids.add(fn.id)
        if not fn.name:
            report.errors.append(Finding("empty_name", fn.id, "function name is empty"))
        if fn.actor_class is ActorClass.EXTERNAL and fn.group is not FunctionGroup.EXTERNAL:
            report.errors.append(
                Finding(
                    "actor_group_mismatch",
                    fn.id,
                    "external actors must belong to the external group",
                )
            )
        if fn.actor_class is ActorClass.WORLD and fn.group is not FunctionGroup.WORLD:
            report.errors.append(
                Finding(
                    "actor_group_mismatch",
                    fn.id,
                    "world actors must belong to the world group",
                )
            )

    known = {f.id for f in model.functions}
    seen_keys: set[tuple[str, str, str, str]] = set()
    for c in model.couplings:
        if not isinstance(c.to_aspect, Aspect):
            report.errors.append(
                Finding(
                    "aspect_misuse",
                    f"{c.from_fn}->{c.to_fn}",
                    f"invalid landing aspect {c.to_aspect!r}",
                )
            )
            continue
        for endpoint in (c.from_fn, c.to_fn):
            if endpoint not in known:
                report.errors.append(
                    Finding(
                        "unknown_endpoint",
                        endpoint,
                        f"coupling {c.from_fn}->{c.to_fn} references a missing function",
                    )
                )
        if c.key in seen_keys:
            report.errors.append(
                Finding("duplicate_coupling", "|".join(c.key), "coupling declared twice")
            )
        seen_keys.add(c.key)
        if c.from_fn == c.to_fn:
            report.warnings.append(
                Finding("self_loop", c.from_fn, "function couples to itself")
            )

    for sid in model.sources:
        if sid not in known:
            report.warnings.append(
                Finding("unknown_source", sid, "declared source is not in the model")
            )

    inputs_by_fn: set[str] = {
        c.to_fn
        for c in model.couplings
        if isinstance(c.to_aspect, Aspect) and c.to_aspect is Aspect.INPUT
    }
    for fn in model.functions:
        if fn.group in (FunctionGroup.EXTERNAL, FunctionGroup.WORLD):
            continue
        if fn.id in model.sources:
            continue
        if fn.id not in inputs_by_fn:
            report.errors.append(
                Finding(
                    "orphan_input",
                    fn.id,
                    "no upstream output lands on the input aspect and the "
                    "function is not a declared source",
                )
            )
    return report


def neighborhood(
    model: FramModel,
    fn_id: str,
    direction: str,
    depth: int | None = None,
) -> set[str]:
    """Transitive closure along couplings, excluding the start function.

    ``direction`` is "upstream" (follow couplings backwards through their
    source) or "downstream" (follow forwards). ``depth`` limits the number
    of hops; None means unbounded.
    """
    if not model.has(fn_id):
        raise UnknownFunctionError(fn_id)
    if direction not in ("upstream", "downstream"):
        raise ValueError(f"direction must be upstream or downstream, got {direction!r}")

    step: dict[str, set[str]] = {}
    for c in model.couplings:
        if direction == "downstream":
            step.setdefault(c.from_fn, set()).add(c.to_fn)
        else:
            step.setdefault(c.to_fn, set()).add(c.from_fn)

    reached: set[str] = set()
    frontier = {fn_id}
    hops = 0
    while frontier and (depth is None or hops < depth):
        frontier = {n for cur in frontier for n in step.get(cur, ())} - reached - {fn_id}
        reached |= frontier
        hops += 1
    return reached


def diff(base: FramModel, improved: FramModel) -> ModelDiff:
    """Set difference of function ids and coupling keys, base -> improved."""
    base_fns = set(base.function_ids())
    imp_fns = set(improved.function_ids())
    base_keys = {c.key for c in base.couplings}
    imp_keys = {c.key for c in improved.couplings}
    return ModelDiff(
        added_functions=imp_fns - base_fns,
        removed_functions=base_fns - imp_fns,
        added_couplings=imp_keys - base_keys,
        removed_couplings=base_keys - imp_keys,
    )
