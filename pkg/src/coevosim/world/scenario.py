"""Scenario files: everything a run needs, in one YAML document.

A scenario fixes the grid, stations, product recipes, agents, goals, tuning
constants, scripted failures and drills, and the coevolution settings. Every
value that shapes behavior lives here so runs are reproducible from the file
plus a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import yaml

from .entities import Amr, ProductSpec, Worker
from .grid import CellType, Coord, Station, Workspace, plan_route, NoRouteError


class ScenarioError(Exception):
    pass


@dataclass(frozen=True)
class Constants:
    """World tuning constants with their defaults.

    base_speed_interval:  robot ticks per cell-move before skill adjustment
    base_safety_margin:   robot clearance in cells before skill adjustment
    hard_min_margin:      clearance floor no preference may undercut
    skill_speed_gain:     how strongly low skill slows supply
    skill_margin_gain:    how strongly low skill widens clearance
    process_skill_gain:   how strongly low skill stretches processing
    skill_increment:      skill gained per completed unit
    patience:             blocked ticks before a route is re-planned
    rolling_window:       completions averaged for supply-rate decisions
    process_time_factor:  threshold = factor * base process ticks
    payload_capacity:     units a robot can carry per trip
    transfer_ticks:       ticks to load or unload
    stock_ahead:          units of each input kept buffered per station
    """

    base_speed_interval: int = 2
    base_safety_margin: int = 1
    hard_min_margin: int = 1
    skill_speed_gain: float = 1.0
    skill_margin_gain: float = 2.0
    process_skill_gain: float = 1.0
    skill_increment: float = 0.05
    patience: int = 10
    rolling_window: int = 5
    process_time_factor: float = 1.2
    payload_capacity: int = 4
    transfer_ticks: int = 2
    stock_ahead: int = 2


@dataclass(frozen=True)
class CoevoSettings:
    enabled: bool = True
    order: int = 1
    smoothing: float = 0.5
    window: int = 60
    cadence: int = 20
    holdout_fraction: float = 0.25
    theta: float = 0.3
    reply_latency: int = 3
    progress_cadence: int = 25
    min_samples: int = 10
    suppression_cooldown: int = 30


@dataclass(frozen=True)
class FailureScript:
    tick: int
    amr: str
    repair_after: int | None = None


@dataclass(frozen=True)
class SuppressionDrill:
    tick: int
    amr: str
    duration: int


@dataclass(frozen=True)
class NoveltyScript:
    worker: str
    start: int
    end: int


@dataclass
class Scenario:
    name: str
    seed: int
    workspace: Workspace
    products: dict[str, ProductSpec]
    components: list[str]
    storage_stock: dict[Coord, dict[str, int]]
    workers: list[Worker]
    amrs: list[Amr]
    goal: dict[str, int]
    constants: Constants = field(default_factory=Constants)
    coevo: CoevoSettings = field(default_factory=CoevoSettings)
    failures: list[FailureScript] = field(default_factory=list)
    suppression_drills: list[SuppressionDrill] = field(default_factory=list)
    preference_cadence: int = 0
    novelty: list[NoveltyScript] = field(default_factory=list)


def _coord(raw, ctx: str) -> Coord:
    if not (isinstance(raw, list) and len(raw) == 2):
        raise ScenarioError(f"{ctx}: expected [x, y], got {raw!r}")
    return (int(raw[0]), int(raw[1]))


def _check_bom_acyclic(products: dict[str, ProductSpec]) -> None:
    state: dict[str, int] = {}

    def visit(pid: str, trail: list[str]) -> None:
        if state.get(pid) == 2:
            return
        if state.get(pid) == 1:
            raise ScenarioError(f"product cycle: {' -> '.join(trail + [pid])}")
        state[pid] = 1
        for item in products[pid].bom:
            if item in products:
                visit(item, trail + [pid])
        state[pid] = 2

    for pid in products:
        visit(pid, [])


def _check_connectivity(ws: Workspace) -> None:
    anchors = [s.input_cell for s in ws.stations] + [s.workbench_cell for s in ws.stations]
    if len(anchors) < 2:
        return
    origin = anchors[0]
    for cell in anchors[1:]:
        try:
            plan_route(ws, origin, cell)
        except NoRouteError:
            raise ScenarioError(
                f"workspace is disconnected: no route {origin} -> {cell}"
            ) from None


def scenario_from_dict(data: dict) -> Scenario:
    for key in ("name", "grid", "stations", "products", "workers", "amrs", "goal"):
        if key not in data:
            raise ScenarioError(f"scenario missing {key!r}")

    grid = data["grid"]
    width, height = int(grid["width"]), int(grid["height"])
    cells = [[CellType.FREE for _ in range(width)] for _ in range(height)]
    for raw in grid.get("obstacles", []):
        x, y = _coord(raw, "grid.obstacles")
        cells[y][x] = CellType.OBSTACLE
    for raw in grid.get("storage", []):
        x, y = _coord(raw, "grid.storage")
        cells[y][x] = CellType.STORAGE

    stations = []
    for raw in data["stations"]:
        bench = _coord(raw["workbench"], f"station {raw['id']}")
        input_cell = _coord(raw["input_cell"], f"station {raw['id']}")
        output_cell = _coord(raw["output_cell"], f"station {raw['id']}")
        for cell in (bench, input_cell, output_cell):
            if not (0 <= cell[0] < width and 0 <= cell[1] < height):
                raise ScenarioError(f"station {raw['id']}: cell {cell} out of bounds")
            cells[cell[1]][cell[0]] = CellType.STATION_FLOOR
        stations.append(
            Station(
                id=str(raw["id"]),
                workbench_cell=bench,
                input_cell=input_cell,
                output_cell=output_cell,
                product=str(raw["product"]),
                input_capacity=int(raw.get("input_capacity", 8)),
                output_capacity=int(raw.get("output_capacity", 4)),
            )
        )
    if len({s.id for s in stations}) != len(stations):
        raise ScenarioError("station ids must be unique")

    ws = Workspace(width=width, height=height, cells=cells, stations=stations)

    products = {}
    for raw in data["products"]:
        spec = ProductSpec(
            id=str(raw["id"]),
            bom={str(k): int(v) for k, v in raw["bom"].items()},
            base_process_ticks=int(raw["base_process_ticks"]),
        )
        products[spec.id] = spec
    _check_bom_acyclic(products)
    for st in stations:
        if st.product not in products:
            raise ScenarioError(f"station {st.id} produces unknown product {st.product}")

    components = [str(c) for c in data.get("components", [])]

    storage_stock: dict[Coord, dict[str, int]] = {}
    for raw in data.get("storage_stock", []):
        cell = _coord(raw["cell"], "storage_stock")
        if ws.cell_type(cell) is not CellType.STORAGE:
            raise ScenarioError(f"storage_stock cell {cell} is not a storage cell")
        storage_stock[cell] = {str(k): int(v) for k, v in raw["items"].items()}

    constants = Constants(**data.get("constants", {}))
    coevo = CoevoSettings(**data.get("coevo", {}))

    workers = []
    for raw in data["workers"]:
        workers.append(
            Worker(
                id=str(raw["id"]),
                pos=_coord(raw["pos"], f"worker {raw['id']}"),
                skill=float(raw["skill"]),
                perception_range=int(raw.get("perception_range", 6)),
                station_id=raw.get("station"),
                behavior=str(raw.get("behavior", "task")),
                patrol=[_coord(c, "patrol") for c in raw.get("patrol", [])],
                preferred_margin=raw.get("preferred_margin"),
                preferred_supply_interval=raw.get("preferred_supply_interval"),
            )
        )
    amrs = []
    for raw in data["amrs"]:
        pos = _coord(raw["pos"], f"amr {raw['id']}")
        amrs.append(
            Amr(
                id=str(raw["id"]),
                pos=pos,
                home=pos,
                perception_range=int(raw.get("perception_range", 6)),
                speed_interval=constants.base_speed_interval,
                safety_margin=constants.base_safety_margin,
            )
        )
    ids = [w.id for w in workers] + [a.id for a in amrs]
    if len(set(ids)) != len(ids):
        raise ScenarioError("agent ids must be unique")
    occupied = [w.pos for w in workers] + [a.pos for a in amrs]
    if len(set(occupied)) != len(occupied):
        raise ScenarioError("two agents share a starting cell")
    for aid, pos in zip(ids, occupied):
        if not ws.traversable(pos):
            raise ScenarioError(f"agent {aid} starts on a non-traversable cell {pos}")

    failures = [
        FailureScript(
            tick=int(raw["tick"]),
            amr=str(raw["amr"]),
            repair_after=raw.get("repair_after"),
        )
        for raw in data.get("failures", [])
    ]
    drills = [
        SuppressionDrill(tick=int(raw["tick"]), amr=str(raw["amr"]), duration=int(raw["duration"]))
        for raw in data.get("suppression_drills", [])
    ]
    novelty = [
        NoveltyScript(worker=str(raw["worker"]), start=int(raw["start"]), end=int(raw["end"]))
        for raw in data.get("novelty", [])
    ]

    scenario = Scenario(
        name=str(data["name"]),
        seed=int(data.get("seed", 0)),
        workspace=ws,
        products=products,
        components=components,
        storage_stock=storage_stock,
        workers=workers,
        amrs=amrs,
        goal={str(k): int(v) for k, v in data["goal"].items()},
        constants=constants,
        coevo=coevo,
        failures=failures,
        suppression_drills=drills,
        preference_cadence=int(data.get("preference_cadence", 0)),
        novelty=novelty,
    )
    _check_connectivity(ws)
    return scenario


BUILTIN_SCENARIOS = ("default", "novelty", "failure")


def load_scenario(source: str | Path) -> Scenario:
    """Load a scenario by builtin name or file path."""
    name = str(source)
    if name in BUILTIN_SCENARIOS:
        text = (
            resources.files("coevosim.assets").joinpath(f"{name}.yaml").read_text("utf-8")
        )
    else:
        path = Path(source)
        if not path.exists():
            raise ScenarioError(f"scenario not found: {source}")
        text = path.read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario parse failure: {exc}") from exc
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping")
    return scenario_from_dict(data)
