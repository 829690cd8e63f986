"""Agents, products, and transport jobs."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .grid import Coord


class WorkerState(str, Enum):
    IDLE = "idle"
    MOVING = "moving"
    PROCESSING = "processing"
    TRANSPORTING = "transporting"


class AmrState(str, Enum):
    IDLE = "idle"
    MOVING = "moving"
    LOADING = "loading"
    UNLOADING = "unloading"
    HALTED = "halted"
    SUPPRESSED = "suppressed"
    FAILED = "failed"


@dataclass(frozen=True)
class ProductSpec:
    id: str
    bom: dict[str, int]
    base_process_ticks: int

    def __post_init__(self) -> None:
        if self.base_process_ticks <= 0:
            raise ValueError(f"{self.id}: base_process_ticks must be positive")
        for item, qty in self.bom.items():
            if qty < 1:
                raise ValueError(f"{self.id}: quantity for {item} must be >= 1")


@dataclass
class Worker:
    id: str
    pos: Coord
    skill: float
    perception_range: int
    station_id: str | None = None
    state: WorkerState = WorkerState.IDLE
    carrying: dict[str, int] = field(default_factory=dict)
    target: Coord | None = None
    path: list[Coord] = field(default_factory=list)
    behavior: str = "task"  # task | cycle | erratic
    patrol: list[Coord] = field(default_factory=list)
    patrol_index: int = 0
    patrolling: bool = False
    process_remaining: int = 0
    recent_durations: list[int] = field(default_factory=list)
    preferred_margin: int | None = None
    preferred_supply_interval: int | None = None
    preference_recorded: bool = False
    takeover_job: str | None = None
    interrupted: bool = False
    blocked_ticks: int = 0
    last_action: str = "stay"

    def __post_init__(self) -> None:
        if not 0.0 <= self.skill <= 1.0:
            raise ValueError(f"{self.id}: skill {self.skill} outside [0, 1]")


@dataclass
class Amr:
    id: str
    pos: Coord
    perception_range: int
    speed_interval: int = 2
    safety_margin: int = 1
    state: AmrState = AmrState.IDLE
    route: list[Coord] = field(default_factory=list)
    payload: dict[str, int] = field(default_factory=dict)
    job_id: str | None = None
    leg: str | None = None  # to_source | to_dest | dock
    home: Coord | None = None
    transfer_remaining: int = 0
    move_cooldown: int = 0
    blocked_ticks: int = 0
    route_stale: bool = False
    slowdown: bool = False
    suppress_reason: str | None = None
    resume_tick: int | None = None
    repair_tick: int | None = None
    last_action: str = "stay"

    @property
    def effective_margin(self) -> int:
        return self.safety_margin * 2 if self.slowdown else self.safety_margin

    @property
    def effective_interval(self) -> int:
        return self.speed_interval * 2 if self.slowdown else self.speed_interval


@dataclass
class Job:
    id: str
    item: str
    qty: int
    source_kind: str  # storage | station_out | wreck
    source_ref: str  # "x,y" for storage, station id, or amr id
    dest_station: str
    created_tick: int
    assignee: str | None = None
    loaded: bool = False
    done: bool = False
