"""Perception, collision risk, and skill-based parameter adaptation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .grid import CellType, Coord, Workspace, chebyshev, line_of_sight
from .scenario import Constants


@dataclass(frozen=True)
class SeenEntity:
    id: str
    pos: Coord
    last_action: str


@dataclass(frozen=True)
class Percept:
    observer: str
    entities: tuple[SeenEntity, ...]
    item_cells: tuple[Coord, ...]

    def visible_ids(self) -> set[str]:
        return {e.id for e in self.entities}


def visible(ws: Workspace, observer_pos: Coord, target_pos: Coord, rng: int) -> bool:
    """An entity is visible within range and with an unobstructed line."""
    if chebyshev(observer_pos, target_pos) > rng:
        return False
    return line_of_sight(ws, observer_pos, target_pos)


def perceive(
    ws: Workspace,
    observer_id: str,
    observer_pos: Coord,
    perception_range: int,
    others: list[tuple[str, Coord, str]],
    item_cells: list[Coord],
) -> Percept:
    seen = tuple(
        SeenEntity(eid, pos, act)
        for eid, pos, act in sorted(others)
        if eid != observer_id and visible(ws, observer_pos, pos, perception_range)
    )
    cells = tuple(
        c for c in sorted(item_cells) if visible(ws, observer_pos, c, perception_range)
    )
    return Percept(observer=observer_id, entities=seen, item_cells=cells)


def detect_collision_risk(
    ws: Workspace,
    route: list[Coord],
    margin: int,
    mobile_positions: list[Coord],
    static_positions: list[Coord] = (),
) -> bool:
    """Risk ahead of a robot's next few route cells.

    Anything that can move (workers, live robots) triggers when strictly
    inside the margin of an upcoming route cell; with the hard-minimum
    margin of 1 that means occupancy of the next cell, wider margins react
    earlier. Static objects (obstacle cells, failed robots) trigger only
    when they sit on an upcoming route cell: a parked object adjacent to
    the path is routed around, not a collision in the making.
    """
    if not route:
        return False
    lookahead = route[: min(margin, len(route))]
    for cell in lookahead:
        for pos in mobile_positions:
            if chebyshev(pos, cell) < margin:
                return True
        for pos in static_positions:
            if pos == cell:
                return True
        if ws.cell_type(cell) is CellType.OBSTACLE:
            return True
    return False


def adapt_to_skill(skill: float, consts: Constants) -> tuple[int, int]:
    """Supply parameters for serving a worker of the given skill.

    Lower skill slows the supply rate and widens the clearance; both outputs
    are monotone non-increasing in skill and the margin never drops below
    the hard minimum.
    """
    if not 0.0 <= skill <= 1.0:
        raise ValueError(f"skill {skill} outside [0, 1]")
    interval = round(consts.base_speed_interval * (1.0 + consts.skill_speed_gain * (1.0 - skill)))
    margin = consts.base_safety_margin + round(consts.skill_margin_gain * (1.0 - skill))
    return max(1, interval), max(consts.hard_min_margin, margin)


def process_duration(base_ticks: int, skill: float, consts: Constants) -> int:
    """Ticks to finish one unit; skill 1 hits the base exactly."""
    return math.ceil(base_ticks * (1.0 + consts.process_skill_gain * (1.0 - skill)))
