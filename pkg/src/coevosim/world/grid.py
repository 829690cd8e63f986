"""Grid workspace: cell types, line of sight, and shortest-path planning."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum

Coord = tuple[int, int]

# Fixed expansion order: N, E, S, W. y grows southward.
DIRECTIONS: tuple[tuple[str, Coord], ...] = (
    ("move_n", (0, -1)),
    ("move_e", (1, 0)),
    ("move_s", (0, 1)),
    ("move_w", (-1, 0)),
)


class NoRouteError(Exception):
    """Start and goal are not connected through traversable cells."""


class CellType(str, Enum):
    FREE = "free"
    OBSTACLE = "obstacle"
    STATION_FLOOR = "station_floor"
    STORAGE = "storage"


@dataclass
class Station:
    id: str
    workbench_cell: Coord
    input_cell: Coord
    output_cell: Coord
    product: str
    input_capacity: int = 8
    output_capacity: int = 4
    input_buffer: dict[str, int] = field(default_factory=dict)
    output_buffer: dict[str, int] = field(default_factory=dict)


@dataclass
class Workspace:
    width: int
    height: int
    cells: list[list[CellType]]
    stations: list[Station] = field(default_factory=list)

    def in_bounds(self, cell: Coord) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def cell_type(self, cell: Coord) -> CellType:
        return self.cells[cell[1]][cell[0]]

    def traversable(self, cell: Coord) -> bool:
        return self.in_bounds(cell) and self.cell_type(cell) is not CellType.OBSTACLE

    def station(self, station_id: str) -> Station:
        for s in self.stations:
            if s.id == station_id:
                return s
        raise KeyError(station_id)


def chebyshev(a: Coord, b: Coord) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def line_cells(a: Coord, b: Coord) -> list[Coord]:
    """Interior cells of the digital line from a to b (endpoints excluded).

    Endpoints are ordered before sampling so the walk is symmetric:
    the returned set for (a, b) equals the set for (b, a).
    """
    if a > b:
        a, b = b, a
    dx, dy = b[0] - a[0], b[1] - a[1]
    steps = max(abs(dx), abs(dy))
    cells = []
    for i in range(1, steps):
        t = i / steps
        cells.append((round(a[0] + dx * t), round(a[1] + dy * t)))
    return cells


def line_of_sight(ws: Workspace, a: Coord, b: Coord) -> bool:
    """True when no obstacle cell lies strictly between a and b."""
    for cell in line_cells(a, b):
        if ws.cell_type(cell) is CellType.OBSTACLE:
            return False
    return True


def plan_route(
    ws: Workspace,
    start: Coord,
    goal: Coord,
    blocked: frozenset[Coord] | set[Coord] = frozenset(),
) -> list[Coord]:
    """Shortest 4-neighbor path from start to goal, start excluded.

    Obstacles and ``blocked`` cells are impassable. Breadth-first expansion
    in the fixed N, E, S, W order makes the returned path deterministic
    among equal-length alternatives. Returns [] when start == goal; raises
    NoRouteError when the endpoints are disconnected.
    """
    for cell in (start, goal):
        if not ws.in_bounds(cell):
            raise ValueError(f"cell {cell} out of bounds")
        if not ws.traversable(cell):
            raise NoRouteError(f"cell {cell} is not traversable")
    if start == goal:
        return []

    parent: dict[Coord, Coord] = {start: start}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        if cur == goal:
            break
        for _, (dx, dy) in DIRECTIONS:
            nxt = (cur[0] + dx, cur[1] + dy)
            if nxt in parent or not ws.traversable(nxt) or nxt in blocked:
                continue
            parent[nxt] = cur
            queue.append(nxt)
    if goal not in parent:
        raise NoRouteError(f"no route {start} -> {goal}")

    path = [goal]
    cur = goal
    while parent[cur] != cur:
        cur = parent[cur]
        path.append(cur)
    path.reverse()
    return path[1:]
