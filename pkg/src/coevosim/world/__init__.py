from .grid import (
    CellType,
    Coord,
    DIRECTIONS,
    NoRouteError,
    Station,
    Workspace,
    chebyshev,
    line_cells,
    line_of_sight,
    plan_route,
)
from .entities import Amr, AmrState, Job, ProductSpec, Worker, WorkerState
from .events import (
    EventKind,
    MalformedTraceError,
    TraceEvent,
    event_from_line,
    read_trace,
    write_trace,
)
from .perception import (
    Percept,
    SeenEntity,
    adapt_to_skill,
    detect_collision_risk,
    perceive,
    process_duration,
    visible,
)
from .scenario import (
    BUILTIN_SCENARIOS,
    Constants,
    CoevoSettings,
    FailureScript,
    NoveltyScript,
    Scenario,
    ScenarioError,
    SuppressionDrill,
    load_scenario,
    scenario_from_dict,
)
from .control import ControlCenter
from .sim import MissingComponentsError, RunResult, Simulation, WorldState
