"""The deterministic tick loop.

Phase order within one tick is fixed: deliver messages, perceive, predict
(plus the learning cadence), control-center replanning, decide, act,
resolve movement conflicts, record. Identical scenario and seed give a
byte-identical event stream; every ordering decision is by sorted agent id
or the fixed N/E/S/W direction order.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, field

from ..coevo.actions import ActionLabel
from ..coevo.engine import CoevoEngine
from ..coevo.messaging import Preference
from .control import ControlCenter
from .entities import Amr, AmrState, Job, Worker, WorkerState
from .events import EventKind, TraceEvent
from .grid import DIRECTIONS, Coord, NoRouteError, Workspace, plan_route
from .perception import detect_collision_risk, perceive, process_duration, visible
from .scenario import Scenario

_DIR_BY_DELTA = {delta: label for label, delta in DIRECTIONS}
_DELTA_BY_DIR = {label: delta for label, delta in DIRECTIONS}
_MOVE_LABELS = (
    ActionLabel.MOVE_N,
    ActionLabel.MOVE_E,
    ActionLabel.MOVE_S,
    ActionLabel.MOVE_W,
)
_ERRATIC_LABELS = tuple(ActionLabel)


class MissingComponentsError(Exception):
    """Processing cannot start: the input buffer does not cover the recipe."""


@dataclass
class SolidEntity:
    id: str
    pos: Coord


@dataclass
class WorldState:
    tick: int
    workspace: Workspace
    workers: dict[str, Worker]
    amrs: dict[str, Amr]
    storage: dict[Coord, dict[str, int]]
    goal: dict[str, int]
    shipped: dict[str, int] = field(default_factory=dict)
    jobs: dict[str, Job] = field(default_factory=dict)
    rng: random.Random = field(default_factory=random.Random)

    def item_totals(self) -> dict[str, int]:
        """Items currently present anywhere in the world (shipped excluded)."""
        totals: dict[str, int] = {}

        def add(bag: dict[str, int]) -> None:
            for item, qty in bag.items():
                totals[item] = totals.get(item, 0) + qty

        for bag in self.storage.values():
            add(bag)
        for station in self.workspace.stations:
            add(station.input_buffer)
            add(station.output_buffer)
        for amr in self.amrs.values():
            add(amr.payload)
        for worker in self.workers.values():
            add(worker.carrying)
        return totals


@dataclass
class RunResult:
    status: str  # completed | tick_limit | deadlock
    ticks: int
    events: list[TraceEvent]


_PROGRESS_KINDS = {
    EventKind.LOADED,
    EventKind.UNLOADED,
    EventKind.PROCESSED,
    EventKind.SHIPPED,
}


class Simulation:
    EventKind = EventKind

    def __init__(self, scenario: Scenario, seed: int | None = None):
        scenario = copy.deepcopy(scenario)
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.state = WorldState(
            tick=0,
            workspace=scenario.workspace,
            workers={w.id: w for w in scenario.workers},
            amrs={a.id: a for a in scenario.amrs},
            storage={cell: dict(items) for cell, items in scenario.storage_stock.items()},
            goal=dict(scenario.goal),
            rng=random.Random(self.seed),
        )
        self.initial_stock = self._stock_snapshot()
        self.coevo = CoevoEngine(
            scenario.coevo,
            worker_ids=list(self.state.workers),
            amr_ids=list(self.state.amrs),
        )
        self.control = ControlCenter(scenario)
        self._events: list[TraceEvent] = []
        self._seq = 0
        self._labels: dict[str, ActionLabel] = {}
        self._proposals: list[tuple[str, Coord]] = []
        self._last_seen: dict[str, set[str]] = {}
        self._erratic_active: dict[str, bool] = {}
        self.starvation: dict[str, int] = {
            s.id: 0 for s in scenario.workspace.stations
        }

    # -- infrastructure ----------------------------------------------------

    def _stock_snapshot(self) -> dict[str, int]:
        totals: dict[str, int] = {}
        for bag in self.state.storage.values():
            for item, qty in bag.items():
                totals[item] = totals.get(item, 0) + qty
        return totals

    def emit(self, actor: str, kind: EventKind, payload: dict) -> None:
        self._events.append(
            TraceEvent(self.state.tick, self._seq, actor, kind, payload)
        )
        self._seq += 1

    def solid_entities(self) -> list[SolidEntity]:
        out = [SolidEntity(w.id, w.pos) for w in self.state.workers.values()]
        out += [SolidEntity(a.id, a.pos) for a in self.state.amrs.values()]
        return sorted(out, key=lambda e: e.id)

    def route_near(self, start: Coord, target: Coord) -> list[Coord]:
        """Route to the target cell, or to its nearest traversable neighbor
        when the target itself is occupied terrain for the caller (wrecks)."""
        ws = self.state.workspace
        if start == target:
            return []
        try:
            return plan_route(ws, start, target)
        except NoRouteError:
            candidates = []
            for _, (dx, dy) in DIRECTIONS:
                cell = (target[0] + dx, target[1] + dy)
                if ws.traversable(cell):
                    try:
                        candidates.append(plan_route(ws, start, cell))
                    except NoRouteError:
                        continue
            if not candidates:
                raise
            return min(candidates, key=len)

    # -- suppression / resumption (shared by orders and the novelty guard) --

    def suppress_amr(
        self,
        amr_id: str,
        reason: str,
        subject: str | None = None,
        accuracy: float | None = None,
    ) -> bool:
        amr = self.state.amrs.get(amr_id)
        if amr is None or amr.state in (AmrState.FAILED, AmrState.SUPPRESSED):
            return False
        amr.state = AmrState.SUPPRESSED
        amr.suppress_reason = reason
        payload: dict = {"reason": reason}
        if subject is not None:
            payload["subject"] = subject
        if accuracy is not None:
            payload["accuracy"] = accuracy
        self.emit(amr_id, EventKind.SUPPRESSED, payload)
        return True

    def resume_amr(self, amr_id: str, reason: str) -> bool:
        amr = self.state.amrs.get(amr_id)
        if amr is None or amr.state is not AmrState.SUPPRESSED:
            return False
        amr.state = AmrState.MOVING if amr.route else AmrState.IDLE
        amr.suppress_reason = None
        amr.resume_tick = None
        if amr.route:
            amr.route_stale = True
        self.emit(amr_id, EventKind.RESUMED, {"reason": reason})
        return True

    def record_preference(self, pref: Preference) -> None:
        worker = self.state.workers[pref.worker]
        worker.preference_recorded = True
        derived_interval, derived_margin = (
            self.control._derived_cache.get(pref.worker)
            or self.control.effective_supply(self, worker)
        )
        self.control.refresh_preference(self, pref.worker)
        effective = self.control._supply_cache[pref.worker]
        self.emit(
            "control_center",
            EventKind.PREFERENCE_RECORDED,
            {
                "worker": pref.worker,
                "margin": {
                    "skill_derived": derived_margin,
                    "preferred": pref.preferred_margin,
                    "effective": effective[1],
                },
                "supply_interval": {
                    "skill_derived": derived_interval,
                    "preferred": pref.preferred_supply_interval,
                    "effective": effective[0],
                },
            },
        )

    # -- perception --------------------------------------------------------

    def _percepts(self) -> dict[str, set[str]]:
        ws = self.state.workspace
        roster: list[tuple[str, Coord, int, bool]] = []
        for worker in self.state.workers.values():
            roster.append((worker.id, worker.pos, worker.perception_range, True))
        for amr in self.state.amrs.values():
            active = amr.state is not AmrState.FAILED
            roster.append((amr.id, amr.pos, amr.perception_range, active))
        percepts: dict[str, set[str]] = {}
        for observer_id, pos, rng, active in sorted(roster):
            if not active:
                continue
            seen = {
                other_id
                for other_id, other_pos, _, _ in roster
                if other_id != observer_id and visible(ws, pos, other_pos, rng)
            }
            percepts[observer_id] = seen
            if self._last_seen.get(observer_id) != seen:
                self._last_seen[observer_id] = seen
                self.emit(
                    observer_id, EventKind.PERCEIVED, {"sees": sorted(seen)}
                )
        return percepts

    # -- worker behavior ---------------------------------------------------

    def _worker_station(self, worker: Worker):
        return (
            self.state.workspace.station(worker.station_id)
            if worker.station_id
            else None
        )

    def _covers_bom(self, station, bom: dict[str, int]) -> bool:
        return all(station.input_buffer.get(i, 0) >= q for i, q in bom.items())

    def process_at_station(self, worker: Worker, station) -> None:
        """Start one processing run; raises MissingComponentsError when the
        recipe is not covered. Consumption happens on completion."""
        spec = self.scenario.products[station.product]
        if not self._covers_bom(station, spec.bom):
            raise MissingComponentsError(station.id)
        worker.state = WorkerState.PROCESSING
        worker.process_remaining = process_duration(
            spec.base_process_ticks, worker.skill, self.scenario.constants
        )

    def _erratic_behavior(self, worker: Worker) -> bool:
        tick = self.state.tick
        return any(
            script.worker == worker.id and script.start <= tick < script.end
            for script in self.scenario.novelty
        )

    def _decide_worker(self, worker: Worker) -> None:
        if self._erratic_behavior(worker):
            self._act_erratic(worker)
            return
        if worker.behavior == "cycle":
            self._act_cycle(worker)
            return
        if worker.interrupted:
            worker.interrupted = False
            return
        if worker.state is WorkerState.PROCESSING:
            return
        if worker.takeover_job:
            self._act_takeover(worker)
            return
        worker.state = WorkerState.IDLE
        station = self._worker_station(worker)
        if station is None:
            return
        spec = self.scenario.products[station.product]
        goal = self.state.goal.get(station.product)
        goal_met = goal is not None and self.state.shipped.get(station.product, 0) >= goal
        ship_ready = (
            goal is not None
            and not goal_met
            and station.output_buffer.get(station.product, 0) > 0
        )
        output_space = (
            sum(station.output_buffer.values()) < station.output_capacity
        )
        can_process = (
            self._covers_bom(station, spec.bom)
            and output_space
            and not (goal is not None and goal_met)
        )
        at_bench = worker.pos == station.workbench_cell
        if at_bench:
            if ship_ready:
                self._ship(worker, station)
                return
            if can_process:
                self.process_at_station(worker, station)
                self._labels[worker.id] = ActionLabel.PROCESS
                return
            self.starvation[station.id] += 1
            if worker.patrol:
                self._patrol_step(worker, station)
            return
        if ship_ready or can_process or not worker.patrolling:
            worker.patrolling = False
            self._walk_toward(worker, station.workbench_cell)
        else:
            self._patrol_step(worker, station)

    def _patrol_step(self, worker: Worker, station) -> None:
        """Starved workers pace a loop through their waypoints and the bench
        so nobody parks next to a transport corridor."""
        cycle = worker.patrol + [station.workbench_cell]
        worker.patrolling = True
        target = cycle[worker.patrol_index % len(cycle)]
        if worker.pos == target:
            worker.patrol_index = (worker.patrol_index + 1) % len(cycle)
            target = cycle[worker.patrol_index]
        if worker.pos != target:
            self._walk_toward(worker, target)

    def _ship(self, worker: Worker, station) -> None:
        product = station.product
        station.output_buffer[product] -= 1
        if station.output_buffer[product] == 0:
            del station.output_buffer[product]
        self.state.shipped[product] = self.state.shipped.get(product, 0) + 1
        self._labels[worker.id] = ActionLabel.PLACE
        self.emit(
            worker.id,
            EventKind.SHIPPED,
            {
                "station": station.id,
                "product": product,
                "total": self.state.shipped[product],
            },
        )

    def _act_cycle(self, worker: Worker) -> None:
        label = _MOVE_LABELS[worker.patrol_index % 4]
        worker.patrol_index += 1
        dx, dy = _DELTA_BY_DIR[label.value]
        target = (worker.pos[0] + dx, worker.pos[1] + dy)
        if self.state.workspace.traversable(target):
            self._proposals.append((worker.id, target))

    def _act_erratic(self, worker: Worker) -> None:
        label = _ERRATIC_LABELS[self.state.rng.randrange(len(_ERRATIC_LABELS))]
        if label in _MOVE_LABELS:
            dx, dy = _DELTA_BY_DIR[label.value]
            target = (worker.pos[0] + dx, worker.pos[1] + dy)
            if self.state.workspace.traversable(target):
                self._proposals.append((worker.id, target))
        elif label is not ActionLabel.STAY:
            # Fidget: an observable gesture with no world effect.
            self._labels[worker.id] = label

    def _walk_toward(self, worker: Worker, target: Coord) -> None:
        if worker.pos == target:
            return
        worker.state = WorkerState.TRANSPORTING if worker.takeover_job else WorkerState.MOVING
        if not worker.path or worker.path[-1] != target or worker.path[0] == worker.pos:
            try:
                worker.path = plan_route(self.state.workspace, worker.pos, target)
            except NoRouteError:
                worker.path = []
                return
        if worker.blocked_ticks >= 4:
            blocked = {
                e.pos for e in self.solid_entities() if e.id != worker.id and e.pos != target
            }
            try:
                worker.path = plan_route(
                    self.state.workspace, worker.pos, target, blocked=blocked
                )
                worker.blocked_ticks = 0
            except NoRouteError:
                pass
        if worker.path:
            self._proposals.append((worker.id, worker.path[0]))

    def _act_takeover(self, worker: Worker) -> None:
        job = self.state.jobs[worker.takeover_job]
        consts = self.scenario.constants
        if not job.loaded:
            source = self.control._source_cell(self, job)
            reach = 1 if job.source_kind == "wreck" else 0
            if max(abs(worker.pos[0] - source[0]), abs(worker.pos[1] - source[1])) <= reach:
                qty = self._take_from_source(job, consts.payload_capacity)
                if qty <= 0:
                    return
                worker.carrying[job.item] = worker.carrying.get(job.item, 0) + qty
                job.qty = qty
                job.loaded = True
                self._labels[worker.id] = ActionLabel.PICK
                self.emit(
                    worker.id,
                    EventKind.LOADED,
                    {
                        "job": job.id,
                        "item": job.item,
                        "qty": qty,
                        "source": f"{job.source_kind}:{job.source_ref}",
                    },
                )
                return
            if job.source_kind == "wreck":
                try:
                    path = self.route_near(worker.pos, source)
                except NoRouteError:
                    return
                if path:
                    self._walk_toward(worker, path[-1])
                return
            self._walk_toward(worker, source)
            return
        station = self.state.workspace.station(job.dest_station)
        if worker.pos == station.input_cell:
            qty = worker.carrying.pop(job.item, 0)
            station.input_buffer[job.item] = station.input_buffer.get(job.item, 0) + qty
            job.done = True
            worker.takeover_job = None
            worker.state = WorkerState.IDLE
            worker.path = []
            self._labels[worker.id] = ActionLabel.PLACE
            self.emit(
                worker.id,
                EventKind.UNLOADED,
                {"job": job.id, "item": job.item, "qty": qty, "station": station.id},
            )
            return
        self._walk_toward(worker, station.input_cell)

    def _take_from_source(self, job: Job, capacity: int) -> int:
        if job.source_kind == "storage":
            x, y = job.source_ref.split(",")
            bag = self.state.storage[(int(x), int(y))]
        elif job.source_kind == "station_out":
            bag = self.state.workspace.station(job.source_ref).output_buffer
        else:
            bag = self.state.amrs[job.source_ref].payload
        available = bag.get(job.item, 0)
        qty = min(job.qty, available, capacity)
        if qty > 0:
            bag[job.item] -= qty
            if bag[job.item] == 0:
                del bag[job.item]
        return qty

    def _finish_processing(self, worker: Worker) -> None:
        station = self._worker_station(worker)
        spec = self.scenario.products[station.product]
        consts = self.scenario.constants
        for item, qty in sorted(spec.bom.items()):
            station.input_buffer[item] -= qty
            if station.input_buffer[item] == 0:
                del station.input_buffer[item]
        station.output_buffer[station.product] = (
            station.output_buffer.get(station.product, 0) + 1
        )
        duration = process_duration(spec.base_process_ticks, worker.skill, consts)
        worker.skill = min(1.0, worker.skill + consts.skill_increment)
        worker.recent_durations.append(duration)
        if len(worker.recent_durations) > consts.rolling_window:
            worker.recent_durations.pop(0)
        worker.state = WorkerState.IDLE
        self.emit(
            worker.id,
            EventKind.PROCESSED,
            {
                "station": station.id,
                "product": station.product,
                "consumed": dict(sorted(spec.bom.items())),
                "duration": duration,
                "skill": round(worker.skill, 6),
            },
        )

    # -- robot behavior ----------------------------------------------------

    def _act_amr(self, amr: Amr) -> None:
        if amr.state in (AmrState.FAILED, AmrState.SUPPRESSED):
            return
        if amr.state is AmrState.LOADING:
            self._amr_transfer(amr, loading=True)
            return
        if amr.state is AmrState.UNLOADING:
            self._amr_transfer(amr, loading=False)
            return
        if amr.state in (AmrState.MOVING, AmrState.HALTED) and amr.route:
            mobile = [w.pos for w in self.state.workers.values()]
            static = []
            for other in self.state.amrs.values():
                if other.id == amr.id:
                    continue
                if other.state is AmrState.FAILED:
                    static.append(other.pos)
                else:
                    mobile.append(other.pos)
            if detect_collision_risk(
                self.state.workspace, amr.route, amr.effective_margin, mobile, static
            ):
                amr.state = AmrState.HALTED
                amr.blocked_ticks += 1
                self.emit(
                    amr.id,
                    EventKind.HALTED,
                    {"cell": list(amr.pos), "next": list(amr.route[0])},
                )
                return
            amr.state = AmrState.MOVING
            if amr.move_cooldown > 0:
                amr.move_cooldown -= 1
                return
            self._proposals.append((amr.id, amr.route[0]))

    def _amr_transfer(self, amr: Amr, loading: bool) -> None:
        job = self.state.jobs[amr.job_id]
        if amr.transfer_remaining > 1:
            amr.transfer_remaining -= 1
            self._labels[amr.id] = ActionLabel.PICK if loading else ActionLabel.PLACE
            return
        consts = self.scenario.constants
        if loading:
            qty = self._take_from_source(job, consts.payload_capacity)
            if qty <= 0:
                return  # source empty: wait, retry next tick
            amr.payload[job.item] = amr.payload.get(job.item, 0) + qty
            job.qty = qty
            job.loaded = True
            amr.transfer_remaining = 0
            self._labels[amr.id] = ActionLabel.PICK
            self.emit(
                amr.id,
                EventKind.LOADED,
                {
                    "job": job.id,
                    "item": job.item,
                    "qty": qty,
                    "source": f"{job.source_kind}:{job.source_ref}",
                },
            )
            station = self.state.workspace.station(job.dest_station)
            try:
                amr.route = plan_route(self.state.workspace, amr.pos, station.input_cell)
            except NoRouteError:
                amr.route = []
            amr.leg = "to_dest"
            amr.state = AmrState.MOVING if amr.route else AmrState.UNLOADING
            if not amr.route:
                amr.transfer_remaining = consts.transfer_ticks
        else:
            station = self.state.workspace.station(job.dest_station)
            qty = amr.payload.pop(job.item, 0)
            station.input_buffer[job.item] = station.input_buffer.get(job.item, 0) + qty
            job.done = True
            amr.job_id = None
            amr.leg = None
            amr.state = AmrState.IDLE
            amr.transfer_remaining = 0
            self._labels[amr.id] = ActionLabel.PLACE
            self.emit(
                amr.id,
                EventKind.UNLOADED,
                {"job": job.id, "item": job.item, "qty": qty, "station": station.id},
            )

    # -- movement resolution -------------------------------------------------

    def _resolve_moves(self) -> None:
        occupied = {e.pos for e in self.solid_entities()}
        granted: set[Coord] = set()
        for actor_id, target in sorted(self._proposals):
            if target in occupied or target in granted:
                entity = self.state.workers.get(actor_id) or self.state.amrs.get(actor_id)
                entity.blocked_ticks += 1
                continue
            granted.add(target)
            worker = self.state.workers.get(actor_id)
            if worker is not None:
                delta = (target[0] - worker.pos[0], target[1] - worker.pos[1])
                worker.pos = target
                worker.blocked_ticks = 0
                if worker.path and worker.path[0] == target:
                    worker.path.pop(0)
                self._labels[actor_id] = ActionLabel(_DIR_BY_DELTA[delta])
                self.emit(actor_id, EventKind.MOVED, {"to": list(target)})
            else:
                amr = self.state.amrs[actor_id]
                delta = (target[0] - amr.pos[0], target[1] - amr.pos[1])
                amr.pos = target
                amr.blocked_ticks = 0
                amr.move_cooldown = max(0, amr.effective_interval - 1)
                if amr.route and amr.route[0] == target:
                    amr.route.pop(0)
                self._labels[actor_id] = ActionLabel(_DIR_BY_DELTA[delta])
                self.emit(actor_id, EventKind.MOVED, {"to": list(target)})
                if not amr.route:
                    if amr.leg == "to_source":
                        amr.state = AmrState.LOADING
                        amr.transfer_remaining = self.scenario.constants.transfer_ticks
                    elif amr.leg == "to_dest":
                        amr.state = AmrState.UNLOADING
                        amr.transfer_remaining = self.scenario.constants.transfer_ticks
                    else:
                        amr.leg = None
                        amr.state = AmrState.IDLE

    # -- progress ------------------------------------------------------------

    def _report_progress(self) -> None:
        cadence = self.scenario.coevo.progress_cadence
        if cadence <= 0 or self.state.tick % cadence != 0:
            return
        products = {
            pid: {
                "shipped": self.state.shipped.get(pid, 0),
                "target": self.state.goal.get(pid, 0),
            }
            for pid in sorted(self.scenario.products)
        }
        stations = [
            {
                "station": s.id,
                "wip": sum(s.input_buffer.values()),
                "starvation_ticks": self.starvation[s.id],
            }
            for s in sorted(self.state.workspace.stations, key=lambda s: s.id)
        ]
        self.emit(
            "control_center",
            EventKind.PROGRESS_REPORTED,
            {
                "scenario": self.scenario.name,
                "seed": self.seed,
                "products": products,
                "stations": stations,
                "complete": self.goal_met(),
            },
        )

    def goal_met(self) -> bool:
        return all(
            self.state.shipped.get(p, 0) >= q for p, q in self.state.goal.items()
        )

    # -- the tick ------------------------------------------------------------

    def step(self) -> list[TraceEvent]:
        self._events = []
        self._seq = 0
        self._labels = {
            aid: ActionLabel.STAY
            for aid in list(self.state.workers) + list(self.state.amrs)
        }
        self._proposals = []

        self.coevo.deliver_phase(self)
        percepts = self._percepts()
        self.coevo.predict_phase(self, percepts)
        self.coevo.learning_phase(self)
        self.control.replan(self)

        for worker_id in sorted(self.state.workers):
            worker = self.state.workers[worker_id]
            if worker.state is WorkerState.PROCESSING:
                worker.process_remaining -= 1
                self._labels[worker_id] = ActionLabel.PROCESS
                if worker.process_remaining <= 0:
                    self._finish_processing(worker)
            else:
                self._decide_worker(worker)
        for amr_id in sorted(self.state.amrs):
            self._act_amr(self.state.amrs[amr_id])

        self._resolve_moves()
        self.coevo.observe_phase(self, self._labels, percepts)
        self._report_progress()

        self.state.tick += 1
        return self._events

    def run(self, max_ticks: int) -> RunResult:
        events: list[TraceEvent] = []
        consts = self.scenario.constants
        last_progress = 0
        status = "tick_limit"
        ticks = 0
        if self.goal_met():
            return RunResult("completed", 0, events)
        for _ in range(max_ticks):
            step_events = self.step()
            events.extend(step_events)
            ticks += 1
            if any(ev.kind in _PROGRESS_KINDS for ev in step_events):
                last_progress = self.state.tick
            if self.goal_met():
                status = "completed"
                break
            if self.state.tick - last_progress > consts.patience * 10:
                status = "deadlock"
                break
        return RunResult(status, ticks, events)
