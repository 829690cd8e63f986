"""The control center: demand-driven job dispatch, failure takeovers,
supply-rate adjustment, scripted drills, and stale-route re-planning.

Everything the control center does is deterministic: stations, jobs, and
agents are always visited in sorted order and ties break on id.
"""

from __future__ import annotations

from ..coevo.messaging import MessageKind
from .entities import Amr, AmrState, Job, Worker, WorkerState
from .grid import Coord, NoRouteError, plan_route
from .perception import adapt_to_skill


class ControlCenter:
    def __init__(self, scenario):
        self.scenario = scenario
        self.consts = scenario.constants
        self._job_counter = 0
        self._takeover_queue: list[str] = []
        self._pending_resumes: list[tuple[int, str]] = []
        self._supply_cache: dict[str, tuple[int, int]] = {}
        self._derived_cache: dict[str, tuple[int, int]] = {}
        self._worker_by_station: dict[str, str] = {
            w.station_id: w.id for w in scenario.workers if w.station_id
        }

    # -- helpers -----------------------------------------------------------

    def _next_job_id(self) -> str:
        self._job_counter += 1
        return f"j{self._job_counter}"

    def worker_for_station(self, station_id: str) -> str | None:
        return self._worker_by_station.get(station_id)

    def effective_supply(self, sim, worker: Worker) -> tuple[int, int]:
        """(speed interval, safety margin) for deliveries serving a worker.

        A recorded preference overrides the skill-derived margin (floored at
        the hard minimum) and can only slow the skill-derived supply rate.
        """
        interval, margin = adapt_to_skill(worker.skill, self.consts)
        if worker.preference_recorded:
            if worker.preferred_supply_interval is not None:
                interval = max(interval, worker.preferred_supply_interval)
            if worker.preferred_margin is not None:
                margin = max(self.consts.hard_min_margin, worker.preferred_margin)
        return interval, margin

    def _source_cell(self, sim, job: Job) -> Coord:
        if job.source_kind == "storage":
            x, y = job.source_ref.split(",")
            return (int(x), int(y))
        if job.source_kind == "station_out":
            return sim.state.workspace.station(job.source_ref).output_cell
        return sim.state.amrs[job.source_ref].pos  # wreck

    # -- main entry --------------------------------------------------------

    def replan(self, sim) -> None:
        tick = sim.state.tick
        if tick == 0:
            self._setup(sim)
        self._scripted_failures(sim)
        self._repairs(sim)
        self._drills(sim)
        self._preference_requests(sim)
        self._novelty_resumes(sim)
        self._takeovers(sim)
        self._supply_rate_updates(sim)
        self._demand_scan(sim)
        self._assign_jobs(sim)
        self._stale_routes(sim)

    # -- phases ------------------------------------------------------------

    def _setup(self, sim) -> None:
        for worker in sorted(self.scenario.workers, key=lambda w: w.id):
            live = sim.state.workers[worker.id]
            supply = self.effective_supply(sim, live)
            self._supply_cache[worker.id] = supply
            self._derived_cache[worker.id] = adapt_to_skill(live.skill, self.consts)
        for amr_id in sorted(sim.state.amrs):
            config = sim.coevo.configs[amr_id]
            sim.emit(
                "control_center",
                sim.EventKind.LEARNING_CONFIGURED,
                {
                    "owner": amr_id,
                    "window": config.window,
                    "cadence": config.cadence,
                    "holdout_fraction": config.holdout_fraction,
                    "enabled": config.enabled,
                },
            )

    def _scripted_failures(self, sim) -> None:
        tick = sim.state.tick
        for script in self.scenario.failures:
            if script.tick != tick:
                continue
            amr = sim.state.amrs.get(script.amr)
            if amr is None or amr.state is AmrState.FAILED:
                continue
            amr.state = AmrState.FAILED
            amr.route = []
            amr.repair_tick = (
                tick + script.repair_after if script.repair_after else None
            )
            stranded = []
            if amr.job_id is not None:
                job = sim.state.jobs[amr.job_id]
                job.assignee = None
                if job.loaded:
                    # Cargo stays on the wreck; the next assignee fetches it.
                    job.source_kind = "wreck"
                    job.source_ref = amr.id
                    job.loaded = False
                stranded.append(job.id)
                self._takeover_queue.append(job.id)
                amr.job_id = None
            sim.emit(
                amr.id,
                sim.EventKind.FAILURE_INJECTED,
                {"stranded_jobs": stranded, "repair_tick": amr.repair_tick},
            )

    def _repairs(self, sim) -> None:
        tick = sim.state.tick
        for amr_id in sorted(sim.state.amrs):
            amr = sim.state.amrs[amr_id]
            if amr.state is AmrState.FAILED and amr.repair_tick == tick:
                amr.state = AmrState.IDLE
                amr.repair_tick = None
                sim.emit(amr.id, sim.EventKind.RESUMED, {"reason": "repaired"})

    def _drills(self, sim) -> None:
        tick = sim.state.tick
        for drill in self.scenario.suppression_drills:
            if drill.tick == tick:
                sim.coevo.send(
                    sim,
                    "control_center",
                    [drill.amr],
                    MessageKind.SUPPRESSION_ORDER,
                    {"reason": "drill"},
                )
                self._pending_resumes.append((tick + drill.duration, drill.amr))
        still_pending = []
        for due, amr_id in self._pending_resumes:
            if due == tick:
                sim.coevo.send(
                    sim,
                    "control_center",
                    [amr_id],
                    MessageKind.RESUME_ORDER,
                    {"reason": "drill_complete"},
                )
            elif due > tick:
                still_pending.append((due, amr_id))
        self._pending_resumes = still_pending

    def _preference_requests(self, sim) -> None:
        tick = sim.state.tick
        cadence = self.scenario.preference_cadence
        if not cadence or tick == 0 or tick % cadence != 0:
            return
        for worker_id in sorted(sim.state.workers):
            worker = sim.state.workers[worker_id]
            if worker.preferred_margin is None and worker.preferred_supply_interval is None:
                continue
            sim.coevo.send(
                sim,
                "control_center",
                [worker_id],
                MessageKind.PREFERENCE_REQUEST,
                {"worker": worker_id},
            )

    def _novelty_resumes(self, sim) -> None:
        tick = sim.state.tick
        for amr_id in sorted(sim.state.amrs):
            amr = sim.state.amrs[amr_id]
            if (
                amr.state is AmrState.SUPPRESSED
                and amr.suppress_reason == "novelty"
                and amr.resume_tick is not None
                and tick >= amr.resume_tick
            ):
                sim.resume_amr(amr_id, reason="novelty_cooldown")

    def _takeovers(self, sim) -> None:
        remaining = []
        for job_id in self._takeover_queue:
            job = sim.state.jobs[job_id]
            if job.done:
                continue
            worker = self._nearest_free_worker(sim, job)
            if worker is None:
                remaining.append(job_id)
                continue
            job.assignee = worker.id
            worker.takeover_job = job.id
            worker.state = WorkerState.TRANSPORTING
            worker.path = []
            worker.patrolling = False
            sim.emit(
                "control_center",
                sim.EventKind.TAKEOVER_ASSIGNED,
                {
                    "worker": worker.id,
                    "job": job.id,
                    "item": job.item,
                    "qty": job.qty,
                    "station": job.dest_station,
                },
            )
        self._takeover_queue = remaining

    def _nearest_free_worker(self, sim, job: Job) -> Worker | None:
        target = self._source_cell(sim, job)
        best: tuple[int, str] | None = None
        for worker_id in sorted(sim.state.workers):
            worker = sim.state.workers[worker_id]
            if worker.behavior != "task":
                continue
            if worker.takeover_job or worker.state in (
                WorkerState.PROCESSING,
                WorkerState.TRANSPORTING,
            ):
                continue
            try:
                hops = len(sim.route_near(worker.pos, target))
            except NoRouteError:
                continue
            if best is None or (hops, worker_id) < best:
                best = (hops, worker_id)
        return sim.state.workers[best[1]] if best else None

    def _supply_rate_updates(self, sim) -> None:
        consts = self.consts
        for worker_id in sorted(sim.state.workers):
            worker = sim.state.workers[worker_id]
            if worker.station_id is None:
                continue
            if len(worker.recent_durations) < consts.rolling_window:
                continue
            station = sim.state.workspace.station(worker.station_id)
            base = sim.scenario.products[station.product].base_process_ticks
            avg = sum(worker.recent_durations) / len(worker.recent_durations)
            if avg >= consts.process_time_factor * base:
                continue
            derived = adapt_to_skill(worker.skill, consts)
            if derived[0] >= self._derived_cache[worker_id][0]:
                continue
            self._derived_cache[worker_id] = derived
            old = self._supply_cache[worker_id]
            new = self.effective_supply(sim, worker)
            self._supply_cache[worker_id] = new
            self._apply_supply_to_serving_amrs(sim, worker_id, new)
            if new != old:
                sim.coevo.send(
                    sim,
                    "control_center",
                    [worker_id],
                    MessageKind.CHANGE_NOTIFICATION,
                    {
                        "change": "supply_interval",
                        "worker": worker_id,
                        "interval": {"old": old[0], "new": new[0]},
                        "margin": {"old": old[1], "new": new[1]},
                    },
                )

    def refresh_preference(self, sim, worker_id: str) -> None:
        """Re-derive supply parameters after a preference lands."""
        worker = sim.state.workers[worker_id]
        old = self._supply_cache.get(worker_id)
        new = self.effective_supply(sim, worker)
        self._supply_cache[worker_id] = new
        if new != old:
            self._apply_supply_to_serving_amrs(sim, worker_id, new)

    def _apply_supply_to_serving_amrs(self, sim, worker_id: str, supply: tuple[int, int]) -> None:
        for amr_id in sorted(sim.state.amrs):
            amr = sim.state.amrs[amr_id]
            if amr.job_id is None:
                continue
            job = sim.state.jobs[amr.job_id]
            if self.worker_for_station(job.dest_station) == worker_id:
                amr.speed_interval, amr.safety_margin = supply

    def _demand_scan(self, sim) -> None:
        state = sim.state
        consts = self.consts
        incoming: dict[tuple[str, str], int] = {}
        for job in state.jobs.values():
            if not job.done:
                key = (job.dest_station, job.item)
                incoming[key] = incoming.get(key, 0) + job.qty
        for station in sorted(state.workspace.stations, key=lambda s: s.id):
            spec = sim.scenario.products[station.product]
            target_product = station.product
            goal = state.goal.get(target_product)
            if goal is not None and state.shipped.get(target_product, 0) >= goal:
                continue
            for item in sorted(spec.bom):
                need = spec.bom[item]
                target_stock = need * consts.stock_ahead
                on_hand = station.input_buffer.get(item, 0) + incoming.get(
                    (station.id, item), 0
                )
                deficit = target_stock - on_hand
                if deficit <= 0:
                    continue
                source = self._find_source(sim, item, station.input_cell)
                if source is None:
                    continue
                kind, ref, available = source
                qty = min(deficit, consts.payload_capacity, available)
                if qty <= 0:
                    continue
                job = Job(
                    id=self._next_job_id(),
                    item=item,
                    qty=qty,
                    source_kind=kind,
                    source_ref=ref,
                    dest_station=station.id,
                    created_tick=state.tick,
                )
                state.jobs[job.id] = job
                incoming[(station.id, item)] = (
                    incoming.get((station.id, item), 0) + qty
                )

    def _find_source(self, sim, item: str, near: Coord) -> tuple[str, str, int] | None:
        if item in sim.scenario.products:
            for station in sorted(sim.state.workspace.stations, key=lambda s: s.id):
                if station.product == item and station.output_buffer.get(item, 0) > 0:
                    return ("station_out", station.id, station.output_buffer[item])
            return None
        best: tuple[int, Coord] | None = None
        for cell in sorted(sim.state.storage):
            if sim.state.storage[cell].get(item, 0) <= 0:
                continue
            dist = abs(cell[0] - near[0]) + abs(cell[1] - near[1])
            if best is None or (dist, cell) < best:
                best = (dist, cell)
        if best is None:
            return None
        cell = best[1]
        stock = sim.state.storage[cell][item]
        return ("storage", f"{cell[0]},{cell[1]}", stock)

    def _assign_jobs(self, sim) -> None:
        state = sim.state
        free_amrs = [
            a
            for a in sorted(state.amrs)
            if state.amrs[a].state is AmrState.IDLE
            and state.amrs[a].job_id is None
            and not state.amrs[a].payload
        ]
        open_jobs = sorted(
            (j for j in state.jobs.values() if j.assignee is None and not j.done
             and j.source_kind != "wreck" and j.id not in self._takeover_queue),
            key=lambda j: (j.created_tick, j.id),
        )
        for job in open_jobs:
            if not free_amrs:
                break
            source = self._source_cell(sim, job)
            best: tuple[int, str] | None = None
            for amr_id in free_amrs:
                try:
                    hops = len(plan_route(state.workspace, state.amrs[amr_id].pos, source))
                except NoRouteError:
                    continue
                if best is None or (hops, amr_id) < best:
                    best = (hops, amr_id)
            if best is None:
                continue
            amr = state.amrs[best[1]]
            free_amrs.remove(amr.id)
            job.assignee = amr.id
            amr.job_id = job.id
            worker_id = self.worker_for_station(job.dest_station)
            if worker_id is not None:
                amr.speed_interval, amr.safety_margin = self._supply_cache[worker_id]
            try:
                amr.route = plan_route(state.workspace, amr.pos, source)
            except NoRouteError:
                amr.route = []
            amr.leg = "to_source"
            amr.state = AmrState.MOVING if amr.route else AmrState.LOADING
            if not amr.route:
                amr.transfer_remaining = self.consts.transfer_ticks
            amr.blocked_ticks = 0
        self._dock_idle_amrs(sim)

    def _dock_idle_amrs(self, sim) -> None:
        """Send job-less robots parked on station service cells back home so
        they do not block the next delivery."""
        service_cells = set()
        for station in sim.state.workspace.stations:
            service_cells.add(station.input_cell)
            service_cells.add(station.output_cell)
        for amr_id in sorted(sim.state.amrs):
            amr = sim.state.amrs[amr_id]
            if (
                amr.state is not AmrState.IDLE
                or amr.job_id is not None
                or amr.pos not in service_cells
                or amr.home is None
                or amr.pos == amr.home
            ):
                continue
            try:
                amr.route = plan_route(sim.state.workspace, amr.pos, amr.home)
            except NoRouteError:
                continue
            amr.leg = "dock"
            amr.state = AmrState.MOVING
            amr.blocked_ticks = 0

    def _stale_routes(self, sim) -> None:
        state = sim.state
        for amr_id in sorted(state.amrs):
            amr = state.amrs[amr_id]
            if amr.state not in (AmrState.MOVING, AmrState.HALTED) or not amr.route:
                continue
            if amr.blocked_ticks <= self.consts.patience and not amr.route_stale:
                continue
            target = amr.route[-1]
            # Route around the whole clearance region of other entities, not
            # just their cells, or the new route would halt exactly like the
            # old one did.
            margin = amr.effective_margin
            blocked: set[Coord] = set()
            for entity in sim.solid_entities():
                if entity.id == amr.id:
                    continue
                for dx in range(-(margin - 1), margin):
                    for dy in range(-(margin - 1), margin):
                        blocked.add((entity.pos[0] + dx, entity.pos[1] + dy))
            blocked.discard(target)
            blocked.discard(amr.pos)
            try:
                new_route = plan_route(state.workspace, amr.pos, target, blocked=blocked)
            except NoRouteError:
                amr.blocked_ticks = 0
                amr.route_stale = False
                continue
            amr.route = new_route
            amr.blocked_ticks = 0
            reason = "resume" if amr.route_stale else "blocked"
            amr.route_stale = False
            job = state.jobs.get(amr.job_id) if amr.job_id else None
            station_id = job.dest_station if job else None
            affected = self.worker_for_station(station_id) if station_id else None
            sim.emit(
                "control_center",
                sim.EventKind.ROUTE_REPLANNED,
                {
                    "amr": amr.id,
                    "job": job.id if job else None,
                    "station": station_id,
                    "affected_worker": affected,
                    "reason": reason,
                    "length": len(new_route),
                },
            )
            if affected is not None:
                sim.coevo.send(
                    sim,
                    "control_center",
                    [affected],
                    MessageKind.CHANGE_NOTIFICATION,
                    {
                        "change": "route",
                        "amr": amr.id,
                        "station": station_id,
                    },
                )
