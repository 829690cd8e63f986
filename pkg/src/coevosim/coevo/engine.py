"""Drives mutual prediction, gated learning, messaging, and monitoring
inside the simulation loop.

Robots and workers predict each other (cross-type pairs only). Robot-owned
predictors change exclusively through the train / pre-evaluate / promote
gate; worker-owned predictors update continuously, tick by tick, because a
human revising an expectation needs no authorization step. Every action of
the engine is visible in the trace: predictions, observations, divergence
evaluations, candidate training and evaluation, promotions, messages,
preferences, progress, suppression and resumption.
"""

from __future__ import annotations

from .actions import ActionLabel
from .evaluation import (
    EmptyWindowError,
    LearningConfig,
    PredictorRegistry,
    evaluate_divergence,
    pre_evaluate,
    split_window,
    train_candidate,
)
from .messaging import (
    Message,
    MessageKind,
    MessageQueue,
    Preference,
    validate_message,
)
from .monitor import novelty_guard
from .predictor import ObservationRecord, PredictionRecord, Predictor


class CoevoEngine:
    def __init__(self, settings, worker_ids: list[str], amr_ids: list[str]):
        self.settings = settings
        self.worker_ids = sorted(worker_ids)
        self.amr_ids = sorted(amr_ids)
        self.registry = PredictorRegistry()
        self.configs: dict[str, LearningConfig] = {}
        self.queue = MessageQueue(latency=1)
        self.predictions: list[PredictionRecord] = []
        self.observations: dict[str, list[ObservationRecord]] = {}
        self.preferences: dict[str, Preference] = {}
        self.latest_accuracy: dict[tuple[str, str], float] = {}
        self._scheduled_sends: list[tuple[int, Message]] = []
        self._change_log: dict[str, list[dict]] = {}

        for owner in self.amr_ids:
            self.configs[owner] = LearningConfig(
                owner=owner,
                window=settings.window,
                cadence=settings.cadence,
                holdout_fraction=settings.holdout_fraction,
                enabled=settings.enabled,
                min_samples=settings.min_samples,
            )
            for subject in self.worker_ids:
                self.registry.add(self._fresh(owner, subject))
        for owner in self.worker_ids:
            for subject in self.amr_ids:
                self.registry.add(self._fresh(owner, subject))

    def _fresh(self, owner: str, subject: str) -> Predictor:
        return Predictor(
            owner=owner,
            subject=subject,
            order=self.settings.order,
            smoothing=self.settings.smoothing,
        )

    # -- messaging ---------------------------------------------------------

    def known_receivers(self) -> set[str]:
        return set(self.worker_ids) | set(self.amr_ids) | {"control_center"}

    def send(self, sim, sender: str, receivers: list[str], kind: MessageKind, payload: dict) -> Message:
        msg = Message(
            id=self.queue.next_id(),
            tick=sim.state.tick,
            sender=sender,
            receivers=tuple(receivers),
            kind=kind,
            payload=payload,
        )
        validate_message(msg, self.known_receivers())
        self.queue.push(msg)
        sim.emit(
            sender,
            sim.EventKind.MESSAGE_SENT,
            {
                "id": msg.id,
                "msg_kind": kind.value,
                "receivers": list(msg.receivers),
                "body": payload,
            },
        )
        return msg

    def schedule_send(self, send_tick: int, msg: Message) -> None:
        self._scheduled_sends.append((send_tick, msg))

    def deliver_phase(self, sim) -> None:
        tick = sim.state.tick
        due_sched = sorted(
            [m for t, m in self._scheduled_sends if t <= tick], key=lambda m: m.id
        )
        self._scheduled_sends = [(t, m) for t, m in self._scheduled_sends if t > tick]
        for msg in due_sched:
            refreshed = Message(
                id=self.queue.next_id(),
                tick=tick,
                sender=msg.sender,
                receivers=msg.receivers,
                kind=msg.kind,
                payload=msg.payload,
            )
            validate_message(refreshed, self.known_receivers())
            self.queue.push(refreshed)
            sim.emit(
                refreshed.sender,
                sim.EventKind.MESSAGE_SENT,
                {
                    "id": refreshed.id,
                    "msg_kind": refreshed.kind.value,
                    "receivers": list(refreshed.receivers),
                    "body": refreshed.payload,
                },
            )
        for msg in self.queue.due(tick):
            for receiver in msg.receivers:
                applied = self._apply_effect(sim, msg, receiver)
                sim.emit(
                    receiver,
                    sim.EventKind.MESSAGE_RECEIVED,
                    {
                        "id": msg.id,
                        "msg_kind": msg.kind.value,
                        "sender": msg.sender,
                        "effect_applied": applied,
                    },
                )

    def _apply_effect(self, sim, msg: Message, receiver: str) -> bool:
        tick = sim.state.tick
        if msg.kind is MessageKind.SUPPRESSION_ORDER:
            return sim.suppress_amr(receiver, reason="order")
        if msg.kind is MessageKind.RESUME_ORDER:
            return sim.resume_amr(receiver, reason="order")
        if msg.kind is MessageKind.PREFERENCE_REQUEST:
            worker = sim.state.workers.get(receiver)
            if worker is None:
                return False
            reply = Message(
                id="pending",
                tick=tick,
                sender=receiver,
                receivers=(msg.sender,),
                kind=MessageKind.PREFERENCE_REPLY,
                payload={
                    "worker": receiver,
                    "preferred_margin": worker.preferred_margin,
                    "preferred_supply_interval": worker.preferred_supply_interval,
                },
            )
            self.schedule_send(tick + self.settings.reply_latency, reply)
            return True
        if msg.kind is MessageKind.PREFERENCE_REPLY:
            if receiver != "control_center":
                return False
            pref = Preference(
                worker=msg.payload["worker"],
                preferred_margin=msg.payload["preferred_margin"],
                preferred_supply_interval=msg.payload["preferred_supply_interval"],
                recorded_tick=tick,
            )
            self.preferences[pref.worker] = pref
            sim.record_preference(pref)
            return True
        if msg.kind is MessageKind.INTERRUPTION_NOTICE:
            worker = sim.state.workers.get(receiver)
            if worker is not None:
                worker.interrupted = True
                return True
            return receiver in sim.state.amrs
        if msg.kind is MessageKind.CHANGE_NOTIFICATION:
            self._change_log.setdefault(receiver, []).append(
                {"tick": tick, "body": msg.payload}
            )
            return True
        if msg.kind is MessageKind.PROGRESS_REPORT:
            return True
        return False

    # -- prediction --------------------------------------------------------

    def _last_observation(self, subject: str) -> ActionLabel | None:
        log = self.observations.get(subject)
        return log[-1].actual if log else None

    def predict_phase(self, sim, percepts: dict[str, set[str]]) -> None:
        if not self.settings.enabled:
            return
        tick = sim.state.tick
        for owner in sorted(percepts):
            cross = self.worker_ids if owner in self.amr_ids else self.amr_ids
            for subject in cross:
                if subject not in percepts[owner]:
                    continue
                predictor = self.registry.get(owner, subject)
                label = predictor.predict(self._last_observation(subject))
                self.predictions.append(
                    PredictionRecord(tick, owner, subject, label, predictor.version)
                )
                sim.emit(
                    owner,
                    sim.EventKind.PREDICTED,
                    {
                        "subject": subject,
                        "predicted": label.value,
                        "version": predictor.version,
                    },
                )

    def observe_phase(self, sim, labels: dict[str, ActionLabel], percepts: dict[str, set[str]]) -> None:
        tick = sim.state.tick
        previous = {subject: self._last_observation(subject) for subject in labels}
        for subject in sorted(labels):
            record = ObservationRecord(tick, subject, labels[subject])
            self.observations.setdefault(subject, []).append(record)
            sim.emit(subject, sim.EventKind.OBSERVED, {"action": labels[subject].value})
        if not self.settings.enabled:
            return
        # Workers revise their expectations continuously, no gate involved.
        for owner in self.worker_ids:
            for subject in self.amr_ids:
                if subject not in percepts.get(owner, set()):
                    continue
                self.registry.get(owner, subject).observe_transition(
                    previous[subject], labels[subject]
                )

    # -- gated learning ----------------------------------------------------

    def learning_phase(self, sim) -> None:
        if not self.settings.enabled:
            return
        tick = sim.state.tick
        if tick == 0 or tick % self.settings.cadence != 0:
            return
        window = (tick - self.settings.window, tick - 1)
        for owner in self.amr_ids:
            amr = sim.state.amrs[owner]
            if amr.state.value == "failed":
                continue
            config = self.configs[owner]
            for subject in self.worker_ids:
                try:
                    report = evaluate_divergence(
                        self.predictions, self.observations.get(subject, []),
                        owner, subject, window,
                    )
                except EmptyWindowError:
                    continue
                sim.emit(
                    owner,
                    sim.EventKind.DIVERGENCE_EVALUATED,
                    {
                        "subject": subject,
                        "window": list(report.window),
                        "matched": report.matched,
                        "total": report.total,
                        "accuracy": report.accuracy,
                    },
                )
                self._train_and_maybe_promote(sim, owner, subject, config, window)
        self._guard_phase(sim, window)

    def _train_and_maybe_promote(self, sim, owner, subject, config, window) -> None:
        window_obs = [
            o
            for o in self.observations.get(subject, [])
            if window[0] <= o.tick <= window[1]
        ]
        if not config.enabled or len(window_obs) < config.min_samples:
            return
        incumbent = self.registry.get(owner, subject)
        candidate = train_candidate(window_obs, config, incumbent)
        sim.emit(
            owner,
            sim.EventKind.CANDIDATE_TRAINED,
            {
                "subject": subject,
                "version": candidate.version,
                "samples": len(window_obs),
            },
        )
        train, holdout = split_window(window_obs, config.holdout_fraction)
        if not holdout:
            return
        evaluation = pre_evaluate(
            candidate,
            incumbent,
            holdout,
            initial_context=train[-1].actual if train else None,
        )
        sim.emit(
            owner,
            sim.EventKind.CANDIDATE_EVALUATED,
            {
                "subject": subject,
                "version": evaluation.candidate_version,
                "candidate_accuracy": evaluation.candidate_accuracy,
                "incumbent_accuracy": evaluation.incumbent_accuracy,
                "verdict": evaluation.verdict,
            },
        )
        if evaluation.verdict != "pass":
            return
        self.registry.promote(owner, evaluation, candidate)
        sim.emit(
            owner,
            sim.EventKind.PREDICTOR_PROMOTED,
            {"subject": subject, "version": candidate.version},
        )
        if subject in self.worker_ids:
            self.send(
                sim,
                owner,
                [subject],
                MessageKind.CHANGE_NOTIFICATION,
                {
                    "change": "predictor",
                    "subject": subject,
                    "version": candidate.version,
                },
            )

    # -- novelty guard -----------------------------------------------------

    def _guard_phase(self, sim, window) -> None:
        reports = []
        for owner in self.amr_ids:
            if sim.state.amrs[owner].state.value == "failed":
                continue
            for subject in self.worker_ids:
                current = self.registry.get(owner, subject)
                if current.version < 2:
                    continue  # nothing validated yet; low accuracy means cold start
                try:
                    rep = evaluate_divergence(
                        self.predictions, self.observations.get(subject, []),
                        owner, subject, window,
                    )
                except EmptyWindowError:
                    continue
                if rep.total < self.settings.min_samples:
                    continue  # too thin to call it novelty rather than noise
                reports.append(rep)
                self.latest_accuracy[(owner, subject)] = rep.accuracy
        for action in novelty_guard(reports, self.settings.theta):
            amr = sim.state.amrs[action.owner]
            if action.kind == "suppress":
                if sim.suppress_amr(
                    action.owner,
                    reason="novelty",
                    subject=action.subject,
                    accuracy=action.accuracy,
                ):
                    amr.resume_tick = sim.state.tick + self.settings.suppression_cooldown
                    self.send(
                        sim,
                        action.owner,
                        [action.subject],
                        MessageKind.INTERRUPTION_NOTICE,
                        {
                            "reason": "novelty_suppression",
                            "accuracy": action.accuracy,
                        },
                    )
            elif action.kind == "slowdown":
                if not amr.slowdown:
                    amr.slowdown = True
                    self.send(
                        sim,
                        action.owner,
                        [action.subject],
                        MessageKind.CHANGE_NOTIFICATION,
                        {
                            "change": "novelty_slowdown",
                            "subject": action.subject,
                            "accuracy": action.accuracy,
                        },
                    )
            elif action.kind == "clear" and amr.slowdown:
                amr.slowdown = False
