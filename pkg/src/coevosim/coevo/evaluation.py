"""Divergence measurement and the gated predictor-update pipeline.

The pipeline that replaces a live predictor is deliberately narrow: train a
candidate on the older part of a recent observation window, score candidate
and incumbent on the held-out newer part over identical contexts, and swap
only on a strictly better score. Ties keep the incumbent, which limits
disruptive changes.
"""

from __future__ import annotations

from dataclasses import dataclass

from .predictor import Context, ObservationRecord, PredictionRecord, Predictor, tally_counts


class CoevoError(Exception):
    pass


class EmptyWindowError(CoevoError):
    pass


class EmptyHoldoutError(CoevoError):
    pass


class DisabledError(CoevoError):
    pass


class InsufficientDataError(CoevoError):
    pass


class NotAuthorizedError(CoevoError):
    pass


class LearningConfigError(CoevoError):
    pass


@dataclass(frozen=True)
class LearningConfig:
    """Training knobs for one robot's predictors.

    Attaching learning configuration to anything but a robot is rejected at
    the simulation boundary; scheduled model swaps are not a human activity.
    """

    owner: str
    window: int = 60
    cadence: int = 20
    holdout_fraction: float = 0.25
    enabled: bool = True
    min_samples: int = 10

    def __post_init__(self) -> None:
        if self.window <= 0 or self.cadence <= 0:
            raise LearningConfigError("window and cadence must be positive")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise LearningConfigError("holdout_fraction must be in (0, 1)")
        if self.min_samples < 2:
            raise LearningConfigError("min_samples must be at least 2")


@dataclass(frozen=True)
class DivergenceReport:
    owner: str
    subject: str
    window: tuple[int, int]
    matched: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.matched / self.total


@dataclass(frozen=True)
class CandidateEvaluation:
    owner: str
    subject: str
    candidate_version: int
    candidate_accuracy: float
    incumbent_accuracy: float

    @property
    def verdict(self) -> str:
        return "pass" if self.candidate_accuracy > self.incumbent_accuracy else "fail"


def evaluate_divergence(
    predictions: list[PredictionRecord],
    observations: list[ObservationRecord],
    owner: str,
    subject: str,
    window: tuple[int, int],
    version: int | None = None,
) -> DivergenceReport:
    """Join predictions to actuals on tick within [first, last] and score.

    ``version`` restricts the join to predictions issued by that predictor
    version. Raises EmptyWindowError when nothing joins.
    """
    first, last = window
    actual_by_tick = {
        o.tick: o.actual for o in observations if o.subject == subject
    }
    matched = total = 0
    for p in predictions:
        if p.owner != owner or p.subject != subject:
            continue
        if not first <= p.tick <= last:
            continue
        if version is not None and p.predictor_version != version:
            continue
        actual = actual_by_tick.get(p.tick)
        if actual is None:
            continue
        total += 1
        if p.predicted == actual:
            matched += 1
    if total == 0:
        raise EmptyWindowError(f"no joined ticks for {owner}->{subject} in {window}")
    return DivergenceReport(owner, subject, (first, last), matched, total)


def split_window(
    observations: list[ObservationRecord], holdout_fraction: float
) -> tuple[list[ObservationRecord], list[ObservationRecord]]:
    """Chronological split: the older part trains, the newer part holds out."""
    cut = int(round(len(observations) * (1.0 - holdout_fraction)))
    cut = min(max(cut, 1), len(observations) - 1)
    return observations[:cut], observations[cut:]


def train_candidate(
    observations: list[ObservationRecord],
    config: LearningConfig,
    incumbent: Predictor,
) -> Predictor:
    """Build the next-generation predictor from the training split."""
    if not config.enabled:
        raise DisabledError(f"learning disabled for {config.owner}")
    if len(observations) < config.min_samples:
        raise InsufficientDataError(
            f"{len(observations)} observations < min {config.min_samples}"
        )
    train, _ = split_window(observations, config.holdout_fraction)
    sequence = [o.actual for o in train]
    return Predictor(
        owner=incumbent.owner,
        subject=incumbent.subject,
        version=incumbent.version + 1,
        order=incumbent.order,
        smoothing=incumbent.smoothing,
        counts=tally_counts(sequence, incumbent.order),
    )


def pre_evaluate(
    candidate: Predictor,
    incumbent: Predictor,
    holdout: list[ObservationRecord],
    initial_context: Context = None,
) -> CandidateEvaluation:
    """Replay the holdout chronologically, scoring both on identical contexts."""
    if not holdout:
        raise EmptyHoldoutError("empty holdout")
    context = initial_context
    cand_hits = inc_hits = 0
    for record in holdout:
        if candidate.predict(context) == record.actual:
            cand_hits += 1
        if incumbent.predict(context) == record.actual:
            inc_hits += 1
        context = record.actual
    n = len(holdout)
    return CandidateEvaluation(
        owner=incumbent.owner,
        subject=incumbent.subject,
        candidate_version=candidate.version,
        candidate_accuracy=cand_hits / n,
        incumbent_accuracy=inc_hits / n,
    )


class PredictorRegistry:
    """Live predictors keyed by (owner, subject); swaps only via promote()."""

    def __init__(self) -> None:
        self._live: dict[tuple[str, str], Predictor] = {}

    def add(self, predictor: Predictor) -> None:
        self._live[(predictor.owner, predictor.subject)] = predictor

    def get(self, owner: str, subject: str) -> Predictor:
        return self._live[(owner, subject)]

    def pairs(self) -> list[tuple[str, str]]:
        return sorted(self._live)

    def promote(
        self, owner: str, evaluation: CandidateEvaluation, candidate: Predictor
    ) -> Predictor:
        """Install the candidate; only a strict-improvement verdict opens the gate."""
        if evaluation.verdict != "pass":
            raise NotAuthorizedError("candidate did not beat the incumbent")
        if evaluation.candidate_version != candidate.version:
            raise NotAuthorizedError("evaluation does not match candidate version")
        incumbent = self.get(owner, candidate.subject)
        if candidate.version != incumbent.version + 1:
            raise NotAuthorizedError(
                f"version jump {incumbent.version}->{candidate.version}"
            )
        self._live[(owner, candidate.subject)] = candidate
        return candidate
