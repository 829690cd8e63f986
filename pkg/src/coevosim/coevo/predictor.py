"""Next-action predictors: additive-smoothed Markov chains of order 0 or 1.

A predictor belongs to an observing agent (owner) and models one observed
agent (subject). Order-0 ignores context; order-1 conditions on the
subject's previous action. Unseen contexts fall back to the marginal
distribution pooled across all contexts, so prediction never fails.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .actions import ACTION_ORDER, ActionLabel

Context = ActionLabel | None


@dataclass(frozen=True)
class PredictionRecord:
    tick: int
    owner: str
    subject: str
    predicted: ActionLabel
    predictor_version: int


@dataclass(frozen=True)
class ObservationRecord:
    tick: int
    subject: str
    actual: ActionLabel


@dataclass
class Predictor:
    owner: str
    subject: str
    version: int = 1
    order: int = 1
    smoothing: float = 0.5
    counts: dict[Context, dict[ActionLabel, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.order not in (0, 1):
            raise ValueError(f"order must be 0 or 1, got {self.order}")
        if self.smoothing <= 0:
            raise ValueError("smoothing must be positive")

    def _context_counts(self, context: Context) -> dict[ActionLabel, int]:
        key = context if self.order == 1 else None
        row = self.counts.get(key)
        if row is None and key is not None:
            # Unseen context: pool counts across every context (marginal).
            row = {}
            for ctx_row in self.counts.values():
                for label, n in ctx_row.items():
                    row[label] = row.get(label, 0) + n
        return row or {}

    def distribution(self, context: Context) -> dict[ActionLabel, float]:
        """Smoothed conditional distribution; sums to 1 over all labels."""
        row = self._context_counts(context)
        weights = [row.get(label, 0) + self.smoothing for label in ACTION_ORDER]
        total = sum(weights)
        return {label: w / total for label, w in zip(ACTION_ORDER, weights)}

    def predict(self, context: Context) -> ActionLabel:
        """Argmax of the smoothed distribution; ties go to the earliest label."""
        row = self._context_counts(context)
        best = ACTION_ORDER[0]
        best_w = row.get(best, 0)
        for label in ACTION_ORDER[1:]:
            w = row.get(label, 0)
            if w > best_w:
                best, best_w = label, w
        return best

    def observe_transition(self, context: Context, actual: ActionLabel) -> None:
        """Incremental count update (used by ungated, continuously-learning owners)."""
        key = context if self.order == 1 else None
        self.counts.setdefault(key, {})[actual] = (
            self.counts.get(key, {}).get(actual, 0) + 1
        )


def tally_counts(
    sequence: list[ActionLabel], order: int
) -> dict[Context, dict[ActionLabel, int]]:
    """Transition (order 1) or unigram (order 0) counts for a label sequence."""
    counts: dict[Context, dict[ActionLabel, int]] = {}

    def bump(ctx: Context, label: ActionLabel) -> None:
        counts.setdefault(ctx, {})[label] = counts.get(ctx, {}).get(label, 0) + 1

    if order == 0:
        for label in sequence:
            bump(None, label)
    else:
        for prev, cur in zip(sequence, sequence[1:]):
            bump(prev, cur)
    return counts
