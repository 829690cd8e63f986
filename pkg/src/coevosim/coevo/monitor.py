"""Task-progress summaries and the novelty guard.

The novelty guard converts recent prediction accuracy into defensive action:
below the novelty threshold the owning robot doubles its safety margin and
halves its speed; below half the threshold it suppresses itself outright and
notifies the human it was tracking. Accuracy is measured on predictions made
by the *current* predictor version only, so a freshly promoted model is not
punished for its predecessor's misses.
"""

from __future__ import annotations

from dataclasses import dataclass

from .evaluation import DivergenceReport


@dataclass(frozen=True)
class StationProgress:
    station: str
    wip: int
    starvation_ticks: int


@dataclass(frozen=True)
class ProgressReport:
    tick: int
    shipped: dict[str, int]
    targets: dict[str, int]
    stations: list[StationProgress]

    @property
    def complete(self) -> bool:
        return all(self.shipped.get(p, 0) >= t for p, t in self.targets.items())


@dataclass(frozen=True)
class GuardAction:
    owner: str
    subject: str
    accuracy: float
    kind: str  # "suppress" | "slowdown" | "clear"


def novelty_guard(
    reports: list[DivergenceReport], threshold: float
) -> list[GuardAction]:
    """Map divergence reports to guard actions; worst accuracy wins per owner."""
    if not reports:
        return []
    worst: dict[str, DivergenceReport] = {}
    for rep in reports:
        cur = worst.get(rep.owner)
        if cur is None or rep.accuracy < cur.accuracy:
            worst[rep.owner] = rep
    actions = []
    for owner in sorted(worst):
        rep = worst[owner]
        if rep.accuracy < threshold / 2:
            kind = "suppress"
        elif rep.accuracy < threshold:
            kind = "slowdown"
        else:
            kind = "clear"
        actions.append(GuardAction(owner, rep.subject, rep.accuracy, kind))
    return actions
