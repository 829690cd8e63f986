"""The closed set of observable agent actions.

Declaration order doubles as the deterministic tie-break order wherever an
argmax over labels is taken.
"""

from __future__ import annotations

from enum import Enum


class ActionLabel(str, Enum):
    MOVE_N = "move_n"
    MOVE_E = "move_e"
    MOVE_S = "move_s"
    MOVE_W = "move_w"
    STAY = "stay"
    PICK = "pick"
    PLACE = "place"
    PROCESS = "process"


ACTION_ORDER: tuple[ActionLabel, ...] = tuple(ActionLabel)
