"""Variability propagation over a functional-resonance model.

Each function's resulting variability is the component-wise max of its own
seed and its *incoming* variability. The incoming part is the max over all
upstream outputs, amplified by +1 timing (capped at 3) when two or more
incoming couplings carry variability at once, then attenuated by -1 per
component (floored at 0) when the function damps. Seeds themselves are
never amplified or attenuated: damping acts on what arrives, not on what a
function already exhibits, which keeps the operator idempotent.

The update is monotone and the score lattice is finite, so sweeping until
nothing changes reaches the least fixed point. Cycles are fine; the sweep
count is capped at |functions| * (max total score + 1).
"""

from __future__ import annotations

from .model import FramModel, UnknownFunctionError, Variability, ZERO_VARIABILITY

MAX_TIMING = 3
MAX_PRECISION = 2
MAX_TOTAL = MAX_TIMING + MAX_PRECISION


def _incoming_contribution(
    model: FramModel,
    fn_id: str,
    current: dict[str, Variability],
    damping: bool,
) -> Variability:
    up = ZERO_VARIABILITY
    variable_couplings = 0
    for c in model.incoming(fn_id):
        src = current.get(c.from_fn, ZERO_VARIABILITY)
        up = up.max_with(src)
        if src.total > 0:
            variable_couplings += 1
    if variable_couplings >= 2:
        up = Variability(min(up.timing + 1, MAX_TIMING), up.precision)
    if damping:
        up = Variability(max(up.timing - 1, 0), max(up.precision - 1, 0))
    return up


def propagate_variability(
    model: FramModel, seeds: dict[str, Variability]
) -> dict[str, Variability]:
    """Fixed point of the resonance rule for the given seed variability.

    Raises UnknownFunctionError for seed ids not present in the model.
    """
    known = set(model.function_ids())
    for sid in seeds:
        if sid not in known:
            raise UnknownFunctionError(sid)

    damping = {f.id: f.damping for f in model.functions}
    current: dict[str, Variability] = {
        fid: seeds.get(fid, ZERO_VARIABILITY) for fid in model.function_ids()
    }

    max_sweeps = max(1, len(model.functions)) * (MAX_TOTAL + 1)
    for _ in range(max_sweeps):
        changed = False
        for fn in model.functions:
            seed = seeds.get(fn.id, ZERO_VARIABILITY)
            incoming = _incoming_contribution(model, fn.id, current, damping[fn.id])
            nxt = seed.max_with(incoming)
            if nxt != current[fn.id]:
                current[fn.id] = nxt
                changed = True
        if not changed:
            break
    return current
