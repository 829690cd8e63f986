"""Deterministic human-robot workspace simulation and analysis toolkit.

Subpackages:
    fram      -- functional-resonance models: load, validate, diff, propagate
    world     -- grid workspace simulation (stations, workers, mobile robots)
    coevo     -- mutual behavior prediction, gated updates, messaging
    checklist -- guideline-metric evaluation over simulation traces
"""

__version__ = "0.1.0"
