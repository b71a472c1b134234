"""Append-only run record: counters, CPM steps, restarts and potentials."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

COUNTERS = ("soCalls", "eoCalls", "blocks", "dimReductions", "newtonIters", "lllCalls")


@dataclass
class Transcript:
    counts: dict = field(default_factory=lambda: dict.fromkeys(COUNTERS, 0))
    steps: list = field(default_factory=list)
    events: list = field(default_factory=list)
    potentials: list = field(default_factory=list)

    def bump(self, name: str, by: int = 1):
        self.counts[name] = self.counts.get(name, 0) + by

    def record_step(self, **row):
        self.steps.append(row)

    def record_event(self, kind: str, **data):
        self.events.append({"event": kind, **data})

    def record_potential(self, phase: str, dim: int, log_volume: float, log_det: float):
        self.potentials.append({
            "phase": phase, "dim": dim, "logVolume": log_volume,
            "logDet": log_det, "phi": log_volume + log_det,
        })

    @property
    def rho(self) -> list:
        return [row["rho"] for row in self.steps]

    def snapshot(self) -> "Transcript":
        return copy.deepcopy(self)

    def to_json(self) -> dict:
        return {
            "counts": dict(self.counts),
            "steps": list(self.steps),
            "events": list(self.events),
            "potentials": list(self.potentials),
        }
