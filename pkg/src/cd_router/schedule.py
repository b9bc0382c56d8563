"""Schedules: per-packet waiting times at every node along its path.

Entry p of a packet's wait list is served at the p-th node (0 = source)
before crossing edge p+1; the final entry is parked at the sink after
arrival, so it never delays anything but keeps waiting totals exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass


class ScheduleError(ValueError):
    pass


@dataclass
class Schedule:
    waits: list[list[int]]  # per packet, length = path length + 1

    @property
    def n_packets(self) -> int:
        return len(self.waits)

    def path_length(self, packet: int) -> int:
        return len(self.waits[packet]) - 1

    def crossing_slots(self, packet: int) -> list[int]:
        """Slot of each edge crossing; waits accumulate strictly in order."""
        slots = []
        t = 0
        for p in range(self.path_length(packet)):
            t += self.waits[packet][p] + 1
            slots.append(t)
        return slots

    def arrival(self, packet: int) -> int:
        n = self.path_length(packet)
        return n + sum(self.waits[packet][:n])

    @property
    def makespan(self) -> int:
        return max(self.arrival(i) for i in range(self.n_packets))

    def total_waiting(self, packet: int) -> int:
        """All waiting, sink parking included."""
        return sum(self.waits[packet])

    def validate_shape(self, paths: list[list[str]]) -> None:
        if len(self.waits) != len(paths):
            raise ScheduleError(
                f"schedule has {len(self.waits)} packets, instance has {len(paths)}"
            )
        for i, (w, p) in enumerate(zip(self.waits, paths)):
            if len(w) != len(p) + 1:
                raise ScheduleError(
                    f"packet {i}: {len(w)} waits for a path of {len(p)} edges"
                )
            if any(x < 0 for x in w):
                raise ScheduleError(f"packet {i}: negative wait")


def encode(schedule: Schedule) -> str:
    doc = {
        "packets": [
            {"waits": list(w), "arrival": schedule.arrival(i)}
            for i, w in enumerate(schedule.waits)
        ],
        "makespan": schedule.makespan,
    }
    return json.dumps(doc, indent=2) + "\n"


def decode(text: str) -> Schedule:
    try:
        doc = json.loads(text)
        waits = [[int(x) for x in entry["waits"]] for entry in doc["packets"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ScheduleError(f"malformed schedule document: {exc}") from exc
    for i, row in enumerate(waits):
        for x in row:
            if x < 0:
                raise ScheduleError(f"packet {i}: negative wait {x}")
    return Schedule(waits=waits)
