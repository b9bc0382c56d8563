"""Discrete-time store-and-forward execution of a schedule.

Ground truth for everything the closed-form machinery claims: packets follow
their wait lists literally (wait, then cross one edge per slot), and the
trace records per-(edge, slot) loads, buffer occupancy at slot boundaries,
and waiting charged per (packet, edge). A packet occupies no buffer while at
a node equal to its own source or sink; everywhere else it sits in its next
edge's buffer.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .instance import Instance
from .schedule import Schedule


@dataclass
class SimulationTrace:
    loads: dict[tuple[str, int], int]
    arrivals: list[int]
    occupancy: dict[tuple[str, int], int]
    edge_waits: dict[tuple[int, str], int]  # (packet, edge) -> slots waited before it
    state_counts: list[tuple[int, int, int]]  # per slot: (moving, buffered, parked)
    capacity: int
    crossing_slots: list[list[int]] = field(default_factory=list)

    @property
    def makespan(self) -> int:
        return max(self.arrivals)

    @property
    def max_load(self) -> int:
        return max(self.loads.values())

    @property
    def max_occupancy(self) -> int:
        return max(self.occupancy.values()) if self.occupancy else 0

    @property
    def max_edge_wait(self) -> int:
        return max(self.edge_waits.values()) if self.edge_waits else 0


def simulate(instance: Instance, schedule: Schedule, capacity: int = 1) -> SimulationTrace:
    """Run the schedule to completion; never enforces anything, only measures."""
    schedule.validate_shape(instance.paths)
    emap = instance.edge_map()
    paths = instance.paths
    k = len(paths)
    node_at: list[list[str]] = []
    for path in paths:
        nodes = [emap[path[0]].tail] + [emap[eid].head for eid in path]
        node_at.append(nodes)

    position = [0] * k
    remaining = [schedule.waits[i][0] for i in range(k)]
    done = [False] * k
    loads: dict[tuple[str, int], int] = {}
    occupancy: dict[tuple[str, int], int] = {}
    edge_waits: dict[tuple[int, str], int] = {}
    arrivals = [0] * k
    crossing: list[list[int]] = [[] for _ in range(k)]
    state_counts: list[tuple[int, int, int]] = []

    slot = 0
    while not all(done):
        slot += 1
        moving = buffered = parked = 0
        for i in range(k):
            if done[i]:
                parked += 1  # arrived packets park at their sink
                continue
            if remaining[i] > 0:
                remaining[i] -= 1
                here = node_at[i][position[i]]
                if here == node_at[i][0] or here == node_at[i][-1]:
                    parked += 1
                else:
                    buffered += 1
                    next_edge = paths[i][position[i]]
                    edge_waits[(i, next_edge)] = edge_waits.get((i, next_edge), 0) + 1
                continue
            moving += 1
            eid = paths[i][position[i]]
            loads[(eid, slot)] = loads.get((eid, slot), 0) + 1
            crossing[i].append(slot)
            position[i] += 1
            if position[i] == len(paths[i]):
                done[i] = True
                arrivals[i] = slot
            else:
                remaining[i] = schedule.waits[i][position[i]]
        # boundary snapshot: everyone not yet done sits in its next edge's
        # buffer unless the node is its own source/sink
        for i in range(k):
            if done[i]:
                continue
            here = node_at[i][position[i]]
            if here == node_at[i][0] or here == node_at[i][-1]:
                continue
            next_edge = paths[i][position[i]]
            occupancy[(next_edge, slot)] = occupancy.get((next_edge, slot), 0) + 1
        state_counts.append((moving, buffered, parked))

    return SimulationTrace(
        loads=loads,
        arrivals=arrivals,
        occupancy=occupancy,
        edge_waits=edge_waits,
        state_counts=state_counts,
        capacity=capacity,
        crossing_slots=crossing,
    )


@dataclass(frozen=True)
class CheckRequirements:
    capacity: int | None = None       # default: the trace's own capacity
    makespan_bound: int | None = None
    buffer_bound: int | None = None
    edge_wait_bound: int | None = None


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class CheckReport:
    results: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.results)


def check(trace: SimulationTrace, requirements: CheckRequirements | None = None) -> CheckReport:
    req = requirements or CheckRequirements()
    results: list[CheckResult] = []

    cap = req.capacity if req.capacity is not None else trace.capacity
    offenders = sorted((et for et, v in trace.loads.items() if v > cap))
    if offenders:
        edge, slot = offenders[0]
        detail = f"edge {edge} carries {trace.loads[offenders[0]]} packets at slot {slot}"
    else:
        detail = f"max load {trace.max_load} <= {cap}"
    results.append(CheckResult("load", not offenders, detail))

    if req.makespan_bound is not None:
        ok = trace.makespan <= req.makespan_bound
        results.append(
            CheckResult("makespan", ok, f"makespan {trace.makespan} vs bound {req.makespan_bound}")
        )
    if req.buffer_bound is not None:
        worst = trace.max_occupancy
        results.append(
            CheckResult("buffer", worst <= req.buffer_bound, f"max occupancy {worst}")
        )
    if req.edge_wait_bound is not None:
        bad = sorted(
            (ie for ie, v in trace.edge_waits.items() if v > req.edge_wait_bound)
        )
        if bad:
            packet, edge = bad[0]
            detail = f"packet {packet} waits {trace.edge_waits[bad[0]]} slots before edge {edge}"
        else:
            detail = f"max per-edge wait {trace.max_edge_wait} <= {req.edge_wait_bound}"
        results.append(CheckResult("edge_wait", not bad, detail))

    return CheckReport(results=tuple(results))


def loads_csv_rows(trace: SimulationTrace) -> list[tuple[str, int, int]]:
    return sorted((edge, slot, v) for (edge, slot), v in trace.loads.items())


def arrivals_csv_rows(trace: SimulationTrace) -> list[tuple[int, int]]:
    return list(enumerate(trace.arrivals))


def summary(trace: SimulationTrace) -> dict:
    return {
        "makespan": trace.makespan,
        "max_load": trace.max_load,
        "max_occupancy": trace.max_occupancy,
        "max_edge_wait": trace.max_edge_wait,
        "arrivals": list(trace.arrivals),
    }
