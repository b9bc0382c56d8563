"""Exact reference answers for small cases.

Two oracles, both kept deliberately separate from the scheduling code paths:
optimal_makespan searches every capacity-1 schedule, and
exhaustive_expectation enumerates waiting draws outcome by outcome, walking
the waiting policy step by step instead of using closed forms. The walkers
below re-derive motion from the policy definition on purpose; they must not
share motion code with the scheduler or the closed-form model.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .delay_model import DelayAssignment, Tree
from .instance import Instance, InvalidInstanceError, PaddedInstance, stats, validate


class OracleCapacityError(RuntimeError):
    pass


# --- exact optimal makespan at capacity 1 -----------------------------------

def optimal_makespan(
    instance: Instance, horizon: int | None = None, state_cap: int = 10**8
) -> int | None:
    """Minimum makespan over all capacity-1 schedules, or None within horizon.

    Depth-first over per-slot move/wait decisions, move tried first; a state
    reached again no earlier than before is pruned, as is any branch whose
    remaining path or per-edge demand cannot beat the incumbent.
    """
    report = validate(instance)
    if not report.ok:
        raise InvalidInstanceError("; ".join(report.violations))
    s = stats(instance)
    if horizon is None:
        horizon = s.congestion + s.dilation + s.congestion * s.dilation
    space = horizon
    for path in instance.paths:
        space *= len(path) + 2
        if space > state_cap:
            raise OracleCapacityError("instance too large for oracle")

    paths = [list(p) for p in instance.paths]
    lengths = [len(p) for p in paths]
    k = len(paths)
    floor = max(s.congestion, s.dilation)

    # remaining crossings per edge, maintained incrementally
    demand: dict[str, int] = dict(s.edge_loads)
    best: list[int | None] = [None]
    seen: dict[tuple[int, ...], int] = {}

    def remaining_bound(progress: tuple[int, ...]) -> int:
        by_path = max(lengths[i] - progress[i] for i in range(k))
        by_edge = max(demand.values()) if any(demand.values()) else 0
        return max(by_path, by_edge)

    def advance(progress: tuple[int, ...], slot: int) -> None:
        if best[0] is not None and best[0] == floor:
            return
        if all(progress[i] == lengths[i] for i in range(k)):
            if best[0] is None or slot - 1 < best[0]:
                best[0] = slot - 1
            return
        if slot > horizon:
            return
        lower = slot - 1 + remaining_bound(progress)
        if best[0] is not None and lower >= best[0]:
            return
        prev = seen.get(progress)
        if prev is not None and prev <= slot:
            return
        seen[progress] = slot
        moves: list[int] = []
        taken: set[str] = set()

        def choose(i: int) -> None:
            if i == k:
                if not moves:  # an all-wait slot never helps
                    return
                new_progress = list(progress)
                for j in moves:
                    eid = paths[j][progress[j]]
                    demand[eid] -= 1
                    new_progress[j] += 1
                advance(tuple(new_progress), slot + 1)
                for j in moves:
                    demand[paths[j][progress[j]]] += 1
                return
            if progress[i] < lengths[i]:
                eid = paths[i][progress[i]]
                if eid not in taken:  # move first
                    taken.add(eid)
                    moves.append(i)
                    choose(i + 1)
                    moves.pop()
                    taken.discard(eid)
            choose(i + 1)  # wait

        choose(0)

    advance(tuple([0] * k), 1)
    return best[0]


# --- exhaustive waiting-policy enumeration ----------------------------------

def _policy_waits(tree: Tree, values: list[list[int]]) -> list[int]:
    """Per-node waiting (indices 0..length) the policy issues for given draws.

    Independent reimplementation of the waiting rules: plain blocks put x at
    their first node and budget - x at their last; shifted blocks spend one
    slot before each duty edge, leading duty before position 1 moves to the
    source, trailing duty past the path end lapses.
    """
    length = tree.length
    waits = [0] * (length + 1)
    if tree.kind == "plain":
        for level, lv in enumerate(tree.ladder.levels):
            for block in tree.blocks(level):
                x = values[level][block.index]
                waits[block.start - 1] += x
                waits[block.end] += lv.wait_budget - x
        return waits
    waits[0] += values[0][0]
    for level in range(1, len(tree.ladder.levels)):
        budget = tree.ladder.levels[level].wait_budget
        for block in tree.blocks(level):
            x = values[level][block.index]
            duty = list(block.assigned[:x])
            tail = budget - x
            if tail:
                duty.extend(block.assigned[len(block.assigned) - tail:])
            for pos in duty:
                if pos < 1:
                    waits[0] += 1
                elif pos <= length:
                    waits[pos - 1] += 1
    return waits


def _walk_slots(waits: list[int], length: int) -> list[int]:
    slots = []
    t = 0
    for pos in range(1, length + 1):
        t += waits[pos - 1] + 1
        slots.append(t)
    return slots


@dataclass
class ExhaustiveTable:
    load: dict[tuple[str, int], float]
    crossing: dict[tuple[int, int], dict[int, float]]  # (packet, position) -> law


def exhaustive_expectation(
    padded: PaddedInstance,
    tree: Tree,
    assignment: DelayAssignment | None = None,
    cap: int = 2**20,
) -> ExhaustiveTable:
    """Exact expected loads and crossing laws by brute enumeration.

    Positions sharing the same blocks at every level are grouped; only the
    group's blocks are enumerated (other blocks cannot influence those
    positions, which the walker realizes without being told). Fixed levels of
    a partial assignment keep their values.
    """
    levels = tree.ladder.levels
    n_levels = len(levels)
    frontier = assignment.frontier if assignment is not None else 0
    open_levels = list(range(frontier, n_levels))
    outcome_count = 1
    for level in open_levels:
        outcome_count *= levels[level].wait_budget
        if outcome_count > cap:
            raise OracleCapacityError("instance too large for oracle")
    weight = 1.0 / outcome_count

    load: dict[tuple[str, int], float] = {}
    crossing: dict[tuple[int, int], dict[int, float]] = {}
    length = tree.length
    for packet, path in enumerate(padded.padded.paths):
        groups: dict[tuple[int, ...], list[int]] = {}
        for pos in range(1, length + 1):
            key = tuple(tree.block_index(level, pos) for level in range(n_levels))
            groups.setdefault(key, []).append(pos)
        for key, positions in groups.items():
            base_values: list[list[int]] = []
            for level in range(n_levels):
                if assignment is not None and level < frontier:
                    row = [assignment.value(packet, level, b) for b in range(tree.n_blocks(level))]
                else:
                    row = [1] * tree.n_blocks(level)
                base_values.append(row)  # type: ignore[arg-type]
            ranges = [range(1, levels[level].wait_budget + 1) for level in open_levels]
            for combo in product(*ranges):
                for level, draw in zip(open_levels, combo):
                    base_values[level][key[level]] = draw
                waits = _policy_waits(tree, base_values)
                slots = _walk_slots(waits, length)
                for pos in positions:
                    slot = slots[pos - 1]
                    eid = path[pos - 1]
                    load[(eid, slot)] = load.get((eid, slot), 0.0) + weight
                    law = crossing.setdefault((packet, pos), {})
                    law[slot] = law.get(slot, 0.0) + weight
    return ExhaustiveTable(load=load, crossing=crossing)
