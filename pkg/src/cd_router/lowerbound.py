"""Hard random-permutation instances and the counting argument around them.

The generator builds a fixed gadget graph in which every packet must cross
every critical edge once, in the order given by its own random permutation.
Congestion is n, dilation is 2n+3, and schedules compress to small integer
matrices (one waiting vector per packet), so candidate schedules can be
counted, enumerated, and checked exactly at desk scale.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

from . import oracle
from .instance import Edge, Instance, InvalidInstanceError, decode, encode, validate
from .schedule import Schedule

# Per-cell collision probability decays like (15/16)^(n^2/128); this is the
# n^2 coefficient in the exponent, the budget a counting bound must beat.
COLLISION_EXPONENT = math.log2(16.0 / 15.0) / 128.0


@dataclass(frozen=True)
class LowerBoundInstance:
    n: int
    permutations: tuple[tuple[int, ...], ...]
    instance: Instance

    @property
    def path_length(self) -> int:
        return 2 * self.n + 3


def generate(n: int, seed: int | str = 0) -> LowerBoundInstance:
    """Gadget with n critical edges; each packet visits them in random order."""
    if n < 1:
        raise ValueError("n must be at least 1")
    nodes = {"s", "sp", "t"}
    nodes.update(f"u{i}" for i in range(1, n + 2))
    nodes.update(f"v{i}" for i in range(1, n + 1))
    edges = [Edge("s_sp", "s", "sp")]
    edges.extend(Edge(f"sp_u{i}", "sp", f"u{i}") for i in range(1, n + 1))
    edges.extend(Edge(f"crit_{i}", f"u{i}", f"v{i}") for i in range(1, n + 1))
    for i in range(1, n + 1):
        for j in range(1, n + 2):
            if j != i:
                edges.append(Edge(f"back_{i}_{j}", f"v{i}", f"u{j}"))
    edges.append(Edge("out", f"u{n + 1}", "t"))

    rng = random.Random(f"{seed}/lowerbound/permutations")
    permutations = []
    for _ in range(n):
        perm = list(range(1, n + 1))
        rng.shuffle(perm)
        permutations.append(tuple(perm))

    paths = []
    for perm in permutations:
        path = ["s_sp", f"sp_u{perm[0]}", f"crit_{perm[0]}"]
        for prev, nxt in zip(perm, perm[1:]):
            path.append(f"back_{prev}_{nxt}")
            path.append(f"crit_{nxt}")
        path.append(f"back_{perm[-1]}_{n + 1}")
        path.append("out")
        paths.append(path)

    instance = Instance(nodes=nodes, edges=edges, paths=paths)
    report = validate(instance)
    if not report.ok:
        raise InvalidInstanceError("; ".join(report.violations))
    return LowerBoundInstance(n=n, permutations=tuple(permutations), instance=instance)


def serialize(lb: LowerBoundInstance) -> str:
    return encode(lb.instance, extra={"permutations": [list(p) for p in lb.permutations]})


def deserialize(text: str) -> LowerBoundInstance:
    instance = decode(text)
    doc = json.loads(text)
    perms = doc.get("permutations")
    if not isinstance(perms, list) or not perms:
        raise InvalidInstanceError("missing permutations sidecar")
    permutations = tuple(tuple(int(x) for x in p) for p in perms)
    return LowerBoundInstance(n=len(permutations), permutations=permutations, instance=instance)


# --- routing matrices -------------------------------------------------------

def _check_matrix(lb: LowerBoundInstance, matrix: list[list[int]]) -> None:
    n = lb.n
    if len(matrix) != n or any(len(row) != n + 2 for row in matrix):
        raise ValueError(f"matrix must be {n} x {n + 2}")
    if any(w < 0 for row in matrix for w in row):
        raise ValueError("waits must be nonnegative")


def matrix_to_schedule(lb: LowerBoundInstance, matrix: list[list[int]]) -> Schedule:
    """Waits happen only at the source and at the u-nodes; elsewhere zero.

    Column 0 is parking at the source, column j (1 <= j <= n) the wait
    spent just before critical edge j, column n+1 the wait before the exit
    edge. Any schedule on this gadget can be normalized into this shape
    without increasing its makespan.
    """
    _check_matrix(lb, matrix)
    n = lb.n
    waits = []
    for i, perm in enumerate(lb.permutations):
        row = [0] * (2 * n + 4)
        row[0] = matrix[i][0]
        for m, j in enumerate(perm):
            row[2 + 2 * m] = matrix[i][j]
        row[2 * n + 2] = matrix[i][n + 1]
        waits.append(row)
    return Schedule(waits=waits)


def is_candidate(lb: LowerBoundInstance, matrix: list[list[int]], horizon: int) -> bool:
    """Arrives by the horizon with no collision on the entry or exit edge."""
    _check_matrix(lb, matrix)
    entry = [row[0] + 1 for row in matrix]
    arrivals = [sum(row) + lb.path_length for row in matrix]
    if max(arrivals) > horizon:
        return False
    return len(set(entry)) == lb.n and len(set(arrivals)) == lb.n


def _rows_with_sum_at_most(width: int, cap: int) -> list[tuple[int, ...]]:
    rows: list[tuple[int, ...]] = []

    def extend(prefix: tuple[int, ...], left: int) -> None:
        if len(prefix) == width:
            rows.append(prefix)
            return
        for w in range(left + 1):
            extend(prefix + (w,), left - w)

    extend((), cap)
    return rows


def count_candidates(lb: LowerBoundInstance, horizon: int, cap: int = 10**7) -> int:
    """Exhaustively count candidate matrices (entry slots and arrivals distinct).

    Candidacy depends on each row only through its first entry and its sum,
    so rows enumerate independently of the permutations.
    """
    n = lb.n
    slack = horizon - lb.path_length
    if slack < 0:
        return 0
    rows = _rows_with_sum_at_most(n + 2, slack)
    if len(rows) ** n > cap:
        raise oracle.OracleCapacityError(
            f"{len(rows)}^{n} matrices exceed the enumeration cap {cap}"
        )
    count = 0

    def place(i: int, entries: tuple[int, ...], sums: tuple[int, ...]) -> None:
        nonlocal count
        if i == n:
            count += 1
            return
        for row in rows:
            if row[0] in entries or sum(row) in sums:
                continue
            place(i + 1, entries + (row[0],), sums + (sum(row),))

    place(0, (), ())
    return count


def critical_crossings(lb: LowerBoundInstance, schedule: Schedule) -> dict[int, int]:
    """Per-slot crossing counts over the critical edges (they sum to n^2)."""
    counts: dict[int, int] = {}
    for i, path in enumerate(lb.instance.paths):
        for edge_id, slot in zip(path, schedule.crossing_slots(i)):
            if edge_id.startswith("crit_"):
                counts[slot] = counts.get(slot, 0) + 1
    return counts


# --- entropy counting -------------------------------------------------------

def _binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError("entropy argument must lie in [0, 1]")
    if x in (0.0, 1.0):
        return 0.0
    return -(x * math.log2(x) + (1.0 - x) * math.log2(1.0 - x))


def phi(eps: float) -> float:
    """Entropy cost of distributing an eps fraction of extra waiting.

    phi(eps) = H(eps/(1+eps)) * (1+eps) with H the binary entropy; phi(0) = 0.
    For eps in (0, 0.1] a convenient upper bound is 1.5 * eps * log2(1/eps).
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if eps == 0:
        return 0.0
    return _binary_entropy(eps / (1.0 + eps)) * (1.0 + eps)


@dataclass(frozen=True)
class MarginResult:
    eps: float
    phi_value: float
    collision_exponent: float

    @property
    def holds(self) -> bool:
        return self.phi_value < self.collision_exponent


def margin(eps: float) -> MarginResult:
    """Compare the n^2 exponents: candidate count growth vs collision decay."""
    return MarginResult(eps=eps, phi_value=phi(eps), collision_exponent=COLLISION_EXPONENT)


def counting_bound(n: int, eps: float) -> float:
    """log2 upper bound on candidate matrices: phi(eps)*n^2 + 2n*log2(2n)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return phi(eps) * n * n + 2.0 * n * math.log2(2.0 * n)


def solve(instance: Instance, horizon: int | None = None) -> int:
    """Exact optimal makespan for small gadgets, via the search oracle."""
    return oracle.optimal_makespan(instance, horizon=horizon)
