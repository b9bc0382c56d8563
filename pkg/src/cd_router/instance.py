"""Routing instances: directed multigraphs with one fixed edge path per packet.

The network and every packet's route are inputs; schedulers only choose
waiting times. Two numbers summarize hardness: congestion (most paths sharing
one edge) and dilation (longest path). Padding appends private dummy edges so
every path has the same power-of-two length, which the dissection machinery
requires.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field


class InvalidInstanceError(ValueError):
    """Raised when an operation needs a valid instance and got something else."""


@dataclass(frozen=True)
class Edge:
    id: str
    tail: str
    head: str


@dataclass
class Instance:
    nodes: set[str]
    edges: list[Edge]
    paths: list[list[str]]  # per packet, a list of edge ids

    def edge_map(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @property
    def n_packets(self) -> int:
        return len(self.paths)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


@dataclass(frozen=True)
class InstanceStats:
    congestion: int
    dilation: int
    n_packets: int
    n_edges: int
    edge_loads: dict[str, int] = field(compare=False, default_factory=dict)


def validate(instance: Instance) -> ValidationReport:
    """Check structural sanity; returns every violation, not just the first."""
    problems: list[str] = []
    seen_edge_ids: set[str] = set()
    emap: dict[str, Edge] = {}
    for e in instance.edges:
        if e.id in seen_edge_ids:
            problems.append(f"edge {e.id}: duplicate edge id")
        seen_edge_ids.add(e.id)
        emap[e.id] = e
        for endpoint in (e.tail, e.head):
            if endpoint not in instance.nodes:
                problems.append(f"edge {e.id}: unknown node {endpoint}")
    if not instance.paths:
        problems.append("instance has no packets")
    for i, path in enumerate(instance.paths):
        if not path:
            problems.append(f"path {i}: empty")
            continue
        used: set[str] = set()
        prev_head: str | None = None
        for eid in path:
            edge = emap.get(eid)
            if edge is None:
                problems.append(f"path {i}: unknown edge {eid}")
                prev_head = None
                continue
            if eid in used:
                problems.append(f"path {i}: edge {eid} repeated")
            used.add(eid)
            if prev_head is not None and edge.tail != prev_head:
                problems.append(
                    f"path {i}: edge {eid} tail {edge.tail} does not continue from {prev_head}"
                )
            prev_head = edge.head
    return ValidationReport(ok=not problems, violations=tuple(problems))


def stats(instance: Instance) -> InstanceStats:
    report = validate(instance)
    if not report.ok:
        raise InvalidInstanceError("; ".join(report.violations))
    loads: dict[str, int] = {}
    for path in instance.paths:
        for eid in path:
            loads[eid] = loads.get(eid, 0) + 1
    return InstanceStats(
        congestion=max(loads.values()),
        dilation=max(len(p) for p in instance.paths),
        n_packets=len(instance.paths),
        n_edges=len(instance.edges),
        edge_loads=loads,
    )


def _next_power_of_two(n: int) -> int:
    return 1 if n <= 1 else 1 << (n - 1).bit_length()


@dataclass
class PaddedInstance:
    """Original instance plus a same-length-paths version of it.

    Every path is extended with a private chain of dummy edges up to `length`
    (a power of two >= max(congestion, dilation)), so dummy edges always have
    congestion 1 and real edges keep their loads.
    """

    base: Instance
    padded: Instance
    length: int
    original_lengths: tuple[int, ...]
    dummy_edge_ids: frozenset[str]

    def is_dummy(self, edge_id: str) -> bool:
        return edge_id in self.dummy_edge_ids


def pad(instance: Instance) -> PaddedInstance:
    s = stats(instance)  # raises on invalid
    target = _next_power_of_two(max(s.congestion, s.dilation))
    nodes = set(instance.nodes)
    edges = list(instance.edges)
    emap = instance.edge_map()
    paths: list[list[str]] = []
    dummies: set[str] = set()
    for i, path in enumerate(instance.paths):
        new_path = list(path)
        tail_node = emap[path[-1]].head
        for extra in range(target - len(path)):
            nid = f"__pad_n{i}_{extra}"
            eid = f"__pad_e{i}_{extra}"
            nodes.add(nid)
            edges.append(Edge(eid, tail_node, nid))
            dummies.add(eid)
            new_path.append(eid)
            tail_node = nid
        paths.append(new_path)
    padded = Instance(nodes=nodes, edges=edges, paths=paths)
    return PaddedInstance(
        base=instance,
        padded=padded,
        length=target,
        original_lengths=tuple(len(p) for p in instance.paths),
        dummy_edge_ids=frozenset(dummies),
    )


# --- JSON round trip ------------------------------------------------------

def encode(instance: Instance, extra: dict | None = None) -> str:
    """Serialize with deterministic field ordering (byte-stable for equal inputs)."""
    doc = {
        "nodes": sorted(instance.nodes),
        "edges": [{"id": e.id, "tail": e.tail, "head": e.head} for e in instance.edges],
        "paths": [list(p) for p in instance.paths],
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def decode(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInstanceError(f"not valid JSON: {exc}") from exc
    try:
        edges = [Edge(str(e["id"]), str(e["tail"]), str(e["head"])) for e in doc["edges"]]
        return Instance(
            nodes={str(n) for n in doc["nodes"]},
            edges=edges,
            paths=[[str(eid) for eid in p] for p in doc["paths"]],
        )
    except (KeyError, TypeError) as exc:
        raise InvalidInstanceError(f"malformed instance document: {exc}") from exc


# --- generators used by bench and the test suites -------------------------

def shared_path_instance(congestion: int, dilation: int) -> Instance:
    """All packets ride one common path: the classic capacity-1 bottleneck."""
    nodes = {f"n{i}" for i in range(dilation + 1)}
    edges = [Edge(f"e{i}", f"n{i}", f"n{i + 1}") for i in range(dilation)]
    path = [e.id for e in edges]
    return Instance(nodes=nodes, edges=edges, paths=[list(path) for _ in range(congestion)])


def generate_random_instance(
    seed: int | str,
    max_packets: int = 8,
    max_length: int = 32,
    n_nodes: int | None = None,
) -> Instance:
    """Random multigraph + per-packet self-avoiding edge walks.

    Shared edges (hence congestion) arise because all walks draw from one
    modest edge pool. Every produced instance validates.
    """
    rng = random.Random(f"{seed}/instance")
    k = rng.randint(2, max(2, max_packets))
    nn = n_nodes if n_nodes is not None else rng.randint(4, 24)
    node_ids = [f"n{i}" for i in range(nn)]
    n_edges = max(nn + 2, int(nn * rng.uniform(1.5, 3.0)))
    edges: list[Edge] = []
    out: dict[str, list[Edge]] = {n: [] for n in node_ids}
    for j in range(n_edges):
        tail, head = rng.choice(node_ids), rng.choice(node_ids)
        e = Edge(f"e{j}", tail, head)
        edges.append(e)
        out[tail].append(e)
    starts = [n for n in node_ids if out[n]]
    paths: list[list[str]] = []
    for _ in range(k):
        target = rng.randint(1, max(1, max_length))
        path: list[str] = []
        node = rng.choice(starts)
        used: set[str] = set()
        while len(path) < target:
            options = [e for e in out[node] if e.id not in used]
            if not options:
                break
            e = rng.choice(options)
            path.append(e.id)
            used.add(e.id)
            node = e.head
        if not path:
            e = rng.choice(out[rng.choice(starts)])
            path = [e.id]
        paths.append(path)
    return Instance(nodes=set(node_ids), edges=edges, paths=paths)
