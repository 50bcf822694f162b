"""Pheromone time markings on vertices and directed edges.

Decaying pheromone is emulated by time stamps: the age of a mark is
``t - stamp``. A stamp of 0 means "never marked", so simulation time
starts at 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .graph import Graph

NONE = -1


@dataclass
class SimClock:
    t: int = 0

    def tick(self) -> int:
        self.t += 1
        return self.t


class MarkField:
    """Complete marking state for one simulation run.

    Edge stamps are stored per vertex, aligned with ``graph.adjacency``:
    ``edge[u][i]`` is phi(u, adjacency[u][i]).
    """

    __slots__ = ("graph", "owner", "phi0", "phi1", "edge")

    def __init__(self, graph: Graph):
        n = graph.vertex_count
        self.graph = graph
        self.owner = [NONE] * n
        self.phi0 = [0] * n
        self.phi1 = [0] * n
        self.edge = [[0] * len(nbrs) for nbrs in graph.adjacency]

    def phi(self, u: int, v: int) -> int:
        return self.edge[u][self.graph.edge_slot(u, v)]

    def set_phi(self, u: int, v: int, stamp: int) -> None:
        self.edge[u][self.graph.edge_slot(u, v)] = stamp

    def copy(self) -> "MarkField":
        other = MarkField.__new__(MarkField)
        other.graph = self.graph
        other.owner = self.owner[:]
        other.phi0 = self.phi0[:]
        other.phi1 = self.phi1[:]
        other.edge = [row[:] for row in self.edge]
        return other

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MarkField):
            return NotImplemented
        return (
            self.owner == other.owner
            and self.phi0 == other.phi0
            and self.phi1 == other.phi1
            and self.edge == other.edge
        )

    def max_stamp(self) -> int:
        return max(max(self.phi0), max((max(r) for r in self.edge if r), default=0))

    def check_invariants(self, t: int | None = None) -> None:
        """Raise AssertionError if a structural invariant is broken."""
        for v in range(self.graph.vertex_count):
            assert self.phi0[v] >= self.phi1[v] >= 0, f"phi0 < phi1 at {v}"
            assert (self.owner[v] == NONE) == (self.phi0[v] == 0), f"owner/phi0 mismatch at {v}"
            if t is not None:
                assert self.phi0[v] <= t, f"future stamp at {v}"
        if t is not None:
            for u, row in enumerate(self.edge):
                assert all(s <= t for s in row), f"future edge stamp at {u}"

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict:
        g = self.graph
        return {
            "vertices": {
                str(v): [self.owner[v], self.phi0[v], self.phi1[v]]
                for v in range(g.vertex_count)
            },
            "edges": {
                f"{u}>{v}": self.edge[u][i]
                for u, nbrs in enumerate(g.adjacency)
                for i, v in enumerate(nbrs)
            },
        }

    @classmethod
    def from_dict(cls, graph: Graph, data: dict) -> "MarkField":
        f = cls(graph)
        vertices = data["vertices"]
        if len(vertices) != graph.vertex_count:
            raise ValueError("vertex count does not match the graph")
        for key, (owner, p0, p1) in vertices.items():
            v = int(key)
            f.owner[v], f.phi0[v], f.phi1[v] = int(owner), int(p0), int(p1)
        for key, stamp in data["edges"].items():
            u, v = (int(s) for s in key.split(">"))
            f.set_phi(u, v, int(stamp))
        return f

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def loads(cls, graph: Graph, text: str) -> "MarkField":
        return cls.from_dict(graph, json.loads(text))


def _slots(field: MarkField, u: int, v: int) -> tuple[int, int]:
    g = field.graph
    i = g.edge_slot(u, v)
    return i, g.rev[u][i]


def is_pair_trail_into(field: MarkField, u: int, v: int) -> bool:
    """True iff phi(u,v) = phi(v,u) = phi0(v) > 0: a trail leading from u into v."""
    i, j = _slots(field, u, v)
    s = field.edge[u][i]
    return s > 0 and s == field.edge[v][j] == field.phi0[v]


def conquer_mark(field: MarkField, u: int, v: int, t: int, color: int) -> None:
    """Stamp a fresh pair trail from u into v and hand v to ``color``."""
    i, j = _slots(field, u, v)
    field.edge[u][i] = t
    field.edge[v][j] = t
    field.phi0[v] = t
    field.phi1[v] = 0
    field.owner[v] = color


def advance_mark(field: MarkField, u: int, v: int, t: int) -> None:
    """Refresh the pair trail u -> v, keeping v's previous stamp in phi1."""
    i, j = _slots(field, u, v)
    field.phi1[v] = field.phi0[v]
    field.edge[u][i] = t
    field.edge[v][j] = t
    field.phi0[v] = t


def reset_mark(field: MarkField, u: int, t: int, color: int) -> None:
    """Refresh vertex u in place (the agent stays); edges are untouched.

    ``color`` is needed so an unmarked start vertex becomes owned on the
    bootstrap reset.
    """
    field.phi1[u] = field.phi0[u]
    field.phi0[u] = t
    field.owner[u] = color


def erase_vertex(field: MarkField, u: int) -> None:
    """Remove u's marks and the stamps on every edge incident to u."""
    g = field.graph
    field.phi0[u] = 0
    field.phi1[u] = 0
    field.owner[u] = NONE
    row = field.edge[u]
    for i, v in enumerate(g.adjacency[u]):
        row[i] = 0
        field.edge[v][g.rev[u][i]] = 0
