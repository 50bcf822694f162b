"""Immutable graph environments and builders for the benchmark shapes."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

Cell = tuple[int, int]


class GraphFormatError(ValueError):
    """Raised when an edge-list file cannot be parsed."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on dense vertex ids ``0..vertex_count-1``.

    ``adjacency[u]`` is the ascending tuple of neighbours of ``u``. ``layout``
    holds optional integer lattice coordinates ``(x, y)`` per vertex and is
    only used for image export.
    """

    vertex_count: int
    adjacency: tuple[tuple[int, ...], ...]
    layout: tuple[Cell, ...] | None = None
    # rev[u][i] is the position of u inside adjacency[adjacency[u][i]]
    rev: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _slot: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = self.vertex_count
        if n < 1:
            raise ValueError("a graph needs at least one vertex")
        if len(self.adjacency) != n:
            raise ValueError("adjacency must have one entry per vertex")
        if self.layout is not None and len(self.layout) != n:
            raise ValueError("layout must have one coordinate per vertex")
        slot: dict[tuple[int, int], int] = {}
        for u, nbrs in enumerate(self.adjacency):
            if list(nbrs) != sorted(set(nbrs)):
                raise ValueError(f"neighbours of {u} must be sorted and unique")
            for i, v in enumerate(nbrs):
                if not 0 <= v < n:
                    raise ValueError(f"neighbour id {v} of vertex {u} out of range")
                if v == u:
                    raise ValueError(f"self-loop at vertex {u}")
                slot[(u, v)] = i
        for (u, v) in slot:
            if (v, u) not in slot:
                raise ValueError(f"edge {u}-{v} is not symmetric")
        rev = tuple(
            tuple(slot[(v, u)] for v in nbrs) for u, nbrs in enumerate(self.adjacency)
        )
        object.__setattr__(self, "rev", rev)
        object.__setattr__(self, "_slot", slot)

    def __len__(self) -> int:
        return self.vertex_count

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self.adjacency[u]

    def degree(self, u: int) -> int:
        return len(self.adjacency[u])

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self._slot

    def edge_slot(self, u: int, v: int) -> int:
        """Index of ``v`` in ``adjacency[u]``; raises KeyError for non-edges."""
        try:
            return self._slot[(u, v)]
        except KeyError:
            raise KeyError(f"{u}-{v} is not an edge") from None

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    def is_connected(self) -> bool:
        return len(bfs_order(self, 0)) == self.vertex_count

    def to_dict(self) -> dict:
        data: dict = {"vertex_count": self.vertex_count, "edges": self.edges()}
        if self.layout is not None:
            data["layout"] = [list(c) for c in self.layout]
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "Graph":
        layout = data.get("layout")
        return from_edges(
            data["vertex_count"],
            [tuple(e) for e in data["edges"]],
            layout=[tuple(c) for c in layout] if layout is not None else None,
        )


def bfs_order(graph: Graph, start: int) -> list[int]:
    seen = [False] * graph.vertex_count
    seen[start] = True
    order = [start]
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in graph.adjacency[u]:
            if not seen[v]:
                seen[v] = True
                order.append(v)
                queue.append(v)
    return order


def from_edges(
    vertex_count: int,
    edges: Iterable[tuple[int, int]],
    layout: Sequence[Cell] | None = None,
) -> Graph:
    """Build a graph from an undirected edge list; duplicates are rejected."""
    nbrs: list[set[int]] = [set() for _ in range(vertex_count)]
    for u, v in edges:
        if not (0 <= u < vertex_count and 0 <= v < vertex_count):
            raise ValueError(f"edge {u}-{v} out of range for {vertex_count} vertices")
        if u == v:
            raise ValueError(f"self-loop at vertex {u}")
        if v in nbrs[u]:
            raise ValueError(f"duplicate edge {u}-{v}")
        nbrs[u].add(v)
        nbrs[v].add(u)
    return Graph(
        vertex_count,
        tuple(tuple(sorted(s)) for s in nbrs),
        tuple(tuple(c) for c in layout) if layout is not None else None,
    )


def from_cells(cells: Iterable[Cell]) -> Graph:
    """4-connected lattice graph on a set of ``(x, y)`` cells.

    Duplicate cells are merged. Ids follow row-major order (by ``y`` then ``x``).
    """
    ordered = sorted(set(cells), key=lambda c: (c[1], c[0]))
    if not ordered:
        raise ValueError("no cells")
    index = {c: i for i, c in enumerate(ordered)}
    edges = []
    for (x, y), i in index.items():
        for other in ((x + 1, y), (x, y + 1)):
            j = index.get(other)
            if j is not None:
                edges.append((i, j))
    return from_edges(len(ordered), edges, layout=ordered)


def _require_positive(**params: int) -> None:
    for name, value in params.items():
        if not isinstance(value, int) or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")


def build_grid(width: int, height: int) -> Graph:
    _require_positive(width=width, height=height)
    return from_cells((x, y) for y in range(height) for x in range(width))


def build_path(n: int) -> Graph:
    _require_positive(n=n)
    return from_cells((x, 0) for x in range(n))


def build_star(branches: int, branch_length: int) -> Graph:
    """Hub 0 with ``branches`` pendant paths of ``branch_length`` vertices each.

    Branch ``b`` occupies ids ``1 + b*branch_length .. (b+1)*branch_length``,
    numbered outward from the hub.
    """
    _require_positive(branches=branches, branch_length=branch_length)
    n = 1 + branches * branch_length
    edges = []
    for b in range(branches):
        first = 1 + b * branch_length
        edges.append((0, first))
        edges.extend((first + i, first + i + 1) for i in range(branch_length - 1))
    return from_edges(n, edges)


def cross_cells(arm_thickness: int, arm_length: int) -> set[Cell]:
    a, arm = arm_thickness, arm_length
    span = 2 * arm + a
    horizontal = {(x, y) for x in range(span) for y in range(arm, arm + a)}
    vertical = {(x, y) for x in range(arm, arm + a) for y in range(span)}
    return horizontal | vertical


def build_cross(arm_thickness: int, arm_length: int) -> Graph:
    """Plus-shaped lattice: an ``a x a`` centre with four ``a x arm_length`` arms."""
    _require_positive(arm_thickness=arm_thickness, arm_length=arm_length)
    return from_cells(cross_cells(arm_thickness, arm_length))


def rooms_cells(room_side: int, corridor_width: int, corridor_length: int) -> set[Cell]:
    """Cells of a 2-row by 3-column block of square rooms.

    Rooms are spaced ``corridor_length`` cells apart; every pair of rooms that
    are neighbours in the 2x3 block (3 vertical and 4 horizontal pairs) is
    joined by a straight corridor ``corridor_width`` cells wide, centred on
    the shared side.
    """
    s, w, gap = room_side, corridor_width, corridor_length
    if w > s:
        raise ValueError("corridor_width cannot exceed room_side")
    pitch = s + gap
    offset = (s - w) // 2
    cells: set[Cell] = set()
    for row in range(2):
        for col in range(3):
            x0, y0 = col * pitch, row * pitch
            cells.update((x0 + dx, y0 + dy) for dx in range(s) for dy in range(s))
            if col < 2:
                cells.update(
                    (x0 + s + dx, y0 + offset + dy) for dx in range(gap) for dy in range(w)
                )
            if row < 1:
                cells.update(
                    (x0 + offset + dx, y0 + s + dy) for dx in range(w) for dy in range(gap)
                )
    return cells


def build_rooms(room_side: int, corridor_width: int, corridor_length: int) -> Graph:
    _require_positive(
        room_side=room_side, corridor_width=corridor_width, corridor_length=corridor_length
    )
    return from_cells(rooms_cells(room_side, corridor_width, corridor_length))


def load_graph(path: str | Path) -> Graph:
    """Read the edge-list text format.

    First non-comment line is the vertex count, then one ``u v`` line per
    edge with ``u < v``. ``c v x y`` lines give lattice coordinates; if any
    are present every vertex must have one. ``#`` lines and blanks are skipped.
    """
    n: int | None = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    coords: dict[int, Cell] = {}
    last = 0
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            last = lineno
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if n is None:
                    if len(parts) != 1:
                        raise GraphFormatError(lineno, "expected the vertex count")
                    n = int(parts[0])
                    if n < 1:
                        raise GraphFormatError(lineno, "vertex count must be positive")
                    continue
                if parts[0] == "c":
                    if len(parts) != 4:
                        raise GraphFormatError(lineno, "coordinate line must be 'c v x y'")
                    v, x, y = (int(p) for p in parts[1:])
                    if not 0 <= v < n:
                        raise GraphFormatError(lineno, f"vertex {v} out of range")
                    coords[v] = (x, y)
                    continue
                if len(parts) != 2:
                    raise GraphFormatError(lineno, "edge line must be 'u v'")
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                if isinstance(exc, GraphFormatError):
                    raise
                raise GraphFormatError(lineno, f"not an integer in {line!r}") from None
            if not (0 <= u < n and 0 <= v < n):
                raise GraphFormatError(lineno, f"edge {u} {v} out of range for {n} vertices")
            if u >= v:
                raise GraphFormatError(lineno, f"edge must be written with u < v, got {u} {v}")
            if (u, v) in seen:
                raise GraphFormatError(lineno, f"duplicate edge {u} {v}")
            seen.add((u, v))
            edges.append((u, v))
    if n is None:
        raise GraphFormatError(last, "missing vertex count")
    layout = None
    if coords:
        missing = [v for v in range(n) if v not in coords]
        if missing:
            raise GraphFormatError(last, f"coordinates missing for vertex {missing[0]}")
        layout = [coords[v] for v in range(n)]
    return from_edges(n, edges, layout=layout)


def save_graph(graph: Graph, path: str | Path) -> None:
    lines = [str(graph.vertex_count)]
    lines.extend(f"{u} {v}" for u, v in graph.edges())
    if graph.layout is not None:
        lines.extend(f"c {v} {x} {y}" for v, (x, y) in enumerate(graph.layout))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def paw_graph() -> Graph:
    """The paw (triangle 0-1-3 with pendant 2 on 0): the two-agent worked example.

    Layout: 0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right. With
    agents on 0 and 3, the agent at 0 has two unmarked free neighbours (1, 2)
    and the agent at 3 has one (1).
    """
    return from_edges(4, [(0, 1), (0, 2), (1, 3), (0, 3)], layout=[(0, 0), (1, 0), (0, 1), (1, 1)])
