"""Brute-force and Monte-Carlo checks on tiny instances."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from .field import NONE
from .graph import Graph, paw_graph
from .scheduler import SimConfig, World, init_world, run_slot

MAX_VERTICES = 16
MAX_REGIONS = 6
MAX_WITNESSES = 100


class GuardExceeded(ValueError):
    pass


def _guard(graph: Graph, k: int | None = None) -> None:
    if graph.vertex_count > MAX_VERTICES or (k is not None and k > MAX_REGIONS):
        raise GuardExceeded(
            f"exhaustive search is limited to |G| <= {MAX_VERTICES} and k <= {MAX_REGIONS}"
            f" (got |G| = {graph.vertex_count}, k = {k})"
        )


@dataclass
class PartitionEnumeration:
    """Balanced partitions of ``graph`` into ``k`` connected regions.

    ``count`` counts unordered partitions; each witness labels regions
    0..k-1 in order of their smallest vertex.
    """

    graph: Graph
    k: int
    count: int = 0
    solutions: list[list[int]] = field(default_factory=list)


def connected_sets(graph: Graph, root: int, allowed: set[int]) -> Iterator[frozenset[int]]:
    """Every connected vertex set containing ``root`` inside ``allowed``, once each."""
    adj = graph.adjacency

    def grow(current: frozenset[int], frontier: list[int], excluded: frozenset[int]):
        yield current
        for i, v in enumerate(frontier):
            excl = excluded.union(frontier[:i])
            nxt = current | {v}
            rest = frontier[i + 1 :]
            seen = set(rest)
            for w in adj[v]:
                if w in allowed and w not in nxt and w not in excl and w not in seen:
                    rest.append(w)
                    seen.add(w)
            yield from grow(nxt, rest, excl)

    start = [w for w in adj[root] if w in allowed]
    yield from grow(frozenset([root]), start, frozenset())


def _components(graph: Graph, vertices: set[int]) -> int:
    left = set(vertices)
    count = 0
    while left:
        count += 1
        stack = [left.pop()]
        while stack:
            u = stack.pop()
            for v in graph.adjacency[u]:
                if v in left:
                    left.remove(v)
                    stack.append(v)
    return count


def enumerate_balanced_partitions(graph: Graph, k: int) -> PartitionEnumeration:
    """Exhaustively list partitions into k nonempty connected regions whose
    edge-adjacent regions differ in size by at most one."""
    if k < 1:
        raise ValueError("k must be at least 1")
    _guard(graph, k)
    n = graph.vertex_count
    adj = graph.adjacency
    result = PartitionEnumeration(graph, k)
    if k > n:
        return result
    def touches(block: frozenset[int], other: frozenset[int]) -> bool:
        return any(w in other for u in block for v in (adj[u],) for w in v)

    def balanced_against(block: frozenset[int], blocks: list[frozenset[int]]) -> bool:
        return all(abs(len(block) - len(b)) <= 1 for b in blocks if touches(block, b))

    def record(blocks: list[frozenset[int]]) -> None:
        result.count += 1
        if len(result.solutions) < MAX_WITNESSES:
            assignment = [-1] * n
            for i, b in enumerate(blocks):
                for v in b:
                    assignment[v] = i
            result.solutions.append(assignment)

    def search(free: set[int], blocks: list[frozenset[int]]) -> None:
        left = k - len(blocks)
        if left == 1:
            block = frozenset(free)
            if _components(graph, free) == 1 and balanced_against(block, blocks):
                record(blocks + [block])
            return
        root = min(free)
        for block in connected_sets(graph, root, free):
            rest = free - block
            if len(rest) < left - 1:
                continue
            if _components(graph, rest) > left - 1:
                continue
            if not balanced_against(block, blocks):
                continue
            search(rest, blocks + [block])

    search(set(range(n)), [])
    return result


def brute_force_balanced_count(graph: Graph, k: int) -> int:
    """Unordered balanced partitions by trying all k**n labelings (tiny graphs only)."""
    n = graph.vertex_count
    if k ** n > 5_000_000:
        raise GuardExceeded("k**n too large for brute force")
    total = 0
    for code in range(k**n):
        labels = []
        c = code
        for _ in range(n):
            labels.append(c % k)
            c //= k
        if is_balanced_partition(graph, labels, k):
            total += 1
    return total // math.factorial(k)


def is_balanced_partition(graph: Graph, labels: Sequence[int], k: int) -> bool:
    """k nonempty connected regions covering every vertex, adjacent gaps <= 1."""
    n = graph.vertex_count
    if len(labels) != n or any(not 0 <= x < k for x in labels):
        return False
    groups: list[set[int]] = [set() for _ in range(k)]
    for v, x in enumerate(labels):
        groups[x].add(v)
    if any(not g for g in groups):
        return False
    if any(_components(graph, g) != 1 for g in groups):
        return False
    sizes = [len(g) for g in groups]
    for u, v in graph.edges():
        a, b = labels[u], labels[v]
        if a != b and abs(sizes[a] - sizes[b]) > 1:
            return False
    return True


def has_hamiltonian_path(graph: Graph) -> bool:
    """Exact answer by depth-first search over bitmasks.

    Pruning: the unvisited vertices must stay reachable from the path's end,
    and at most one unvisited vertex may be left with a single way in.
    """
    _guard(graph)
    n = graph.vertex_count
    if n == 1:
        return True
    adj = graph.adjacency
    nbr_mask = [sum(1 << v for v in adj[u]) for u in range(n)]
    full = (1 << n) - 1
    if _components(graph, set(range(n))) != 1:
        return False

    def reachable(end: int, unvisited: int) -> bool:
        seen = 0
        frontier = nbr_mask[end] & unvisited
        while frontier:
            seen |= frontier
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= nbr_mask[low.bit_length() - 1]
                f ^= low
            frontier = nxt & unvisited & ~seen
        return seen == unvisited

    def dfs(end: int, visited: int) -> bool:
        if visited == full:
            return True
        unvisited = full & ~visited
        if not reachable(end, unvisited):
            return False
        dead_ends = 0
        m = unvisited
        while m:
            low = m & -m
            w = low.bit_length() - 1
            m ^= low
            if bin(nbr_mask[w] & (unvisited | (1 << end))).count("1") <= 1:
                dead_ends += 1
                if dead_ends > 1:
                    return False
        m = nbr_mask[end] & unvisited
        while m:
            low = m & -m
            m ^= low
            if dfs(low.bit_length() - 1, visited | low):
                return True
        return False

    return any(dfs(s, 1 << s) for s in range(n))


# -- transition-probability estimates ----------------------------------------


@dataclass
class ScriptedSetup:
    """Deterministic history leading to a declared source state."""

    placement: list[int]
    warmup_slots: int
    source_state: Callable[[World], bool]
    name: str = "setup"


@dataclass
class TransitionEstimate:
    hits: int
    trials: int

    @property
    def frequency(self) -> float:
        return self.hits / self.trials

    @property
    def half_width(self) -> float:
        p = self.frequency
        return 1.96 * math.sqrt(p * (1 - p) / self.trials)

    def to_dict(self) -> dict:
        return {
            "hits": self.hits,
            "trials": self.trials,
            "frequency": self.frequency,
            "half_width_95": self.half_width,
        }


def prepare_source(config: SimConfig, graph: Graph, setup: ScriptedSetup) -> World:
    cfg = SimConfig(**{**config.to_dict(), "placement": list(setup.placement)})
    world = init_world(graph, len(setup.placement), cfg)
    for _ in range(setup.warmup_slots):
        run_slot(world)
    if not setup.source_state(world):
        raise ValueError(f"{setup.name} did not reach its declared source state")
    return world


def estimate_transition(
    config: SimConfig,
    graph: Graph,
    setup: ScriptedSetup,
    event: Callable[[World], bool],
    trials: int,
) -> TransitionEstimate:
    """Empirical probability that one further slot from the source state
    satisfies ``event``; each trial is an independently seeded continuation."""
    if trials < 1000:
        raise ValueError("at least 1000 trials are required")
    source = prepare_source(config, graph, setup)
    hits = 0
    for i in range(trials):
        world = source.copy()
        world.rng = random.Random(f"{config.seed}/{i}")
        run_slot(world)
        if event(world):
            hits += 1
    return TransitionEstimate(hits, trials)


# The four-vertex example: agent 0 ("green") starts top-left at vertex 0,
# agent 1 ("cyan") bottom-right at vertex 3.
PAW_PLACEMENT = [0, 3]
GREEN, CYAN = 0, 1


def paw_state3(world: World) -> bool:
    """Both agents on their start vertices after two resets, nothing else marked."""
    f, t = world.field, world.clock.t
    if world.positions() != PAW_PLACEMENT:
        return False
    for v in range(world.graph.vertex_count):
        if v in PAW_PLACEMENT:
            want = PAW_PLACEMENT.index(v)
            if f.owner[v] != want or (t - f.phi0[v], t - f.phi1[v]) != (0, 1):
                return False
            if f.phi1[v] == 0:
                return False
        elif f.owner[v] != NONE or f.phi0[v] or f.phi1[v]:
            return False
    return not any(s for row in f.edge for s in row)


def paw_state7(world: World) -> bool:
    """Cyan has conquered vertex 1 and stands on it; green stayed and reset."""
    f, t = world.field, world.clock.t
    return (
        world.positions() == [0, 1]
        and f.owner[0] == GREEN
        and f.phi0[0] == t
        and f.owner[1] == CYAN
        and f.owner[3] == CYAN
        and f.owner[2] == NONE
    )


PAW_SETUP = ScriptedSetup(PAW_PLACEMENT, 2, paw_state3, name="two forced resets")


def paw_stay_probability(rho_c: float) -> float:
    return (1 - rho_c) ** 3


def paw_to_state7_probability(rho_c: float) -> float:
    return 0.5 * rho_c * (1 - rho_c) + 0.5 * (1 - rho_c) ** 2 * rho_c


def paw_estimates(config: SimConfig, trials: int = 10_000) -> dict[str, TransitionEstimate]:
    g = paw_graph()
    return {
        "stay": estimate_transition(config, g, PAW_SETUP, paw_state3, trials),
        "to_state7": estimate_transition(config, g, PAW_SETUP, paw_state7, trials),
    }
