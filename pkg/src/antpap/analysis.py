"""Regions, partition classes, convergence, balance and idleness."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

from .agent import Action
from .field import NONE, MarkField

UNVISITED = -1
ISOLATED = -2

CL1, CL2, CL3, CL4 = "CL1", "CL2", "CL3", "CL4"
CLASS_NAMES = {
    CL1: "Not Covered",
    CL2: "Covered, Not Balanced",
    CL3: "Balanced, Unstable",
    CL4: "Balanced, Stable",
}


def cover_time(size: int) -> int:
    return 2 * size - 1


@dataclass(frozen=True)
class Region:
    color: int
    members: frozenset[int]
    consistent: bool

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass
class PartitionSnapshot:
    t: int
    vertex_count: int
    assignment: list[int]
    regions: list[Region]
    isolated_branches: list[frozenset[int]]
    adjacent_pairs: frozenset[tuple[int, int]]
    class_label: str = ""

    @property
    def sizes(self) -> list[int]:
        return [r.size for r in self.regions]

    @property
    def covered_count(self) -> int:
        return sum(self.sizes)

    @property
    def covered_fraction(self) -> float:
        return self.covered_count / self.vertex_count

    @property
    def covered(self) -> bool:
        return self.covered_count == self.vertex_count

    @property
    def unvisited_count(self) -> int:
        return self.assignment.count(UNVISITED)

    @property
    def isolated_count(self) -> int:
        return self.assignment.count(ISOLATED)

    @property
    def spread(self) -> int:
        sizes = self.sizes
        return max(sizes) - min(sizes)

    @property
    def max_adjacent_gap(self) -> int:
        sizes = {r.color: r.size for r in self.regions}
        return max((abs(sizes[a] - sizes[b]) for a, b in self.adjacent_pairs), default=0)

    @property
    def balanced(self) -> bool:
        return self.covered and self.max_adjacent_gap <= 1

    @property
    def max_cover_time(self) -> int:
        return max(cover_time(s) for s in self.sizes)

    def memberships(self) -> tuple[frozenset[int], ...]:
        return tuple(r.members for r in self.regions)


def _trail_edge(field: MarkField, u: int, i: int, v: int, rev_i: int) -> bool:
    s = field.edge[u][i]
    return s > 0 and s == field.edge[v][rev_i] and (s == field.phi0[v] or s == field.phi0[u])


def is_consistent(members: Iterable[int], field: MarkField) -> bool:
    """Every member's stamp gap equals the cover time implied by the member count."""
    members = list(members)
    if not members:
        raise ValueError("region must be nonempty")
    want = cover_time(len(members))
    phi0, phi1 = field.phi0, field.phi1
    return all(phi0[v] - phi1[v] == want for v in members)


def extract_regions(world) -> PartitionSnapshot:
    """Partition the vertices by trail reachability from each agent.

    A region is everything reachable from the agent's vertex over pair-trail
    edges (either direction) through vertices carrying the agent's mark.
    Marked vertices outside every region form isolated branches.
    """
    graph, f = world.graph, world.field
    adj, rev = graph.adjacency, graph.rev
    owner = f.owner
    n = graph.vertex_count
    assignment = [UNVISITED] * n
    regions = []
    for agent in world.agents:
        c, start = agent.color, agent.position
        members: list[int] = []
        if owner[start] == c:
            assignment[start] = c
            members.append(start)
            stack = [start]
            while stack:
                u = stack.pop()
                ru = rev[u]
                for i, v in enumerate(adj[u]):
                    if owner[v] == c and assignment[v] == UNVISITED and _trail_edge(f, u, i, v, ru[i]):
                        assignment[v] = c
                        members.append(v)
                        stack.append(v)
        consistent = bool(members) and is_consistent(members, f)
        regions.append(Region(c, frozenset(members), consistent))

    branches = []
    for s in range(n):
        if owner[s] == NONE or assignment[s] != UNVISITED:
            continue
        c = owner[s]
        assignment[s] = ISOLATED
        branch = [s]
        stack = [s]
        while stack:
            u = stack.pop()
            ru = rev[u]
            for i, v in enumerate(adj[u]):
                if owner[v] == c and assignment[v] == UNVISITED and _trail_edge(f, u, i, v, ru[i]):
                    assignment[v] = ISOLATED
                    branch.append(v)
                    stack.append(v)
        branches.append(frozenset(branch))

    pairs = set()
    for u, nbrs in enumerate(adj):
        a = assignment[u]
        if a < 0:
            continue
        for v in nbrs:
            b = assignment[v]
            if b >= 0 and b != a:
                pairs.add((min(a, b), max(a, b)))
    snap = PartitionSnapshot(world.clock.t, n, assignment, regions, branches, frozenset(pairs))
    snap.class_label = classify(snap)
    return snap


def classify(snapshot: PartitionSnapshot) -> str:
    """Partition class: not covered, unbalanced, balanced-inconsistent, or stable."""
    if not snapshot.covered:
        return CL1
    if snapshot.max_adjacent_gap > 1:
        return CL2
    if not all(r.consistent for r in snapshot.regions):
        return CL3
    return CL4


def close_to_balanced(snapshot: PartitionSnapshot, k: int) -> bool:
    """More than 99% covered and max-min region size below 5% of |G|/k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if not snapshot.covered_fraction > 0.99:
        return False
    return snapshot.spread < 0.05 * (snapshot.vertex_count / k)


class ConvergenceDetector:
    """Streaming check over per-slot snapshots.

    Fires once the partition is covered and balanced and its memberships have
    not changed for twice the largest region's cover time.
    """

    def __init__(self) -> None:
        self._members: tuple | None = None
        self.changed_at: int | None = None
        self.fired_at: int | None = None

    def update(self, snapshot: PartitionSnapshot) -> bool:
        members = snapshot.memberships()
        if members != self._members:
            self._members = members
            self.changed_at = snapshot.t
        if self.fired_at is None and snapshot.balanced:
            if snapshot.t - self.changed_at >= 2 * snapshot.max_cover_time:
                self.fired_at = snapshot.t
        return self.fired_at is not None


def detect_convergence(history: Iterable[PartitionSnapshot]) -> bool:
    detector = ConvergenceDetector()
    fired = False
    for snap in history:
        fired = detector.update(snap)
    return fired


# -- idleness ----------------------------------------------------------------


def idleness_bound(vertex_count: int, k: int) -> int:
    return 2 * (vertex_count // k + (k - 1)) - 1


@dataclass
class IdlenessLedger:
    """Per-vertex last visit and longest gap between visits over a window."""

    start: int
    last_visit: list[int | None]
    max_idle: list[int]
    end: int | None = None

    @classmethod
    def open(cls, vertex_count: int, start: int) -> "IdlenessLedger":
        return cls(start, [None] * vertex_count, [0] * vertex_count)

    def visit(self, v: int, t: int) -> None:
        last = self.last_visit[v]
        if last is not None and t - last > self.max_idle[v]:
            self.max_idle[v] = t - last
        self.last_visit[v] = t

    def close(self, t: int) -> None:
        """Account for the open interval since each vertex's last visit."""
        self.end = t
        for v, last in enumerate(self.last_visit):
            gap = t - (self.start if last is None else last)
            if gap > self.max_idle[v]:
                self.max_idle[v] = gap


def lcm_window(sizes: Sequence[int]) -> int:
    return reduce(math.lcm, (cover_time(s) for s in sizes), 1)


def measure_idleness(world, window: int) -> IdlenessLedger:
    """Run ``window`` further slots and record the vertex each agent stands on."""
    from .scheduler import run_slot

    ledger = IdlenessLedger.open(world.graph.vertex_count, world.clock.t)
    for a in world.agents:
        ledger.visit(a.position, world.clock.t)
    for _ in range(window):
        run_slot(world)
        t = world.clock.t
        for a in world.agents:
            ledger.visit(a.position, t)
    ledger.close(world.clock.t)
    return ledger


def idleness_bound_check(ledger: IdlenessLedger, snapshot: PartitionSnapshot, k: int) -> bool:
    if snapshot.class_label != CL4:
        raise ValueError("idleness bound applies to converged (CL4) partitions")
    bound = idleness_bound(snapshot.vertex_count, k)
    return max(ledger.max_idle) <= bound


# -- time series -----------------------------------------------------------

SERIES_VERSION = 1


def sample_row(snapshot: PartitionSnapshot, counts: dict[str, int]) -> dict:
    return {
        "t": snapshot.t,
        "sizes": snapshot.sizes,
        "covered_fraction": snapshot.covered_fraction,
        "unvisited": snapshot.unvisited_count,
        "isolated": snapshot.isolated_count,
        "class_label": snapshot.class_label,
        "spread": snapshot.spread,
        "conquests": counts.get("conquests", 0),
        "rejoins": counts.get("rejoins", 0),
        "losses": counts.get("losses", 0),
    }


def region_size_series(trace) -> list[dict]:
    """Sampled ``(t, sizes per agent, coverage)`` rows from a run trace."""
    return [
        {"t": row["t"], "sizes": list(row["sizes"]), "covered_fraction": row["covered_fraction"]}
        for row in trace.samples
    ]


class RunMonitor:
    """Tracks convergence, closeness to balance and samples while a run steps.

    Region memberships only change on conquest, rejoin or loss events, so
    snapshots are recomputed lazily: at sample times, when a closeness probe
    is due, and when a partition has been stable long enough to be a
    convergence candidate. With ``exhaustive`` every change is snapshotted
    and every slot of a covered, balanced epoch is classified.
    """

    def __init__(
        self,
        world,
        sample_interval: int = 100,
        probe_interval: int = 1,
        exhaustive: bool | None = None,
    ):
        self.world = world
        n, k = world.graph.vertex_count, world.k
        self.sample_interval = sample_interval
        self.probe_interval = probe_interval
        self.exhaustive = n <= 100 if exhaustive is None else exhaustive
        self.min_window = 2 * cover_time(-(-n // k))
        self.last_change = world.clock.t
        self.epoch_snap: PartitionSnapshot | None = None
        self.last_probe = -(10**18)
        self.probe_pending = True
        self.samples: list[dict] = []
        self.counts = {"conquests": 0, "rejoins": 0, "losses": 0}
        self.t_converged: int | None = None
        self.t_detected: int | None = None
        self.t_close: int | None = None
        self.ever_cl4 = False
        self.last_snapshot: PartitionSnapshot | None = None

    def _snapshot(self) -> PartitionSnapshot:
        snap = extract_regions(self.world)
        self.last_snapshot = snap
        if snap.class_label == CL4:
            self.ever_cl4 = True
        return snap

    def observe(self, outcomes, changed: bool) -> None:
        world = self.world
        t = world.clock.t
        for o in outcomes:
            a = o.action
            if a is Action.CONQUERED:
                self.counts["conquests"] += 1
            elif a is Action.REJOINED:
                self.counts["rejoins"] += 1
            elif a is Action.BACKTRACKED_WITH_LOSS:
                self.counts["losses"] += 1
        first = t == 1
        if changed or first:
            self.last_change = t
            self.epoch_snap = None
            self.probe_pending = True

        snap = None
        if first or t % self.sample_interval == 0:
            snap = self._snapshot()
            self.samples.append(sample_row(snap, self.counts))
            self.counts = {"conquests": 0, "rejoins": 0, "losses": 0}
            if self.epoch_snap is None:
                self.epoch_snap = snap

        if self.exhaustive and self.epoch_snap is None:
            self.epoch_snap = snap = snap or self._snapshot()

        if self.t_close is None and self.probe_pending and t - self.last_probe >= self.probe_interval:
            owned = world.graph.vertex_count - world.field.owner.count(NONE)
            if owned > 0.99 * world.graph.vertex_count:
                if self.epoch_snap is None:
                    self.epoch_snap = snap = snap or self._snapshot()
                self.last_probe = t
                self.probe_pending = False
                if close_to_balanced(self.epoch_snap, world.k):
                    self.t_close = t

        stable = t - self.last_change
        if self.epoch_snap is None and stable >= self.min_window:
            self.epoch_snap = snap = snap or self._snapshot()
        epoch = self.epoch_snap
        if epoch is not None and epoch.balanced:
            if self.exhaustive and not self.ever_cl4 and snap is None:
                self._snapshot()
            if self.t_detected is None and stable >= 2 * epoch.max_cover_time:
                self.t_detected = t
                self.t_converged = self.last_change
                self._snapshot()

    def finish(self) -> None:
        t = self.world.clock.t
        if not self.samples or self.samples[-1]["t"] != t:
            snap = self._snapshot()
            self.samples.append(sample_row(snap, self.counts))
