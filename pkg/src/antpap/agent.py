"""One agent's decision procedure for a single time slot.

The rule is evaluated from local readings only: the marks on the agent's
vertex ``u``, on the edges incident to ``u`` and on the neighbours of ``u``,
plus which neighbours are currently occupied. Nothing is remembered between
slots except the agent's colour and position.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

from .field import NONE, MarkField, advance_mark, conquer_mark, erase_vertex, reset_mark
from .graph import Graph

PROSE = "prose"
PSEUDOCODE = "pseudocode"
STAGNATION_VARIANTS = (PROSE, PSEUDOCODE)


class Action(str, Enum):
    CONQUERED = "CONQUERED"
    REJOINED = "REJOINED"
    ADVANCED = "ADVANCED"
    BACKTRACKED = "BACKTRACKED"
    BACKTRACKED_WITH_LOSS = "BACKTRACKED_WITH_LOSS"
    RESET = "RESET"


# actions that change some region's membership or route
REGION_EVENTS = frozenset({Action.CONQUERED, Action.REJOINED, Action.BACKTRACKED_WITH_LOSS})


class Rng(Protocol):
    def random(self) -> float: ...


@dataclass
class AgentState:
    color: int
    position: int


@dataclass(frozen=True, slots=True)
class StepOutcome:
    action: Action
    agent: int
    origin: int
    moved_to: int = NONE
    lost_vertex: int = NONE

    def __post_init__(self) -> None:
        if (self.lost_vertex != NONE) != (self.action is Action.BACKTRACKED_WITH_LOSS):
            raise ValueError("lost_vertex is set exactly on BACKTRACKED_WITH_LOSS")

    def to_record(self, t: int) -> dict:
        return {
            "t": t,
            "agent": self.agent,
            "action": self.action.value,
            "from": self.origin,
            "to": None if self.moved_to == NONE else self.moved_to,
            "lost": None if self.lost_vertex == NONE else self.lost_vertex,
        }


def conquest_conditions(
    field: MarkField, u: int, v: int, t: int, stagnation_variant: str = PROSE
) -> bool:
    """Whether an agent on ``u`` may attempt to conquer the non-self neighbour ``v``.

    Requires a double visit (u refreshed twice since v was last marked) and
    that v's region is not larger by exactly one vertex, unless v is stagnated.
    """
    p0v = field.phi0[v]
    if not field.phi1[u] > p0v:
        return False
    gap_v = p0v - field.phi1[v]
    if (field.phi0[u] - field.phi1[u]) + 2 != gap_v:
        return True
    if stagnation_variant == PROSE:
        return t - p0v > gap_v
    return t - field.phi1[v] > gap_v


def came_back_to(field: MarkField, u: int) -> bool:
    """True if the agent already left ``u`` once since u was last stamped.

    Leaving u (advance or conquest) in the slot right after u was stamped
    writes phi(u, w) = phi0(u) + 1 on the outgoing edge.
    """
    return field.phi0[u] + 1 in field.edge[u]


def explore_border(
    agent: AgentState,
    field: MarkField,
    graph: Graph,
    occupancy: Sequence[int],
    t: int,
    rng: Rng,
    rho_c: float,
    rho_l: float,
    stagnation_variant: str = PROSE,
) -> tuple[int, bool]:
    """Try conquests from the agent's vertex; return ``(target or NONE, lose_flag)``.

    Neighbours are scanned in ascending id. Per eligible neighbour one ``x``
    is drawn (if an attempt is allowed) and, on failure, one ``y``. When the
    agent has come back to ``u`` no attempt is made but ``y`` is still drawn.
    Occupied neighbours are skipped without any draw.
    """
    u = agent.position
    me = agent.color
    owner = field.owner
    may_attempt = not came_back_to(field, u)
    lose = False
    for v in graph.adjacency[u]:
        if owner[v] == me or not conquest_conditions(field, u, v, t, stagnation_variant):
            continue
        if may_attempt:
            if occupancy[v] != NONE:
                continue
            if rng.random() < rho_c:
                return v, lose
        if rng.random() < rho_l:
            lose = True
    return NONE, lose


def rejoin_target(agent: AgentState, field: MarkField, graph: Graph, u: int) -> int:
    """Oldest self-marked neighbour that u has double-visited, or NONE."""
    me = agent.color
    p1u = field.phi1[u]
    best, best_stamp = NONE, None
    for v in graph.adjacency[u]:
        if field.owner[v] != me:
            continue
        s = field.phi0[v]
        if p1u > s and (best_stamp is None or s < best_stamp):
            best, best_stamp = v, s
    return best


def oldest_trail(agent: AgentState, field: MarkField, graph: Graph, u: int) -> tuple[int, bool, bool]:
    """Neighbour across the oldest own pair-trail edge at u.

    Returns ``(v, into_v, into_u)`` telling which way the trail points;
    ``(NONE, False, False)`` if u has no trail. Only edges to self-marked
    neighbours count: an agent cannot read another agent's trail as its own.
    Ties on the edge stamp go to the lowest neighbour id.
    """
    me = agent.color
    owner, phi0, edge = field.owner, field.phi0, field.edge
    row = edge[u]
    rev = graph.rev[u]
    p0u = phi0[u]
    best, best_stamp = NONE, 0
    for i, v in enumerate(graph.adjacency[u]):
        s = row[i]
        if s == 0 or owner[v] != me or edge[v][rev[i]] != s:
            continue
        if s != phi0[v] and s != p0u:
            continue
        if best == NONE or s < best_stamp:
            best, best_stamp = v, s
    if best == NONE:
        return NONE, False, False
    return best, best_stamp == phi0[best], best_stamp == p0u


def step(agent: AgentState, world, rng: Rng) -> StepOutcome:
    """Execute one slot of the rule for ``agent`` and apply its marks.

    ``world`` needs ``graph``, ``field``, ``occupancy``, ``clock`` and
    ``config`` (with ``rho_c``, ``rho_l``, ``stagnation_variant``).
    Updating ``occupancy`` and ``agent.position`` is done here as well.
    """
    graph, field, occupancy = world.graph, world.field, world.occupancy
    cfg = world.config
    t = world.clock.t
    u = agent.position
    me = agent.color

    target, lose = explore_border(
        agent, field, graph, occupancy, t, rng, cfg.rho_c, cfg.rho_l, cfg.stagnation_variant
    )
    if target != NONE:
        conquer_mark(field, u, target, t, me)
        _move(agent, occupancy, target)
        return StepOutcome(Action.CONQUERED, me, u, target)

    target = rejoin_target(agent, field, graph, u)
    if target != NONE:
        conquer_mark(field, u, target, t, me)
        _move(agent, occupancy, target)
        return StepOutcome(Action.REJOINED, me, u, target)

    v, into_v, into_u = oldest_trail(agent, field, graph, u)
    if v != NONE:
        if into_v and field.phi0[u] > field.phi0[v]:
            advance_mark(field, u, v, t)
            _move(agent, occupancy, v)
            return StepOutcome(Action.ADVANCED, me, u, v)
        if into_u:
            if lose:
                erase_vertex(field, u)
                _move(agent, occupancy, v)
                return StepOutcome(Action.BACKTRACKED_WITH_LOSS, me, u, v, u)
            _move(agent, occupancy, v)
            return StepOutcome(Action.BACKTRACKED, me, u, v)

    reset_mark(field, u, t, me)
    return StepOutcome(Action.RESET, me, u)


def _move(agent: AgentState, occupancy: list[int], v: int) -> None:
    occupancy[agent.position] = NONE
    occupancy[v] = agent.color
    agent.position = v
