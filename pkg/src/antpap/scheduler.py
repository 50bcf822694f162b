"""Slot loop, strongly asynchronous ordering, placement and run traces."""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

from . import __version__
from .agent import PROSE, REGION_EVENTS, STAGNATION_VARIANTS, Action, AgentState, StepOutcome, step
from .field import NONE, MarkField, SimClock
from .graph import Graph

PRNG_ID = "python-random-MT19937"

CONVERGED = "CONVERGED"
NOT_CONVERGED = "NOT_CONVERGED"
STOPPED = "STOPPED"


@dataclass
class SimConfig:
    rho_c: float = 0.5
    rho_l: float = 0.1
    seed: int = 0
    max_steps: int = 1_000_000
    stagnation_variant: str = PROSE
    placement: list[int] | None = None
    sample_interval: int = 100

    def __post_init__(self) -> None:
        errors = self.validation_errors()
        if errors:
            raise ValueError("; ".join(errors))

    def validation_errors(self) -> list[str]:
        errors = []
        if not 0 < self.rho_c < 1:
            errors.append(f"rho_c must lie in (0, 1), got {self.rho_c}")
        if not 0 < self.rho_l < 1:
            errors.append(f"rho_l must lie in (0, 1), got {self.rho_l}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            errors.append(f"seed must be a 64-bit non-negative integer, got {self.seed!r}")
        if self.max_steps < 1:
            errors.append(f"max_steps must be positive, got {self.max_steps}")
        if self.stagnation_variant not in STAGNATION_VARIANTS:
            errors.append(
                f"stagnation_variant must be one of {STAGNATION_VARIANTS}, "
                f"got {self.stagnation_variant!r}"
            )
        if self.sample_interval < 1:
            errors.append(f"sample_interval must be positive, got {self.sample_interval}")
        return errors

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class World:
    graph: Graph
    field: MarkField
    clock: SimClock
    agents: list[AgentState]
    occupancy: list[int]
    config: SimConfig
    rng: random.Random

    @property
    def t(self) -> int:
        return self.clock.t

    @property
    def k(self) -> int:
        return len(self.agents)

    def positions(self) -> list[int]:
        return [a.position for a in self.agents]

    def copy(self) -> "World":
        rng = random.Random()
        rng.setstate(self.rng.getstate())
        return World(
            self.graph,
            self.field.copy(),
            SimClock(self.clock.t),
            [AgentState(a.color, a.position) for a in self.agents],
            self.occupancy[:],
            self.config,
            rng,
        )

    def check_invariants(self) -> None:
        occ = [NONE] * self.graph.vertex_count
        for a in self.agents:
            assert occ[a.position] == NONE, f"two agents on vertex {a.position}"
            occ[a.position] = a.color
        assert occ == self.occupancy, "occupancy out of sync with positions"
        assert self.field.max_stamp() <= self.clock.t, "stamp from the future"
        self.field.check_invariants(self.clock.t)


def init_world(graph: Graph, k: int, config: SimConfig) -> World:
    """Place ``k`` agents on distinct vertices with all marks cleared, at t = 0.

    Without an explicit placement, start vertices are drawn uniformly
    without replacement from the run's seeded stream.
    """
    n = graph.vertex_count
    if not 1 <= k <= n:
        raise ValueError(f"agent count must be between 1 and {n}, got {k}")
    rng = random.Random(config.seed)
    if config.placement is not None:
        placement = list(config.placement)
        if len(placement) != k:
            raise ValueError(f"placement lists {len(placement)} vertices for {k} agents")
        if len(set(placement)) != k:
            raise ValueError("placement contains duplicate vertices")
        if any(not 0 <= v < n for v in placement):
            raise ValueError("placement vertex out of range")
    else:
        placement = rng.sample(range(n), k)
    occupancy = [NONE] * n
    agents = []
    for color, v in enumerate(placement):
        agents.append(AgentState(color, v))
        occupancy[v] = color
    return World(graph, MarkField(graph), SimClock(0), agents, occupancy, config, rng)


def run_slot(world: World, rng: random.Random | None = None) -> list[StepOutcome]:
    """Advance the clock and let every agent act once, in a fresh random order.

    Agents act one after the other and see the marks and positions left by
    agents earlier in the same slot.
    """
    rng = world.rng if rng is None else rng
    world.clock.t += 1
    order = list(range(len(world.agents)))
    rng.shuffle(order)
    agents = world.agents
    return [step(agents[i], world, rng) for i in order]


@dataclass
class RunTrace:
    status: str
    t_end: int
    events: list[dict]
    samples: list[dict]
    world: World
    t_converged: int | None = None
    t_detected: int | None = None
    t_close_to_balanced: int | None = None
    ever_cl4: bool = False
    metadata: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED


StopRule = Callable[[World, list[StepOutcome]], bool]


def stop_after(slots: int) -> StopRule:
    """Stop rule that fires after ``slots`` further slots."""
    remaining = [slots]

    def rule(world: World, outcomes: list[StepOutcome]) -> bool:
        remaining[0] -= 1
        return remaining[0] <= 0

    return rule


def run(
    world: World,
    config: SimConfig | None = None,
    stop: StopRule | str | None = "convergence",
    *,
    post_convergence: int = 0,
    record_all: bool = False,
    probe_interval: int = 1,
    metadata: dict | None = None,
) -> RunTrace:
    """Loop slots until ``stop`` fires, convergence is detected, or ``max_steps``.

    ``stop="convergence"`` ends the run once convergence is detected (plus
    ``post_convergence`` extra slots). A callable stop rule is consulted after
    every slot; convergence is still tracked but does not end the run. The
    event log keeps region-changing events only unless ``record_all``.
    """
    from .analysis import RunMonitor

    config = world.config if config is None else config
    monitor = RunMonitor(world, sample_interval=config.sample_interval, probe_interval=probe_interval)
    events: list[dict] = []
    rng = world.rng
    by_convergence = stop == "convergence"
    rule = None if by_convergence or stop is None else stop
    extra_left: int | None = None
    status = NOT_CONVERGED
    budget = config.max_steps
    steps_done = 0
    while steps_done < budget:
        outcomes = run_slot(world, rng)
        steps_done += 1
        t = world.clock.t
        changed = False
        for o in outcomes:
            if o.action in REGION_EVENTS:
                changed = True
                events.append(o.to_record(t))
            elif record_all:
                events.append(o.to_record(t))
        monitor.observe(outcomes, changed)
        if rule is not None:
            if rule(world, outcomes):
                status = CONVERGED if monitor.t_detected is not None else STOPPED
                break
            continue
        if by_convergence and monitor.t_detected is not None:
            if extra_left is None:
                extra_left = post_convergence
            if extra_left <= 0:
                status = CONVERGED
                break
            extra_left -= 1
    else:
        if monitor.t_detected is not None:
            status = CONVERGED
    monitor.finish()
    meta = {
        "tool": "antpap",
        "version": __version__,
        "prng": PRNG_ID,
        "config": config.to_dict(),
        "k": world.k,
        "vertex_count": world.graph.vertex_count,
    }
    if metadata:
        meta.update(metadata)
    return RunTrace(
        status=status,
        t_end=world.clock.t,
        events=events,
        samples=monitor.samples,
        world=world,
        t_converged=monitor.t_converged,
        t_detected=monitor.t_detected,
        t_close_to_balanced=monitor.t_close,
        ever_cl4=monitor.ever_cl4,
        metadata=meta,
    )


def count_actions(outcomes: Sequence[StepOutcome]) -> dict[Action, int]:
    counts = {a: 0 for a in Action}
    for o in outcomes:
        counts[o.action] += 1
    return counts
