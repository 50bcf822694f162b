"""Acceptance checks shared by ``antpap verify`` and the test suite.

Each check returns a :class:`CheckResult` with what was measured and the
tolerance it was held to. ``variant`` overrides the stagnation test used by
every simulation, which is how the negative control is produced.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .agent import PROSE, REGION_EVENTS, AgentState, conquest_conditions, step
from .analysis import (
    CL4,
    ConvergenceDetector,
    close_to_balanced,
    cover_time,
    extract_regions,
    idleness_bound,
    lcm_window,
    measure_idleness,
)
from .export import events_jsonl, metrics_csv
from .field import NONE, MarkField, SimClock
from .graph import Graph, build_cross, build_grid, build_path, build_rooms, build_star, from_edges
from .oracle import enumerate_balanced_partitions, paw_estimates
from .presets import aggregate, get_preset, median_is_monotone, run_cell
from .scheduler import SimConfig, init_world, run, run_slot


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: str
    tolerance: str
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"{mark} {self.name}: measured {self.measured}; required {self.tolerance} ({self.seconds:.1f}s)"


def _timed(fn: Callable[..., CheckResult]) -> Callable[..., CheckResult]:
    def wrapper(*args, **kwargs) -> CheckResult:
        t0 = time.perf_counter()
        result = fn(*args, **kwargs)
        result.seconds = time.perf_counter() - t0
        return result

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- 1. worked-example transition probabilities -----------------------------


@_timed
def check_paw_transitions(variant: str = PROSE, trials: int = 10_000, seed: int = 2024) -> CheckResult:
    est = paw_estimates(SimConfig(rho_c=0.5, seed=seed, stagnation_variant=variant), trials)
    stay, seven = est["stay"].frequency, est["to_state7"].frequency
    ok = abs(stay - 0.125) < 0.02 and abs(seven - 0.1875) < 0.02
    return CheckResult(
        "paw-transitions", ok,
        f"P(3->3)={stay:.4f}, P(3->7)={seven:.4f} over {trials} trials",
        "|P(3->3)-0.125|<0.02 and |P(3->7)-0.1875|<0.02",
        {k: v.to_dict() for k, v in est.items()},
    )


# -- 2. cover-time law --------------------------------------------------------


def cover_time_graphs() -> list[tuple[str, Graph]]:
    graphs = [(f"path{n}", build_path(n)) for n in range(1, 13)]
    graphs += [(f"grid{w}x{h}", build_grid(w, h)) for w, h in
               [(2, 2), (2, 3), (2, 4), (3, 3), (2, 5), (3, 4), (2, 6)]]
    return graphs


def minimal_period(seq: list) -> int:
    for p in range(1, len(seq) + 1):
        if all(seq[i] == seq[i - p] for i in range(p, len(seq))):
            return p
    return len(seq)


def single_agent_period(graph: Graph, seed: int = 0, variant: str = PROSE) -> tuple[int, set[int]]:
    """Run one agent to convergence, then return the minimal period of its
    (action, position) sequence and the set of stamp gaps seen on vertices."""
    n = graph.vertex_count
    world = init_world(graph, 1, SimConfig(seed=seed, stagnation_variant=variant, max_steps=100_000))
    trace = run(world)
    if not trace.converged:
        return -1, set()
    seq = []
    for _ in range(3 * cover_time(n)):
        (o,) = run_slot(world)
        seq.append((o.action, world.agents[0].position))
    f = world.field
    return minimal_period(seq), {f.phi0[v] - f.phi1[v] for v in range(n)}


@_timed
def check_cover_time_law(variant: str = PROSE) -> CheckResult:
    bad = {}
    for name, g in cover_time_graphs():
        want = cover_time(g.vertex_count)
        period, gaps = single_agent_period(g, variant=variant)
        if period != want or gaps != {want}:
            bad[name] = {"period": period, "gaps": sorted(gaps), "expected": want}
    return CheckResult(
        "cover-time-law", not bad,
        f"{len(cover_time_graphs()) - len(bad)}/{len(cover_time_graphs())} graphs with period and gaps 2n-1",
        "exact: period = 2n-1 and phi0-phi1 = 2n-1 everywhere, n in 1..12",
        {"mismatches": bad},
    )


# -- 3, 4, 7. regression corpus --------------------------------------------


def corpus_cases() -> list[tuple[str, Graph, int]]:
    return [
        ("grid4x4-k2", build_grid(4, 4), 2),
        ("grid5x5-k3", build_grid(5, 5), 3),
        ("grid6x6-k4", build_grid(6, 6), 4),
        ("path9-k3", build_path(9), 3),
        ("cross2x3-k3", build_cross(2, 3), 3),
        ("star3x2-k3", build_star(3, 2), 3),
        ("rooms3-k4", build_rooms(3, 1, 1), 4),
        ("grid8x8-k5", build_grid(8, 8), 5),
        ("grid3x7-k2", build_grid(3, 7), 2),
        ("grid6x6-k6", build_grid(6, 6), 6),
    ]


@dataclass
class CorpusRun:
    name: str
    seed: int
    converged: bool
    t_detected: int | None
    consistency_checks: int
    consistency_violations: list[tuple[int, int]]
    post_window: int
    post_events: int
    idle_max: int | None
    idle_bound: int
    idle_window: int


def corpus_run(seed: int, variant: str = PROSE, max_steps: int = 200_000) -> CorpusRun:
    """Step slot by slot, extracting regions every slot.

    Consistency: a region whose membership has not changed for twice its
    cover time must be consistent. Permanence: after convergence is detected,
    ten largest cover times pass with no region events. Then idleness is measured
    over one lcm window of the cover times.
    """
    cases = corpus_cases()
    name, graph, k = cases[seed % len(cases)]
    world = init_world(graph, k, SimConfig(seed=seed, stagnation_variant=variant))
    detector = ConvergenceDetector()
    since: dict[int, tuple[frozenset, int]] = {}
    checks, violations = 0, []

    def observe() -> object:
        nonlocal checks
        snap = extract_regions(world)
        t = world.clock.t
        for r in snap.regions:
            prev = since.get(r.color)
            if prev is None or prev[0] != r.members:
                since[r.color] = (r.members, t)
            elif r.members and t - prev[1] >= 2 * cover_time(r.size):
                checks += 1
                if not r.consistent:
                    violations.append((r.color, t))
        return snap

    fired = False
    for _ in range(max_steps):
        run_slot(world)
        snap = observe()
        if detector.update(snap):
            fired = True
            break
    result = CorpusRun(name, seed, fired, detector.fired_at, 0, [], 0, 0, None,
                       idleness_bound(graph.vertex_count, k), 0)
    if fired:
        window = 10 * snap.max_cover_time
        events = 0
        for _ in range(window):
            outcomes = run_slot(world)
            events += sum(o.action in REGION_EVENTS for o in outcomes)
            snap = observe()
        result.post_window, result.post_events = window, events
        if snap.class_label == CL4:
            lcm = lcm_window(snap.sizes)
            result.idle_window = lcm
            ledger = measure_idleness(world, lcm)
            result.idle_max = max(ledger.max_idle)
    result.consistency_checks, result.consistency_violations = checks, violations
    return result


_CORPUS_CACHE: dict[tuple[str, int], list[CorpusRun]] = {}


def corpus(variant: str = PROSE, seeds: int = 50) -> list[CorpusRun]:
    key = (variant, seeds)
    if key not in _CORPUS_CACHE:
        _CORPUS_CACHE[key] = [corpus_run(s, variant) for s in range(seeds)]
    return _CORPUS_CACHE[key]


@_timed
def check_consistency(variant: str = PROSE, seeds: int = 50) -> CheckResult:
    runs = corpus(variant, seeds)
    checks = sum(r.consistency_checks for r in runs)
    bad = [(r.name, r.seed, v) for r in runs for v in r.consistency_violations]
    return CheckResult(
        "region-consistency", not bad and checks > 0,
        f"{len(bad)} violations over {checks} region-slot checks in {len(runs)} runs",
        "zero violations", {"violations": bad[:20]},
    )


@_timed
def check_permanence(variant: str = PROSE, seeds: int = 50) -> CheckResult:
    runs = corpus(variant, seeds)
    unconverged = [(r.name, r.seed) for r in runs if not r.converged]
    events = sum(r.post_events for r in runs)
    return CheckResult(
        "convergence-permanence", not unconverged and events == 0,
        f"{events} region events after detection; {len(unconverged)} of {len(runs)} runs unconverged",
        "zero events in 10*dt_max after detection; every corpus run converges",
        {"unconverged": unconverged},
    )


@_timed
def check_idleness(variant: str = PROSE, seeds: int = 50) -> CheckResult:
    runs = [r for r in corpus(variant, seeds) if r.converged]
    measured = [r for r in runs if r.idle_max is not None]
    bad = [(r.name, r.seed, r.idle_max, r.idle_bound) for r in measured if r.idle_max > r.idle_bound]
    worst = max((r.idle_max / r.idle_bound for r in measured), default=0.0)
    return CheckResult(
        "idleness-bound", bool(measured) and not bad and len(measured) == len(runs),
        f"{len(measured)} converged runs measured, worst idle/bound = {worst:.3f}",
        "max idle <= 2(floor(|G|/k)+(k-1))-1 on every converged run",
        {"exceeded": bad},
    )


# -- 5. star counterexample ------------------------------------------------


@_timed
def check_star(variant: str = PROSE, seeds: int = 20, budget: int = 1_000_000) -> CheckResult:
    g = build_star(3, 2)
    c2 = enumerate_balanced_partitions(g, 2).count
    c3 = enumerate_balanced_partitions(g, 3).count
    reached_cl4 = []
    converged3 = 0
    for s in range(seeds):
        w = init_world(g, 2, SimConfig(seed=s, max_steps=budget, stagnation_variant=variant))
        tr = run(w)
        if tr.ever_cl4 or tr.converged:
            reached_cl4.append(s)
        w = init_world(g, 3, SimConfig(seed=s, max_steps=budget, stagnation_variant=variant))
        converged3 += run(w).converged
    need = -(-9 * seeds // 10)
    ok = c2 == 0 and c3 >= 1 and not reached_cl4 and converged3 >= need
    return CheckResult(
        "star-counterexample", ok,
        f"partitions k=2: {c2}, k=3: {c3}; k=2 runs reaching CL4: {len(reached_cl4)}/{seeds}; "
        f"k=3 converged: {converged3}/{seeds}",
        f"k=2 count 0 and never CL4 in {budget} slots; k=3 count >= 1 and >= {need}/{seeds} converge",
        {"k2_reached_cl4": reached_cl4},
    )


# -- 6. balance at convergence --------------------------------------------------


@_timed
def check_balance(variant: str = PROSE, seeds: int = 20) -> CheckResult:
    preset = get_preset("grid20-4")
    preset.config["stagnation_variant"] = variant
    worst_gap, worst_spread, unconverged = 0, 0, []
    for s in range(seeds):
        _, trace = run_cell(preset, 4, s)
        if not trace.converged:
            unconverged.append(s)
            continue
        snap = extract_regions(trace.world)
        worst_gap = max(worst_gap, snap.max_adjacent_gap)
        worst_spread = max(worst_spread, snap.spread)
    ok = worst_gap <= 1 and worst_spread <= 3 and not unconverged
    return CheckResult(
        "balance-at-convergence", ok,
        f"max adjacent gap {worst_gap}, max spread {worst_spread}, unconverged {len(unconverged)}/{seeds}",
        "adjacent gaps <= 1 and spread <= k-1 = 3 on every converged run",
        {"unconverged": unconverged},
    )


# -- 8. close to balanced before convergence ------------------------------------


@_timed
def check_close_before_convergence(variant: str = PROSE, seeds: int = 20) -> CheckResult:
    detail = {}
    ok = True
    parts = []
    for name in ("grid30-8", "rooms-10"):
        preset = get_preset(name)
        preset.config["stagnation_variant"] = variant
        hits, rows = 0, []
        for s in preset.seeds[:seeds]:
            cell, _ = run_cell(preset, preset.k, s)
            before = (cell.t_close_to_balanced is not None and cell.t_converged is not None
                      and cell.t_close_to_balanced < cell.t_converged)
            hits += before
            rows.append((s, cell.t_close_to_balanced, cell.t_converged))
        need = -(-9 * seeds // 10)
        ok = ok and hits >= need
        parts.append(f"{name} {hits}/{seeds}")
        detail[name] = rows
    return CheckResult(
        "close-before-convergence", ok, ", ".join(parts),
        "t_close_to_balanced < t_converged in >= 90% of seeds for each preset", detail,
    )


# -- 9. sweep trends --------------------------------------------------------------


def sweep(preset_name: str, variant: str = PROSE, seeds: int | None = None) -> list[dict]:
    preset = get_preset(preset_name)
    preset.config["stagnation_variant"] = variant
    if seeds is not None:
        preset.seeds = preset.seeds[:seeds]
    cells = [run_cell(preset, v, s)[0] for v, s in preset.cells()]
    return aggregate(cells)


@_timed
def check_sweep_trends(variant: str = PROSE, seeds: int = 10) -> CheckResult:
    cross = sweep("cross-agents", variant, seeds)
    grids = sweep("grid-sizes", variant, seeds)
    ok = median_is_monotone(cross, increasing=False) and median_is_monotone(grids, increasing=True)
    fmt = lambda rows: ", ".join(f"{r['value']}:{r['median_t_converged']}" for r in rows)
    return CheckResult(
        "sweep-trends", ok,
        f"cross medians by k [{fmt(cross)}]; grid medians by side [{fmt(grids)}]",
        "cross medians strictly decreasing in k; grid medians strictly increasing in size",
        {"cross": cross, "grids": grids},
    )


# -- 10. determinism -------------------------------------------------------------


def determinism_outputs(variant: str = PROSE) -> tuple[str, str]:
    cfg = SimConfig(seed=3, stagnation_variant=variant, sample_interval=50)
    trace = run(init_world(build_grid(12, 12), 5, cfg), metadata={"preset": "determinism"})
    return metrics_csv(trace), events_jsonl(trace)


@_timed
def check_determinism(variant: str = PROSE) -> CheckResult:
    a, b = determinism_outputs(variant), determinism_outputs(variant)
    ok = a == b
    return CheckResult(
        "determinism", ok,
        f"metrics {len(a[0])} bytes, events {len(a[1])} bytes, identical={ok}",
        "byte-identical metrics CSV and event log",
    )


# -- 11. obliviousness --------------------------------------------------------------


@dataclass
class LocalWorld:
    graph: Graph
    field: MarkField
    occupancy: list[int]
    clock: SimClock
    config: SimConfig


def local_reconstruction(world, agent: AgentState, rng: random.Random) -> tuple[LocalWorld, list[int]]:
    """Rebuild only what the agent can sense around its vertex u: u's marks,
    the marks on edges at u, its neighbours' vertex marks and occupancy.
    Everything else is replaced by random decoy structure.

    Returns the local world and ``ids`` mapping local vertex -> world vertex
    (decoys map to NONE). Neighbour order is preserved.
    """
    g, f = world.graph, world.field
    u = agent.position
    nbrs = list(g.adjacency[u])
    d = len(nbrs)
    ids = [u] + nbrs
    edges = [(0, i + 1) for i in range(d)]
    n = d + 1
    for i in range(d):
        for _ in range(rng.randint(0, 2)):
            edges.append((i + 1, n))
            ids.append(NONE)
            n += 1
    for a in range(1, n):
        for b in range(a + 1, n):
            if rng.random() < 0.15 and (a, b) not in edges:
                edges.append((a, b))
    lg = from_edges(n, edges)
    lf = MarkField(lg)
    t = world.clock.t
    colors = list(range(-1, world.k + 2))
    for lv in range(n):
        wv = ids[lv]
        if wv != NONE:
            lf.owner[lv], lf.phi0[lv], lf.phi1[lv] = f.owner[wv], f.phi0[wv], f.phi1[wv]
        else:
            p0 = rng.randint(0, t)
            lf.phi0[lv], lf.phi1[lv] = p0, rng.randint(0, p0)
            lf.owner[lv] = NONE if p0 == 0 else rng.choice(colors[1:])
    for a in range(n):
        for j, b in enumerate(lg.adjacency[a]):
            if a == 0:
                lf.edge[a][j] = f.phi(u, ids[b])
            elif b == 0:
                lf.edge[a][j] = f.phi(ids[a], u)
            else:
                lf.edge[a][j] = rng.randint(0, t)
    occ = [NONE] * n
    for lv in range(1, n):
        if ids[lv] != NONE:
            occ[lv] = world.occupancy[ids[lv]]
        elif rng.random() < 0.3:
            occ[lv] = rng.choice(colors[1:])
    occ[0] = agent.color
    return LocalWorld(lg, lf, occ, SimClock(t), world.config), ids


def _local_marks(f: MarkField, g: Graph, center: int):
    verts = [center, *g.adjacency[center]]
    marks = [(f.owner[v], f.phi0[v], f.phi1[v]) for v in verts]
    stamps = [(f.phi(center, v), f.phi(v, center)) for v in g.adjacency[center]]
    return marks, stamps


def oblivious_trial(world, agent_index: int, rng_seed: int, decoy_rng: random.Random) -> bool:
    world.clock.t += 1
    agent = world.agents[agent_index]
    local, ids = local_reconstruction(world, agent, decoy_rng)
    local_agent = AgentState(agent.color, 0)
    full_rng, local_rng = random.Random(rng_seed), random.Random(rng_seed)
    u = agent.position

    full_out = step(agent, world, full_rng)
    local_out = step(local_agent, local, local_rng)

    def back(lv: int) -> int:
        return NONE if lv == NONE else ids[lv]

    same = (
        full_out.action == local_out.action
        and back(local_out.moved_to) == full_out.moved_to
        and back(local_out.lost_vertex) == full_out.lost_vertex
        and back(local_agent.position) == agent.position
        and full_rng.getstate() == local_rng.getstate()
    )
    full_marks = _local_marks(world.field, world.graph, u)
    local_marks = _local_marks(local.field, local.graph, 0)
    return same and full_marks == local_marks


def oblivious_worlds(count: int, seed: int = 11):
    """Worlds sampled from real runs at random times, with a chosen agent."""
    rng = random.Random(seed)
    graphs = [build_grid(6, 6), build_path(10), build_star(3, 3), build_cross(2, 3), build_rooms(3, 1, 1)]
    produced = 0
    while produced < count:
        g = rng.choice(graphs)
        k = rng.randint(1, min(6, g.vertex_count - 1))
        world = init_world(g, k, SimConfig(seed=rng.randrange(2**32)))
        horizon = rng.randint(1, 400)
        for _ in range(horizon):
            run_slot(world)
        for _ in range(5):
            if produced == count:
                break
            yield world.copy(), rng.randrange(k), rng.randrange(2**32)
            produced += 1
            for _ in range(rng.randint(1, 20)):
                run_slot(world)


@_timed
def check_obliviousness(variant: str = PROSE, trials: int = 1000) -> CheckResult:
    decoys = random.Random(99)
    mismatches = []
    for i, (world, a, s) in enumerate(oblivious_worlds(trials)):
        if variant != world.config.stagnation_variant:
            world.config = SimConfig(**{**world.config.to_dict(), "stagnation_variant": variant})
        if not oblivious_trial(world, a, s, decoys):
            mismatches.append(i)
    return CheckResult(
        "obliviousness", not mismatches,
        f"{trials - len(mismatches)}/{trials} local reconstructions matched",
        "exact agreement on outcome, marks and random draws",
        {"mismatches": mismatches[:20]},
    )


# -- pinned semantics (negative control target) ------------------------------------


@_timed
def check_stagnation_prose(variant: str = PROSE) -> CheckResult:
    """The stagnation test measures staleness from phi0(v), not phi1(v).

    Scripted case: u is a one-vertex region, v belongs to a region one vertex
    larger whose mark is fresh relative to phi0 but stale relative to phi1.
    The prose form forbids the attempt; the other form allows it.
    """
    g = build_path(3)
    f = MarkField(g)
    t = 10
    f.owner[0], f.phi0[0], f.phi1[0] = 0, 10, 9
    f.owner[1], f.phi0[1], f.phi1[1] = 1, 8, 5
    f.owner[2], f.phi0[2], f.phi1[2] = 1, 7, 4
    allowed = conquest_conditions(f, 0, 1, t, variant)
    return CheckResult(
        "stagnation-prose-form", not allowed,
        f"attempt allowed={allowed} with t-phi0(v)=2, t-phi1(v)=5, gap 3",
        "attempt forbidden (staleness measured from phi0)",
    )


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "paw-transitions": check_paw_transitions,
    "cover-time-law": check_cover_time_law,
    "region-consistency": check_consistency,
    "convergence-permanence": check_permanence,
    "star-counterexample": check_star,
    "balance-at-convergence": check_balance,
    "idleness-bound": check_idleness,
    "close-before-convergence": check_close_before_convergence,
    "sweep-trends": check_sweep_trends,
    "determinism": check_determinism,
    "obliviousness": check_obliviousness,
    "stagnation-prose-form": check_stagnation_prose,
}

# reduced workloads for a fast smoke run
QUICK = {
    "region-consistency": {"seeds": 10},
    "convergence-permanence": {"seeds": 10},
    "idleness-bound": {"seeds": 10},
    "star-counterexample": {"seeds": 3, "budget": 50_000},
    "balance-at-convergence": {"seeds": 4},
    "close-before-convergence": {"seeds": 2},
    "sweep-trends": {"seeds": 3},
    "obliviousness": {"trials": 200},
    "paw-transitions": {"trials": 10_000},
}


def run_checks(names=None, variant: str = PROSE, quick: bool = False, echo=None) -> list[CheckResult]:
    results = []
    for name in names or CHECKS:
        kwargs = QUICK.get(name, {}) if quick else {}
        result = CHECKS[name](variant=variant, **kwargs)
        results.append(result)
        if echo is not None:
            echo(result.line())
    return results
