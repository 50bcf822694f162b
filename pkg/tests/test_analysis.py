from types import SimpleNamespace

import pytest
from hypothesis import given, settings, strategies as st

from antpap.agent import REGION_EVENTS, AgentState
from antpap.analysis import (
    CL1,
    CL2,
    CL3,
    CL4,
    ISOLATED,
    UNVISITED,
    ConvergenceDetector,
    IdlenessLedger,
    PartitionSnapshot,
    Region,
    RunMonitor,
    classify,
    close_to_balanced,
    cover_time,
    detect_convergence,
    extract_regions,
    idleness_bound,
    idleness_bound_check,
    is_consistent,
    lcm_window,
    measure_idleness,
    region_size_series,
)
from antpap.field import MarkField, SimClock, conquer_mark, reset_mark
from antpap.graph import build_cross, build_grid, build_path, build_rooms, build_star, from_edges
from antpap.scheduler import SimConfig, init_world, run, run_slot, stop_after


def fake_world(graph, field, positions, t):
    return SimpleNamespace(
        graph=graph, field=field, agents=[AgentState(c, p) for c, p in enumerate(positions)],
        clock=SimClock(t), k=len(positions),
    )


def snapshot(sizes, adjacent, t=0, consistent=True, unvisited=0):
    regions, assignment, v = [], [], 0
    for c, s in enumerate(sizes):
        regions.append(Region(c, frozenset(range(v, v + s)), consistent))
        assignment += [c] * s
        v += s
    assignment += [UNVISITED] * unvisited
    snap = PartitionSnapshot(t, len(assignment), assignment, regions, [], frozenset(adjacent))
    snap.class_label = classify(snap)
    return snap


# -- extraction ---------------------------------------------------------------------


def test_regions_after_first_slot():
    w = init_world(build_grid(5, 5), 3, SimConfig(seed=1))
    run_slot(w)
    snap = extract_regions(w)
    assert [r.members for r in snap.regions] == [frozenset([p]) for p in w.positions()]
    assert all(r.consistent for r in snap.regions)
    assert snap.class_label == CL1


def test_conquest_severs_enemy_branch():
    # 0 - 1 - 2 and 3 hangs off 1; agent 0 owns 0, 1, 2 via trails 0->1->2
    g = from_edges(4, [(0, 1), (1, 2), (1, 3)])
    f = MarkField(g)
    reset_mark(f, 0, 1, 0)
    conquer_mark(f, 0, 1, 2, 0)
    conquer_mark(f, 1, 2, 3, 0)
    reset_mark(f, 3, 3, 1)
    conquer_mark(f, 3, 1, 5, 1)
    snap = extract_regions(fake_world(g, f, [0, 1], 5))
    assert snap.regions[0].members == {0}
    assert snap.regions[1].members == {1, 3}
    assert snap.isolated_branches == [frozenset([2])]
    assert snap.assignment == [0, 1, ISOLATED, 1]
    assert snap.class_label == CL1


def test_single_agent_covers_2x2():
    w = init_world(build_grid(2, 2), 1, SimConfig(seed=3))
    assert run(w).converged
    snap = extract_regions(w)
    assert snap.sizes == [4] and not snap.isolated_branches
    assert snap.class_label == CL4


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 600))
def test_extraction_properties(seed, k, slots):
    g = build_grid(6, 5)
    w = init_world(g, k, SimConfig(seed=seed))
    for _ in range(slots):
        run_slot(w)
    snap = extract_regions(w)
    seen = set()
    for r, a in zip(snap.regions, w.agents):
        assert a.position in r.members
        assert not (seen & r.members)
        seen |= r.members
        for v in r.members:
            assert w.field.owner[v] == a.color
    for b in snap.isolated_branches:
        assert not (seen & b)
    assert snap.covered_count + snap.unvisited_count + snap.isolated_count == g.vertex_count


# -- classification ---------------------------------------------------------------


def test_unvisited_vertex_is_cl1():
    assert snapshot([3, 3], [(0, 1)], unvisited=1).class_label == CL1


def test_adjacent_gap_two_is_cl2():
    assert snapshot([10, 12], [(0, 1)]).class_label == CL2


def test_non_adjacent_gap_is_allowed():
    assert snapshot([10, 11, 12], [(0, 1), (1, 2)]).class_label == CL4


def test_inconsistent_region_is_cl3():
    assert snapshot([5, 5], [(0, 1)], consistent=False).class_label == CL3


def test_cl3_appears_right_after_conquest():
    """A conquest leaves the conqueror's region with stale stamp gaps."""
    w = init_world(build_grid(6, 6), 3, SimConfig(seed=2))
    found = None
    for _ in range(20_000):
        outs = run_slot(w)
        snap = extract_regions(w)
        if snap.class_label == CL3 and any(o.action.value == "CONQUERED" for o in outs):
            found = snap
            break
    assert found is not None
    f = w.field
    stale = [
        v for r in found.regions if not r.consistent for v in r.members
        if f.phi0[v] - f.phi1[v] != cover_time(r.size)
    ]
    assert stale


@given(
    st.lists(st.integers(1, 6), min_size=1, max_size=5),
    st.booleans(),
    st.integers(0, 2),
    st.data(),
)
def test_classes_exclusive_and_complete(sizes, consistent, unvisited, data):
    pairs = data.draw(st.sets(st.tuples(st.integers(0, len(sizes) - 1), st.integers(0, len(sizes) - 1))))
    pairs = {(min(a, b), max(a, b)) for a, b in pairs if a != b}
    snap = snapshot(sizes, pairs, consistent=consistent, unvisited=unvisited)
    label = snap.class_label
    assert label in (CL1, CL2, CL3, CL4)
    assert (label == CL1) == (unvisited > 0)
    if label != CL1:
        gap = max((abs(sizes[a] - sizes[b]) for a, b in pairs), default=0)
        assert (label == CL2) == (gap > 1)
        if gap <= 1:
            assert (label == CL4) == consistent


# -- consistency -------------------------------------------------------------------


def test_consistency_examples():
    f = MarkField(build_path(3))
    f.phi0[0], f.phi1[0] = 8, 7
    assert is_consistent([0], f)
    for v in range(3):
        f.phi0[v], f.phi1[v] = 10 + v, 5 + v
    assert is_consistent([0, 1, 2], f)
    assert not is_consistent([0, 1], f)
    with pytest.raises(ValueError):
        is_consistent([], f)


# -- convergence -------------------------------------------------------------------


def test_detector_needs_two_cover_times():
    history = [snapshot([50, 50], [(0, 1)], t=t) for t in range(100, 104)]
    assert not detect_convergence(history)
    history = [snapshot([50, 50], [(0, 1)], t=t) for t in range(100, 100 + 2 * 99 + 1)]
    assert detect_convergence(history)


def test_detector_restarts_on_change():
    d = ConvergenceDetector()
    for t in range(0, 150):
        d.update(snapshot([50, 50], [(0, 1)], t=t))
    for t in range(150, 300):
        assert not d.update(snapshot([50, 49], [(0, 1)], t=t))
    assert d.update(snapshot([50, 49], [(0, 1)], t=348))


def test_no_region_events_after_detection():
    w = init_world(build_grid(7, 7), 3, SimConfig(seed=12))
    tr = run(w)
    assert tr.converged
    dt = extract_regions(w).max_cover_time
    tail = run(w, stop=stop_after(10 * dt))
    assert not [e for e in tail.events if e["action"] in {a.value for a in REGION_EVENTS}]


def reference_times(graph, k, seed, max_steps=60_000):
    """Convergence and closeness times from a snapshot taken every slot."""
    w = init_world(graph, k, SimConfig(seed=seed))
    d = ConvergenceDetector()
    t_close = None
    for _ in range(max_steps):
        run_slot(w)
        snap = extract_regions(w)
        if t_close is None and close_to_balanced(snap, k):
            t_close = snap.t
        if d.update(snap):
            return d.changed_at, d.fired_at, t_close
    return None, None, t_close


@pytest.mark.parametrize(
    "graph,k,seed",
    [(build_grid(11, 11), 4, 0), (build_grid(11, 11), 3, 5), (build_rooms(4, 1, 2), 5, 1),
     (build_grid(6, 6), 3, 2), (build_star(3, 2), 3, 4), (build_cross(2, 4), 4, 8)],
)
def test_lazy_monitor_matches_every_slot_reference(graph, k, seed):
    t_conv, t_det, t_close = reference_times(graph, k, seed)
    tr = run(init_world(graph, k, SimConfig(seed=seed)))
    assert (tr.t_converged, tr.t_detected, tr.t_close_to_balanced) == (t_conv, t_det, t_close)


def test_memberships_change_only_on_region_events():
    for seed, g in enumerate([build_grid(6, 6), build_rooms(3, 1, 1), build_star(3, 3), build_grid(11, 11)]):
        w = init_world(g, 2 + seed, SimConfig(seed=seed))
        run_slot(w)
        prev = extract_regions(w).memberships()
        for _ in range(3000):
            outs = run_slot(w)
            cur = extract_regions(w).memberships()
            if cur != prev:
                assert any(o.action in REGION_EVENTS for o in outs)
            prev = cur


def test_exhaustive_monitor_flags_cl4():
    w = init_world(build_grid(5, 5), 2, SimConfig(seed=1))
    m = RunMonitor(w, exhaustive=True)
    for _ in range(5000):
        outs = run_slot(w)
        m.observe(outs, any(o.action in REGION_EVENTS for o in outs))
        if m.t_detected:
            break
    assert m.ever_cl4 and m.t_detected


# -- close to balanced --------------------------------------------------------------


def test_close_to_balanced_examples():
    snap = snapshot([250, 251, 250, 249], [(0, 1), (1, 2), (2, 3)])
    assert close_to_balanced(snap, 4)
    snap = snapshot([49, 49], [(0, 1)], unvisited=2)
    assert snap.covered_fraction == 0.98
    assert not close_to_balanced(snap, 2)
    assert not close_to_balanced(snapshot([40, 60], [(0, 1)]), 2)
    with pytest.raises(ValueError):
        close_to_balanced(snap, 0)


# -- idleness ---------------------------------------------------------------------


def test_idleness_bound_values():
    assert idleness_bound(10**6, 10) == 200017
    assert idleness_bound(10 * 10, 4) == 55
    for k in range(1, 8):
        assert idleness_bound(k, k) == 2 * k - 1


def test_single_vertex_regions_idle_one():
    g = build_path(3)
    w = init_world(g, 3, SimConfig(seed=0))
    run(w, stop=stop_after(5))
    ledger = measure_idleness(w, 20)
    assert max(ledger.max_idle) == 1
    assert idleness_bound_check(ledger, extract_regions(w), 3)


def test_idleness_grid_10x10_four_agents():
    w = init_world(build_grid(10, 10), 4, SimConfig(seed=3))
    assert run(w).converged
    snap = extract_regions(w)
    assert snap.class_label == CL4
    ledger = measure_idleness(w, lcm_window(snap.sizes))
    assert max(ledger.max_idle) <= 55
    assert idleness_bound_check(ledger, snap, 4)


def test_idleness_check_requires_cl4():
    ledger = IdlenessLedger.open(4, 0)
    with pytest.raises(ValueError):
        idleness_bound_check(ledger, snapshot([2, 1], [(0, 1)], unvisited=1), 2)


def test_ledger_counts_open_interval():
    ledger = IdlenessLedger.open(2, 0)
    ledger.visit(0, 0)
    ledger.visit(0, 3)
    ledger.close(10)
    assert ledger.max_idle == [7, 10]


def test_stable_region_is_periodic_over_lcm():
    w = init_world(build_grid(4, 4), 3, SimConfig(seed=9))
    assert run(w).converged
    snap = extract_regions(w)
    window = lcm_window(snap.sizes)

    def ages():
        return [w.t - w.field.phi0[v] for v in range(16)]

    before = ages()
    run(w, stop=stop_after(window))
    assert ages() == before


# -- series -------------------------------------------------------------------------


def test_series_rows():
    g = build_grid(8, 8)
    w = init_world(g, 4, SimConfig(seed=5, sample_interval=10))
    tr = run(w)
    rows = region_size_series(tr)
    assert rows[0]["t"] == 1 and rows[0]["sizes"] == [1, 1, 1, 1]
    ts = [r["t"] for r in rows]
    assert ts == sorted(set(ts))
    for s in tr.samples:
        assert sum(s["sizes"]) + s["unvisited"] + s["isolated"] == 64
    last = tr.samples[-1]
    assert tr.converged and max(last["sizes"]) - min(last["sizes"]) <= 3
