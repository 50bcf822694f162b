import pytest
from hypothesis import given, settings, strategies as st

from antpap.agent import Action
from antpap.field import NONE
from antpap.graph import build_grid, build_path, build_star
from antpap.scheduler import (
    CONVERGED,
    NOT_CONVERGED,
    PRNG_ID,
    STOPPED,
    SimConfig,
    count_actions,
    init_world,
    run,
    run_slot,
    stop_after,
)


@pytest.mark.parametrize(
    "kwargs,field",
    [
        ({"rho_c": 0.0}, "rho_c"),
        ({"rho_c": 1.0}, "rho_c"),
        ({"rho_l": 1.5}, "rho_l"),
        ({"seed": -1}, "seed"),
        ({"seed": 2**64}, "seed"),
        ({"max_steps": 0}, "max_steps"),
        ({"stagnation_variant": "other"}, "stagnation_variant"),
        ({"sample_interval": 0}, "sample_interval"),
    ],
)
def test_config_rejects(kwargs, field):
    with pytest.raises(ValueError, match=field):
        SimConfig(**kwargs)


def test_config_round_trip():
    cfg = SimConfig(rho_c=0.3, seed=9, placement=[1, 2])
    assert SimConfig(**cfg.to_dict()) == cfg


def test_saturated_placement():
    g = build_grid(3, 3)
    w = init_world(g, 9, SimConfig(seed=1))
    assert sorted(w.positions()) == list(range(9))
    assert NONE not in w.occupancy


def test_same_seed_same_placement():
    g = build_grid(10, 10)
    a = init_world(g, 5, SimConfig(seed=42)).positions()
    b = init_world(g, 5, SimConfig(seed=42)).positions()
    assert a == b
    assert a != init_world(g, 5, SimConfig(seed=43)).positions()


def test_eight_agents_on_large_grid():
    w = init_world(build_grid(50, 50), 8, SimConfig(seed=3))
    assert len(set(w.positions())) == 8
    assert w.t == 0 and w.field.max_stamp() == 0


@pytest.mark.parametrize("k", [0, 10])
def test_bad_agent_count(k):
    with pytest.raises(ValueError):
        init_world(build_grid(3, 3), k, SimConfig())


@pytest.mark.parametrize("placement", [[0, 0], [0, 9], [1]])
def test_bad_explicit_placement(placement):
    with pytest.raises(ValueError):
        init_world(build_grid(3, 3), 2, SimConfig(placement=placement))


def test_explicit_placement_is_used():
    w = init_world(build_grid(3, 3), 2, SimConfig(placement=[8, 4]))
    assert w.positions() == [8, 4]
    assert w.occupancy[8] == 0 and w.occupancy[4] == 1


def test_two_agent_order_is_fair():
    w = init_world(build_path(10), 2, SimConfig(seed=8))
    first = [run_slot(w)[0].agent for _ in range(10_000)]
    assert abs(first.count(0) / 10_000 - 0.5) < 0.02


def test_slot_shape():
    w = init_world(build_grid(5, 5), 4, SimConfig(seed=2))
    for t in range(1, 50):
        outcomes = run_slot(w)
        assert w.t == t
        assert sorted(o.agent for o in outcomes) == [0, 1, 2, 3]
        w.check_invariants()


def test_single_agent_slot():
    w = init_world(build_path(4), 1, SimConfig(seed=2))
    for _ in range(10):
        assert len(run_slot(w)) == 1


def test_first_slot_is_all_resets():
    w = init_world(build_grid(4, 4), 3, SimConfig(seed=5))
    outcomes = run_slot(w)
    assert {o.action for o in outcomes} == {Action.RESET}
    for a in w.agents:
        assert (w.field.phi0[a.position], w.field.phi1[a.position]) == (1, 0)


def test_stop_after_ten_slots():
    w = init_world(build_grid(6, 6), 3, SimConfig(seed=1, sample_interval=1))
    tr = run(w, stop=stop_after(10), record_all=True)
    assert tr.status == STOPPED and tr.t_end == 10
    assert len(tr.events) == 30
    assert [s["t"] for s in tr.samples] == list(range(1, 11))


def test_star_two_agents_does_not_converge():
    w = init_world(build_star(3, 2), 2, SimConfig(seed=0, max_steps=100_000))
    tr = run(w)
    assert tr.status == NOT_CONVERGED and not tr.ever_cl4
    assert tr.t_end == 100_000


def test_convergence_run_reports_times():
    w = init_world(build_grid(6, 6), 3, SimConfig(seed=4))
    tr = run(w)
    assert tr.status == CONVERGED
    assert tr.t_converged <= tr.t_detected == tr.t_end
    assert tr.ever_cl4
    assert tr.metadata["prng"] == PRNG_ID and tr.metadata["k"] == 3


def test_post_convergence_slots():
    w = init_world(build_grid(5, 5), 2, SimConfig(seed=4))
    tr = run(w, post_convergence=25)
    assert tr.t_end == tr.t_detected + 25


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_run_is_deterministic(seed):
    def trace():
        w = init_world(build_grid(5, 5), 3, SimConfig(seed=seed, max_steps=3000))
        return run(w, record_all=True)

    a, b = trace(), trace()
    assert a.events == b.events and a.samples == b.samples
    assert a.world.field == b.world.field and a.t_end == b.t_end


def test_world_copy_is_independent():
    w = init_world(build_grid(5, 5), 3, SimConfig(seed=6))
    for _ in range(30):
        run_slot(w)
    c = w.copy()
    ahead = [run_slot(c) for _ in range(20)]
    assert w.t == 30
    again = [run_slot(w) for _ in range(20)]
    assert ahead == again and w.field == c.field


def test_count_actions():
    w = init_world(build_grid(4, 4), 2, SimConfig(seed=6))
    counts = count_actions(run_slot(w))
    assert counts[Action.RESET] == 2 and sum(counts.values()) == 2
