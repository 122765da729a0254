import math

import numpy as np
import pytest

from evosir.analytic import epidemic_probability, tau_exp, tau_exp_rewire, tau_fixed, tau_fixed_rewire
from evosir.errors import ParameterError
from evosir.graph import EvolvingGraph, generate_er
from evosir.params import EpidemicParams
from evosir.sim import (
    EdgeClockEvent,
    compare_variants,
    default_threshold,
    derive_seed,
    run_epidemic,
    run_trials,
)

COMBOS = [(m, v) for m in ("fixed", "exponential") for v in ("static", "del", "evo")]


def P(lam, rho=0.0, model="exponential", variant="evo", mu=5.0, n=None):
    return EpidemicParams(mu, lam, rho, model, variant, n)


def check_trajectory(o):
    traj = o.trajectory
    assert traj, "expected a recorded trajectory"
    last_t, last_r = -1.0, -1
    for t, s, i, r in traj:
        assert s + i + r == o.n
        assert t >= last_t and r >= last_r
        last_t, last_r = t, r
    assert traj[-1][2] == 0
    assert traj[-1][3] == o.final_removed


@pytest.mark.parametrize("model,variant", COMBOS)
def test_no_transmission(model, variant):
    g = generate_er(1000, 5.0, 1)
    o = run_epidemic(P(0.0, 2.0, model, variant), g, 3)
    assert o.final_removed == 1


@pytest.mark.parametrize("model,variant", COMBOS)
def test_audited_runs(model, variant):
    p = P(2.0, 4.0 if variant != "static" else 0.0, model, variant)
    for k in range(5):
        g = generate_er(2000, 5.0, k)
        m = g.edge_count
        o = run_epidemic(p, g, derive_seed(1, k), record="events", audit=True)
        check_trajectory(o)
        assert o.final_removed >= 1
        assert o.peak_infected <= o.final_removed
        g.audit()
        if variant == "del":
            assert g.edge_count == m - o.delete_events
            assert o.rewire_events == 0
        else:
            assert g.edge_count == m
            assert o.delete_events == 0
        if variant == "static":
            assert o.rewire_events == 0


def test_determinism():
    p = P(2.0, 4.0, "exponential", "evo")
    a = run_epidemic(p, generate_er(3000, 5.0, 8), 99)
    b = run_epidemic(p, generate_er(3000, 5.0, 8), 99)
    assert a == b


@pytest.mark.parametrize("model", ["fixed", "exponential"])
def test_variants_identical_without_breaking(model):
    g = generate_er(3000, 5.0, 4)
    a = run_epidemic(P(1.5, 0.0, model, "del"), g.copy(), 17)
    b = run_epidemic(P(1.5, 0.0, model, "evo"), g.copy(), 17)
    c = run_epidemic(P(1.5, 0.0, model, "static"), g.copy(), 17)
    assert a == b == c


def test_static_ignores_rho_in_simulation():
    g = generate_er(3000, 5.0, 4)
    a = run_epidemic(P(1.5, 0.0, "exponential", "static"), g.copy(), 5)
    b = run_epidemic(P(1.5, 9.0, "exponential", "static"), g.copy(), 5)
    assert a == b


def _pair_infection_rate(p, trials=40_000):
    hits = 0
    for k in range(trials):
        g = EvolvingGraph.from_edges(2, [(0, 1)])
        hits += run_epidemic(p, g, k, record="none").final_removed == 2
    return hits / trials


@pytest.mark.parametrize(
    "model,variant,lam,rho,expected",
    [
        ("fixed", "static", 0.8, 0.0, tau_fixed(0.8)),
        ("fixed", "del", 0.8, 2.0, tau_fixed_rewire(0.8, 2.0)),
        # with two vertices a rewired edge lands back on the infected vertex
        ("fixed", "evo", 0.8, 2.0, tau_fixed(0.8)),
        ("exponential", "del", 0.8, 2.0, tau_exp_rewire(0.8, 2.0)),
        ("exponential", "evo", 0.8, 2.0, tau_exp(0.8)),
    ],
)
def test_single_edge_transmission(model, variant, lam, rho, expected):
    est = _pair_infection_rate(P(lam, rho, model, variant))
    se = math.sqrt(expected * (1 - expected) / 40_000)
    assert abs(est - expected) < 4 * se


def test_initial_infected_validation():
    g = generate_er(10, 2.0, 0)
    with pytest.raises(ParameterError):
        run_epidemic(P(1.0), g, 0, initial_infected=0)
    with pytest.raises(ParameterError):
        run_epidemic(P(1.0), g, 0, record="sometimes")


def test_multiple_initial_infected():
    o = run_epidemic(P(0.0), generate_er(100, 2.0, 0), 1, initial_infected=10, record="events")
    assert o.final_removed == 10
    assert o.trajectory[0] == (0.0, 90, 10, 0)


def test_grid_recording_for_large_population():
    n = 20_000
    o = run_epidemic(P(2.0, 0.0, variant="static"), generate_er(n, 5.0, 2), 3, initial_infected=20)
    times = [t for t, *_ in o.trajectory]
    assert times[0] == 0.0 and times[-1] == o.extinction_time
    steps = np.diff(times[:-1])
    assert np.allclose(steps, 0.05)
    check_trajectory(o)


def test_event_recording_matches_counts():
    o = run_epidemic(P(2.0, 4.0), generate_er(2000, 5.0, 6), 8, record="events", initial_infected=5)
    check_trajectory(o)
    # one row per infection and one per recovery after the initial row
    assert len(o.trajectory) == 1 + (o.final_removed - 5) + o.final_removed


def test_queue_entry_layout():
    a = EdgeClockEvent(1.0, 2, 1, 7, 0, 3)
    b = EdgeClockEvent(1.0, 1, 0, 9, 0, 0)
    assert min(a, b) is b
    assert a.target == 7 and a.susceptible == 3


# -- seeds and campaigns -------------------------------------------------------------

def test_derive_seed_stable_and_distinct():
    seeds = [derive_seed(5, i) for i in range(1000)]
    assert len(set(seeds)) == 1000
    assert seeds[:10] == [derive_seed(5, i) for i in range(10)]
    assert derive_seed(5, 0) != derive_seed(6, 0)
    assert all(0 <= s < 2**63 for s in seeds)


def test_trials_prefix_stable():
    p = P(2.0, 4.0, n=1000)
    a = run_trials(p, trials=5, base_seed=3)
    b = run_trials(p, trials=8, base_seed=3)
    assert a.outcomes == b.outcomes[:5]


def test_trials_parallel_matches_serial():
    p = P(2.0, 4.0, n=1000)
    a = run_trials(p, trials=6, base_seed=1, jobs=1)
    b = run_trials(p, trials=6, base_seed=1, jobs=2)
    assert a.outcomes == b.outcomes


def test_single_trial_summary():
    ts = run_trials(P(2.0, 4.0, n=2000), trials=1, base_seed=4, large_threshold=0.0)
    s = ts.summary()
    o = ts.outcomes[0]
    assert s["trials"] == 1 and s["n_large"] == 1
    assert s["mean_fraction"] == o.final_fraction == s["large_mean"]


def test_trials_need_population():
    with pytest.raises(ParameterError):
        run_trials(P(2.0), trials=3)


def test_default_threshold():
    assert default_threshold(P(2.0, 4.0, "exponential", "evo")) == pytest.approx(0.4983 / 2, abs=1e-3)
    assert default_threshold(P(1.0, 4.0)) == 0.05


def test_subcritical_trials_rarely_large():
    ts = run_trials(P(1.0, 4.0, "exponential", "evo"), n=10_000, trials=500, base_seed=21)
    assert ts.p_large < 0.01


def test_supercritical_trials_probability():
    p = P(2.0, 4.0, "exponential", "evo")
    ts = run_trials(p, n=5_000, trials=300, base_seed=22)
    assert abs(ts.p_large - epidemic_probability(p)) < 3 * math.sqrt(0.25 / 300)


def test_copied_graph_replays_identically():
    g = generate_er(3000, 5.0, 12)
    p = P(1.5, 4.0, "exponential", "evo")
    h = g.copy()
    assert run_epidemic(p, g, 3) == run_epidemic(p, h, 3)


def test_compare_variants_without_breaking():
    cmp_ = compare_variants(P(1.5, 0.0, "fixed"), 2_000, 10, base_seed=2)
    assert np.array_equal(cmp_.del_fractions, cmp_.evo_fractions)
    s = cmp_.summary()
    assert s["diff_mean"] == 0.0


@pytest.mark.slow
def test_rewiring_dominates_deletion():
    cmp_ = compare_variants(P(1.2, 4.0, "fixed"), 10_000, 500, base_seed=31)
    s = cmp_.summary()
    assert s["del_mean"] <= s["evo_mean"] + 3 * s["diff_se"]


def test_subcritical_variants_small():
    n = 10_000
    p = P(0.9 * 1.25, 4.0, "exponential")
    s = compare_variants(p, n, 100, base_seed=8).summary()
    bound = 40 * math.log(n) / n
    assert s["del_mean"] < bound and s["evo_mean"] < bound


@pytest.mark.slow
def test_critical_rewiring_speeds_up_epidemic():
    # at the critical value the early growth is flat; rewiring then raises
    # susceptible degrees and the epidemic takes off
    n = 200_000
    p = P(1.0084, 4.0, "fixed", "evo")
    large = 0
    for k in range(6):
        seed = derive_seed(11, k)
        g = generate_er(n, 5.0, np.random.default_rng(seed))
        o = run_epidemic(p, g, seed, record="grid", initial_infected=50)
        if o.final_fraction < default_threshold(p) and o.final_fraction < 0.05:
            continue
        large += 1
        traj = np.array(o.trajectory)
        i5 = traj[np.searchsorted(traj[:, 0], 5.0), 2]
        assert traj[:, 2].max() >= 2 * i5
    assert large >= 1
