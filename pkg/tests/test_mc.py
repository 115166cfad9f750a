import math

import numpy as np
import pytest

from pairdyn import pair_approx as pa
from pairdyn.mc import (
    GraphConstructionError,
    RegularGraph,
    SimConfig,
    World,
    accumulated_payoff,
    count_triangles,
    drift_sign_test,
    fermi,
    random_regular_graph,
    ring_lattice,
    run,
    step_db,
    step_pc,
    validate_closure,
)
from pairdyn.payoffs import GameParams, build_game, peer_punishment, pgg

PEER = peer_punishment(GameParams(3.0, 1.0, 0.7, 5.0), 4)


def k4_graph():
    adj = np.array([[j for j in range(4) if j != i] for i in range(4)])
    return RegularGraph(4, 3, adj, count_triangles(adj))


# -- graphs ----------------------------------------------------------------------------


def test_small_graph_shape():
    g = random_regular_graph(8, 3, seed=5)
    assert g.adjacency.shape == (8, 3)
    assert len(g.edges()) == 12
    for v in range(8):
        nbrs = g.adjacency[v]
        assert len(set(nbrs)) == 3 and v not in nbrs
        for u in nbrs:
            assert v in g.adjacency[u]


def test_same_seed_same_graph():
    a = random_regular_graph(200, 4, seed=9)
    b = random_regular_graph(200, 4, seed=9)
    np.testing.assert_array_equal(a.adjacency, b.adjacency)
    assert not np.array_equal(a.adjacency, random_regular_graph(200, 4, seed=10).adjacency)


def test_large_random_graph_is_locally_tree_like():
    g = random_regular_graph(10_000, 4, seed=1)
    assert g.triangle_count / g.N < 0.01
    assert g.tree_like


def test_ring_lattice_is_flagged():
    g = ring_lattice(100, 4)
    assert g.triangle_count == 100
    assert not g.tree_like


def test_bad_graph_arguments():
    with pytest.raises(ValueError):
        random_regular_graph(7, 3)
    with pytest.raises(ValueError):
        random_regular_graph(4, 4)


def test_pairing_failure_reports_seed():
    with pytest.raises(GraphConstructionError, match="seed=3"):
        random_regular_graph(30, 12, seed=3, max_restarts=5)


# -- payoffs and update rules ---------------------------------------------------------------


def test_monomorphic_payoff():
    g = random_regular_graph(50, 4, seed=0)
    for s in range(3):
        w = World(g, PEER, np.full(50, s))
        cfg = [0, 0, 0]
        cfg[s] = 4
        for v in (0, 17, 49):
            assert accumulated_payoff(w, v) == pytest.approx(5 * PEER.evaluate(s, cfg))


def test_single_cooperator_payoff():
    k, r = 4, 3.0
    game = pgg(GameParams(r), k)
    g = random_regular_graph(40, k, seed=2)
    labels = np.ones(40, dtype=int)
    labels[7] = 0
    w = World(g, game, labels)
    assert w.payoff(7) == pytest.approx((1 + k) * (r / (k + 1) - 1))
    # each defector neighbour gets the cooperator's share from two games
    u = g.adjacency[7][0]
    assert w.payoff(u) == pytest.approx(2 * r / (k + 1))


def test_payoff_matches_mean_field_on_random_labels():
    g = random_regular_graph(20_000, 4, seed=4)
    x = np.array([0.3, 0.3, 0.4])
    labels = np.random.default_rng(0).choice(3, size=g.N, p=x)
    w = World(g, PEER, labels)
    pays = np.array([w.payoff(v) for v in range(g.N)])
    xhat = np.bincount(labels, minlength=3) / g.N
    uncorrelated = np.repeat(xhat[:, None], 3, axis=1)  # q[j, i] = x_j
    expected = pa.mean_accumulated_self(PEER, xhat, q=uncorrelated)
    for i in range(3):
        sample = pays[labels == i]
        se = sample.std(ddof=1) / math.sqrt(sample.size)
        assert abs(sample.mean() - expected[i]) < 3 * se + 1e-12


def test_fermi():
    assert fermi(1.0, 3.0, 3.0) == 0.5
    assert fermi(1.0, 0.0, 2.0) == pytest.approx(1 / (1 + math.exp(-2)))
    assert fermi(1e-9, 0.0, 5.0) == pytest.approx(0.5)


PEER3 = peer_punishment(GameParams(3.0, 1.0, 0.7, 5.0), 3)


def _transition_freqs(labels, rule, delta, trials, seed=0):
    g = k4_graph()
    rng = np.random.default_rng(seed)
    base = World(g, PEER3, labels)
    counts = {}
    for _ in range(trials):
        w = World(g, PEER3, labels)
        (step_pc if rule == "pc" else step_db)(w, rng, delta)
        changed = np.flatnonzero(w.strat != base.strat)
        assert changed.size <= 1
        key = (int(changed[0]), int(w.strat[changed[0]])) if changed.size else None
        counts[key] = counts.get(key, 0) + 1
    return base, {k: v / trials for k, v in counts.items()}


def test_pc_transition_probabilities():
    labels = np.array([0, 1, 2, 1])
    delta, trials = 0.3, 40_000
    base, freqs = _transition_freqs(labels, "pc", delta, trials)
    pay = [base.payoff(v) for v in range(4)]
    for a in range(4):
        for b in range(4):
            if a == b or labels[a] == labels[b]:
                continue
            # two neighbours may share a strategy: sum over those giving the same outcome
            same = [c for c in range(4) if c != a and labels[c] == labels[b]]
            p = sum(0.25 * (1 / 3) * fermi(delta, pay[a], pay[c]) for c in same)
            got = freqs.get((a, int(labels[b])), 0.0)
            assert abs(got - p) < 4 * math.sqrt(p * (1 - p) / trials)


def test_db_transition_probabilities():
    labels = np.array([0, 1, 2, 1])
    delta, trials = 0.3, 40_000
    base, freqs = _transition_freqs(labels, "db", delta, trials, seed=1)
    pay = np.array([base.payoff(v) for v in range(4)])
    for a in range(4):
        nbrs = [c for c in range(4) if c != a]
        fit = np.exp(delta * pay[nbrs])
        for s in set(labels[nbrs]) - {labels[a]}:
            p = 0.25 * fit[labels[nbrs] == s].sum() / fit.sum()
            got = freqs.get((a, int(s)), 0.0)
            assert abs(got - p) < 4 * math.sqrt(p * (1 - p) / trials)


@pytest.mark.parametrize("rule", ["pc", "db"])
def test_monomorphic_world_is_absorbing(rule):
    g = random_regular_graph(100, 4, seed=3)
    w = World(g, PEER, np.full(100, 2))
    w.sweep(rule, 1.0, np.random.default_rng(0))
    assert np.all(w.strat == 2)


# -- runs ------------------------------------------------------------------------------------


def cfg(**kw):
    base = dict(N=400, k=4, model=PEER, rule="pc", delta=0.05, x0=[0.3, 0.3, 0.4], steps=10, replicas=3, seed=5)
    base.update(kw)
    return SimConfig(**base)


def test_run_is_reproducible_and_replicas_independent():
    a, b = run(cfg()), run(cfg())
    np.testing.assert_array_equal(a.x, b.x)
    np.testing.assert_array_equal(a.q, b.q)
    assert a.to_csv() == b.to_csv()
    assert not np.array_equal(a.x[0], a.x[1])


def test_result_invariants():
    res = run(cfg(rule="db"))
    np.testing.assert_allclose(res.x.sum(axis=-1), 1.0)
    cols = res.q.sum(axis=-2)
    np.testing.assert_allclose(cols[~np.isnan(cols)], 1.0)
    # pair symmetry holds exactly for measured edge counts
    pair = np.nan_to_num(res.q) * res.x[..., None, :]  # extinct columns carry zero weight
    np.testing.assert_allclose(pair, np.swapaxes(pair, -1, -2), atol=1e-12)
    # at most one node changes per update, so per sweep at most N flips
    assert np.all(np.abs(np.diff(res.x, axis=1)) <= 1.0)


def test_csv_layout():
    res = run(cfg(replicas=2, steps=4, measure_every=2))
    lines = res.to_csv().splitlines()
    assert lines[0] == "replica,sweep,x1,x2,x3," + ",".join(f"q{j}|{i}" for j in (1, 2, 3) for i in (1, 2, 3))
    assert len(lines) == 1 + 2 * 3  # sweeps 0, 2, 4
    assert res.summary()["replicas"] == 2


def test_explicit_labels():
    labels = np.zeros(400, dtype=int)
    labels[:100] = 1
    res = run(cfg(x0=None, labels=labels, steps=1, replicas=1))
    np.testing.assert_allclose(res.x[0, 0], [0.75, 0.25, 0.0])


@pytest.mark.parametrize(
    "kw",
    [dict(delta=-0.1), dict(steps=0), dict(rule="bd"), dict(k=3), dict(x0=[0.5, 0.5]), dict(x0=None)],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        cfg(**kw)


def test_neutral_drift_is_a_martingale():
    res = run(cfg(delta=0.0, steps=40, replicas=20, N=300, x0=[1 / 3, 1 / 3, 1 / 3]))
    final = res.x[:, -1]
    se = final.std(axis=0, ddof=1) / math.sqrt(final.shape[0])
    assert np.all(np.abs(final.mean(axis=0) - res.x[:, 0].mean(axis=0)) < 3 * se)


def test_monomorphic_closure_at_vertex():
    res = run(cfg(x0=[0.0, 0.0, 1.0], steps=25, replicas=2))
    assert np.all(res.q[:, :, 2, 2] == 1.0)
    rep = validate_closure(res, 4, burn_in=20)
    assert rep.max_abs_deviation == 0.0


def test_closure_noise_shrinks_with_more_edges():
    def spread(k):
        model = build_game("peer", GameParams(3.0, 1.0, 0.7, 5.0), k)
        res = run(SimConfig(1000, k, model, "pc", 0.0, x0=[1 / 3] * 3, steps=40, replicas=6, seed=k))
        dev = [np.abs(res.q[r, t] - pa.edge_closure(res.x[r, t], k)).max() for r in range(6) for t in range(20, 41)]
        return float(np.mean(dev))

    assert spread(5) < spread(3)


def test_drift_sign_test_detects_direction():
    game = pgg(GameParams(3.0), 4)
    res = run(SimConfig(600, 4, game, "pc", 0.05, x0=[0.5, 0.5], steps=30, replicas=12, seed=1))
    rep = drift_sign_test(res, 0)
    assert rep.direction == "decreasing"
    assert rep.negatives >= 10
