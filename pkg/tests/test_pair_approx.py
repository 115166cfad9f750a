import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairdyn import pair_approx as pa
from pairdyn.payoffs import GameParams, peer_punishment, pool_punishment, tabulate

from oracles import Micro, linear_fn, pool_fn, random_column_stochastic

P = GameParams(3.0, 1.0, 0.7, 5.0)


def simplex(n):
    return st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n).map(lambda v: np.array(v) / sum(v))


@settings(max_examples=40)
@given(simplex(3), st.integers(3, 8))
def test_closure_is_fixed_point_of_edge_dynamics(x, k):
    q = pa.edge_closure(x, k)
    np.testing.assert_allclose(q.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(pa.edge_dynamics_rhs(q, k), 0.0, atol=1e-12)
    # pair symmetry: x_i q_{j|i} = x_j q_{i|j}
    pair = q * x[None, :]
    np.testing.assert_allclose(pair, pair.T, atol=1e-12)


def test_edge_dynamics_relaxes_to_closure():
    rng = np.random.default_rng(2)
    k = 4
    q = random_column_stochastic(rng, 3)
    for _ in range(4000):
        q = q + 0.01 * pa.edge_dynamics_rhs(q, k)
    # the node frequencies are those implied by pair symmetry of the limit
    x = np.linalg.svd(q - np.eye(3))[2][-1]
    x = x / x.sum()
    np.testing.assert_allclose(q, pa.edge_closure(x, k), atol=1e-6)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_degenerate_degree_rejected(k):
    with pytest.raises(pa.DegenerateDegreeError):
        pa.edge_closure([0.5, 0.5], k)
    with pytest.raises(ValueError):
        pa.PopulationState(np.array([0.5, 0.5]), k)


def test_state_must_be_on_simplex():
    with pytest.raises(ValueError):
        pa.PopulationState(np.array([0.6, 0.6]), 4)


def _cases():
    rng = np.random.default_rng(11)
    b, c = rng.normal(size=(3, 3)), rng.normal(size=3)
    for k in (3, 4, 5):
        yield "pool", pool_punishment(P, k), pool_fn(P.r, P.cost, P.alpha, P.beta, k), k
        yield "linear", tabulate(3, k, linear_fn(b, c)), linear_fn(b, c), k


@pytest.mark.parametrize("name,model,fn,k", list(_cases()))
def test_tables_match_microscopic_definitions(name, model, fn, k):
    rng = np.random.default_rng(k)
    q = random_column_stochastic(rng, 3)
    micro = Micro(fn, 3, k, q)
    t = pa.mean_single_game(model, None, triple=True, q=q)
    own = pa.accumulated_self(t, q, k)
    nbr = pa.accumulated_neighbor(t, q, k)
    sec = pa.accumulated_second_order(t, q, k)
    for i in range(3):
        assert own[i] == pytest.approx(micro.mean_self(i), rel=1e-12)
        for j in range(3):
            assert nbr[j, i] == pytest.approx(micro.mean_neighbor(j, i), rel=1e-12)
            for a in range(3):
                assert sec[a, i, j] == pytest.approx(micro.mean_pair_two(a, i, j), rel=1e-12)


@settings(max_examples=30)
@given(simplex(3), st.integers(3, 6))
def test_linear_closed_forms(x, k):
    model = peer_punishment(P, k)
    gen = pa.mean_single_game(model, x, triple=True)
    lin = pa.linear_single_game(model.b, model.c, x, k)
    np.testing.assert_allclose(lin.a_self, gen.a_self, atol=1e-11)
    np.testing.assert_allclose(lin.a_neigh, gen.a_neigh, atol=1e-11)
    np.testing.assert_allclose(lin.a_triple, gen.a_triple, atol=1e-11)


def test_second_order_needs_triple_table():
    model = peer_punishment(P, 4)
    x = np.array([0.2, 0.3, 0.5])
    q = pa.edge_closure(x, 4)
    with pytest.raises(ValueError, match="triple"):
        pa.accumulated_second_order(pa.mean_single_game(model, x, q=q), q, 4)


def test_monomorphic_payoff():
    model = peer_punishment(P, 4)
    x = np.array([0.0, 0.0, 1.0])
    own = pa.mean_accumulated_self(model, x)
    assert own[2] == pytest.approx(5 * model.evaluate(2, (0, 0, 4)))
