import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairdyn import replicator as rp
from pairdyn.payoffs import GameParams, LinearPayoff, peer_punishment, pgg, pool_punishment, tabulate

from oracles import linear_fn

P = GameParams(3.0, 1.0, 0.7, 5.0)


def simplex(n):
    return st.lists(st.floats(0.01, 1.0), min_size=n, max_size=n).map(lambda v: np.array(v) / sum(v))


MODELS = [
    pytest.param(lambda k: peer_punishment(P, k), id="peer"),
    pytest.param(lambda k: pool_punishment(P, k), id="pool"),
]


@pytest.mark.parametrize("make", MODELS)
@pytest.mark.parametrize("k", [3, 4, 6])
def test_pc_forms_agree(make, k):
    model = make(k)
    rng = np.random.default_rng(k)
    for x in rng.dirichlet(np.ones(3), 20):
        ref = rp.pc_accumulated_rhs(model, x)
        np.testing.assert_allclose(rp.pc_general_rhs(model, x), ref, atol=1e-12)
        np.testing.assert_allclose(rp.pc_single_game_q_rhs(model, x), ref, atol=1e-12)


@pytest.mark.parametrize("make", MODELS)
@pytest.mark.parametrize("k", [3, 4, 6])
def test_db_forms_agree(make, k):
    model = make(k)
    rng = np.random.default_rng(k + 100)
    for x in rng.dirichlet(np.ones(3), 20):
        np.testing.assert_allclose(rp.db_pair_form_rhs(model, x), rp.db_general_rhs(model, x), atol=1e-12)


@settings(max_examples=40)
@given(simplex(2), st.integers(3, 7), st.integers(0, 10**6))
def test_two_strategy_reductions(x, k, seed):
    rng = np.random.default_rng(seed)
    b, c = rng.normal(size=(2, 2)), rng.normal(size=2)
    lin = LinearPayoff(b, c, k)
    nonlin = tabulate(2, k, lambda i, cfg: float(np.sin(i + 2 * cfg[0]) + cfg[1] ** 2 / (k + 1)))
    for m in (lin, nonlin):
        np.testing.assert_allclose(rp.pc_two_strategy_rhs(m, x), rp.pc_general_rhs(m, x), atol=1e-11)
        np.testing.assert_allclose(rp.db_two_strategy_rhs(m, x), rp.db_general_rhs(m, x), atol=1e-11)
    np.testing.assert_allclose(rp.pc_linear_two_strategy_rhs(lin, x), rp.pc_general_rhs(lin, x), atol=1e-11)
    np.testing.assert_allclose(rp.db_linear_two_strategy_rhs(lin, x), rp.db_general_rhs(lin, x), atol=1e-11)


@settings(max_examples=40)
@given(simplex(3), st.integers(3, 7), st.integers(0, 10**6))
def test_linear_fast_paths_on_random_games(x, k, seed):
    rng = np.random.default_rng(seed)
    m = LinearPayoff(rng.normal(size=(3, 3)), rng.normal(size=3), k)
    np.testing.assert_allclose(rp.pc_linear_rhs(m, x), rp.pc_general_rhs(m, x), atol=1e-11)
    np.testing.assert_allclose(rp.db_linear_rhs(m, x), rp.db_general_rhs(m, x), atol=1e-11)


@pytest.mark.parametrize("rule", ["pc", "db", "wm"])
@pytest.mark.parametrize("make", MODELS)
def test_tangent_to_simplex_and_vertices_fixed(rule, make):
    system = rp.ReplicatorSystem(make(4), rule)
    rng = np.random.default_rng(0)
    for x in rng.dirichlet(np.ones(3), 10):
        assert abs(system.rhs(x).sum()) < 1e-12
    for v in np.eye(3):
        np.testing.assert_allclose(system.rhs(v), 0.0, atol=1e-14)


def test_pgg_is_rescaled_well_mixed():
    k, delta = 4, 0.3
    model = pgg(GameParams(2.5), k)
    factor = delta * (k - 2) * (k + 1) / (2 * (k - 1))
    for x1 in np.linspace(0.05, 0.95, 7):
        x = np.array([x1, 1 - x1])
        np.testing.assert_allclose(rp.pc_general_rhs(model, x, delta), factor * rp.wellmixed_rhs(model, x), atol=1e-14)


def test_neutrality_at_r_equal_k_plus_one():
    model = pgg(GameParams(5.0), 4)
    for x1 in (0.1, 0.5, 0.8):
        np.testing.assert_allclose(rp.pc_general_rhs(model, np.array([x1, 1 - x1])), 0.0, atol=1e-15)


def test_delta_only_rescales_time():
    model = pool_punishment(P, 4)
    x = np.array([0.2, 0.5, 0.3])
    for rule in ("pc", "db"):
        a = rp.ReplicatorSystem(model, rule, 0.5).rhs(x)
        b = rp.ReplicatorSystem(model, rule, 2.0).rhs(x)
        np.testing.assert_allclose(4 * a, b, rtol=1e-14)


def test_system_paths_and_validation():
    assert rp.ReplicatorSystem(peer_punishment(P, 4)).active_path == "linear"
    assert rp.ReplicatorSystem(pool_punishment(P, 4)).active_path == "general"
    assert rp.ReplicatorSystem(tabulate(2, 3, linear_fn([[1, 0], [2, 1]], [0, 1]))).active_path == "linear"
    with pytest.raises(ValueError, match="not affine"):
        rp.ReplicatorSystem(pool_punishment(P, 4), path="linear")
    with pytest.raises(ValueError):
        rp.ReplicatorSystem(peer_punishment(P, 4), delta=0.0)
    with pytest.raises(ValueError):
        rp.ReplicatorSystem(peer_punishment(P, 2), "pc")
    with pytest.raises(ValueError):
        rp.ReplicatorSystem(peer_punishment(P, 4), "bd")
    # the well-mixed baseline has no pair closure and accepts any k
    rp.ReplicatorSystem(peer_punishment(P, 2), "wm")


def test_peer_closed_form_structured_flow():
    """Structured peer-punishment PC flow written out for the three strategies."""
    k, (r, c, a, b) = 4, (P.r, P.cost, P.alpha, P.beta)
    g = r * c / (k + 1) - c
    s = a + b
    model = peer_punishment(P, k)
    rng = np.random.default_rng(9)
    for x in rng.dirichlet(np.ones(3), 10):
        x1, x2, x3 = x
        pre = (k - 2) / (2 * (k - 1))
        d1 = pre * x1 * ((k + 1) * (x2 * g + k * x2 * x3 * s) - 6 * x2 * x3 * s)
        d2 = pre * x2 * ((k + 1) * (-(x1 + x3) * g + k * (x2 * x3 * s - x3 * b)) - 6 * x2 * x3 * s + 3 * x3 * s)
        d3 = pre * x3 * ((k + 1) * (x2 * g + k * (x2 * x3 * s - x2 * a)) - 6 * x2 * x3 * s + 3 * x2 * s)
        np.testing.assert_allclose(rp.pc_general_rhs(model, x), [d1, d2, d3], atol=1e-12)
