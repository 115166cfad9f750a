"""Weak-selection replicator dynamics on degree-k regular graphs.

Three update rules are supported:

``pc``  pairwise comparison (Fermi imitation of a random neighbour)
``db``  death-birth (neighbours compete for a vacancy)
``wm``  the well-mixed baseline x_i (pibar_i - pibar), in unscaled time

Structured rules carry the selection strength ``delta`` as an overall factor;
under weak selection it only rescales time, so equilibria and their stability
do not depend on it.

For pairwise comparison the production path is the single-game form with the
closure already substituted, prefactor delta (k-2) / (2 (k-1)).  The
accumulated-payoff form, prefactor delta / 2 with q_{j|i} left explicit, is
kept as :func:`pc_accumulated_rhs`; the two are algebraically identical and
the test-suite holds them to each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import config_space as cs
from . import pair_approx as pa
from .payoffs import LinearPayoff, PayoffModel, try_linear_fit

Rule = Literal["pc", "db", "wm"]
Path = Literal["general", "linear", "auto"]
RULES = ("pc", "db", "wm")
PATHS = ("general", "linear", "auto")


def pc_prefactor(k: int, delta: float = 1.0) -> float:
    return delta * (k - 2) / (2 * (k - 1))


def db_prefactor(k: int, delta: float = 1.0) -> float:
    return delta * (k - 2) / (k * (k - 1))


# -- pairwise comparison -----------------------------------------------------


def pc_general_rhs(model: PayoffModel, x, delta: float = 1.0) -> np.ndarray:
    """Single-game assembly with q already expressed through x."""
    x = np.asarray(x, dtype=float)
    k = model.k
    t = pa.mean_single_game(model, x)
    s, nb = t.a_self, t.a_neigh
    # bracket[i, j] for the sum over j weighted by x_j
    bracket = (
        s
        + (k - 1) * nb
        + np.diag(s)[:, None]
        - nb.T
        - s.T
        - (k - 2) * (nb @ x)[None, :]
        - np.diag(nb)[None, :]
    )
    return pc_prefactor(k, delta) * x * (bracket @ x)


def pc_single_game_q_rhs(model: PayoffModel, x, delta: float = 1.0) -> np.ndarray:
    """Single-game assembly keeping q_{j|i} explicit (prefactor delta/2)."""
    x = np.asarray(x, dtype=float)
    k = model.k
    q = pa.edge_closure(x, k)
    t = pa.mean_single_game(model, x, q=q)
    s, nb = t.a_self, t.a_neigh
    tail = np.einsum("lj,jl->j", q, nb)  # sum_l q_{l|j} <a_{j|k+l}>_l
    bracket = s + k * nb - nb.T - s.T - (k - 1) * tail[None, :]
    return 0.5 * delta * x * np.einsum("ji,ij->i", q, bracket)


def pc_accumulated_rhs(model: PayoffModel, x, delta: float = 1.0) -> np.ndarray:
    """delta/2 * x_i (<pi_i^k> - sum_j q_{j|i} <pi_j^{k+i}>)."""
    x = np.asarray(x, dtype=float)
    k = model.k
    q = pa.edge_closure(x, k)
    t = pa.mean_single_game(model, x, q=q)
    own = pa.accumulated_self(t, q, k)
    nbr = pa.accumulated_neighbor(t, q, k)  # nbr[j, i]
    first_order = np.einsum("ji,ji->i", q, nbr)
    return 0.5 * delta * x * (own - first_order)


def _linear_means(b: np.ndarray, c: np.ndarray, x: np.ndarray, k: int):
    pibar_i = k * b @ x + c
    return pibar_i, x @ pibar_i


def pc_linear_rhs(model: LinearPayoff, x, delta: float = 1.0) -> np.ndarray:
    if not isinstance(model, LinearPayoff):
        raise TypeError("the linear fast path needs a LinearPayoff model")
    x = np.asarray(x, dtype=float)
    k, b = model.k, model.b
    pibar_i, pibar = _linear_means(b, model.c, x, k)
    diag = np.diag(b)
    structure = 3 * (diag - b @ x - b.T @ x - diag @ x) + 6 * (x @ b @ x)
    return pc_prefactor(k, delta) * x * ((k + 1) * (pibar_i - pibar) + structure)


def pc_two_strategy_rhs(model: PayoffModel, x, delta: float = 1.0) -> np.ndarray:
    """Explicit n = 2 single-game reduction; returns (dx1, dx2)."""
    if model.n != 2:
        raise ValueError("two-strategy reduction needs n = 2")
    x = np.asarray(x, dtype=float)
    k, x1 = model.k, x[0]
    t = pa.mean_single_game(model, x)
    s, nb = t.a_self, t.a_neigh
    body = (
        s[0, 1]
        - s[1, 0]
        + ((k - 2) * x1 + 1) * (s[0, 0] - nb[1, 0])
        + ((k - 2) * (1 - x1) + 1) * (nb[0, 1] - s[1, 1])
    )
    d1 = pc_prefactor(k, delta) * x1 * (1 - x1) * body
    return np.array([d1, -d1])


def pc_linear_two_strategy_rhs(model: LinearPayoff, x, delta: float = 1.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    k, b, c = model.k, model.b, model.c
    x1 = x[0]
    wm = x1 * (1 - x1) * (k * (b[0, 0] - b[1, 0]) * x1 + k * (b[0, 1] - b[1, 1]) * (1 - x1) + c[0] - c[1])
    cross = b[0, 0] - b[0, 1] - b[1, 0] + b[1, 1]
    d1 = pc_prefactor(k, delta) * (k + 1) * (wm + 3 / (k + 1) * x1 * (1 - x1) * (1 - 2 * x1) * cross)
    return np.array([d1, -d1])


# -- death-birth ---------------------------------------------------------------


def db_general_rhs(model: PayoffModel, x, delta: float = 1.0) -> np.ndarray:
    """delta (k-1)/k * x_i (<pi_i^k> - second-order neighbour payoff)."""
    x = np.asarray(x, dtype=float)
    k = model.k
    q = pa.edge_closure(x, k)
    t = pa.mean_single_game(model, x, triple=True, q=q)
    own = pa.accumulated_self(t, q, k)
    second = pa.accumulated_second_order(t, q, k)  # second[a, i, j]
    two_step = np.einsum("aj,ji,aij->i", q, q, second)
    return delta * (k - 1) / k * x * (own - two_step)


def db_pair_form_rhs(model: PayoffModel, x, delta: float = 1.0) -> np.ndarray:
    """Same dynamics written with x_j weights over pair-conditioned payoffs."""
    x = np.asarray(x, dtype=float)
    k = model.k
    q = pa.edge_closure(x, k)
    t = pa.mean_single_game(model, x, triple=True, q=q)
    T = pa.accumulated_second_order(t, q, k)  # T[a, other, focal]
    n = model.n
    ii = np.arange(n)
    # P1[i, j] = T[i, j, j] - T[j, i, j];  P2[i, j] = T[i, j, i] - T[j, i, i]
    P1 = T[ii[:, None], ii[None, :], ii[None, :]] - T[ii[None, :], ii[:, None], ii[None, :]]
    P2 = T[ii[:, None], ii[None, :], ii[:, None]] - T[ii[None, :], ii[:, None], ii[:, None]]
    # P3[i, j] = sum_a x_a (T[i, a, j] - T[a, i, j])
    P3 = np.einsum("a,iaj->ij", x, T) - np.einsum("a,aij->ij", x, T)
    return db_prefactor(k, delta) * x * ((P1 + P2 + (k - 2) * P3) @ x)


def db_two_strategy_rhs(model: PayoffModel, x, delta: float = 1.0) -> np.ndarray:
    """Explicit n = 2 reduction in terms of <pi_{a|b}^{k+1,+2}>."""
    if model.n != 2:
        raise ValueError("two-strategy reduction needs n = 2")
    x = np.asarray(x, dtype=float)
    k, x1 = model.k, x[0]
    q = pa.edge_closure(x, k)
    T = pa.accumulated_second_order(pa.mean_single_game(model, x, triple=True, q=q), q, k)
    p12, p22 = T[0, 1, 1], T[1, 0, 1]  # 1|2 and 2|2, focal is a 2-player
    p11, p21 = T[0, 1, 0], T[1, 0, 0]  # 1|1 and 2|1, focal is a 1-player
    body = k * (p12 - p22) + ((k - 2) * x1 + 1) * ((p11 - p21) - (p12 - p22))
    d1 = db_prefactor(k, delta) * x1 * (1 - x1) * body
    return np.array([d1, -d1])


def db_linear_rhs(model: LinearPayoff, x, delta: float = 1.0) -> np.ndarray:
    if not isinstance(model, LinearPayoff):
        raise TypeError("the linear fast path needs a LinearPayoff model")
    x = np.asarray(x, dtype=float)
    k, b, c = model.k, model.b, model.c
    pibar_i, pibar = _linear_means(b, c, x, k)
    own = k * np.diag(b) + c
    body = (
        (k * k - 2) ** 2 / k * (pibar_i - pibar)
        + (3 * k * k - 4) / k * (own - x @ own)
        - (k * k + 2 * k - 4) * (b.T @ x - x @ b @ x)
    )
    return delta * (k - 2) / (k * (k - 1) ** 2) * x * body


def db_linear_two_strategy_rhs(model: LinearPayoff, x, delta: float = 1.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    k, b, c = model.k, model.b, model.c
    x1 = x[0]
    x2 = 1 - x1
    wm = x1 * x2 * (k * (b[0, 0] - b[1, 0]) * x1 + k * (b[0, 1] - b[1, 1]) * x2 + c[0] - c[1])
    d1 = (
        delta
        * (k - 2)
        / (k * (k - 1) ** 2)
        * (
            (k * k - 2) ** 2 / k * wm
            + (3 * k * k - 4) / k * x1 * x2 * (k * (b[0, 0] - b[1, 1]) + c[0] - c[1])
            - (k * k + 2 * k - 4) * x1 * x2 * ((b[0, 0] - b[0, 1]) * x1 + (b[1, 0] - b[1, 1]) * x2)
        )
    )
    return np.array([d1, -d1])


# -- well-mixed baseline ---------------------------------------------------------


def wellmixed_payoffs(model: PayoffModel, x) -> np.ndarray:
    """pibar_i: expected single-game payoff with all k co-players drawn from x."""
    w = cs.weight_vectors(model.n, model.k, np.asarray(x, dtype=float))
    return model.table @ w


def wellmixed_rhs(model: PayoffModel, x, delta: float = 1.0) -> np.ndarray:
    """x_i (pibar_i - pibar).  ``delta`` is accepted for interface symmetry and ignored."""
    x = np.asarray(x, dtype=float)
    pibar_i = wellmixed_payoffs(model, x)
    return x * (pibar_i - x @ pibar_i)


def pc_neutrality_condition(model: LinearPayoff, x) -> np.ndarray:
    """Per-strategy residual that must vanish for structured PC to mirror the well-mixed flow."""
    x = np.asarray(x, dtype=float)
    b = model.b
    return np.diag(b) - (b @ x + b.T @ x + np.diag(b) @ x) + 2 * (x @ b @ x)


# -- system wrapper ------------------------------------------------------------------

_GENERAL = {"pc": pc_general_rhs, "db": db_general_rhs, "wm": wellmixed_rhs}
_LINEAR = {"pc": pc_linear_rhs, "db": db_linear_rhs, "wm": wellmixed_rhs}


@dataclass
class ReplicatorSystem:
    model: PayoffModel
    rule: Rule = "pc"
    delta: float = 1.0
    path: Path = "auto"
    _linear: LinearPayoff | None = field(default=None, init=False, repr=False)

    def __post_init__(self) -> None:
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}; choose from {RULES}")
        if self.path not in PATHS:
            raise ValueError(f"unknown path {self.path!r}; choose from {PATHS}")
        if not self.delta > 0:
            raise ValueError(f"selection strength delta must be > 0, got {self.delta}")
        if self.rule != "wm":
            pa.check_degree(self.model.k)
        if self.path == "linear":
            self._linear = try_linear_fit(self.model)
            if self._linear is None:
                raise ValueError("linear path requested but the payoff table is not affine in the counts")
        elif self.path == "auto":
            self._linear = try_linear_fit(self.model)

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def k(self) -> int:
        return self.model.k

    @property
    def active_path(self) -> str:
        return "linear" if self._linear is not None else "general"

    def rhs(self, x) -> np.ndarray:
        if self._linear is not None:
            return _LINEAR[self.rule](self._linear, x, self.delta)
        return _GENERAL[self.rule](self.model, x, self.delta)

    __call__ = rhs
