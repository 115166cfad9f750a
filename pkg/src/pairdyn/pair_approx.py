"""Pair-approximation closure and statistical mean payoffs.

Notation used throughout (0-based strategies):

* ``q[j, i]`` is the probability that a neighbour of an i-player plays j.
* ``a_self[i, j]``  = <a_{i|k+j}>_i  (the k-1 free co-players drawn with q[:, i])
* ``a_neigh[i, j]`` = <a_{i|k+j}>_j  (the k-1 free co-players drawn with q[:, j])
* ``a_triple[a, i, j]`` = <a_{a|k+i,+j}>_j  (k-2 free co-players drawn with q[:, j])

The accumulated payoff of a player is the sum of the 1+k games organised by
itself and by each of its neighbours.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import config_space as cs
from .payoffs import PayoffModel

SIMPLEX_TOL = 1e-12


class DegenerateDegreeError(ValueError):
    """Raised for k < 3, where the closure makes every neighbour a copy of the focal."""


def check_degree(k: int) -> None:
    if k < 3:
        raise DegenerateDegreeError(
            f"degree k={k} is degenerate for the pair approximation: (k-2) vanishes, "
            "so all off-diagonal edge frequencies are zero; use k >= 3"
        )


def as_simplex(x, n: Optional[int] = None, tol: float = 1e-9) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or (n is not None and x.size != n):
        raise ValueError(f"state must be a vector of length {n}, got shape {x.shape}")
    if np.any(x < -tol) or abs(x.sum() - 1.0) > tol:
        raise ValueError(f"state {x.tolist()} is not on the probability simplex")
    return x


@dataclass(frozen=True)
class PopulationState:
    x: np.ndarray
    k: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", as_simplex(self.x, tol=SIMPLEX_TOL * 1e3))
        check_degree(self.k)

    @property
    def q(self) -> np.ndarray:
        return edge_closure(self.x, self.k)


def edge_closure(x, k: int) -> np.ndarray:
    """q[j, i] = ((k-2) x_j + [i == j]) / (k-1), the fixed point of the edge dynamics."""
    check_degree(k)
    x = np.asarray(x, dtype=float)
    n = x.size
    return ((k - 2) * x[:, None] * np.ones((1, n)) + np.eye(n)) / (k - 1)


def edge_dynamics_rhs(q: np.ndarray, k: int) -> np.ndarray:
    """Order-delta^0 relaxation of the conditional edge frequencies.

    dq[l, i] = (1/k) * ([i == l] + (k-1) * sum_j q[l, j] q[j, i] - k q[l, i]).
    """
    q = np.asarray(q, dtype=float)
    return (np.eye(q.shape[0]) + (k - 1) * q @ q - k * q) / k


@dataclass(frozen=True)
class MeanPayoffTables:
    a_self: np.ndarray
    a_neigh: np.ndarray
    a_triple: Optional[np.ndarray] = None


def mean_single_game(
    model: PayoffModel, x, triple: bool = False, q: Optional[np.ndarray] = None
) -> MeanPayoffTables:
    """Single-game mean payoffs by explicit configuration enumeration.

    ``q`` defaults to the closure at ``x``; passing it explicitly lets the
    identities be exercised for arbitrary conditional frequencies.
    """
    n, k = model.n, model.k
    if q is None:
        q = edge_closure(x, k)
    else:
        check_degree(k)
    table = model.table

    w1 = cs.weight_vectors(n, k - 1, q.T)  # w1[i] uses the neighbourhood of an i-player
    g1 = table[:, cs.plus_index(n, k - 1)]  # g1[a, j, c] = a_{a | c + j}
    a_self = np.einsum("ic,ijc->ij", w1, g1)
    a_neigh = np.einsum("jc,ijc->ij", w1, g1)

    a_triple = None
    if triple:
        w2 = cs.weight_vectors(n, k - 2, q.T)
        g2 = table[:, cs.plus_two_index(n, k - 2)]  # g2[a, i, j, c] = a_{a | c + i + j}
        a_triple = np.einsum("jc,aijc->aij", w2, g2)
    return MeanPayoffTables(a_self, a_neigh, a_triple)


def _neighbour_games(tables: MeanPayoffTables, q: np.ndarray) -> np.ndarray:
    """s[i] = sum_l q[l, i] <a_{i|k+l}>_l: expected take from one game run by a neighbour."""
    return np.einsum("li,il->i", q, tables.a_neigh)


def accumulated_self(tables: MeanPayoffTables, q: np.ndarray, k: int) -> np.ndarray:
    """<pi_i^k>: own game plus k games organised by neighbours."""
    own = np.einsum("ji,ij->i", q, tables.a_self)
    return own + k * _neighbour_games(tables, q)


def accumulated_neighbor(tables: MeanPayoffTables, q: np.ndarray, k: int) -> np.ndarray:
    """out[j, i] = <pi_j^{k+i}>: a j-player known to have at least one i-neighbour."""
    s = _neighbour_games(tables, q)
    return tables.a_self + tables.a_neigh + (k - 1) * s[:, None]


def accumulated_second_order(tables: MeanPayoffTables, q: np.ndarray, k: int) -> np.ndarray:
    """out[a, i, j] = <pi_{a|j}^{k+i,+a}>: an a-player next to a j-player that also neighbours an i-player."""
    if tables.a_triple is None:
        raise ValueError("second-order payoffs need the triple table (mean_single_game(..., triple=True))")
    s = _neighbour_games(tables, q)
    return tables.a_triple + tables.a_self[:, None, :] + (k - 1) * s[:, None, None]


def mean_accumulated_self(model: PayoffModel, x, q: Optional[np.ndarray] = None) -> np.ndarray:
    q = edge_closure(x, model.k) if q is None else q
    return accumulated_self(mean_single_game(model, x, q=q), q, model.k)


def mean_accumulated_neighbor(model: PayoffModel, x, q: Optional[np.ndarray] = None) -> np.ndarray:
    q = edge_closure(x, model.k) if q is None else q
    return accumulated_neighbor(mean_single_game(model, x, q=q), q, model.k)


def mean_accumulated_second_order(model: PayoffModel, x, q: Optional[np.ndarray] = None) -> np.ndarray:
    q = edge_closure(x, model.k) if q is None else q
    return accumulated_second_order(mean_single_game(model, x, triple=True, q=q), q, model.k)


def linear_single_game(b: np.ndarray, c: np.ndarray, x, k: int) -> MeanPayoffTables:
    """Closed forms of the single-game means for a linear payoff under the closure."""
    b, c, x = np.asarray(b, float), np.asarray(c, float), np.asarray(x, float)
    base = b @ x  # sum_l b_il x_l
    diag = np.diag(b)
    a_self = ((k - 2) * base + diag + c)[:, None] + b
    a_neigh = ((k - 2) * base + c)[:, None] + 2 * b
    # a_triple[a, i, j] = (k-2)^2/(k-1) sum_l b_al x_l + (2k-3)/(k-1) b_aj + b_ai + c_a
    a_triple = (
        ((k - 2) ** 2 / (k - 1) * base + c)[:, None, None]
        + (2 * k - 3) / (k - 1) * b[:, None, :]
        + b[:, :, None]
    )
    return MeanPayoffTables(a_self, a_neigh, a_triple)
