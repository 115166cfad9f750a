"""Payoff structures a_{i|k} for (k+1)-player games.

Strategies are 0-based internally.  For the built-in public goods games the
order is fixed: 0 = cooperate (C), 1 = defect (D), 2 = punisher (E for peer
punishment, O for pool punishment).

Every model is stored as its generalized payoff matrix: row ``i`` is the focal
strategy, columns follow :func:`pairdyn.config_space.enumerate_configurations`
for ``m = k`` co-players.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import config_space as cs

LINEAR_FIT_TOL = 1e-9


@dataclass(frozen=True)
class GameParams:
    r: float
    cost: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self) -> None:
        if not self.r > 0:
            raise ValueError(f"synergy factor r must be > 0, got {self.r}")
        if not self.cost > 0:
            raise ValueError(f"cost must be > 0, got {self.cost}")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("punishment cost alpha and fine beta must be >= 0")

    def share(self, k: int) -> float:
        """Per-contribution return r*c/(k+1) to each group member."""
        return self.r * self.cost / (k + 1)


class PayoffModel:
    """Tabulated payoff a_{i|k} over every (focal strategy, configuration) pair."""

    def __init__(
        self,
        n: int,
        k: int,
        table: np.ndarray,
        strategies: Optional[Sequence[str]] = None,
        name: str = "custom",
    ) -> None:
        if n < 1 or k < 1:
            raise ValueError(f"need n >= 1 and k >= 1, got n={n}, k={k}")
        table = np.array(table, dtype=float)
        expected = (n, cs.count_configurations(n, k))
        if table.shape != expected:
            raise ValueError(f"payoff table has shape {table.shape}, expected {expected}")
        if not np.all(np.isfinite(table)):
            raise ValueError("payoff table contains non-finite entries")
        table.setflags(write=False)
        self.n = n
        self.k = k
        self.table = table
        self.strategies = tuple(strategies) if strategies else tuple(f"s{i + 1}" for i in range(n))
        if len(self.strategies) != n:
            raise ValueError(f"{len(self.strategies)} strategy names for n={n}")
        self.name = name

    def evaluate(self, i: int, config: Sequence[int]) -> float:
        c = tuple(int(v) for v in config)
        if len(c) != self.n or sum(c) != self.k:
            raise ValueError(f"configuration {c} is not a composition of {self.k} into {self.n}")
        return float(self.table[i, cs.config_index(self.n, self.k)[c]])

    @property
    def is_linear(self) -> bool:
        return False

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name!r}, n={self.n}, k={self.k})"


class LinearPayoff(PayoffModel):
    """a_{i|k} = sum_j b[i, j] k_j + c[i]."""

    def __init__(
        self,
        b: np.ndarray,
        c: np.ndarray,
        k: int,
        strategies: Optional[Sequence[str]] = None,
        name: str = "linear",
    ) -> None:
        b = np.array(b, dtype=float)
        c = np.array(c, dtype=float)
        n = c.shape[0]
        if b.shape != (n, n):
            raise ValueError(f"b has shape {b.shape}, expected {(n, n)}")
        configs = cs.config_array(n, k)
        super().__init__(n, k, b @ configs.T + c[:, None], strategies, name)
        b.setflags(write=False)
        c.setflags(write=False)
        self.b = b
        self.c = c

    @property
    def is_linear(self) -> bool:
        return True


def tabulate(
    n: int,
    k: int,
    fn: Callable[[int, tuple[int, ...]], float],
    strategies: Optional[Sequence[str]] = None,
    name: str = "custom",
) -> PayoffModel:
    configs = cs.enumerate_configurations(n, k)
    table = [[fn(i, c) for c in configs] for i in range(n)]
    return PayoffModel(n, k, np.array(table), strategies, name)


def pgg(params: GameParams, k: int) -> LinearPayoff:
    """Public goods game: C contributes c, every member gets r*c/(k+1) per contributor."""
    share = params.share(k)
    b = [[share, 0.0], [share, 0.0]]
    c = [share - params.cost, 0.0]
    return LinearPayoff(b, c, k, ("C", "D"), "pgg")


def peer_punishment(params: GameParams, k: int) -> LinearPayoff:
    """PGG plus punishers (E) paying alpha per defecting co-player, fining each defector beta."""
    share, a, f = params.share(k), params.alpha, params.beta
    b = [
        [share, 0.0, share],
        [share, 0.0, share - f],
        [share, -a, share],
    ]
    c = [share - params.cost, 0.0, share - params.cost]
    return LinearPayoff(b, c, k, ("C", "D", "E"), "peer")


def pool_punishment(params: GameParams, k: int) -> PayoffModel:
    """PGG plus pool punishers (O) paying a flat alpha; defectors fined beta iff any O present."""
    share = params.share(k)

    def payoff(i: int, cfg: tuple[int, ...]) -> float:
        pot = share * (cfg[0] + cfg[2])
        if i == 0:
            return pot + share - params.cost
        if i == 1:
            return pot - (params.beta if cfg[2] > 0 else 0.0)
        return pot + share - params.cost - params.alpha

    return tabulate(3, k, payoff, ("C", "D", "O"), "pool")


GAMES = {
    "pgg": (pgg, "public goods game (C, D)"),
    "peer": (peer_punishment, "public goods game with peer punishment (C, D, E)"),
    "pool": (pool_punishment, "public goods game with pool punishment (C, D, O)"),
}


def build_game(name: str, params: GameParams, k: int) -> PayoffModel:
    try:
        factory = GAMES[name][0]
    except KeyError:
        raise ValueError(f"unknown game {name!r}; choose from {sorted(GAMES)}") from None
    return factory(params, k)


def as_generalized_matrix(model: PayoffModel) -> np.ndarray:
    return np.array(model.table)


def try_linear_fit(model: PayoffModel) -> Optional[LinearPayoff]:
    """Return an equivalent LinearPayoff if the table is affine in the counts, else None.

    (b, c) is not unique: since sum_j k_j = k, adding t_i to row i of b and
    subtracting k*t_i from c_i leaves every payoff unchanged.  The fit returns
    the minimum-norm representative; linear models are returned as-is.
    """
    if isinstance(model, LinearPayoff):
        return model
    configs = cs.config_array(model.n, model.k).astype(float)
    design = np.hstack([configs, np.ones((configs.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(design, model.table.T, rcond=None)
    residual = np.max(np.abs(design @ coef - model.table.T))
    if residual >= LINEAR_FIT_TOL:
        return None
    return LinearPayoff(coef[:-1].T, coef[-1], model.k, model.strategies, model.name)


def _load_document(path: Path) -> dict:
    text = path.read_text()
    if path.suffix == ".json":
        return json.loads(text)
    try:
        import tomllib  # type: ignore[import-not-found]
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    return tomllib.loads(text)


def payoff_from_document(doc: dict) -> PayoffModel:
    """Build a model from a parsed payoff file (see README for the format)."""
    try:
        n, k = int(doc["n"]), int(doc["k"])
    except KeyError as exc:
        raise ValueError(f"payoff file is missing field {exc.args[0]!r}") from None
    strategies = doc.get("strategies")
    name = doc.get("name", "custom")
    if "linear" in doc:
        lin = doc["linear"]
        return LinearPayoff(lin["b"], lin["c"], k, strategies, name)
    if "table" not in doc:
        raise ValueError("payoff file needs either a 'linear' or a 'table' section")
    index = cs.config_index(n, k)
    table = np.full((n, len(index)), np.nan)
    labels = {s: i for i, s in enumerate(strategies or [])}
    for row in doc["table"]:
        strat, counts, value = row
        i = labels[strat] if isinstance(strat, str) else int(strat)
        key = tuple(int(v) for v in counts)
        if key not in index:
            raise ValueError(f"configuration {key} is not a composition of {k} into {n} parts")
        if not np.isnan(table[i, index[key]]):
            raise ValueError(f"duplicate payoff row for strategy {strat}, configuration {key}")
        table[i, index[key]] = float(value)
    missing = np.argwhere(np.isnan(table))
    if missing.size:
        i, col = missing[0]
        cfg = cs.enumerate_configurations(n, k)[col]
        raise ValueError(f"payoff table incomplete: {len(missing)} entries missing, e.g. strategy {i}, {cfg}")
    return PayoffModel(n, k, table, strategies, name)


def load_payoff_file(path: str | Path) -> PayoffModel:
    return payoff_from_document(_load_document(Path(path)))


def model_document(model: PayoffModel) -> dict:
    """Inverse of payoff_from_document (table form, or linear form for LinearPayoff)."""
    doc: dict = {"name": model.name, "n": model.n, "k": model.k, "strategies": list(model.strategies)}
    if isinstance(model, LinearPayoff):
        doc["linear"] = {"b": model.b.tolist(), "c": model.c.tolist()}
    else:
        configs = cs.enumerate_configurations(model.n, model.k)
        doc["table"] = [
            [model.strategies[i], list(cfg), float(model.table[i, col])]
            for i in range(model.n)
            for col, cfg in enumerate(configs)
        ]
    return doc
