"""Closed-form punishment thresholds, edge equilibria and phase labels.

All formulas are for the pairwise-comparison rule and the built-in games
(strategy order C, D, punisher).  R denotes the per-contribution return
r*c/(k+1); every threshold is expressed through c - R > 0, the net cost of
contributing, which is positive exactly in the dilemma regime r < k+1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .payoffs import GameParams, build_game
from .replicator import ReplicatorSystem

POPULATIONS = ("structured", "wellmixed")
KINDS = ("peer", "pool")

PEER_PHASES = ("D", "D⇔(C+E)_V", "(C+E)_V")
POOL_PHASES = ("D", "D_{O⇔D}", "(D+C+O)_C")
UNCLASSIFIED = "unclassified"
WM_PHASES = {"peer": ("D", "D⇔(C+E)_V"), "pool": ("D", "D_{O⇔D}")}


class NoDilemmaError(ValueError):
    """r >= k+1: contributing pays off on its own and the thresholds lose meaning."""


def _check(r: float, c: float, alpha: float, k: int) -> None:
    GameParams(r, c, alpha)  # positivity checks
    if k < 3:
        raise ValueError(f"thresholds need k >= 3, got k={k}")
    if r >= k + 1:
        raise NoDilemmaError(f"r={r} >= k+1={k + 1}: no social dilemma, thresholds undefined")


@dataclass(frozen=True)
class Thresholds:
    """Fines: punishment starts to bite (beta0), structure overtakes mixing (beta_eq), D basin vanishes (beta_star).

    ``beta_star`` is infinite in well-mixed populations: full defection stays
    stable for every fine.
    """

    kind: str
    beta0_wm: float
    beta0: float
    beta_eq: float
    beta_star: float
    beta_star_wm: float = float("inf")

    def for_population(self, population: str) -> tuple[float, float]:
        """(lower, upper) phase boundaries."""
        if population == "structured":
            return self.beta0, self.beta_star
        return self.beta0_wm, self.beta_star_wm

    def as_dict(self) -> dict:
        return asdict(self)


def peer_thresholds(r: float, c: float, alpha: float, k: int) -> Thresholds:
    _check(r, c, alpha, k)
    net = c - r * c / (k + 1)
    return Thresholds(
        kind="peer",
        beta0_wm=net / k,
        beta0=((k + 1) * net + 3 * alpha) / (k * k + k - 3),
        beta_eq=2 * net / k + alpha,
        beta_star=(k + 1) / 3 * (net + k * alpha) - alpha,
    )


def _pool_kernel(k: int) -> float:
    return (k + 1) ** (1 / k) * (k - 1) ** (1 - 1 / k) - k + 2


def pool_thresholds(r: float, c: float, alpha: float, k: int) -> Thresholds:
    _check(r, c, alpha, k)
    z = r * c / (k + 1) - c - alpha  # < 0 in the dilemma regime
    m = (k + 1) * (k - 1) ** (k - 1)
    kk = _pool_kernel(k) ** k
    return Thresholds(
        kind="pool",
        beta0_wm=-z,
        beta0=m / (1 - m) * z,
        beta_eq=kk / (1 - kk) * z,
        beta_star=-(k + 1) * z / 2,
    )


def thresholds(kind: str, r: float, c: float, alpha: float, k: int) -> Thresholds:
    if kind == "peer":
        return peer_thresholds(r, c, alpha, k)
    if kind == "pool":
        return pool_thresholds(r, c, alpha, k)
    raise ValueError(f"thresholds are defined for {KINDS}, got {kind!r}")


# -- edge equilibria ---------------------------------------------------------------


@dataclass(frozen=True)
class EdgeFractions:
    """Defector share on the D-punisher edge root, and (peer) the C share bounding the stable part of the C-E line."""

    x_D_edge: float
    exists: bool
    x_CE_star: Optional[float] = None  # x_C above which the CE line is unstable
    x_E_star: Optional[float] = None  # = 1 - x_CE_star


def _params(params) -> GameParams:
    return params if isinstance(params, GameParams) else GameParams(**params)


def edge_equilibrium_fractions(kind: str, params, k: int, population: str = "structured") -> EdgeFractions:
    """Closed-form edge roots; out-of-range values are returned as is with ``exists=False``."""
    p = _params(params)
    if population not in POPULATIONS:
        raise ValueError(f"population must be one of {POPULATIONS}, got {population!r}")
    _check(p.r, p.cost, p.alpha, k)
    a, b, c = p.alpha, p.beta, p.cost
    share = p.share(k)
    if kind == "peer":
        gain = share - c  # R - c < 0
        if population == "structured":
            xd = ((k + 1) * (gain + k * b) - 3 * (a + b)) / ((k - 2) * (k + 3) * (a + b))
            denom = k * b - 3 * (a + b) / (k + 1)
        else:
            xd = (gain + k * b) / (k * (a + b))
            denom = k * b
        with np.errstate(divide="ignore"):
            x1 = 1.0 + (p.r / (k + 1) - 1.0) * c / denom if denom != 0 else float("-inf")
        return EdgeFractions(float(xd), bool(0.0 < xd < 1.0), float(x1), float(1.0 - x1))
    if kind == "pool":
        z = share - c - a
        if b == 0:
            return EdgeFractions(float("nan"), False)
        base = 1.0 + z / b
        if population == "wellmixed":
            xd = base ** (1 / k) if base >= 0 else float("nan")
        else:
            inner = (k + 1) / (k - 1) * base
            xd = (k - 1) / (k - 2) * (-1 / (k - 1) + inner ** (1 / k)) if inner >= 0 else float("nan")
        return EdgeFractions(float(xd), bool(0.0 < xd < 1.0))
    raise ValueError(f"edge fractions are defined for {KINDS}, got {kind!r}")


# -- phases -----------------------------------------------------------------------


def phase_classify(kind: str, r: float, c: float, alpha: float, beta: float, k: int, population: str = "structured") -> str:
    th = thresholds(kind, r, c, alpha, k)
    if population == "wellmixed":
        low, high = WM_PHASES[kind]
        return low if beta < th.beta0_wm else high
    if population != "structured":
        raise ValueError(f"population must be one of {POPULATIONS}, got {population!r}")
    labels = PEER_PHASES if kind == "peer" else POOL_PHASES
    if beta < th.beta0:
        return labels[0]
    if beta < th.beta_star:
        return labels[1]
    return labels[2]


# Starting points for the ODE cross-check: near each vertex, edge midpoints, centroid, one skewed point.
CANONICAL_STARTS = np.array(
    [
        [0.98, 0.01, 0.01],
        [0.01, 0.98, 0.01],
        [0.01, 0.01, 0.98],
        [0.49, 0.02, 0.49],
        [0.49, 0.49, 0.02],
        [0.02, 0.49, 0.49],
        [1 / 3, 1 / 3, 1 / 3],
        [0.2, 0.3, 0.5],
    ]
)


# Pool phases differ on the invariant C-free edge, so probe it separately.
EDGE_STARTS = np.array([[0.0, 1 - 1e-4, 1e-4], [0.0, 1e-4, 1 - 1e-4]])


def ode_phase(kind: str, r: float, c: float, alpha: float, beta: float, k: int, population: str = "structured", t_max: float = 400.0) -> str:
    """Phase label inferred from where the canonical starts end up."""
    from .analysis import integrate, section_crossings  # local: analysis imports are heavier

    model = build_game(kind, GameParams(r, c, alpha, beta), k)
    system = ReplicatorSystem(model, "pc" if population == "structured" else "wm")
    xd_final, crossings = [], 0  # crossings: most x_C = x_D section passes of any start
    for x0 in CANONICAL_STARTS:
        tr = integrate(system, x0, t_max=t_max)
        xd_final.append(tr.final[1])
        crossings = max(crossings, section_crossings(tr, 0, 1))
    d_wins = np.array(xd_final) > 0.99
    if kind == "peer":
        labels = PEER_PHASES if population == "structured" else WM_PHASES["peer"] + (None,)
        if d_wins.all():
            return labels[0]
        return labels[1] if d_wins.any() else labels[2]
    labels = POOL_PHASES
    if population == "structured" and crossings >= 3:
        return labels[2]
    edge_xd = np.array([integrate(system, x0, t_max=t_max).final[1] for x0 in EDGE_STARTS])
    edge_split = bool((edge_xd > 0.99).any() and (edge_xd < 0.01).any())
    if d_wins.all():
        return labels[1] if edge_split else labels[0]
    # without a cycle, surviving cooperators mean the C-O edge is neutral (alpha = 0)
    return labels[2] if population == "structured" else UNCLASSIFIED


@dataclass
class PhaseGrid:
    alphas: np.ndarray
    betas: np.ndarray
    labels: np.ndarray  # object array [len(betas), len(alphas)]
    disagreements: list  # (alpha, beta, closed_form, ode) for cross-checked cells

    def rows(self):
        for jb, b in enumerate(self.betas):
            for ia, a in enumerate(self.alphas):
                yield float(a), float(b), str(self.labels[jb, ia])


def _distance_to_boundary(th: Thresholds, beta: float, population: str) -> float:
    lo, hi = th.for_population(population)
    return min(abs(beta - lo), abs(beta - hi))


def phase_diagram(
    kind: str,
    alphas: Sequence[float],
    betas: Sequence[float],
    r: float,
    c: float,
    k: int,
    population: str = "structured",
    cross_validate: bool = False,
    margin: float = 0.1,
    jobs: int = 1,
) -> PhaseGrid:
    """Label every (alpha, beta) cell; optionally re-derive labels away from boundaries by integration.

    Cross-checking only cells more than ``margin`` from any boundary keeps the
    comparison meaningful: right at a threshold the flow is marginal.
    """
    alphas = np.asarray(alphas, dtype=float)
    betas = np.asarray(betas, dtype=float)
    labels = np.empty((betas.size, alphas.size), dtype=object)
    checks = []
    for ia, a in enumerate(alphas):
        th = thresholds(kind, r, c, a, k)
        for jb, b in enumerate(betas):
            labels[jb, ia] = phase_classify(kind, r, c, a, b, k, population)
            if cross_validate and _distance_to_boundary(th, b, population) > margin:
                checks.append((jb, ia, a, b))
    disagreements = []
    if checks:
        args = [(kind, r, c, a, b, k, population) for _, _, a, b in checks]
        if jobs > 1:
            from concurrent.futures import ProcessPoolExecutor

            with ProcessPoolExecutor(max_workers=jobs) as pool:
                ode = list(pool.map(_ode_star, args))
        else:
            ode = [ode_phase(*arg) for arg in args]
        for (jb, ia, a, b), lab in zip(checks, ode):
            if lab != labels[jb, ia]:
                disagreements.append((float(a), float(b), labels[jb, ia], lab))
    return PhaseGrid(alphas, betas, labels, disagreements)


def _ode_star(arg):
    return ode_phase(*arg)


def parse_range(spec: str) -> np.ndarray:
    """'lo:hi:step' (inclusive of hi up to rounding) or a comma list."""
    if ":" in spec:
        lo, hi, step = (float(v) for v in spec.split(":"))
        if step <= 0 or hi < lo:
            raise ValueError(f"bad range {spec!r}: need lo <= hi and step > 0")
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        return lo + step * np.arange(count)
    return np.array([float(v) for v in spec.split(",")])
