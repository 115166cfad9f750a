"""Trajectories, equilibria and linear stability on the simplex."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import RK45

from .replicator import ReplicatorSystem

LINE_TOL = 1e-10  # |rhs| bound for "the whole face is made of equilibria"
ROOT_TOL = 1e-8  # |rhs| bound for an accepted equilibrium
MERGE_TOL = 1e-6
STABILITY_MARGIN = 1e-7
FD_STEP = 1e-6
GRID = 32
MAX_SPEED = 1e150  # |dx/dt| beyond this cannot be stepped meaningfully


class NumericalError(RuntimeError):
    def __init__(self, message: str, last_state: Optional[np.ndarray] = None, last_time: float = float("nan")):
        super().__init__(message)
        self.last_state = last_state
        self.last_time = last_time


RhsFn = Callable[[np.ndarray], np.ndarray]


def _rhs_of(system) -> RhsFn:
    return system.rhs if isinstance(system, ReplicatorSystem) else system


def project_simplex(x: np.ndarray) -> np.ndarray:
    """Clip negative round-off to zero and rescale to unit sum."""
    y = np.where(x < 0.0, 0.0, x)
    return y / y.sum()


# -- integration -------------------------------------------------------------


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    terminal_reason: str  # converged | max_time | boundary_absorbed

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]


def integrate(
    system,
    x0,
    t_max: float = 1000.0,
    tol: float = 1e-6,
    settle_steps: int = 10,
    max_steps: int = 1_000_000,
) -> Trajectory:
    """Adaptive Dormand-Prince (scipy RK45) with a projection back onto the simplex after each step.

    Stops early once ||dx/dt||_inf < tol * 1e-2 for ``settle_steps`` consecutive
    steps, or when the state becomes a vertex.  The absolute tolerance sits well
    below that threshold: near a stable face the step size is stability-limited
    and the solution jitters at roughly |eigenvalue| * atol.
    """
    fun = _rhs_of(system)
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 < -1e-12) or abs(x0.sum() - 1) > 1e-9:
        raise ValueError(f"initial state {x0.tolist()} is not on the simplex")
    y = project_simplex(x0)
    times, states = [0.0], [y.copy()]
    if y.max() == 1.0:
        return Trajectory(np.array(times), np.array(states), "boundary_absorbed")

    f0 = np.asarray(fun(y), dtype=float)
    if not np.all(np.isfinite(f0)) or np.max(np.abs(f0)) > MAX_SPEED:
        # step-size selection degenerates to subnormal steps long before max_steps
        raise NumericalError(f"velocity {np.max(np.abs(f0)):.3g} at the initial state is too large to integrate", y, 0.0)
    solver = RK45(lambda t, s: fun(s), 0.0, y, t_max, rtol=tol, atol=tol * 1e-5)
    quiet = 0
    reason = "max_time"
    for _ in range(max_steps):
        if solver.status != "running":
            break
        message = solver.step()
        if solver.status == "failed":
            raise NumericalError(f"integrator failed at t={solver.t:.6g}: {message}", states[-1], times[-1])
        if not np.all(np.isfinite(solver.y)):
            raise NumericalError(f"non-finite state at t={solver.t:.6g}", states[-1], times[-1])
        state = project_simplex(solver.y)
        if not np.array_equal(state, solver.y):
            solver.y = state
            solver.f = fun(state)  # keep the first-same-as-last stage consistent
        times.append(solver.t)
        states.append(state.copy())
        if state.max() >= 1.0 - 1e-15:
            reason = "boundary_absorbed"
            break
        if np.max(np.abs(solver.f)) < tol * 1e-2:
            quiet += 1
            if quiet >= settle_steps:
                reason = "converged"
                break
        else:
            quiet = 0
    else:
        raise NumericalError(f"no convergence within {max_steps} steps", states[-1], times[-1])
    return Trajectory(np.array(times), np.array(states), reason)


def section_crossings(traj: Trajectory, a: int = 0, b: int = 1) -> int:
    """Number of sign changes of x_a - x_b along the trajectory (Poincare section count)."""
    d = traj.states[:, a] - traj.states[:, b]
    s = np.sign(d)
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


# -- equilibria -------------------------------------------------------------------


@dataclass
class Equilibrium:
    point: np.ndarray
    kind: str  # vertex | edge | interior | line_segment
    face: tuple[int, ...]
    stability: str = "unknown"  # stable | unstable | saddle | degenerate | degenerate_line
    eigenvalues: np.ndarray = field(default_factory=lambda: np.array([]))
    # for line segments: sample points along the face and their transverse growth rates
    samples: Optional[np.ndarray] = None
    transverse: Optional[np.ndarray] = None

    def as_row(self) -> dict:
        eig = ";".join(f"{v.real:.12g}{v.imag:+.12g}j" for v in np.atleast_1d(self.eigenvalues))
        return {
            "point": ";".join(f"{v:.12g}" for v in self.point),
            "kind": self.kind,
            "face": "".join(str(i) for i in self.face),
            "stability": self.stability,
            "eigenvalues": eig,
        }


def _face_point(face: tuple[int, ...], y: np.ndarray, n: int) -> np.ndarray:
    x = np.zeros(n)
    x[list(face[:-1])] = y
    x[face[-1]] = 1.0 - y.sum()
    return x


def _face_grid(dim: int, res: int, interior: bool) -> np.ndarray:
    """Grid points y (dim coords) with y_i = a_i/res and sum(y) <= 1, optionally strictly inside."""
    lo = 1 if interior else 0
    pts = [
        c
        for c in itertools.product(range(lo, res + 1), repeat=dim)
        if (sum(c) <= res - lo)
    ]
    return np.array(pts, dtype=float).reshape(-1, dim) / res


def _newton_on_face(
    fun: RhsFn, face: tuple[int, ...], n: int, y0: np.ndarray, max_iter: int = 60
) -> Optional[np.ndarray]:
    """Damped Newton for the face-reduced rhs; returns an accepted root or None."""
    idx = list(face[:-1])
    d = len(idx)

    def F(y: np.ndarray) -> np.ndarray:
        return fun(_face_point(face, y, n))[idx]

    def inside(y: np.ndarray) -> bool:
        return bool(np.all(y > 0) and y.sum() < 1)

    y = y0.copy()
    f = F(y)
    norm = np.max(np.abs(f))
    h = 1e-7
    for _ in range(max_iter):
        if norm < 1e-14:
            break
        J = np.empty((d, d))
        for c in range(d):
            e = np.zeros(d)
            e[c] = h
            J[:, c] = (F(y + e) - F(y - e)) / (2 * h)
        step = np.linalg.lstsq(J, -f, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            cand = y + lam * step
            if inside(cand):
                fc = F(cand)
                nc = np.max(np.abs(fc))
                if nc < norm:
                    break
            lam *= 0.5
        else:
            break
        y, f, norm = cand, fc, nc
        if np.max(np.abs(lam * step)) < 1e-15:
            break
    if norm < ROOT_TOL and inside(y):
        return _face_point(face, y, n)
    return None


def _faces(n: int):
    for size in range(1, n + 1):
        yield from itertools.combinations(range(n), size)


def _face_is_degenerate(fun: RhsFn, face: tuple[int, ...], n: int) -> bool:
    samples = _face_grid(len(face) - 1, GRID, interior=False)
    if len(face) > 2:  # thin out higher-dimensional faces to a manageable probe set
        samples = samples[:: max(1, len(samples) // 33)]
    return all(np.max(np.abs(fun(_face_point(face, y, n)))) <= LINE_TOL for y in samples)


def find_equilibria(system, resolution: int = GRID, classify: bool = True) -> list[Equilibrium]:
    fun = _rhs_of(system)
    n = system.n
    if n > 4:
        raise ValueError("exhaustive face scan supports n <= 4")
    found: list[Equilibrium] = []
    degenerate_faces: list[tuple[int, ...]] = []

    def near_known(x: np.ndarray) -> bool:
        if any(np.max(np.abs(e.point - x)) < MERGE_TOL for e in found):
            return True
        # inside a face already reported as a continuum of equilibria
        return any(np.all(x[[i for i in range(n) if i not in f]] < MERGE_TOL) for f in degenerate_faces)

    for face in _faces(n):
        if len(face) == 1:
            x = np.zeros(n)
            x[face[0]] = 1.0
            if np.max(np.abs(fun(x))) < ROOT_TOL and not near_known(x):
                found.append(Equilibrium(x, "vertex", face))
            continue
        if any(set(face) <= set(f) for f in degenerate_faces):
            continue
        if _face_is_degenerate(fun, face, n):
            degenerate_faces.append(face)
            mid = np.zeros(n)
            mid[list(face)] = 1.0 / len(face)
            found.append(Equilibrium(mid, "line_segment", face))
            continue
        kind = "edge" if len(face) == 2 else "interior" if len(face) == n else "face"
        for y0 in _face_grid(len(face) - 1, resolution, interior=True):
            root = _newton_on_face(fun, face, n, y0)
            if root is None or near_known(root):
                continue
            if root[list(face)].min() < 1e-7:  # converged onto a lower-dimensional face
                continue
            found.append(Equilibrium(root, kind, face))
    # vertices swallowed by a degenerate face are still reported on their own
    if classify:
        found = [classify_stability(system, e) for e in found]
    return found


# -- stability ---------------------------------------------------------------------


def reduced_jacobian(system, x, h: float = FD_STEP) -> np.ndarray:
    """Jacobian of the rhs in n-1 free coordinates (the largest component is eliminated).

    Central differences where both neighbours stay on the simplex, otherwise a
    second-order one-sided stencil pointing into the simplex.
    """
    fun = _rhs_of(system)
    x = np.asarray(x, dtype=float)
    n = x.size
    drop = int(np.argmax(x))
    free = [i for i in range(n) if i != drop]

    def shifted(i: int, t: float) -> np.ndarray:
        y = x.copy()
        y[i] += t
        y[drop] -= t
        return y

    J = np.empty((n - 1, n - 1))
    for col, i in enumerate(free):
        if x[i] - h >= 0:
            d = (fun(shifted(i, h)) - fun(shifted(i, -h))) / (2 * h)
        else:
            d = (-3 * fun(x) + 4 * fun(shifted(i, h)) - fun(shifted(i, 2 * h))) / (2 * h)
        J[:, col] = d[free]
    return J


def _label(eigs: np.ndarray) -> str:
    re = eigs.real
    if np.all(re < -STABILITY_MARGIN):
        return "stable"
    if np.any(np.abs(re) <= STABILITY_MARGIN):
        return "degenerate"
    if np.all(re > STABILITY_MARGIN):
        return "unstable"
    return "saddle"


def transverse_rates(system, x, face: tuple[int, ...], h: float = FD_STEP) -> np.ndarray:
    """Per-capita growth rate of each strategy absent from ``face`` when invading at x."""
    fun = _rhs_of(system)
    x = np.asarray(x, dtype=float)
    rates = []
    for m in range(x.size):
        if m in face:
            continue
        e = np.zeros_like(x)
        e[m] = 1.0
        rates.append(fun((1 - h) * x + h * e)[m] / h)
    return np.array(rates)


def classify_stability(system, eq: Equilibrium) -> Equilibrium:
    if eq.kind == "line_segment":
        ts = np.linspace(0.0, 1.0, 2 * GRID + 1)[1:-1]
        face = eq.face
        pts = []
        for y in _face_grid(len(face) - 1, GRID, interior=True) if len(face) > 2 else ts[:, None]:
            pts.append(_face_point(face, np.atleast_1d(y), system.n))
        pts = np.array(pts)
        rates = np.array([transverse_rates(system, p, face) for p in pts])
        eq.samples, eq.transverse = pts, rates
        eq.stability = "degenerate_line"
        eq.eigenvalues = np.array([])
        return eq
    eigs = np.linalg.eigvals(reduced_jacobian(system, eq.point))
    eq.eigenvalues = np.sort_complex(eigs)
    eq.stability = _label(eigs)
    return eq


def stability_at(system, x) -> tuple[str, np.ndarray]:
    eigs = np.linalg.eigvals(reduced_jacobian(system, x))
    return _label(eigs), eigs
