"""Co-player configurations and multinomial configuration sums.

A configuration is a composition ``(k_1, ..., k_n)`` of ``m`` co-players into
``n`` strategies.  Configurations of a given ``(n, m)`` are enumerated once,
in lexicographic *descending* order on counts, so ``(m, 0, ..., 0)`` always has
index 0 and ``(0, ..., 0, m)`` is last.  Every cached payoff table in the
package relies on this order.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np

MAX_TOTAL = 64
_PROB_TOL = 1e-12

# log(m!) for m = 0..MAX_TOTAL
_LOG_FACT = np.array([math.lgamma(m + 1) for m in range(MAX_TOTAL + 1)])

Configuration = tuple[int, ...]


def _compositions(n: int, m: int) -> Iterator[Configuration]:
    if n == 1:
        yield (m,)
        return
    for head in range(m, -1, -1):
        for tail in _compositions(n - 1, m - head):
            yield (head,) + tail


@lru_cache(maxsize=None)
def enumerate_configurations(n: int, m: int) -> tuple[Configuration, ...]:
    """All compositions of ``m`` into ``n`` non-negative parts, descending lex order."""
    if n < 1 or m < 0:
        raise ValueError(f"need n >= 1 and m >= 0, got n={n}, m={m}")
    if m > MAX_TOTAL:
        raise ValueError(f"co-player total {m} exceeds supported maximum {MAX_TOTAL}")
    return tuple(_compositions(n, m))


def count_configurations(n: int, m: int) -> int:
    return math.comb(m + n - 1, m)


@lru_cache(maxsize=None)
def config_array(n: int, m: int) -> np.ndarray:
    """Enumeration as an ``(count, n)`` integer array (read-only)."""
    arr = np.array(enumerate_configurations(n, m), dtype=np.int64).reshape(-1, n)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=None)
def config_index(n: int, m: int) -> dict[Configuration, int]:
    return {c: idx for idx, c in enumerate(enumerate_configurations(n, m))}


def rank(counts: Sequence[int]) -> int:
    """Enumeration index of ``counts`` without building the table."""
    n = len(counts)
    remaining = int(sum(counts))
    idx = 0
    for pos in range(n - 1):
        parts_left = n - pos - 1
        v = counts[pos]
        # configurations sharing the prefix but with a larger value here come first
        for u in range(remaining, v, -1):
            idx += math.comb(remaining - u + parts_left - 1, parts_left - 1)
        remaining -= v
    return idx


@lru_cache(maxsize=None)
def log_coefficients(n: int, m: int) -> np.ndarray:
    """log of m!/prod(k_i!) for every configuration of the space."""
    arr = config_array(n, m)
    return _LOG_FACT[m] - _LOG_FACT[arr].sum(axis=1)


def _check_probs(p: np.ndarray, n: int) -> None:
    if p.shape[-1] != n:
        raise ValueError(f"probability vector has length {p.shape[-1]}, expected {n}")
    if np.any(p < -_PROB_TOL) or np.any(np.abs(p.sum(axis=-1) - 1.0) > 1e-9):
        raise ValueError("probability vector must lie on the simplex")


def multinomial_weight(c: Sequence[int], p: Sequence[float]) -> float:
    """m!/prod(k_i!) * prod(p_i^k_i), with 0^0 = 1."""
    counts = np.asarray(c, dtype=np.int64)
    probs = np.asarray(p, dtype=float)
    if counts.shape != probs.shape:
        raise ValueError(f"configuration length {counts.size} != probability length {probs.size}")
    _check_probs(probs, probs.size)
    m = int(counts.sum())
    log_coef = _LOG_FACT[m] - _LOG_FACT[counts].sum()
    return float(math.exp(log_coef) * np.prod(probs**counts))


def weight_vectors(n: int, m: int, probs: np.ndarray) -> np.ndarray:
    """Multinomial weights over the whole space for one or many probability vectors.

    ``probs`` has shape ``(..., n)``; the result has shape ``(..., count)``.
    Entries of ``probs`` are not validated here: this is the hot path used by
    the replicator engines, which also evaluate slightly off-simplex points
    for finite-difference Jacobians.
    """
    arr = config_array(n, m)
    probs = np.asarray(probs, dtype=float)
    # numpy defines 0.0 ** 0 == 1.0, which is exactly the convention we need
    powers = probs[..., None, :] ** arr
    return np.exp(log_coefficients(n, m)) * powers.prod(axis=-1)


def weighted_sum(n: int, m: int, p: Sequence[float], f: Callable[[Configuration], float]) -> float:
    """Sum over configurations of total m of multinomial weight times f(config)."""
    probs = np.asarray(p, dtype=float)
    _check_probs(probs, n)
    w = weight_vectors(n, m, probs)
    values = np.array([f(c) for c in enumerate_configurations(n, m)], dtype=float)
    return float(w @ values)


def reduced_weighted_sum(
    n: int, m: int, p: Sequence[float], i: int, g: Callable[[Configuration], float]
) -> float:
    """Right-hand side of the counting identity E_m[k_i g(k)] = m p_i E_{m-1}[g(k + e_i)].

    Lets a caller drop the explicit ``k_i`` factor and sum over a space one
    co-player smaller.
    """
    if m < 1:
        raise ValueError("reduction needs m >= 1")
    return m * float(p[i]) * weighted_sum(n, m - 1, p, lambda c: g(with_added(c, i)))


def with_added(c: Sequence[int], l: int) -> Configuration:
    """Configuration with one extra co-player of strategy ``l`` (0-based)."""
    out = list(c)
    out[l] += 1
    return tuple(out)


def with_swapped(c: Sequence[int], i: int, j: int) -> Configuration:
    """Replace one strategy-``i`` co-player by a strategy-``j`` one (0-based)."""
    if c[i] < 1:
        raise ValueError(f"configuration {tuple(c)} has no strategy-{i} co-player to swap out")
    out = list(c)
    out[i] -= 1
    out[j] += 1
    return tuple(out)


@lru_cache(maxsize=None)
def plus_index(n: int, m: int) -> np.ndarray:
    """``plus_index(n, m)[l, idx]`` is the index (in the m+1 space) of config idx plus one l."""
    target = config_index(n, m + 1)
    out = np.empty((n, count_configurations(n, m)), dtype=np.int64)
    for idx, c in enumerate(enumerate_configurations(n, m)):
        for l in range(n):
            out[l, idx] = target[with_added(c, l)]
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def plus_two_index(n: int, m: int) -> np.ndarray:
    """``[a, b, idx]`` -> index in the m+2 space of config idx plus one a and one b."""
    target = config_index(n, m + 2)
    out = np.empty((n, n, count_configurations(n, m)), dtype=np.int64)
    for idx, c in enumerate(enumerate_configurations(n, m)):
        for a in range(n):
            ca = with_added(c, a)
            for b in range(n):
                out[a, b, idx] = target[with_added(ca, b)]
    out.setflags(write=False)
    return out
