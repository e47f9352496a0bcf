"""Memory factor A_{n-1} and the n-th use average fidelity.

    F_n = 1/2 + |f_1^N(t_n)| A_{n-1} / 3 + |f_1^N(t_n)|^2 / 6

``A_{n-1}`` depends on the readout intervals t_1..t_{n-1} of the earlier
uses.  Three evaluators are provided:

* ``"motzkin"``: sum over Motzkin paths of reduced edge-amplitude
  polynomials (reduce once, evaluate for any times and chain lengths);
* ``"determinant"``: ``det(1 - G)`` where ``G`` is the Gram matrix of the
  injected excitations still in the channel, with every entry computed from
  edge amplitudes only; polynomial in the number of uses;
* :func:`memory_factor_direct`: the same path sum with explicit numerical
  sums over channel sites (small chains only, used as a cross-check).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from typing import Sequence

import numpy as np

from .chain import BoundaryAmplitudes, BoundaryProvider, ChainSpec, propagator
from .exceptions import BudgetError, GuardError
from .motzkin import (
    BoundaryMonomial,
    ExcitationPath,
    enumerate_paths,
    path_to_term,
    reduce_excursion,
)

DEFAULT_MAX_STEPS = 7
# reduction cost grows ~15x per step; above this auto switches to the determinant
AUTO_MOTZKIN_STEPS = 5
DEFAULT_MAX_MONOMIALS = 1_000_000
METHODS = ("motzkin", "determinant", "auto")


class _IntervalAmplitudes:
    """Provider cache keyed by composite interval (a, b) = t_a + ... + t_b."""

    def __init__(self, times, provider):
        self.times = tuple(times)
        self.provider = provider
        self._cache: dict = {}

    def __call__(self, a: int, b: int) -> BoundaryAmplitudes:
        key = (a, b)
        if key not in self._cache:
            t = float(sum(self.times[a - 1 : b])) if b >= a else 0.0
            self._cache[key] = self.provider(t)
        return self._cache[key]


def evaluate_monomials(monos: Sequence[BoundaryMonomial], amps: _IntervalAmplitudes):
    total = 0j
    for m in monos:
        val = complex(m.coeff)
        for kind, a, b in m.factors:
            val = val * amps(a, b).get(kind)
        total = total + val
    return total


@dataclass(frozen=True)
class ReducedPath:
    path: ExcitationPath
    # per excursion, per extraction pattern, the reduced amplitude
    excursions: tuple[tuple[tuple[BoundaryMonomial, ...], ...], ...]

    @property
    def n_monomials(self) -> int:
        return sum(len(p) for exc in self.excursions for p in exc)

    def evaluate(self, amps: _IntervalAmplitudes):
        value = 1.0
        for patterns in self.excursions:
            value = value * sum(np.abs(evaluate_monomials(p, amps)) ** 2 for p in patterns)
        return value


@dataclass(frozen=True)
class ReducedMemoryFactor:
    """Symbolic form of A_{steps}; independent of times and chain length."""

    steps: int
    paths: tuple[ReducedPath, ...]

    @property
    def n_monomials(self) -> int:
        return sum(p.n_monomials for p in self.paths)

    def evaluate(self, times: Sequence[float], provider: BoundaryProvider):
        if len(times) != self.steps:
            raise ValueError(f"expected {self.steps} readout times, got {len(times)}")
        if self.steps == 0:
            return 1.0
        amps = _IntervalAmplitudes(times, provider)
        return sum(p.evaluate(amps) for p in self.paths)


def _reduce_path(path: ExcitationPath, limit: int | None = None) -> ReducedPath:
    term = path_to_term(path)
    return ReducedPath(
        path, tuple(tuple(tuple(m) for m in reduce_excursion(exc, limit)) for exc in term.excursions)
    )


@lru_cache(maxsize=32)
def _reduce(steps: int, max_monomials: int) -> ReducedMemoryFactor:
    paths = []
    total = 0
    for p in enumerate_paths(steps):
        reduced = _reduce_path(p, max_monomials)
        total += reduced.n_monomials
        if total > max_monomials:
            raise BudgetError(
                f"term-count budget: more than {max_monomials} boundary monomials for {steps} steps"
            )
        paths.append(reduced)
    return ReducedMemoryFactor(steps, tuple(paths))


def reduce_memory_factor(
    steps: int,
    max_steps: int = DEFAULT_MAX_STEPS,
    max_monomials: int = DEFAULT_MAX_MONOMIALS,
) -> ReducedMemoryFactor:
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if steps > max_steps:
        raise BudgetError(
            f"term-count budget: {steps} memory steps exceeds the limit of {max_steps} "
            "(raise max_steps or use method='determinant')"
        )
    return _reduce(steps, max_monomials)


def _gram_entry(signed_times: Sequence[float], provider: BoundaryProvider, cache: dict):
    """``<1| V_K P V_{K-1} P ... P V_1 |1>`` with ``V_k = U(s_k)``, ``P = 1 - edges``.

    Uses the last-edge-visit decomposition
    ``Q(a, K) = U(a..K) - sum_c Q(c+1, K) Pi_E U(a..c)`` restricted to the
    edge block, propagated as row vectors from the left.
    """

    def edge_block(t):
        key = float(t)
        if key not in cache:
            cache[key] = provider(key).matrix()
        return cache[key]

    K = len(signed_times)
    prefix = np.concatenate([[0.0], np.cumsum(signed_times)])
    rows: dict[int, np.ndarray] = {}
    for a in range(K, 0, -1):
        row = edge_block(prefix[K] - prefix[a - 1])[0]
        for c in range(a, K):
            row = row - np.einsum("j...,jk...->k...", rows[c + 1], edge_block(prefix[c] - prefix[a - 1]))
        rows[a] = row
    return rows[1][0]


def memory_factor_determinant(times: Sequence[float], provider: BoundaryProvider):
    """A_{m} as det(1 - G) with the Gram matrix G built from edge amplitudes."""
    m = len(times)
    if m == 0:
        return 1.0
    t = list(map(float, times))
    cache: dict = {}
    entries = {}
    for a in range(1, m + 1):
        for b in range(a, m + 1):
            seq = t[b - 1 :] + [-x for x in reversed(t[a - 1 :])]
            entries[(a, b)] = _gram_entry(seq, provider, cache)
    shape = np.shape(entries[(1, 1)])
    gram = np.zeros(shape + (m, m), dtype=complex)
    for (a, b), g in entries.items():
        gram[..., a - 1, b - 1] = g
        gram[..., b - 1, a - 1] = np.conj(g)
    det = np.linalg.det(np.eye(m) - gram).real
    return float(det) if det.ndim == 0 else det


def memory_factor(
    times: Sequence[float],
    provider: BoundaryProvider,
    *,
    method: str = "motzkin",
    max_steps: int = DEFAULT_MAX_STEPS,
    max_monomials: int = DEFAULT_MAX_MONOMIALS,
):
    """Memory factor for readout intervals ``times = (t_1, ..., t_{n-1})``.

    ``method="auto"`` uses the Motzkin reduction for short histories (at most
    ``AUTO_MOTZKIN_STEPS`` and within ``max_steps``) and the determinant form
    otherwise.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    steps = len(times)
    if steps == 0:
        return 1.0
    if method == "auto":
        method = "motzkin" if steps <= min(max_steps, AUTO_MOTZKIN_STEPS) else "determinant"
    if method == "determinant":
        return memory_factor_determinant(times, provider)
    return reduce_memory_factor(steps, max_steps, max_monomials).evaluate(times, provider)


def nth_use_fidelity(times: Sequence[float], provider: BoundaryProvider, **kwargs):
    """Average fidelity of the last use in ``times = (t_1, ..., t_n)``."""
    if len(times) < 1:
        raise ValueError("need at least one use")
    a = memory_factor(times[:-1], provider, **kwargs)
    f = np.abs(provider(float(times[-1])).f1N)
    return 0.5 + f * a / 3 + f**2 / 6


def fidelity_sequence(times: Sequence[float], provider: BoundaryProvider, **kwargs) -> list:
    """F_1, ..., F_n for a single readout schedule."""
    steps = len(times) - 1
    max_steps = kwargs.get("max_steps", DEFAULT_MAX_STEPS)
    if kwargs.get("method", "motzkin") == "motzkin" and steps > max_steps:
        # fail before reducing the shorter histories
        reduce_memory_factor(steps, max_steps)
    return [nth_use_fidelity(times[: k + 1], provider, **kwargs) for k in range(len(times))]


# --------------------------------------------------------------------------
# brute-force channel sums


MAX_DIRECT_LENGTH = 64
MAX_DIRECT_STEPS = 4


def memory_factor_direct(times: Sequence[float], spec: ChainSpec) -> float:
    """Path sum with channel sums done numerically on Slater determinants."""
    n, steps = spec.length, len(times)
    if n > MAX_DIRECT_LENGTH or steps > MAX_DIRECT_STEPS:
        raise GuardError(
            f"direct evaluation limited to N <= {MAX_DIRECT_LENGTH}, steps <= {MAX_DIRECT_STEPS}"
        )
    if steps == 0:
        return 1.0
    prop = propagator(spec)
    # F[i, j] = f_{i+1}^{j+1}
    mats = {k: prop.matrix(times[k - 1]) for k in range(1, steps + 1)}
    edge_index = {"1": 0, "N": n - 1}
    channel = range(1, n - 1)
    total = 0.0
    for path in enumerate_paths(steps):
        value = 1.0
        for exc in path_to_term(path).excursions:
            acc = 0.0
            for pattern in exc.patterns():
                amp = {(): 1.0 + 0j}
                for offset, (edges_out, b) in enumerate(zip(pattern, exc.levels[1:])):
                    f = mats[exc.start + offset]
                    cols_edge = [edge_index[e] for e in edges_out]
                    new = {}
                    for conf_out in combinations(channel, b):
                        cols = cols_edge + list(conf_out)
                        s = 0j
                        for conf_in, c in amp.items():
                            rows = [0] + list(conf_in)
                            s += c * np.linalg.det(f[np.ix_(rows, cols)])
                        new[conf_out] = s
                    amp = new
                acc += abs(amp[()]) ** 2
            value *= acc
        total += value
    return float(total)
