"""Motzkin excitation paths and their reduction to edge amplitudes.

Between readouts the channel retains some number of excitations.  When
every sender injects an excitation, the probability that the channel ends
up empty is a sum over Motzkin paths of those retained numbers.  A path
factorises into excursions (maximal segments that leave level 0 and come
back).  For one excursion and one choice of which edge sites are occupied
at each readout (the extraction pattern), the amplitude is a sum over
channel sites of products of multi-particle transition amplitudes.  For
free-fermion chains those are Slater determinants of single-particle
amplitudes, and every channel sum can be removed with

    sum_{j in C} f_x^j(ta) f_j^y(tb)
        = f_x^y(ta + tb) - f_x^1(ta) f_1^y(tb) - f_x^N(ta) f_N^y(tb),

which leaves polynomials in the four edge amplitudes evaluated at sums of
consecutive readout intervals.

Site labels: the edge sites are the strings ``"1"`` and ``"N"``; channel
summation indices are non-negative integers.  Readout steps are 1-based and
a composite time ``(a, b)`` means ``t_a + ... + t_b``.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, product
from math import factorial
from typing import Iterator, Sequence

from .exceptions import BudgetError, ContractionError

EDGES = ("1", "N")


@dataclass(frozen=True)
class ExcitationPath:
    """Number of excitations left in the channel after each readout."""

    levels: tuple[int, ...]

    def __post_init__(self):
        lv = tuple(int(x) for x in self.levels)
        object.__setattr__(self, "levels", lv)
        if not lv or lv[0] != 0 or lv[-1] != 0:
            raise ValueError(f"path must start and end at level 0: {lv}")
        for a, b in zip(lv, lv[1:]):
            if b not in successors(a):
                raise ValueError(f"illegal step {a}->{b} in {lv}")

    @property
    def steps(self) -> int:
        return len(self.levels) - 1

    def __str__(self):
        return "".join(str(x) for x in self.levels)

    def excursions(self) -> list[tuple[int, tuple[int, ...]]]:
        """Split into maximal 0-to-0 segments as ``(first_step, levels)``."""
        out = []
        start = 0
        for i in range(1, len(self.levels)):
            if self.levels[i] == 0:
                out.append((start + 1, self.levels[start : i + 1]))
                start = i
        return out


def successors(level: int) -> tuple[int, ...]:
    """Tree generation rule: levels reachable at the next readout."""
    if level < 0:
        raise ValueError("levels are non-negative")
    return (0, 1) if level == 0 else (level - 1, level, level + 1)


def enumerate_paths(steps: int) -> list[ExcitationPath]:
    """All Motzkin paths with ``steps`` steps, in lexicographic order."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    out: list[ExcitationPath] = []

    def grow(prefix):
        remaining = steps + 1 - len(prefix)
        if remaining == 0:
            if prefix[-1] == 0:
                out.append(ExcitationPath(tuple(prefix)))
            return
        for nxt in successors(prefix[-1]):
            # must still be able to walk back down to 0
            if nxt <= remaining - 1:
                grow(prefix + [nxt])

    grow([0])
    return out


def motzkin_number(steps: int) -> int:
    m = [1, 1]
    for n in range(2, steps + 1):
        m.append(((2 * n + 1) * m[n - 1] + (3 * n - 3) * m[n - 2]) // (n + 2))
    return m[steps]


# --------------------------------------------------------------------------
# path terms


@dataclass(frozen=True)
class Transition:
    """Multi-particle amplitude ``f_{inputs}^{outputs}(t_step)``."""

    step: int
    inputs: tuple
    outputs: tuple

    def __post_init__(self):
        if len(self.inputs) != len(self.outputs):
            raise ValueError("particle number is conserved")


@dataclass(frozen=True)
class ExcursionAmplitude:
    """``weight * sum over channel indices of prod(det(transition))``."""

    transitions: tuple[Transition, ...]
    weight: Fraction
    pattern: tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class Excursion:
    start: int
    levels: tuple[int, ...]

    @property
    def trivial(self) -> bool:
        return len(self.levels) == 2

    @property
    def steps(self) -> tuple[int, ...]:
        return tuple(range(self.start, self.start + len(self.levels) - 1))

    def patterns(self) -> list[tuple[tuple[str, ...], ...]]:
        return extraction_patterns(self.levels)

    def amplitudes(self) -> list[ExcursionAmplitude]:
        return [excursion_amplitude(self.levels, pat, self.start) for pat in self.patterns()]


@dataclass(frozen=True)
class PathTerm:
    """Product over excursions of sums over extraction patterns of |amplitude|^2."""

    path: ExcitationPath
    excursions: tuple[Excursion, ...]
    times: tuple[float, ...] | None = None


def extraction_patterns(levels: Sequence[int]) -> list[tuple[tuple[str, ...], ...]]:
    """Edge sites found occupied at each readout of an excursion.

    A readout that keeps the level extracts one excitation at either edge,
    one that lowers it extracts two (one per edge), one that raises it
    extracts none.
    """
    per_step = []
    for a, b in zip(levels, levels[1:]):
        extracted = a + 1 - b
        if extracted == 0:
            per_step.append([()])
        elif extracted == 1:
            per_step.append([("1",), ("N",)])
        elif extracted == 2:
            per_step.append([EDGES])
        else:
            raise ValueError(f"illegal step {a}->{b}")
    return [tuple(p) for p in product(*per_step)]


def excursion_amplitude(levels, pattern, start: int = 1) -> ExcursionAmplitude:
    """Explicit transition sequence for one excursion and extraction pattern.

    Inputs at each readout are the injected sender excitation followed by
    the channel indices produced at the previous readout, in the same order.
    """
    counter = 0
    current: tuple[int, ...] = ()
    transitions = []
    weight = Fraction(1)
    for offset, (edges_out, b) in enumerate(zip(pattern, levels[1:])):
        new = tuple(range(counter, counter + b))
        counter += b
        transitions.append(Transition(start + offset, ("1",) + current, tuple(edges_out) + new))
        current = new
        if b:
            weight /= factorial(b)
    return ExcursionAmplitude(tuple(transitions), weight, tuple(tuple(p) for p in pattern))


def path_to_term(path: ExcitationPath, times: Sequence[float] | None = None) -> PathTerm:
    if times is not None:
        times = tuple(float(t) for t in times)
        if len(times) != path.steps:
            raise ValueError(f"path has {path.steps} steps but {len(times)} times were given")
    excs = tuple(Excursion(start, lv) for start, lv in path.excursions())
    return PathTerm(path, excs, times)


# --------------------------------------------------------------------------
# Slater expansion and completeness elimination


@dataclass(frozen=True)
class ContractionMonomial:
    """``coeff * prod f_src^dst(interval)``; integer sites are summed over C."""

    coeff: Fraction
    factors: tuple[tuple[object, object, tuple[int, int]], ...]


@dataclass(frozen=True)
class BoundaryMonomial:
    """``coeff * prod f_kind(t_a + ... + t_b)`` over edge-only factors."""

    coeff: Fraction
    factors: tuple[tuple[str, int, int], ...]


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


@lru_cache(maxsize=None)
def _signed_permutations(n: int) -> tuple[tuple[tuple[int, ...], int], ...]:
    return tuple((p, _perm_sign(p)) for p in permutations(range(n)))


def expand_slater(amp) -> list[ContractionMonomial]:
    """Replace every k-particle amplitude by its k x k determinant.

    Accepts a single :class:`Transition` (k! signed monomials) or an
    :class:`ExcursionAmplitude` (product of the per-transition expansions,
    carrying the amplitude weight).
    """
    if isinstance(amp, Transition):
        t = amp.step
        out = []
        for perm, sgn in _signed_permutations(len(amp.inputs)):
            factors = tuple(
                (src, amp.outputs[perm[r]], (t, t)) for r, src in enumerate(amp.inputs)
            )
            out.append(ContractionMonomial(Fraction(sgn), factors))
        return out
    monos = [ContractionMonomial(amp.weight, ())]
    for tr in amp.transitions:
        pieces = expand_slater(tr)
        monos = [
            ContractionMonomial(m.coeff * p.coeff, m.factors + p.factors)
            for m in monos
            for p in pieces
        ]
    return monos


def _eliminate_one(coeff, factors):
    """Fully eliminate the channel indices of a single monomial."""
    work = [(coeff, list(factors))]
    done = []
    while work:
        c, facs = work.pop()
        idx = next((s for f in facs for s in f[:2] if not isinstance(s, str)), None)
        if idx is None:
            done.append((c, facs))
            continue
        as_dst = [k for k, f in enumerate(facs) if f[1] == idx]
        as_src = [k for k, f in enumerate(facs) if f[0] == idx]
        if len(as_dst) != 1 or len(as_src) != 1:
            raise ContractionError(
                f"channel index {idx} appears {len(as_dst)}x as output and "
                f"{len(as_src)}x as input; expected once each"
            )
        x, _, (a, i) = facs[as_dst[0]]
        _, y, (i1, b) = facs[as_src[0]]
        if i1 != i + 1:
            raise ContractionError(f"channel index {idx} is not contracted between consecutive readouts")
        rest = [f for k, f in enumerate(facs) if k not in (as_dst[0], as_src[0])]
        work.append((c, rest + [(x, y, (a, b))]))
        for e in EDGES:
            work.append((-c, rest + [(x, e, (a, i)), (e, y, (i1, b))]))
    return done


def _merge(items) -> list[BoundaryMonomial]:
    acc: dict = defaultdict(Fraction)
    for c, key in items:
        acc[key] += c
    return [BoundaryMonomial(c, key) for key, c in sorted(acc.items()) if c != 0]


def eliminate_channel_sums(monomials: Sequence[ContractionMonomial]) -> list[BoundaryMonomial]:
    """Remove every channel sum by completeness; merge equal monomials."""
    items = []
    for m in monomials:
        for c, facs in _eliminate_one(m.coeff, m.factors):
            key = tuple(sorted((src + dst, a, b) for src, dst, (a, b) in facs))
            items.append((c, key))
    return _merge(items)


# --------------------------------------------------------------------------
# streaming reduction
#
# Expanding every determinant first costs prod(k!) * 3^(#indices) terms.  The
# streaming form contracts readout by readout.  A channel index still to be
# consumed is represented by the pending factor f_x^j(t_a + ... + t_now),
# labelled (x, a).  The consumer of those indices is antisymmetric in them,
# so the open labels can be sorted (with the permutation sign) and terms with
# a repeated label dropped; the 1/k! of the ordered channel sum is applied
# when the indices are created.


def _sort_with_sign(labels):
    order = sorted(range(len(labels)), key=lambda k: labels[k])
    sorted_labels = tuple(labels[k] for k in order)
    for u, v in zip(sorted_labels, sorted_labels[1:]):
        if u == v:
            return None, 0
    return sorted_labels, _perm_sign(order)


@lru_cache(maxsize=4096)
def _step_outcomes(open_labels, edges_out, n_new, step):
    """Contract one readout for a given set of pending labels.

    Returns tuples ``(closed_factors, new_open_labels, coeff)``.
    """
    rows = [("inject", None)] + [("open", lab) for lab in open_labels]
    ncols = len(edges_out) + n_new
    if ncols != len(rows):
        raise ValueError("particle number mismatch in readout")
    targets = [("edge", e) for e in edges_out] + [("slot", s) for s in range(n_new)]
    acc: dict = defaultdict(Fraction)
    for perm, sgn in _signed_permutations(len(rows)):
        options_per_row = []
        for r, col in enumerate(perm):
            kind, lab = rows[r]
            tkind, tval = targets[col]
            opts = []
            if kind == "inject":
                if tkind == "edge":
                    opts.append((1, (("1" + tval, step, step),), None))
                else:
                    opts.append((1, (), (tval, ("1", step))))
            else:
                x, a = lab
                if tkind == "edge":
                    opts.append((1, ((x + tval, a, step),), None))
                    for e in EDGES:
                        opts.append((-1, ((x + e, a, step - 1), (e + tval, step, step)), None))
                else:
                    opts.append((1, (), (tval, (x, a))))
                    for e in EDGES:
                        opts.append((-1, ((x + e, a, step - 1),), (tval, (e, step))))
            options_per_row.append(opts)
        for combo in product(*options_per_row):
            c = sgn
            closed = []
            slots = [None] * n_new
            for cc, cl, sl in combo:
                c *= cc
                closed.extend(cl)
                if sl is not None:
                    slots[sl[0]] = sl[1]
            new_open, psign = _sort_with_sign(slots)
            if psign == 0:
                continue
            acc[(tuple(sorted(closed)), new_open)] += Fraction(c * psign, factorial(n_new))
    return tuple((cl, op, c) for (cl, op), c in acc.items() if c != 0)


def _merge_closed(a, b):
    return tuple(sorted(a + b))


@lru_cache(maxsize=None)
def _reduce_excursion_relative(
    levels: tuple[int, ...], pattern, limit: int | None = None
) -> tuple[BoundaryMonomial, ...]:
    state = {((), ()): Fraction(1)}
    for offset, (edges_out, b) in enumerate(zip(pattern, levels[1:])):
        step = offset + 1
        new: dict = defaultdict(Fraction)
        for (closed, open_), c in state.items():
            for cl, op, c2 in _step_outcomes(open_, tuple(edges_out), b, step):
                new[(_merge_closed(closed, cl), op)] += c * c2
        state = {k: v for k, v in new.items() if v != 0}
        if limit is not None and len(state) > limit:
            raise BudgetError(f"term-count budget: excursion {levels} exceeds {limit} terms")
    return tuple(BoundaryMonomial(c, closed) for (closed, _), c in sorted(state.items()))


def shift_monomials(monos, offset: int) -> list[BoundaryMonomial]:
    if offset == 0:
        return list(monos)
    return [
        BoundaryMonomial(m.coeff, tuple((k, a + offset, b + offset) for k, a, b in m.factors))
        for m in monos
    ]


def reduce_amplitude(amp: ExcursionAmplitude) -> list[BoundaryMonomial]:
    """Streaming equivalent of ``eliminate_channel_sums(expand_slater(amp))``."""
    start = amp.transitions[0].step
    levels = (0,) + tuple(len(tr.outputs) - sum(1 for s in tr.outputs if isinstance(s, str)) for tr in amp.transitions)
    mon = _reduce_excursion_relative(levels, amp.pattern)
    return shift_monomials(mon, start - 1)


def reduce_excursion(exc: Excursion, limit: int | None = None) -> list[list[BoundaryMonomial]]:
    """Reduced amplitude for each extraction pattern of an excursion."""
    return [
        shift_monomials(_reduce_excursion_relative(exc.levels, pat, limit), exc.start - 1)
        for pat in exc.patterns()
    ]


def iter_intervals(monos: Sequence[BoundaryMonomial]) -> Iterator[tuple[int, int]]:
    for m in monos:
        for _, a, b in m.factors:
            yield (a, b)
