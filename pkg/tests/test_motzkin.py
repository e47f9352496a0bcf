from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from memchannel.chain import ChainSpec, spectral_provider
from memchannel.exceptions import ContractionError
from memchannel.memory import _IntervalAmplitudes, evaluate_monomials
from memchannel.motzkin import (
    ContractionMonomial,
    ExcitationPath,
    Transition,
    eliminate_channel_sums,
    enumerate_paths,
    expand_slater,
    extraction_patterns,
    motzkin_number,
    path_to_term,
    reduce_excursion,
)


def brute_force_count(steps):
    n = 0
    for moves in product((-1, 0, 1), repeat=steps):
        lv = np.cumsum(moves)
        if steps == 0 or (lv.min() >= 0 and lv[-1] == 0):
            n += 1
    return n


def test_zero_steps():
    paths = enumerate_paths(0)
    assert [p.levels for p in paths] == [(0,)]


def test_three_steps():
    got = {str(p) for p in enumerate_paths(3)}
    assert got == {"0000", "0100", "0010", "0110"}


@pytest.mark.parametrize("steps", range(8))
def test_counts_match_brute_force(steps):
    assert len(enumerate_paths(steps)) == brute_force_count(steps) == motzkin_number(steps)


def test_counts_sequence():
    assert [motzkin_number(s) for s in range(6)] == [1, 1, 2, 4, 9, 21]


def test_invalid_paths_rejected():
    for bad in [(0, 2, 1, 0), (1, 0), (0, 1), (0, -1, 0)]:
        with pytest.raises(ValueError):
            ExcitationPath(bad)


def test_excursions_unique_split():
    path = ExcitationPath((0, 0, 1, 2, 1, 0, 0, 1, 0))
    exc = path.excursions()
    assert exc == [(1, (0, 0)), (2, (0, 1, 2, 1, 0)), (6, (0, 0)), (7, (0, 1, 0))]


def test_path_to_term_checks_times():
    with pytest.raises(ValueError):
        path_to_term(ExcitationPath((0, 1, 0)), [0.1])


def test_trivial_path_term():
    term = path_to_term(ExcitationPath((0, 0, 0, 0)), [0.1, 0.2, 0.3])
    assert len(term.excursions) == 3
    assert all(e.trivial for e in term.excursions)
    assert term.excursions[0].patterns() == [(("1",),), (("N",),)]


def test_patterns_for_0110():
    pats = extraction_patterns((0, 1, 1, 0))
    assert pats == [((), ("1",), ("1", "N")), ((), ("N",), ("1", "N"))]


def test_slater_one_particle():
    monos = expand_slater(Transition(1, ("1",), ("N",)))
    assert len(monos) == 1
    assert monos[0].coeff == 1


def test_slater_two_and_three_particles():
    two = expand_slater(Transition(2, ("1", 0), ("N", 1)))
    three = expand_slater(Transition(2, ("1", 0, 1), ("1", "N", 2)))
    assert len(two) == 2 and sorted(m.coeff for m in two) == [-1, 1]
    assert len(three) == 6 and sum(m.coeff for m in three) == 0


def _value(monos, times, prov):
    return evaluate_monomials(monos, _IntervalAmplitudes(times, prov))


def test_elimination_b_term():
    # sum_j f_1^j(t1) f_j^N(t2)
    mono = ContractionMonomial(Fraction(1), (("1", 0, (1, 1)), (0, "N", (2, 2))))
    red = eliminate_channel_sums([mono])
    spec = ChainSpec.custom([0.7, 1.1, 0.9, 1.4])
    prov = spectral_provider(spec)
    t = (0.37, 1.21)
    from memchannel.chain import propagator

    f = propagator(spec)
    direct = sum(f.amplitude(1, j, t[0]) * f.amplitude(j, 5, t[1]) for j in range(2, 5))
    assert abs(_value(red, t, prov) - direct) < 1e-12
    a1, a2, a12 = prov(t[0]), prov(t[1]), prov(t[0] + t[1])
    assert abs(direct - (a12.f1N - a1.f11 * a2.f1N - a1.f1N * a2.fNN)) < 1e-12


def test_elimination_with_zero_second_time():
    mono = ContractionMonomial(Fraction(1), (("1", 0, (1, 1)), (0, "N", (2, 2))))
    red = eliminate_channel_sums([mono])
    prov = spectral_provider(ChainSpec.pst(5))
    # U(0) = 1 kills the sum: no channel site equals N
    assert abs(_value(red, (0.8, 0.0), prov)) < 1e-13


def test_elimination_rejects_bad_structure():
    mono = ContractionMonomial(Fraction(1), (("1", 0, (1, 1)), ("N", 0, (1, 1))))
    with pytest.raises(ContractionError):
        eliminate_channel_sums([mono])
    skip = ContractionMonomial(Fraction(1), (("1", 0, (1, 1)), (0, "N", (3, 3))))
    with pytest.raises(ContractionError):
        eliminate_channel_sums([skip])


def test_streaming_matches_full_expansion():
    spec = ChainSpec.custom([0.6, 1.3, 0.8, 1.1, 0.9])
    prov = spectral_provider(spec)
    times = (0.4, 1.7, 0.9, 2.2)
    for levels in [(0, 1, 0), (0, 1, 1, 0), (0, 1, 2, 1, 0)]:
        path = ExcitationPath(levels)
        exc = path_to_term(path).excursions[0]
        streamed = reduce_excursion(exc)
        for amp, fast in zip(exc.amplitudes(), streamed):
            slow = eliminate_channel_sums(expand_slater(amp))
            assert abs(_value(slow, times, prov) - _value(fast, times, prov)) < 1e-12
