import numpy as np
import pytest
from scipy.stats import unitary_group

from memchannel.chain import ChainSpec, pst_provider
from memchannel.entanglement import (
    TwoQubitState,
    apply_local_map,
    bell_state,
    concurrence,
    default_grid,
    distribution_profile,
    werner_state,
    widest_zero_window,
    zero_windows,
)
from memchannel.maps import first_use_map, pd_superoperator

TAU = np.pi / 2


def wootters_reference(rho):
    yy = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])
    ev = np.linalg.eigvals(rho @ yy @ rho.conj() @ yy)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def test_identity_map_leaves_state():
    out = apply_local_map(bell_state(), np.eye(4))
    assert np.allclose(out.rho, bell_state())


def test_dephasing_kills_entanglement():
    out = apply_local_map(bell_state(), pd_superoperator(0.0))
    assert np.allclose(out.rho, np.diag([0.5, 0, 0, 0.5]))
    assert concurrence(out) == 0


def test_amplitude_damping_concurrence():
    prov = pst_provider(6)
    for t in (0.4, 1.2, 2.0):
        f = abs(prov(t).f1N)
        out = apply_local_map(bell_state(), first_use_map(t, prov))
        out.check()
        assert abs(concurrence(out) - f) < 1e-10
        assert abs(wootters_reference(out.rho) - f) < 1e-7


def test_non_trace_preserving_rejected():
    with pytest.raises(ValueError):
        apply_local_map(bell_state(), 0.5 * np.eye(4))


def test_state_checks():
    with pytest.raises(ValueError):
        TwoQubitState(np.eye(3))
    with pytest.raises(ValueError):
        TwoQubitState(np.eye(4)).check()
    with pytest.raises(ValueError):
        TwoQubitState(np.diag([1.5, -0.5, 0, 0])).check()


def test_bell_and_product():
    assert abs(concurrence(bell_state()) - 1) < 1e-12
    prod = np.kron(np.diag([1, 0]), np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert concurrence(prod) == 0


def test_werner_states():
    for v in (0.2, 1 / 3, 0.5, 0.9, 1.0):
        assert abs(concurrence(werner_state(v)) - max(0, (3 * v - 1) / 2)) < 1e-12
    assert abs(concurrence(werner_state(0.9)) - 0.85) < 1e-12


def test_random_states_match_reference():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        assert abs(concurrence(rho) - wootters_reference(rho)) < 1e-7


def test_local_unitary_invariance():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    rho = a @ a.conj().T
    rho /= np.trace(rho)
    c = concurrence(rho)
    for seed in range(5):
        u = np.kron(unitary_group.rvs(2, random_state=seed), unitary_group.rvs(2, random_state=seed + 50))
        assert abs(concurrence(u @ rho @ u.conj().T) - c) < 1e-10


def test_first_use_profile():
    grid = default_grid()
    c1 = distribution_profile(1, 10, grid)
    inner = grid[(grid > 1e-3) & (grid < np.pi - 1e-3)]
    assert np.all(distribution_profile(1, 10, inner) > 0)
    assert np.abs(c1 - np.abs(pst_provider(10)(grid).f1N)).max() < 1e-10
    assert abs(distribution_profile(1, 10, [TAU])[0] - 1) < 1e-12


def test_second_use_zero_window():
    grid = default_grid()
    c2 = distribution_profile(2, 10, grid)
    assert widest_zero_window(grid, c2) > 0.1
    assert np.all((c2 >= 0) & (c2 <= 1))


def test_map_profile_equals_tomography():
    grid = np.linspace(0.05, 3.1, 12)
    for n in (5, 8):
        a = distribution_profile(2, ChainSpec.pst(n), grid)
        b = distribution_profile(2, ChainSpec.pst(n), grid, method="oracle")
        assert np.abs(a - b).max() < 1e-8


def test_zero_window_detection():
    grid = np.arange(10) * 0.1
    vals = np.array([1, 0, 0, 0, 1, 0, 1, 0, 0, 1.0])
    assert zero_windows(grid, vals) == [(0.1, 0.30000000000000004), (0.5, 0.5), (0.7000000000000001, 0.8)]
    assert abs(widest_zero_window(grid, vals) - 0.2) < 1e-12
    assert widest_zero_window(grid, np.ones(10)) == 0.0


def test_profile_rejects_bad_use():
    with pytest.raises(ValueError):
        distribution_profile(0, 6, [0.1])
