import numpy as np
import pytest

from memchannel.chain import (
    ChainSpec,
    build_single_particle_hamiltonian,
    diagonalize,
    propagator,
    pst_boundary_closed_form,
    pst_couplings,
    spectral_provider,
)


def test_spec_rejects_short_chain():
    with pytest.raises(ValueError):
        ChainSpec.pst(2)


def test_spec_rejects_unknown_scheme():
    with pytest.raises(ValueError):
        ChainSpec(5, "random")


def test_uniform_needs_equal_couplings():
    with pytest.raises(ValueError):
        ChainSpec(4, "uniform", (1.0, 2.0, 1.0))


def test_custom_rejects_nonfinite():
    with pytest.raises(ValueError):
        ChainSpec.custom([1.0, np.inf])


def test_pst_couplings_formula():
    n = 9
    i = np.arange(1, n)
    assert np.allclose(ChainSpec.pst(n).couplings, np.sqrt(i * (n - i)), rtol=0, atol=1e-15)


def test_hamiltonian_pst4():
    h = build_single_particle_hamiltonian(ChainSpec.pst(4))
    assert np.allclose(np.diag(h, 1), [np.sqrt(3), 2, np.sqrt(3)])
    assert np.allclose(h, h.T)
    assert np.all(np.diag(h) == 0)


def test_hamiltonian_uniform3():
    h = build_single_particle_hamiltonian(ChainSpec.uniform(3))
    assert np.allclose(np.diag(h, 1), [1, 1])


def test_hamiltonian_pst6():
    h = build_single_particle_hamiltonian(ChainSpec.pst(6))
    assert np.allclose(np.diag(h, 1), np.sqrt([5, 8, 9, 8, 5]))


def test_pst_spectrum_equispaced():
    prop = propagator(ChainSpec.pst(6))
    gaps = np.diff(prop.eigenvalues)
    assert np.allclose(gaps, gaps[0], rtol=0, atol=1e-9)


def test_two_site_spectrum():
    prop = diagonalize(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(prop.eigenvalues, [-1, 1])


def test_diagonalize_rejects_asymmetric():
    with pytest.raises(ValueError):
        diagonalize(np.array([[0.0, 1.0], [0.5, 0.0]]))


def test_eigenvectors_orthogonal_and_reconstruct():
    h = build_single_particle_hamiltonian(ChainSpec.custom([0.3, 1.2, 0.7, 2.0]))
    prop = diagonalize(h)
    v = prop.eigenvectors
    assert np.linalg.norm(v.T @ v - np.eye(5)) < 1e-10
    assert np.linalg.norm(v @ np.diag(prop.eigenvalues) @ v.T - h) < 1e-10


def test_amplitude_identity_at_zero():
    prop = propagator(ChainSpec.pst(5))
    for i in range(1, 6):
        for j in range(1, 6):
            assert abs(prop.amplitude(i, j, 0.0) - (i == j)) < 1e-12


def test_amplitude_index_bounds():
    prop = propagator(ChainSpec.pst(5))
    with pytest.raises(IndexError):
        prop.amplitude(0, 1, 0.3)
    with pytest.raises(IndexError):
        prop.amplitude(1, 6, 0.3)


def test_row_normalisation():
    prop = propagator(ChainSpec.custom([1.0, 0.4, 0.9, 1.3, 0.8]))
    rng = np.random.default_rng(3)
    for t in rng.uniform(0, 10, 5):
        for i in range(1, 7):
            s = sum(abs(prop.amplitude(i, j, t)) ** 2 for j in range(1, 7))
            assert abs(s - 1) < 1e-12


def test_pst_perfect_transfer():
    prop = propagator(ChainSpec.pst(6))
    assert abs(abs(prop.amplitude(1, 6, np.pi / 2)) - 1) < 1e-10


def test_closed_form_at_transfer_time():
    for n in range(3, 12):
        a = pst_boundary_closed_form(n, np.pi / 2)
        assert abs(a.f1N - (-1j) ** (n - 1)) < 1e-12
        assert abs(a.f11) < 1e-12


def test_closed_form_at_zero():
    a = pst_boundary_closed_form(7, 0.0)
    assert a.f11 == 1 and a.f1N == 0


def test_closed_form_matches_spectral_n6():
    t = 0.525 * np.pi
    a = pst_boundary_closed_form(6, t)
    b = spectral_provider(ChainSpec.pst(6))(t)
    for k in ("11", "1N", "N1", "NN"):
        assert abs(a.get(k) - b.get(k)) < 1e-10


def test_closed_form_large_n_no_underflow_artifacts():
    a = pst_boundary_closed_form(10_000, 1.01 * np.pi / 2)
    assert np.isfinite(a.f1N) and 0 < abs(a.f1N) < 1
    lengths = np.array([3, 500, 7500])
    vec = pst_boundary_closed_form(lengths, 1.3)
    for k, n in enumerate(lengths):
        assert abs(vec.f1N[k] - pst_boundary_closed_form(int(n), 1.3).f1N) < 1e-15


def test_closed_form_broadcasts_over_time():
    t = np.linspace(0, np.pi, 7)
    a = pst_boundary_closed_form(5, t)
    assert a.f1N.shape == (7,)
    assert np.allclose(a.f1N, (-1j * np.sin(t)) ** 4)


def test_mirror_symmetry_flag():
    assert ChainSpec.pst(7).mirror_symmetric
    assert ChainSpec.uniform(7).mirror_symmetric
    assert not ChainSpec.custom([1.0, 2.0, 3.0]).mirror_symmetric


def test_pst_couplings_helper():
    assert np.allclose(pst_couplings(4), [np.sqrt(3), 2, np.sqrt(3)])
