"""Single-qubit dynamical maps of the first and second channel use.

Superoperators act on row-major vectorised 2x2 density matrices, i.e. on
``(rho00, rho01, rho10, rho11)``.  The second use factorises as a
generalized amplitude damping map after a phase damping map whose
coherence factor is the first-use memory factor A_1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import BoundaryProvider
from .oracle import Oracle, ProtocolSchedule, apply_map, attach, bloch_state, evolve, receiver_state

TOMOGRAPHY_INPUTS = {
    "0": np.array([[1, 0], [0, 0]], dtype=complex),
    "1": np.array([[0, 0], [0, 1]], dtype=complex),
    "+": bloch_state(np.pi / 2, 0.0),
    "+i": bloch_state(np.pi / 2, np.pi / 2),
}


def b_term(t2: float, t1: float, provider: BoundaryProvider) -> complex:
    """Amplitude for an excitation left in the channel at t1 to reach N at t2."""
    a1, a2, a12 = provider(t1), provider(t2), provider(t1 + t2)
    return a12.f1N - a1.f11 * a2.f1N - a1.f1N * a2.fNN


def memory_a1(t1: float, provider: BoundaryProvider) -> float:
    a = provider(t1)
    return float(abs(a.f11) ** 2 + abs(a.f1N) ** 2)


@dataclass(frozen=True)
class GadParams:
    gamma: float
    p: float

    @classmethod
    def from_amplitudes(cls, f: complex, b: complex, atol: float = 1e-12) -> "GadParams":
        gamma = 1 - abs(f) ** 2
        pg = 1 - abs(b) ** 2 / 2 - abs(f) ** 2
        # no damping: p is irrelevant, pick the amplitude-damping branch
        p = 1.0 if gamma < atol else pg / gamma
        for name, v in (("gamma", gamma), ("p", p)):
            if not -atol <= v <= 1 + atol:
                raise ValueError(f"{name}={v} outside [0, 1]; map would not be CPTP")
        return cls(float(np.clip(gamma, 0, 1)), float(np.clip(p, 0, 1)))


@dataclass(frozen=True)
class PdParam:
    lam: float

    @classmethod
    def from_a1(cls, a1: float) -> "PdParam":
        return cls(1 - a1**2)


def gad_superoperator(f: complex, b: complex) -> np.ndarray:
    """Generalized amplitude damping with transfer amplitude ``f`` and B-term ``b``."""
    GadParams.from_amplitudes(f, b)
    h = abs(b) ** 2 / 2
    pf = abs(f) ** 2
    return np.array(
        [
            [1 - h, 0, 0, 1 - h - pf],
            [0, np.conj(f), 0, 0],
            [0, 0, f, 0],
            [h, 0, 0, h + pf],
        ],
        dtype=complex,
    )


def gad_standard(gamma: float, p: float) -> np.ndarray:
    """GAD(gamma, p) with real coherence factor; p=1 damps towards |0>."""
    if not (0 <= gamma <= 1 and 0 <= p <= 1):
        raise ValueError("gamma and p must lie in [0, 1]")
    return np.array(
        [
            [1 - (1 - p) * gamma, 0, 0, p * gamma],
            [0, np.sqrt(1 - gamma), 0, 0],
            [0, 0, np.sqrt(1 - gamma), 0],
            [(1 - p) * gamma, 0, 0, 1 - p * gamma],
        ],
        dtype=complex,
    )


def pd_superoperator(a1: float) -> np.ndarray:
    if not -1e-12 <= a1 <= 1 + 1e-12:
        raise ValueError(f"coherence factor {a1} outside [0, 1]")
    return np.diag([1, a1, a1, 1]).astype(complex)


def first_use_map(t: float, provider: BoundaryProvider) -> np.ndarray:
    """Amplitude damping with amplitude f_1^N(t)."""
    return gad_superoperator(provider(t).f1N, 0.0)


def second_use_map(t1: float, t2: float, provider: BoundaryProvider) -> np.ndarray:
    f = provider(t2).f1N
    return gad_superoperator(f, b_term(t2, t1, provider)) @ pd_superoperator(memory_a1(t1, provider))


def second_use_params(t1: float, t2: float, provider: BoundaryProvider) -> dict:
    f = provider(t2).f1N
    b = b_term(t2, t1, provider)
    gad = GadParams.from_amplitudes(f, b)
    return {"gamma": gad.gamma, "p": gad.p, "lambda": PdParam.from_a1(memory_a1(t1, provider)).lam, "B": b}


def params_from_map(lam: np.ndarray, min_transfer: float = 1e-6) -> dict:
    """Recover (gamma, p, lambda) from a second-use superoperator.

    lambda enters only through ``conj(f) A_1``; below ``|f|^2 = min_transfer``
    the recovered value loses more than ~1e-9 to rounding and is reported
    as nan.
    """
    pf = (lam[3, 3] - lam[3, 0]).real
    h = lam[3, 0].real
    gamma = 1 - pf
    p = 1.0 if gamma < 1e-12 else (1 - h - pf) / gamma
    a1 = abs(lam[1, 1]) / np.sqrt(pf) if pf >= min_transfer else float("nan")
    return {"gamma": gamma, "p": p, "lambda": 1 - a1**2}


def reconstruct_map(schedule: ProtocolSchedule, oracle: Oracle | None = None) -> np.ndarray:
    """Process tomography of the last use of ``schedule`` on the many-body oracle."""
    oracle = oracle or Oracle(schedule.model)
    senders = oracle._senders(schedule)
    chan = oracle.channel_after(schedule.times[:-1], senders[:-1])
    t = schedule.times[-1]
    out = {
        k: receiver_state(evolve(attach(chan, rho, oracle.basis), t, oracle.prop))
        for k, rho in TOMOGRAPHY_INPUTS.items()
    }
    # |0><1| = rho_+ + i rho_+i - (1+i)/2 (rho_0 + rho_1), and its adjoint
    pops = out["0"] + out["1"]
    e01 = out["+"] + 1j * out["+i"] - (1 + 1j) / 2 * pops
    e10 = out["+"] - 1j * out["+i"] - (1 - 1j) / 2 * pops
    return np.stack([out["0"].reshape(4), e01.reshape(4), e10.reshape(4), out["1"].reshape(4)], axis=1)


# --------------------------------------------------------------------------
# complete positivity


def choi(lam: np.ndarray) -> np.ndarray:
    """Unnormalised Choi matrix ``sum_ij |i><j| (x) Lambda(|i><j|)`` (trace 2 if TP)."""
    lam = np.asarray(lam)
    # J[(i, a), (j, b)] = Lambda[(a, b), (i, j)]
    return lam.reshape(2, 2, 2, 2).transpose(2, 0, 3, 1).reshape(4, 4)


def choi_eigenvalues(lam: np.ndarray) -> np.ndarray:
    j = choi(lam)
    return np.linalg.eigvalsh((j + j.conj().T) / 2)


def is_trace_preserving(lam: np.ndarray, atol: float = 1e-10) -> bool:
    lam = np.asarray(lam)
    return bool(np.allclose(lam[0] + lam[3], [1, 0, 0, 1], rtol=0, atol=atol))


def is_hermiticity_preserving(lam: np.ndarray, atol: float = 1e-10) -> bool:
    j = choi(lam)
    return bool(np.allclose(j, j.conj().T, rtol=0, atol=atol))


def is_completely_positive(lam: np.ndarray, tol: float = -1e-9) -> bool:
    return bool(is_hermiticity_preserving(lam) and choi_eigenvalues(lam).min() >= tol)


def choi_output_marginal(lam: np.ndarray) -> np.ndarray:
    """Partial trace of the Choi matrix over the output (identity when TP)."""
    return np.einsum("iaja->ij", choi(lam).reshape(2, 2, 2, 2))


# --------------------------------------------------------------------------
# coherent information and the capacity bound


def entropy(rho: np.ndarray) -> float:
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > 1e-15]
    return float(-np.sum(w * np.log2(w)))


def coherent_information(lam: np.ndarray, rho: np.ndarray) -> float:
    """``S(Lambda(rho)) - S((id (x) Lambda)(psi))`` for a purification psi of rho."""
    w, v = np.linalg.eigh(rho)
    sq = (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T
    joint = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            e = np.zeros((2, 2), dtype=complex)
            e[i, j] = 1
            joint[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = apply_map(lam, sq @ e @ sq)
    return entropy(apply_map(lam, rho)) - entropy(joint)


def golden_section_max(fn, lo: float, hi: float, tol: float = 1e-9) -> tuple[float, float]:
    invphi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    x = (a + b) / 2
    return x, fn(x)


def _diag_input(q: float) -> np.ndarray:
    return np.diag([1 - q, q]).astype(complex)


def coherent_information_gad(gamma: float, p: float, full_bloch: bool = False) -> float:
    """Maximal single-letter coherent information of GAD(gamma, p), floored at 0.

    Phase covariance lets the maximisation run over diagonal inputs; with
    ``full_bloch=True`` the whole Bloch ball is searched instead.
    """
    if not (0 <= gamma <= 1 and 0 <= p <= 1):
        raise ValueError("gamma and p must lie in [0, 1]")
    lam = gad_standard(gamma, p)

    def ic(q):
        return coherent_information(lam, _diag_input(q))

    # coarse scan to bracket the maximum, then golden section inside it
    grid = np.linspace(0, 1, 21)
    k = int(np.argmax([ic(q) for q in grid]))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    _, best = golden_section_max(ic, lo, hi)
    best = max(best, ic(grid[k]))
    if full_bloch:
        best = max(best, _bloch_search(lam))
    return max(float(best), 0.0)


def _bloch_search(lam: np.ndarray, starts: int = 12, seed: int = 0) -> float:
    from scipy.optimize import minimize

    def state(x):
        r = np.tanh(np.linalg.norm(x)) * x / (np.linalg.norm(x) + 1e-300)
        return 0.5 * np.array([[1 + r[2], r[0] - 1j * r[1]], [r[0] + 1j * r[1], 1 - r[2]]])

    rng = np.random.default_rng(seed)
    best = -np.inf
    for _ in range(starts):
        res = minimize(
            lambda x: -coherent_information(lam, state(x)),
            rng.normal(size=3),
            method="Nelder-Mead",
            options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000},
        )
        best = max(best, -res.fun)
    return float(best)


def capacity_upper_bound(gamma: float, p: float) -> float:
    """Upper bound on the quantum capacity of the second-use map.

    Mixture of the two extreme amplitude-damping channels; zero once the
    damping makes them antidegradable (gamma >= 1/2).
    """
    if gamma >= 0.5:
        return 0.0
    return p * coherent_information_gad(gamma, 0.0) + (1 - p) * coherent_information_gad(gamma, 1.0)


def map_report(t1: float, t2: float, provider: BoundaryProvider, oracle: Oracle | None = None) -> dict:
    """Parameters, CP certificate and capacity bound of the second use."""
    analytic = second_use_map(t1, t2, provider)
    params = second_use_params(t1, t2, provider)
    report = {
        "t1": t1,
        "t2": t2,
        "gamma2": params["gamma"],
        "p2": params["p"],
        "lambda2": params["lambda"],
        "abs_B2": abs(params["B"]),
        "choi_eigenvalues_phi1": choi_eigenvalues(first_use_map(t1, provider)).tolist(),
        "choi_eigenvalues_phi2": choi_eigenvalues(analytic).tolist(),
        "capacity_bound_phi2": capacity_upper_bound(params["gamma"], params["p"]),
        "coherent_info_phi1": coherent_information_gad(1 - abs(provider(t1).f1N) ** 2, 1.0),
        "decomposition_residual": None,
    }
    if oracle is not None:
        rec = reconstruct_map(ProtocolSchedule((t1, t2), oracle.model), oracle)
        report["decomposition_residual"] = float(np.max(np.abs(rec - analytic)))
    return report


__all__ = [
    "GadParams",
    "PdParam",
    "b_term",
    "capacity_upper_bound",
    "choi",
    "choi_eigenvalues",
    "choi_output_marginal",
    "entropy",
    "golden_section_max",
    "is_hermiticity_preserving",
    "coherent_information",
    "coherent_information_gad",
    "first_use_map",
    "gad_standard",
    "gad_superoperator",
    "is_completely_positive",
    "is_trace_preserving",
    "map_report",
    "memory_a1",
    "params_from_map",
    "pd_superoperator",
    "reconstruct_map",
    "second_use_map",
    "second_use_params",
]
