"""Seeded self-check suite behind ``memchannel validate``."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chain import ChainSpec, propagator, pst_provider, spectral_provider
from .entanglement import apply_local_map, bell_state, concurrence, default_grid, distribution_profile, widest_zero_window
from .maps import (
    capacity_upper_bound,
    choi_eigenvalues,
    coherent_information_gad,
    first_use_map,
    is_trace_preserving,
    params_from_map,
    reconstruct_map,
    second_use_map,
    second_use_params,
)
from .memory import fidelity_sequence, memory_factor, memory_factor_direct, nth_use_fidelity
from .motzkin import enumerate_paths
from .oracle import (
    ManyBodyModel,
    Oracle,
    ProtocolSchedule,
    sector_fidelity_for,
    channel_parity,
    oracle_fidelity,
)

LOCC = 2 / 3
TAU = np.pi / 2

DEFAULT_TOLERANCES = {
    "oracle_equivalence": 1e-8,
    "closed_forms": 1e-12,
    "memory_routes": 1e-10,
    "decomposition": 1e-10,
    "choi_psd": -1e-9,
    "sector_formula": 1e-9,
    "propagator": 1e-10,
    "first_use_concurrence": 1e-10,
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0


def closed_form_a1(t1, prov):
    a = prov(t1)
    return abs(a.f11) ** 2 + abs(a.f1N) ** 2


def closed_form_a2(t1, t2, prov):
    a, b, c = prov(t1), prov(t2), prov(t1 + t2)
    coh = b.f1N * (c.f11 - a.f1N * b.fN1) - b.f11 * (c.f1N - a.f1N * b.fNN)
    return closed_form_a1(t1, prov) * closed_form_a1(t2, prov) + abs(coh) ** 2


def _check_oracle(rng, tol):
    err = 0.0
    for n_sites in (4, 5):
        spec = ChainSpec.pst(n_sites)
        orc = Oracle(spec)
        prov = pst_provider(n_sites)
        for uses in (1, 2, 3):
            for _ in range(3):
                times = rng.uniform(0, np.pi, uses)
                f_or = orc.fidelity(ProtocolSchedule(times, spec))
                err = max(err, abs(f_or - nth_use_fidelity(times, prov)))
    return err <= tol, f"max |analytic - oracle| = {err:.2e}"


def _check_closed_forms(rng, tol):
    err = 0.0
    for spec in (ChainSpec.pst(6), ChainSpec.custom(rng.uniform(0.5, 1.5, 5))):
        prov = spectral_provider(spec)
        for _ in range(20):
            t1, t2 = rng.uniform(0, np.pi, 2)
            err = max(err, abs(memory_factor([t1], prov) - closed_form_a1(t1, prov)))
            err = max(err, abs(memory_factor([t1, t2], prov) - closed_form_a2(t1, t2, prov)))
    return err <= tol, f"max |A_motzkin - A_closed| = {err:.2e}"


def _check_memory_routes(rng, tol):
    spec = ChainSpec.custom(rng.uniform(0.5, 1.5, 5))
    prov = spectral_provider(spec)
    err = 0.0
    for steps in (1, 2, 3):
        times = rng.uniform(0, np.pi, steps)
        a = memory_factor(times, prov)
        err = max(err, abs(a - memory_factor(times, prov, method="determinant")))
        err = max(err, abs(a - memory_factor_direct(times, spec)))
    return err <= tol, f"motzkin/determinant/direct spread = {err:.2e}"


def _check_motzkin_counts(rng, tol):
    counts = [len(enumerate_paths(k)) for k in range(6)]
    return counts == [1, 1, 2, 4, 9, 21], f"counts {counts}"


def _check_propagator(rng, tol):
    spec = ChainSpec.custom(rng.uniform(0.5, 1.5, 6))
    prop = propagator(spec)
    t1, t2 = rng.uniform(0, 3, 2)
    u1, u2 = prop.matrix(t1), prop.matrix(t2)
    unit = np.abs(u1 @ u1.conj().T - np.eye(spec.length)).max()
    comp = np.abs(u1 @ u2 - prop.matrix(t1 + t2)).max()
    return max(unit, comp) <= tol, f"unitarity {unit:.1e}, composition {comp:.1e}"


def _check_decomposition(rng, tol):
    err = perr = 0.0
    for n_sites in (4, 6):
        spec = ChainSpec.pst(n_sites)
        orc = Oracle(spec)
        prov = pst_provider(n_sites)
        for _ in range(3):
            t1, t2 = rng.uniform(0, np.pi, 2)
            rec = reconstruct_map(ProtocolSchedule((t1, t2), spec), orc)
            err = max(err, np.abs(rec - second_use_map(t1, t2, prov)).max())
            got, want = params_from_map(rec), second_use_params(t1, t2, prov)
            perr = max(perr, abs(got["gamma"] - want["gamma"]))
            if np.isfinite(got["lambda"]):
                perr = max(perr, abs(got["lambda"] - want["lambda"]))
            a1 = channel_parity(orc.channel_after([t1]), orc.basis)
            perr = max(perr, abs(1 - a1**2 - want["lambda"]))
    return err <= tol and perr <= 1e-9, f"map residual {err:.2e}, parameter residual {perr:.2e}"


def _check_choi(rng, tol):
    worst = np.inf
    prov = pst_provider(7)
    for _ in range(20):
        t1, t2 = rng.uniform(0, np.pi, 2)
        for lam in (first_use_map(t1, prov), second_use_map(t1, t2, prov)):
            if not is_trace_preserving(lam):
                return False, "trace preservation violated"
            worst = min(worst, choi_eigenvalues(lam).min())
    return worst >= tol, f"min Choi eigenvalue {worst:.2e}"


def _check_capacity(rng, tol):
    prov = pst_provider(6)
    bad = []
    for t in np.linspace(0.05, np.pi - 0.05, 25):
        par = second_use_params(t, t, prov)
        bound = capacity_upper_bound(par["gamma"], par["p"])
        if par["gamma"] >= 0.5:
            ok = bound == 0.0
        else:
            ok = bound <= coherent_information_gad(par["gamma"], 1.0) + 1e-12
        if not ok:
            bad.append(round(float(t), 4))
    return not bad, "ordering holds on grid" if not bad else f"violations at t={bad}"


def _check_sector_formula(rng, tol):
    err = 0.0
    xxz = ManyBodyModel(ChainSpec.pst(5), anisotropy=0.5)
    for model in (ManyBodyModel(ChainSpec.pst(5)), xxz):
        times = rng.uniform(0, np.pi, 2)
        sch = ProtocolSchedule(times, model)
        err = max(err, abs(sector_fidelity_for(sch) - oracle_fidelity(sch)))
    return err <= tol, f"max |sector formula - oracle| = {err:.2e}"


def _check_timing_error(rng, tol):
    prov = pst_provider(6)
    seq = fidelity_sequence([1.05 * TAU] * 10, prov, method="auto")
    ideal = fidelity_sequence([TAU] * 10, prov, method="auto")
    mono = all(b <= a + 1e-15 for a, b in zip(seq, seq[1:]))
    ok = abs(seq[-1] - 0.91) <= 0.01 and mono and max(abs(f - 1) for f in ideal) <= 1e-12
    return ok, f"F_10(delta=5%) = {seq[-1]:.4f}"


def _check_length_crossing(rng, tol):
    prov = pst_provider(2150)
    t = 1.01 * TAU
    f3 = nth_use_fidelity([t] * 3, prov)
    f4 = nth_use_fidelity([t] * 4, prov)
    return f4 <= LOCC < f3, f"N=2150: F_3 = {f3:.5f}, F_4 = {f4:.5f}"


def _check_concurrence(rng, tol):
    grid = default_grid()
    c1 = distribution_profile(1, 10, grid)
    c2 = distribution_profile(2, 10, grid)
    f = np.abs(pst_provider(10)(grid).f1N)
    ok = np.abs(c1 - f).max() <= tol and widest_zero_window(grid, c2) > 0.1
    bell_ok = abs(concurrence(apply_local_map(bell_state(), first_use_map(TAU, pst_provider(10)))) - 1) <= tol
    return ok and bell_ok, f"widest C_2 zero window {widest_zero_window(grid, c2):.3f}"


CHECKS: dict[str, tuple[Callable, str | None]] = {
    "propagator": (_check_propagator, "propagator"),
    "motzkin_counts": (_check_motzkin_counts, None),
    "closed_forms": (_check_closed_forms, "closed_forms"),
    "memory_routes": (_check_memory_routes, "memory_routes"),
    "oracle_equivalence": (_check_oracle, "oracle_equivalence"),
    "sector_formula": (_check_sector_formula, "sector_formula"),
    "decomposition": (_check_decomposition, "decomposition"),
    "choi_psd": (_check_choi, "choi_psd"),
    "capacity_ordering": (_check_capacity, None),
    "timing_error_anchor": (_check_timing_error, None),
    "length_crossing": (_check_length_crossing, None),
    "first_use_concurrence": (_check_concurrence, "first_use_concurrence"),
}


def run_checks(seed: int = 0, tolerances: dict | None = None, only=None) -> list[CheckResult]:
    tols = dict(DEFAULT_TOLERANCES)
    tols.update(tolerances or {})
    unknown = set(tolerances or {}) - set(DEFAULT_TOLERANCES)
    if unknown:
        raise ValueError(f"unknown tolerance keys: {sorted(unknown)}")
    results = []
    for name, (fn, tol_key) in CHECKS.items():
        if only and name not in only:
            continue
        # one child stream per check so adding checks leaves the others unchanged
        rng = np.random.default_rng([seed, list(CHECKS).index(name)])
        start = time.perf_counter()
        try:
            ok, detail = fn(rng, tols.get(tol_key))
        except Exception as exc:  # report, don't abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail, time.perf_counter() - start))
    return results
