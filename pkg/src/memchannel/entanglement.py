"""Entanglement distribution: half of a Bell pair sent through one channel use."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import BoundaryProvider, ChainSpec, pst_provider, spectral_provider
from .maps import first_use_map, is_trace_preserving, reconstruct_map, second_use_map
from .oracle import Oracle, ProtocolSchedule

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
YY = np.kron(SIGMA_Y, SIGMA_Y)
ZERO_THRESHOLD = 1e-12
DEFAULT_POINTS = 600


def bell_state() -> np.ndarray:
    psi = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)
    return np.outer(psi, psi.conj())


def werner_state(visibility: float) -> np.ndarray:
    return visibility * bell_state() + (1 - visibility) * np.eye(4) / 4


@dataclass(frozen=True)
class TwoQubitState:
    """Density matrix of (s', x) with index 2*a + b for qubits a (s') and b (x)."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise ValueError("two-qubit state must be 4x4")
        object.__setattr__(self, "rho", rho)

    def check(self, atol: float = 1e-10, psd_tol: float = -1e-9) -> None:
        rho = self.rho
        if not np.allclose(rho, rho.conj().T, rtol=0, atol=atol):
            raise ValueError("state is not Hermitian")
        if abs(np.trace(rho) - 1) > atol:
            raise ValueError(f"trace {np.trace(rho).real} != 1")
        if np.linalg.eigvalsh(rho).min() < psd_tol:
            raise ValueError("state is not positive semidefinite")


def apply_local_map(state, lam: np.ndarray) -> TwoQubitState:
    """``(id (x) Lambda)`` with ``Lambda`` acting on the second qubit."""
    lam = np.asarray(lam)
    if not is_trace_preserving(lam):
        raise ValueError("map is not trace preserving")
    rho = state.rho if isinstance(state, TwoQubitState) else np.asarray(state)
    r = rho.reshape(2, 2, 2, 2)  # (a, b, a', b')
    out = np.einsum("xyBC,aBbC->axby", lam.reshape(2, 2, 2, 2), r)
    return TwoQubitState(out.reshape(4, 4))


def concurrence(state) -> float:
    """Wootters concurrence.

    The lambdas are the singular values of ``V^T (Y (x) Y) V`` with
    ``rho = V V^dag``; dropping numerically null eigenvalues of rho avoids the
    sqrt(eps) noise of the ``rho rho~`` eigenvalue route.
    """
    rho = state.rho if isinstance(state, TwoQubitState) else np.asarray(state)
    w, u = np.linalg.eigh((rho + rho.conj().T) / 2)
    keep = w > 1e-14 * max(w.max(), 1e-300)
    v = u[:, keep] * np.sqrt(w[keep])
    lam = np.zeros(4)
    sv = np.linalg.svd(v.T @ YY @ v, compute_uv=False)
    lam[: len(sv)] = sv
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def default_grid(points: int = DEFAULT_POINTS) -> np.ndarray:
    """Cell midpoints of a uniform partition of (0, pi)."""
    return (np.arange(points) + 0.5) * np.pi / points


def _provider(spec: ChainSpec) -> BoundaryProvider:
    return pst_provider(spec.length) if spec.scheme == "pst" else spectral_provider(spec)


def distribution_profile(n: int, spec, grid=None, method: str = "map", oracle: Oracle | None = None) -> np.ndarray:
    """Concurrence of (s', r) after the n-th use, all intervals equal to t.

    ``method="map"`` uses the analytic first/second use maps (n <= 2);
    ``"oracle"`` reconstructs the map by many-body tomography.
    """
    if isinstance(spec, int):
        spec = ChainSpec.pst(spec)
    if n < 1:
        raise ValueError("use index starts at 1")
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    if method not in ("map", "oracle"):
        raise ValueError(f"unknown method {method!r}")
    if method == "map" and n > 2:
        method = "oracle"
    if method == "oracle":
        oracle = oracle or Oracle(spec)
        oracle._check(n)
    prov = _provider(spec)
    bell = bell_state()
    out = np.empty(len(grid))
    for k, t in enumerate(grid):
        if method == "oracle":
            lam = reconstruct_map(ProtocolSchedule((t,) * n, oracle.model), oracle)
        elif n == 1:
            lam = first_use_map(t, prov)
        else:
            lam = second_use_map(t, t, prov)
        out[k] = concurrence(apply_local_map(bell, lam))
    return out


def zero_windows(grid, values, threshold: float = ZERO_THRESHOLD) -> list[tuple[float, float]]:
    """Maximal runs of consecutive grid points with ``values < threshold``."""
    grid = np.asarray(grid)
    mask = np.asarray(values) < threshold
    runs = []
    start = None
    for i, z in enumerate(mask):
        if z and start is None:
            start = i
        if not z and start is not None:
            runs.append((float(grid[start]), float(grid[i - 1])))
            start = None
    if start is not None:
        runs.append((float(grid[start]), float(grid[-1])))
    return runs


def widest_zero_window(grid, values, threshold: float = ZERO_THRESHOLD) -> float:
    return max((b - a for a, b in zero_windows(grid, values, threshold)), default=0.0)
