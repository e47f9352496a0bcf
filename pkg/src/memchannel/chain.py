"""Single-excitation dynamics of spin-1/2 XX chains.

Site labels are 1-based: the sender is site 1, the receiver is site N and
the channel is made of sites 2..N-1.  In the one-excitation sector the XX
chain is a tridiagonal hopping matrix ``h`` with ``h[i, i+1] = J_i`` and the
transition amplitude from site i to site j is

    f_i^j(t) = <j| exp(-i h t) |i>.

With the perfect-state-transfer couplings ``J_i = sqrt(i (N - i))`` the
transfer time is pi/2 and the edge amplitudes have the closed forms
``f_1^1 = (cos t)^(N-1)`` and ``f_1^N = (-i sin t)^(N-1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

SCHEMES = ("pst", "uniform", "custom")

# edge-to-edge amplitude kinds, written source-then-destination
KINDS = ("11", "1N", "N1", "NN")


@dataclass(frozen=True)
class ChainSpec:
    """Chain length plus nearest-neighbour couplings."""

    length: int
    scheme: str = "pst"
    couplings: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown coupling scheme {self.scheme!r}")
        n = int(self.length)
        if n < 3:
            raise ValueError(f"chain needs at least 3 sites (got N={n})")
        object.__setattr__(self, "length", n)
        if self.scheme == "pst":
            cpl = tuple(pst_couplings(n))
            if self.couplings and not np.allclose(self.couplings, cpl, rtol=0, atol=1e-12):
                raise ValueError("couplings disagree with the PST scheme")
        elif self.scheme == "uniform":
            cpl = tuple(float(c) for c in self.couplings) or (1.0,) * (n - 1)
            if len(cpl) == 1:
                cpl = cpl * (n - 1)
            if len(set(cpl)) != 1:
                raise ValueError("uniform scheme needs equal couplings")
        else:
            cpl = tuple(float(c) for c in self.couplings)
        if len(cpl) != n - 1:
            raise ValueError(f"expected {n - 1} couplings, got {len(cpl)}")
        if not np.all(np.isfinite(cpl)):
            raise ValueError("couplings must be finite")
        object.__setattr__(self, "couplings", cpl)

    @classmethod
    def pst(cls, length: int) -> "ChainSpec":
        return cls(length, "pst")

    @classmethod
    def uniform(cls, length: int, coupling: float = 1.0) -> "ChainSpec":
        return cls(length, "uniform", (float(coupling),) * (int(length) - 1))

    @classmethod
    def custom(cls, couplings: Sequence[float]) -> "ChainSpec":
        return cls(len(couplings) + 1, "custom", tuple(couplings))

    @property
    def mirror_symmetric(self) -> bool:
        return bool(np.allclose(self.couplings, self.couplings[::-1], rtol=0, atol=1e-14))


def pst_couplings(length: int) -> np.ndarray:
    i = np.arange(1, length)
    return np.sqrt(i * (length - i))


def build_single_particle_hamiltonian(spec: ChainSpec) -> np.ndarray:
    """Tridiagonal hopping matrix with zero diagonal."""
    cpl = np.asarray(spec.couplings, dtype=float)
    if cpl.shape != (spec.length - 1,):
        raise ValueError("coupling list has the wrong length")
    return np.diag(cpl, 1) + np.diag(cpl, -1)


@dataclass(frozen=True)
class BoundaryAmplitudes:
    """Edge-to-edge transition amplitudes at time ``t``.

    Fields may be numpy arrays when the provider is vectorised over chain
    length; all arithmetic in the package broadcasts over them.
    """

    f11: complex
    f1N: complex
    fN1: complex
    fNN: complex
    t: float

    def get(self, kind: str):
        return getattr(self, "f" + kind)

    def matrix(self) -> np.ndarray:
        """2x2 block ``E[dst, src]`` with rows/cols ordered (1, N)."""
        return np.array([[self.f11, self.fN1], [self.f1N, self.fNN]])


BoundaryProvider = Callable[[float], BoundaryAmplitudes]


@dataclass(frozen=True)
class SpectralPropagator:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def size(self) -> int:
        return len(self.eigenvalues)

    def matrix(self, t: float) -> np.ndarray:
        """Full propagator ``F[i, j] = f_{i+1}^{j+1}(t)``.

        ``exp(-i h t)`` is symmetric for real symmetric ``h`` so the
        index order only matters for the docstring.
        """
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * t)) @ v.T

    def amplitude(self, i: int, j: int, t: float) -> complex:
        n = self.size
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexError(f"sites must lie in 1..{n} (got {i}, {j})")
        v = self.eigenvectors
        return complex(np.sum(v[j - 1] * np.exp(-1j * self.eigenvalues * t) * v[i - 1]))

    def boundary(self, t: float) -> BoundaryAmplitudes:
        n = self.size
        return BoundaryAmplitudes(
            f11=self.amplitude(1, 1, t),
            f1N=self.amplitude(1, n, t),
            fN1=self.amplitude(n, 1, t),
            fNN=self.amplitude(n, n, t),
            t=t,
        )


def diagonalize(h: np.ndarray) -> SpectralPropagator:
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("hamiltonian must be a square matrix")
    if not np.allclose(h, h.T, rtol=0, atol=1e-12):
        raise ValueError("hamiltonian must be symmetric")
    # eigh raises LinAlgError on non-convergence; let it propagate
    evals, evecs = np.linalg.eigh(h)
    return SpectralPropagator(evals, evecs)


def propagator(spec: ChainSpec) -> SpectralPropagator:
    return diagonalize(build_single_particle_hamiltonian(spec))


def amplitude(prop: SpectralPropagator, i: int, j: int, t: float) -> complex:
    """``f_i^j(t)`` from the spectral decomposition."""
    return prop.amplitude(i, j, t)


_MINUS_I_POWERS = np.array([1, -1j, -1, 1j])


def _real_power(x, p):
    """``x**p`` for real ``x`` and integer ``p >= 0`` via log-magnitude."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p)
    mag = np.abs(x)
    with np.errstate(divide="ignore"):
        logmag = np.where(mag > 0, np.log(np.where(mag > 0, mag, 1.0)), -np.inf)
    val = np.where(p == 0, 1.0, np.exp(p * logmag))
    sign = np.where((x < 0) & (p % 2 == 1), -1.0, 1.0)
    return sign * val


def pst_boundary_closed_form(length, t: float) -> BoundaryAmplitudes:
    """Closed-form edge amplitudes of the PST chain; O(1) in ``length``.

    ``length`` or ``t`` may be arrays; the fields then broadcast over them.
    """
    n = np.asarray(length)
    if np.any(n < 2):
        raise ValueError("PST closed form needs N >= 2")
    p = n - 1
    diag = _real_power(np.cos(t), p)
    off = _real_power(np.sin(t), p) * _MINUS_I_POWERS[p % 4]
    if np.ndim(diag) == 0:
        diag, off = complex(diag), complex(off)
    return BoundaryAmplitudes(f11=diag, f1N=off, fN1=off, fNN=diag, t=t)


def pst_provider(length) -> BoundaryProvider:
    """Closed-form boundary provider for one or many PST chain lengths."""

    def provider(t):
        return pst_boundary_closed_form(length, t)

    return provider


def spectral_provider(spec: ChainSpec) -> BoundaryProvider:
    return propagator(spec).boundary
