"""Exact many-body simulation of the repeated-use transfer protocol.

The whole chain (sender, channel, receiver) is simulated in the spin basis.
Every operator is stored as blocks ``(p, q) -> matrix`` between excitation
sectors p and q; U(1) symmetry means evolution never mixes blocks, so a
block that is absent is exactly zero.  Sites are bits: site i <-> bit i-1.

Earlier senders are unknown and Haar distributed; the receiver output of
the last use is linear in each earlier sender, so averaging them is the
same as feeding the maximally mixed state.  The last use is averaged over
a finite 2-design, which is exact because the fidelity is quadratic in the
last sender's Bloch vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chain import ChainSpec
from .exceptions import GuardError

MAX_LENGTH = 14
MAX_USES = 6

# 2x2 density matrices are indexed rho[a, b] = <a|rho|b>; |1> is an excitation.
MIXED = np.eye(2, dtype=complex) / 2


def bloch_state(theta: float, phi: float) -> np.ndarray:
    """``|psi> = cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>`` as a density matrix."""
    psi = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
    return np.outer(psi, psi.conj())


def _from_bloch(r) -> np.ndarray:
    x, y, z = r
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]])


PAULI6 = tuple(
    _from_bloch(r)
    for r in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
)
SIC4 = tuple(
    _from_bloch(np.array(r) / np.sqrt(3)) for r in [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)]
)
QUADRATURES = {"pauli6": PAULI6, "sic4": SIC4}


@dataclass(frozen=True)
class ManyBodyModel:
    """U(1)-symmetric nearest-neighbour chain.

    ``H = sum_i J_i [ s+_i s-_{i+1} + s-_i s+_{i+1} + (anisotropy / 2) sz_i sz_{i+1} ]``;
    zero anisotropy is the XX chain whose one-excitation block is the
    single-particle hopping matrix.
    """

    spec: ChainSpec
    anisotropy: float = 0.0

    @property
    def length(self) -> int:
        return self.spec.length


class SectorBasis:
    """Occupation bitmasks grouped by excitation number."""

    def __init__(self, length: int):
        self.length = length
        masks = np.arange(2**length)
        pops = np.array([bin(m).count("1") for m in masks])
        self.masks = [masks[pops == k] for k in range(length + 1)]
        self.index = np.zeros(2**length, dtype=np.int64)
        for k in range(length + 1):
            self.index[self.masks[k]] = np.arange(len(self.masks[k]))
        self.popcount = pops
        edge_bits = 1 | (1 << (length - 1))
        self.edge_bits = edge_bits
        self.receiver_bit = 1 << (length - 1)
        # channel configurations: masks with both edge bits clear
        self.channel_masks = [m[(m & edge_bits) == 0] for m in self.masks]
        self.channel_index = np.zeros(2**length, dtype=np.int64)
        for k in range(length + 1):
            self.channel_index[self.channel_masks[k]] = np.arange(len(self.channel_masks[k]))

    def dim(self, k: int) -> int:
        return len(self.masks[k]) if 0 <= k <= self.length else 0

    def ordinal(self, mask: int) -> int:
        return int(self.index[mask])

    def sites(self, mask: int) -> tuple[int, ...]:
        return tuple(i + 1 for i in range(self.length) if mask >> i & 1)

    def mask(self, sites: Sequence[int]) -> int:
        return sum(1 << (s - 1) for s in sites)


@dataclass(frozen=True)
class ManyBodyState:
    """Block-structured operator on the full chain.

    Physical states of the averaged protocol only carry diagonal blocks;
    off-diagonal ones appear when a sender is prepared in a superposition.
    """

    basis: SectorBasis
    blocks: dict = field(default_factory=dict)

    def trace(self) -> complex:
        return sum(np.trace(b) for (p, q), b in self.blocks.items() if p == q)

    def purity(self) -> float:
        return float(sum(np.vdot(b, b).real for b in self.blocks.values()))

    @property
    def block_diagonal(self) -> bool:
        return all(p == q for p, q in self.blocks)

    def dense(self) -> np.ndarray:
        n = self.basis.length
        out = np.zeros((2**n, 2**n), dtype=complex)
        for (p, q), b in self.blocks.items():
            out[np.ix_(self.basis.masks[p], self.basis.masks[q])] = b
        return out

    def check(self, atol: float = 1e-10, psd_tol: float = -1e-9) -> None:
        """Raise ``AssertionError`` if not a valid density operator."""
        if abs(self.trace() - 1) > atol:
            raise AssertionError(f"trace {self.trace()} != 1")
        rho = self.dense()
        if np.max(np.abs(rho - rho.conj().T)) > atol:
            raise AssertionError("state is not Hermitian")
        if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < psd_tol:
            raise AssertionError("state is not positive semidefinite")


class SectorPropagator:
    """Per-sector eigendecompositions of a many-body Hamiltonian."""

    def __init__(self, model: ManyBodyModel, basis: SectorBasis | None = None):
        self.model = model
        self.basis = basis or SectorBasis(model.length)
        self._eig: dict = {}

    def hamiltonian(self, k: int) -> np.ndarray:
        return sector_hamiltonian(self.model, self.basis, k)

    def eig(self, k: int):
        if k not in self._eig:
            self._eig[k] = np.linalg.eigh(self.hamiltonian(k))
        return self._eig[k]

    def unitary(self, k: int, t: float) -> np.ndarray:
        w, v = self.eig(k)
        return (v * np.exp(-1j * w * t)) @ v.conj().T


def sector_hamiltonian(model: ManyBodyModel, basis: SectorBasis, k: int) -> np.ndarray:
    n = model.length
    masks = basis.masks[k]
    h = np.zeros((len(masks), len(masks)))
    cpl = model.spec.couplings
    delta = model.anisotropy
    for col, m in enumerate(masks):
        for i in range(n - 1):
            a, b = m >> i & 1, m >> (i + 1) & 1
            if delta:
                h[col, col] += 0.5 * delta * cpl[i] * (1 - 2 * a) * (1 - 2 * b)
            if a != b:
                row = basis.index[m ^ (0b11 << i)]
                h[row, col] += cpl[i]
    return h


def build_many_body_hamiltonian(
    model: ManyBodyModel | ChainSpec, k_max: int | None = None, max_length: int = MAX_LENGTH
) -> list[np.ndarray]:
    """Hamiltonian blocks for sectors 0..k_max."""
    if isinstance(model, ChainSpec):
        model = ManyBodyModel(model)
    n = model.length
    if n > max_length:
        raise GuardError(f"many-body oracle limited to N <= {max_length} (got {n})")
    k_max = n if k_max is None else min(k_max, n)
    basis = SectorBasis(n)
    return [sector_hamiltonian(model, basis, k) for k in range(k_max + 1)]


def vacuum(basis: SectorBasis) -> ManyBodyState:
    return ManyBodyState(basis, {(0, 0): np.ones((1, 1), dtype=complex)})


def evolve(state: ManyBodyState, t: float, prop: SectorPropagator) -> ManyBodyState:
    if t == 0:
        return ManyBodyState(state.basis, dict(state.blocks))
    us = {}
    for p, q in state.blocks:
        for k in (p, q):
            if k not in us:
                us[k] = prop.unitary(k, t)
    return ManyBodyState(
        state.basis,
        {(p, q): us[p] @ b @ us[q].conj().T for (p, q), b in state.blocks.items()},
    )


def channel_state(state: ManyBodyState) -> dict:
    """Trace out sender and receiver; blocks indexed by channel configurations."""
    bs = state.basis
    out: dict = {}
    for (p, q), x in state.blocks.items():
        mp, mq = bs.masks[p], bs.masks[q]
        ep, eq = mp & bs.edge_bits, mq & bs.edge_bits
        for e in np.unique(ep):
            ra = np.nonzero(ep == e)[0]
            cb = np.nonzero(eq == e)[0]
            if not len(ra) or not len(cb):
                continue
            ne = bs.popcount[e]
            key = (p - ne, q - ne)
            if key not in out:
                out[key] = np.zeros(
                    (len(bs.channel_masks[key[0]]), len(bs.channel_masks[key[1]])), dtype=complex
                )
            rows = bs.channel_index[mp[ra] & ~bs.edge_bits]
            cols = bs.channel_index[mq[cb] & ~bs.edge_bits]
            out[key][np.ix_(rows, cols)] += x[np.ix_(ra, cb)]
    return out


def attach(channel: dict, sender: np.ndarray, basis: SectorBasis) -> ManyBodyState:
    """Channel blocks plus a sender at site 1 and an empty receiver at site N."""
    blocks: dict = {}
    for (kp, kq), x in channel.items():
        cp, cq = basis.channel_masks[kp], basis.channel_masks[kq]
        for a in (0, 1):
            for b in (0, 1):
                w = sender[a, b]
                if w == 0:
                    continue
                key = (kp + a, kq + b)
                if key not in blocks:
                    blocks[key] = np.zeros((basis.dim(key[0]), basis.dim(key[1])), dtype=complex)
                rows = basis.index[cp | a]
                cols = basis.index[cq | b]
                blocks[key][np.ix_(rows, cols)] += w * x
    return ManyBodyState(basis, blocks)


def swap_out_in(state: ManyBodyState, fresh_sender: np.ndarray) -> ManyBodyState:
    """Replace sender and receiver qubits with a fresh sender and |0> receiver."""
    return attach(channel_state(state), np.asarray(fresh_sender, dtype=complex), state.basis)


def receiver_state(state: ManyBodyState) -> np.ndarray:
    bs = state.basis
    r = np.zeros((2, 2), dtype=complex)
    rbit = bs.receiver_bit
    for (p, q), blk in state.blocks.items():
        mp = bs.masks[p]
        for x in (0, 1):
            y = x + q - p
            if y not in (0, 1):
                continue
            ra = np.nonzero((mp & rbit) == (x * rbit))[0]
            partner = (mp[ra] & ~rbit) | (y * rbit)
            ok = bs.popcount[partner] == q
            ra, partner = ra[ok], partner[ok]
            r[x, y] += np.sum(blk[ra, bs.index[partner]])
    return r


def channel_parity(channel: dict, basis: SectorBasis) -> float:
    """``<(-1)^(channel excitations)>``; with maximally mixed earlier senders it equals A."""
    return float(sum((-1) ** kp * np.trace(x).real for (kp, kq), x in channel.items() if kp == kq))


def channel_sector_elements(state: ManyBodyState | dict, basis: SectorBasis | None = None) -> dict:
    """Channel density elements per excitation sector.

    Returns ``{k: (configs, rho_k)}`` with ``configs`` the channel site sets
    (1-based) labelling rows and columns of ``rho_k``.
    """
    if isinstance(state, ManyBodyState):
        basis = state.basis
        chan = channel_state(state)
    else:
        chan = state
    out = {}
    for (p, q), x in sorted(chan.items()):
        if p != q:
            continue
        configs = [basis.sites(int(m)) for m in basis.channel_masks[p]]
        out[p] = (configs, x)
    return out


# --------------------------------------------------------------------------
# protocol


@dataclass(frozen=True)
class ProtocolSchedule:
    """Readout intervals plus how the senders are prepared.

    ``senders="haar"`` averages every sender over the Bloch sphere;
    otherwise it is a list of ``(theta, phi)`` Bloch angles, one per use.
    """

    times: tuple[float, ...]
    model: ManyBodyModel
    senders: object = "haar"

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", times)
        if not times:
            raise ValueError("schedule needs at least one use")
        if any(t < 0 for t in times):
            raise ValueError("readout intervals must be non-negative")
        if isinstance(self.model, ChainSpec):
            object.__setattr__(self, "model", ManyBodyModel(self.model))
        if self.senders != "haar":
            angles = tuple(tuple(map(float, a)) for a in self.senders)
            if len(angles) != len(times):
                raise ValueError("need one (theta, phi) pair per use")
            object.__setattr__(self, "senders", angles)

    @property
    def uses(self) -> int:
        return len(self.times)


class Oracle:
    """Runs schedules on one model, caching sector eigendecompositions."""

    def __init__(self, model: ManyBodyModel | ChainSpec, max_length: int = MAX_LENGTH, max_uses: int = MAX_USES):
        if isinstance(model, ChainSpec):
            model = ManyBodyModel(model)
        if model.length > max_length:
            raise GuardError(f"many-body oracle limited to N <= {max_length} (got {model.length})")
        self.model = model
        self.max_uses = max_uses
        self.basis = SectorBasis(model.length)
        self.prop = SectorPropagator(model, self.basis)

    def _check(self, uses: int):
        if uses > self.max_uses:
            raise GuardError(f"many-body oracle limited to n <= {self.max_uses} uses (got {uses})")

    def channel_after(self, times: Sequence[float], senders: Sequence[np.ndarray] | None = None) -> dict:
        """Channel blocks after the uses with readout intervals ``times``."""
        self._check(len(times) + 1)
        chan = {(0, 0): np.ones((1, 1), dtype=complex)}
        for i, t in enumerate(times):
            s = MIXED if senders is None else senders[i]
            state = evolve(attach(chan, s, self.basis), t, self.prop)
            chan = channel_state(state)
        return chan

    def run(self, times: Sequence[float], senders: Sequence[np.ndarray]) -> ManyBodyState:
        """Full state right after the last evolution."""
        chan = self.channel_after(times[:-1], senders[:-1])
        return evolve(attach(chan, senders[-1], self.basis), times[-1], self.prop)

    def receiver_map(self, channel: dict, t: float) -> np.ndarray:
        """4x4 superoperator from last sender to receiver, basis (00, 01, 10, 11)."""
        lam = np.zeros((4, 4), dtype=complex)
        for a in (0, 1):
            for b in (0, 1):
                e = np.zeros((2, 2), dtype=complex)
                e[a, b] = 1
                out = receiver_state(evolve(attach(channel, e, self.basis), t, self.prop))
                lam[:, 2 * a + b] = out.reshape(4)
        return lam

    def use_map(self, schedule: ProtocolSchedule) -> np.ndarray:
        senders = self._senders(schedule)
        chan = self.channel_after(schedule.times[:-1], senders[:-1])
        return self.receiver_map(chan, schedule.times[-1])

    def _senders(self, schedule: ProtocolSchedule):
        if schedule.senders == "haar":
            return [MIXED] * schedule.uses
        return [bloch_state(th, ph) for th, ph in schedule.senders]

    def fidelity(self, schedule: ProtocolSchedule, quadrature: str = "pauli6", phase_correction: bool = True) -> float:
        lam = self.use_map(schedule)
        if phase_correction:
            lam = phase_corrected(lam)
        if schedule.senders == "haar":
            states = QUADRATURES[quadrature]
        else:
            states = [bloch_state(*schedule.senders[-1])]
        return float(np.mean([state_fidelity(lam, rho) for rho in states]))


def phase_corrected(lam: np.ndarray) -> np.ndarray:
    """Follow the map by the receiver z-rotation making coherence transfer real positive."""
    phi = np.angle(lam[1, 1])
    return np.diag([1, np.exp(-1j * phi), np.exp(1j * phi), 1]) @ lam


def apply_map(lam: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return (lam @ rho.reshape(4)).reshape(2, 2)


def state_fidelity(lam: np.ndarray, rho: np.ndarray) -> float:
    """``<psi| Lambda(|psi><psi|) |psi>`` for a pure ``rho``."""
    return float(np.real(np.trace(rho @ apply_map(lam, rho))))


def oracle_fidelity(
    schedule: ProtocolSchedule,
    quadrature: str = "pauli6",
    phase_correction: bool = True,
    max_length: int = MAX_LENGTH,
    max_uses: int = MAX_USES,
) -> float:
    """Average fidelity of the last use of ``schedule`` by exact simulation."""
    oracle = Oracle(schedule.model, max_length, max_uses)
    return oracle.fidelity(schedule, quadrature, phase_correction)


# --------------------------------------------------------------------------
# sector-resolved fidelity for general U(1) chains


def sector_fidelity(elements: dict, t: float, prop: SectorPropagator) -> float:
    """Average fidelity from channel sector elements and many-body amplitudes.

    Coherence term: ``sum_k sum_{p,q} rho_pq sum_p' f_{1p}^{p'N} conj(f_q^{p'})``;
    population term: ``sum_k sum_{p,q} rho_pq (sum_p' f_p^p' conj(f_q^p')
    - sum_p'' f_{1p}^p'' conj(f_{1q}^p''))`` with p', p'' avoiding the
    receiver.
    """
    bs = prop.basis
    n = bs.length
    rbit = bs.receiver_bit
    coherence = 0j
    population = 0.0
    for k, (configs, rho) in elements.items():
        if k > n - 2:
            continue
        cmasks = bs.channel_masks[k]
        in_k = bs.index[cmasks]
        in_k1 = bs.index[cmasks | 1]
        uk = prop.unitary(k, t)
        uk1 = prop.unitary(k + 1, t)
        # output configurations in sites 1..N-1
        out_k = bs.masks[k][(bs.masks[k] & rbit) == 0]
        out_k1 = bs.masks[k + 1][(bs.masks[k + 1] & rbit) == 0]
        m1 = uk1[np.ix_(bs.index[out_k | rbit], in_k1)]
        m0 = uk[np.ix_(bs.index[out_k], in_k)]
        coherence += np.trace(m1 @ rho @ m0.conj().T)
        w1 = uk1[np.ix_(bs.index[out_k1], in_k1)]
        population += np.real(np.trace(m0 @ rho @ m0.conj().T) - np.trace(w1 @ rho @ w1.conj().T))
    return float(0.5 + abs(coherence) / 3 + population / 6)


def sector_fidelity_for(schedule: ProtocolSchedule, max_length: int = MAX_LENGTH, max_uses: int = MAX_USES) -> float:
    """Run earlier uses exactly, then evaluate the sector-resolved formula."""
    if schedule.senders != "haar":
        raise ValueError("sector-resolved formula assumes Haar-averaged senders")
    oracle = Oracle(schedule.model, max_length, max_uses)
    chan = oracle.channel_after(schedule.times[:-1])
    elements = channel_sector_elements(chan, oracle.basis)
    return sector_fidelity(elements, schedule.times[-1], oracle.prop)
