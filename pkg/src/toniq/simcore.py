"""Exact quantum simulation primitives.

Pure statevector evolution for noiseless runs, density-matrix evolution
with Kraus channels for noisy runs, plus classical readout-error handling.

Basis convention is little-endian throughout: amplitude index k assigns
qubit i the bit (k >> i) & 1. Two-qubit operators use the local ordering
v = bit(targets[0]) + 2*bit(targets[1]).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidChannelError, ValidationError

GATE_KINDS = ("H", "RX", "RZ", "RZZ", "CNOT", "SWAP")
ROTATION_KINDS = ("RX", "RZ", "RZZ")

_SQRT05 = np.sqrt(0.5)


@dataclass
class StateVector:
    """Pure state: 2^n complex amplitudes, unit norm."""

    n: int
    amp: np.ndarray

    def __post_init__(self):
        self.amp = np.asarray(self.amp, dtype=complex)
        if self.amp.shape != (1 << self.n,):
            raise ValidationError(f"amplitude vector must have length {1 << self.n}")
        norm = float(np.sum(np.abs(self.amp) ** 2))
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"state norm {norm} deviates from 1")

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        amp = np.zeros(1 << n, dtype=complex)
        amp[0] = 1.0
        return cls(n, amp)


@dataclass
class DensityMatrix:
    """Mixed state: 2^n x 2^n density operator."""

    n: int
    rho: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        dim = 1 << self.n
        if self.rho.shape != (dim, dim):
            raise ValidationError(f"rho must be {dim}x{dim}")
        tr = complex(np.trace(self.rho)).real
        if abs(tr - 1.0) > 1e-8:
            raise ValidationError(f"trace {tr} deviates from 1")

    @classmethod
    def zero(cls, n: int) -> "DensityMatrix":
        dim = 1 << n
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return cls(n, rho)

    def validate(self, atol: float = 1e-8) -> None:
        """Full physicality check (Hermitian, PSD); used by tests."""
        if not np.allclose(self.rho, self.rho.conj().T, atol=1e-10):
            raise ValidationError("rho is not Hermitian")
        if np.linalg.eigvalsh(self.rho).min() < -atol:
            raise ValidationError("rho has a significantly negative eigenvalue")


@dataclass(frozen=True)
class GateOp:
    """One gate: kind, target qubit(s), and an angle for rotation kinds."""

    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValidationError(f"unknown gate kind {self.kind!r}")
        targets = tuple(int(t) for t in self.targets)
        object.__setattr__(self, "targets", targets)
        arity = 2 if self.kind in ("RZZ", "CNOT", "SWAP") else 1
        if len(targets) != arity:
            raise ValidationError(f"{self.kind} takes {arity} target(s), got {targets}")
        if len(set(targets)) != len(targets):
            raise ValidationError(f"targets must be distinct, got {targets}")
        if any(t < 0 for t in targets):
            raise ValidationError(f"negative target in {targets}")
        if self.kind in ROTATION_KINDS:
            if self.angle is None:
                raise ValidationError(f"{self.kind} requires an angle")
        elif self.angle is not None:
            raise ValidationError(f"{self.kind} takes no angle")


@dataclass(frozen=True)
class NoiseChannel:
    """A CPTP map given by Kraus operators of one common dimension."""

    kraus: tuple[np.ndarray, ...]

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ops:
            raise InvalidChannelError("channel needs at least one Kraus operator")
        dim = ops[0].shape[0]
        if any(k.shape != (dim, dim) for k in ops):
            raise InvalidChannelError("Kraus operators must share one square shape")
        total = sum(k.conj().T @ k for k in ops)
        if not np.allclose(total, np.eye(dim), atol=1e-8):
            raise InvalidChannelError("sum K^dag K != identity (completeness violated)")
        object.__setattr__(self, "kraus", ops)

    @property
    def num_qubits(self) -> int:
        return int(np.log2(self.kraus[0].shape[0]))


# ---------------------------------------------------------------------------
# Gate matrices (local basis; two-qubit ordering v = b_t0 + 2*b_t1)
# ---------------------------------------------------------------------------

def gate_matrix(gate: GateOp) -> np.ndarray:
    return matrix_of(gate.kind, gate.angle)


def matrix_of(kind: str, theta: float | None = None) -> np.ndarray:
    if kind == "H":
        return np.array([[_SQRT05, _SQRT05], [_SQRT05, -_SQRT05]], dtype=complex)
    if kind == "RX":
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "RZ":
        return np.array(
            [[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex
        )
    if kind == "RZZ":
        # exp(-i theta/2 Z@Z): phase e^{-i theta/2} on aligned bits, e^{+i} else
        lo, hi = np.exp(-0.5j * theta), np.exp(0.5j * theta)
        return np.diag([lo, hi, hi, lo]).astype(complex)
    if kind == "CNOT":
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = m[2, 2] = 1.0  # control bit (targets[0]) = 0: identity
        m[3, 1] = m[1, 3] = 1.0  # control = 1: flip targets[1]
        return m
    if kind == "SWAP":
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = m[3, 3] = 1.0
        m[2, 1] = m[1, 2] = 1.0
        return m
    raise ValidationError(f"unknown gate kind {kind!r}")


# ---------------------------------------------------------------------------
# Index machinery: for targets (t0[, t1]) of an n-qubit register, a (d, L)
# integer array whose row v lists all basis indices with the target bits in
# pattern v. Cached; these arrays dominate the per-gate inner loop.
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _pattern_indices(n: int, targets: tuple[int, ...]) -> np.ndarray:
    for t in targets:
        if not 0 <= t < n:
            raise ValidationError(f"target {t} out of range for {n} qubits")
    free = [b for b in range(n) if b not in targets]
    base = np.zeros(1, dtype=np.int64)
    for b in free:
        base = (base[:, None] | np.array([0, 1 << b])[None, :]).ravel()
    d = 1 << len(targets)
    rows = np.empty((d, base.size), dtype=np.int64)
    for v in range(d):
        offset = sum(((v >> j) & 1) << t for j, t in enumerate(targets))
        rows[v] = base + offset
    return rows


def _apply_matrix_sv(amp: np.ndarray, mat: np.ndarray, targets: tuple[int, ...], n: int):
    idx = _pattern_indices(n, targets)
    amp[idx] = mat @ amp[idx]


def _apply_matrix_dm(rho: np.ndarray, mat: np.ndarray, targets: tuple[int, ...], n: int):
    idx = _pattern_indices(n, targets)
    rho[idx, :] = np.tensordot(mat, rho[idx, :], axes=(1, 0))
    rho[:, idx] = np.tensordot(mat.conj(), rho[:, idx], axes=(1, 1)).transpose(1, 0, 2)


def apply_gate(state: StateVector | DensityMatrix, gate: GateOp):
    """Apply a unitary gate in place; returns the state."""
    mat = gate_matrix(gate)
    if isinstance(state, StateVector):
        _apply_matrix_sv(state.amp, mat, gate.targets, state.n)
    elif isinstance(state, DensityMatrix):
        _apply_matrix_dm(state.rho, mat, gate.targets, state.n)
    else:
        raise ValidationError(f"unsupported state type {type(state).__name__}")
    return state


def apply_channel(
    rho: DensityMatrix, ch: NoiseChannel, targets: tuple[int, ...] | list[int]
) -> DensityMatrix:
    """rho <- sum_K K rho K^dag on the given target qubits (in place)."""
    targets = tuple(int(t) for t in targets)
    if ch.num_qubits != len(targets):
        raise ValidationError(
            f"channel acts on {ch.num_qubits} qubit(s), got targets {targets}"
        )
    idx = _pattern_indices(rho.n, targets)
    acc = np.zeros_like(rho.rho)
    for k in ch.kraus:
        term = rho.rho.copy()
        term[idx, :] = np.tensordot(k, term[idx, :], axes=(1, 0))
        term[:, idx] = np.tensordot(k.conj(), term[:, idx], axes=(1, 1)).transpose(1, 0, 2)
        acc += term
    rho.rho = acc
    return rho


# ---------------------------------------------------------------------------
# Standard channels
# ---------------------------------------------------------------------------

_PAULIS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def depolarizing_channel(p: float, num_qubits: int = 1) -> NoiseChannel:
    """rho -> (1-p) rho + p I/d on the targets (p=1 fully mixes them)."""
    if not 0.0 <= p <= 1.0:
        raise ValidationError(f"depolarizing probability {p} outside [0, 1]")
    if num_qubits == 1:
        labels = ["I", "X", "Y", "Z"]
        mats = [_PAULIS[a] for a in labels]
    elif num_qubits == 2:
        labels = [a + b for a in "IXYZ" for b in "IXYZ"]
        mats = [np.kron(_PAULIS[b], _PAULIS[a]) for a, b in labels]
    else:
        raise ValidationError("depolarizing channel supports 1 or 2 qubits")
    d2 = len(mats)
    kraus = [np.sqrt(1 - p * (d2 - 1) / d2) * mats[0]]
    kraus += [np.sqrt(p / d2) * m for m in mats[1:]]
    return NoiseChannel(tuple(kraus))


def amplitude_damping_channel(gamma: float) -> NoiseChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError(f"damping parameter {gamma} outside [0, 1]")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return NoiseChannel((k0, k1))


def dephasing_channel(prob: float) -> NoiseChannel:
    """Phase flip with probability prob: rho -> (1-prob) rho + prob Z rho Z."""
    if not 0.0 <= prob <= 0.5 + 1e-12:
        raise ValidationError(f"dephasing probability {prob} outside [0, 0.5]")
    k0 = np.sqrt(1 - prob) * _PAULIS["I"]
    k1 = np.sqrt(prob) * _PAULIS["Z"]
    return NoiseChannel((k0, k1))


# ---------------------------------------------------------------------------
# In-place channel actions on raw density-matrix arrays. Algebraically equal
# to apply_channel with the matching Kraus sets, but block arithmetic instead
# of per-operator conjugation; this is the hot path for noisy execution.
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _block_mesh(n: int, targets: tuple[int, ...]):
    """Open meshes selecting block (v, w) of rho for the target qubits."""
    idx = _pattern_indices(n, targets)
    d = idx.shape[0]
    return tuple(tuple(np.ix_(idx[v], idx[w]) for w in range(d)) for v in range(d))


def depolarize_in_place(rho: np.ndarray, n: int, targets: tuple[int, ...], p: float):
    """rho <- (1-p) rho + p (I/d (x) Tr_targets rho) on 1 or 2 qubits."""
    if p == 0.0:
        return
    mesh = _block_mesh(n, targets)
    d = len(mesh)
    mix = rho[mesh[0][0]].copy()
    for v in range(1, d):
        mix += rho[mesh[v][v]]
    mix *= p / d
    rho *= 1.0 - p
    for v in range(d):
        rho[mesh[v][v]] += mix


def damp_dephase_in_place(rho: np.ndarray, n: int, q: int, gamma: float, flip: float):
    """Amplitude damping (gamma) then phase flip (flip) on qubit q, in place."""
    if gamma == 0.0 and flip == 0.0:
        return
    mesh = _block_mesh(n, (q,))
    off = np.sqrt(1.0 - gamma) * (1.0 - 2.0 * flip)
    if gamma != 0.0:
        rho[mesh[0][0]] += gamma * rho[mesh[1][1]]
        rho[mesh[1][1]] *= 1.0 - gamma
    rho[mesh[0][1]] *= off
    rho[mesh[1][0]] *= off


# ---------------------------------------------------------------------------
# Measurement statistics
# ---------------------------------------------------------------------------

def probabilities(state: StateVector | DensityMatrix) -> np.ndarray:
    """Outcome distribution over the 2^n computational basis states."""
    if isinstance(state, StateVector):
        p = np.abs(state.amp) ** 2
    elif isinstance(state, DensityMatrix):
        p = np.diag(state.rho).real.copy()
    else:
        raise ValidationError(f"unsupported state type {type(state).__name__}")
    np.maximum(p, 0.0, out=p)  # scrub fp negatives of order -1e-17
    return p


def apply_readout_error(p: np.ndarray, flips) -> np.ndarray:
    """Push a distribution through per-qubit confusion matrices.

    `flips[i] = (p01, p10)`: probability of reading 1 given true 0 and of
    reading 0 given true 1 on qubit i. Returns a new distribution.
    """
    p = np.array(p, dtype=float)
    n = int(np.log2(p.size))
    if p.size != 1 << n or len(flips) != n:
        raise ValidationError("distribution size and flip list disagree")
    for q, (p01, p10) in enumerate(flips):
        if not (0.0 <= p01 <= 1.0 and 0.0 <= p10 <= 1.0):
            raise ValidationError(f"flip probabilities {(p01, p10)} outside [0, 1]")
        if p01 == 0.0 and p10 == 0.0:
            continue
        conf = np.array([[1 - p01, p10], [p01, 1 - p10]])
        idx = _pattern_indices(n, (q,))
        p[idx] = conf @ p[idx]
    return p
