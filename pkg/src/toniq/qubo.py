"""QUBO instances: Q matrices, cost evaluation, exhaustive ground truth.

Convention (fixed globally): bitstrings are little-endian, qubit 0 is the
least significant bit. A state string "110" reads qubit 0 first, so it
encodes the integer 1*1 + 1*2 + 0*4 = 3.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import CapacityError, GenerationError, ValidationError

BRUTE_FORCE_LIMIT = 20

BUILTIN_SIZES = (3, 4, 5, 6)

# Acceptance window for generated instances: mean 1-layer noiseless QAOA
# accuracy over the probe runs must land here, keeping instances neither
# trivial nor hopeless.
PROBE_WINDOW = (0.05, 0.80)
PROBE_RUNS = 50
REJECTION_BUDGET = 1000


@dataclass(frozen=True)
class QuboInstance:
    """A QUBO problem with brute-forced ground truth attached.

    `q` is real symmetric; `ground_states` lists every bitstring attaining
    `ground_energy`, sorted by decimal value; `dec_states` is the matching
    little-endian integer encoding.
    """

    id: str
    n: int
    q: np.ndarray
    ground_energy: float
    ground_states: tuple[str, ...]
    dec_states: tuple[int, ...]
    seed: int | None = None

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape != (self.n, self.n):
            raise ValidationError(f"Q must be {self.n}x{self.n}, got {q.shape}")
        if not np.allclose(q, q.T, atol=1e-12):
            raise ValidationError("Q must be symmetric")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "ground_states", tuple(self.ground_states))
        object.__setattr__(self, "dec_states", tuple(int(d) for d in self.dec_states))

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "n": self.n,
            "q": self.q.tolist(),
            "seed": self.seed,
            "ground_energy": self.ground_energy,
            "ground_states": list(self.ground_states),
            "dec_states": list(self.dec_states),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuboInstance":
        return cls(
            id=d["id"],
            n=int(d["n"]),
            q=np.asarray(d["q"], dtype=float),
            ground_energy=float(d["ground_energy"]),
            ground_states=tuple(d["ground_states"]),
            dec_states=tuple(int(x) for x in d["dec_states"]),
            seed=d.get("seed"),
        )


def bitstring_to_dec(s: str) -> int:
    """Little-endian decode: character k of `s` is qubit k's bit."""
    return sum(int(c) << i for i, c in enumerate(s))


def dec_to_bitstring(dec: int, n: int) -> str:
    return "".join(str((dec >> i) & 1) for i in range(n))


def all_bit_vectors(n: int) -> np.ndarray:
    """(2^n, n) matrix; row k holds the bits of k, column i = qubit i."""
    ks = np.arange(1 << n)
    return ((ks[:, None] >> np.arange(n)[None, :]) & 1).astype(float)


def evaluate_cost(q: np.ndarray, x) -> float:
    """Cost x^T q x of a single binary assignment.

    Accumulates term by term on purpose: this is the independent code path
    the vectorized enumeration in `brute_force_solve` is checked against.
    """
    q = np.asarray(q, dtype=float)
    bits = [int(b) for b in x]
    n = q.shape[0]
    if q.shape != (n, n) or len(bits) != n:
        raise ValidationError(
            f"bitstring length {len(bits)} does not match matrix dimension {q.shape}"
        )
    if any(b not in (0, 1) for b in bits):
        raise ValidationError("x entries must be 0 or 1")
    total = 0.0
    for i in range(n):
        if bits[i]:
            for j in range(n):
                if bits[j]:
                    total += q[i, j]
    return float(total)


def all_costs(q: np.ndarray) -> np.ndarray:
    """Vector of x^T q x over all 2^n bitstrings, indexed little-endian."""
    q = np.asarray(q, dtype=float)
    xs = all_bit_vectors(q.shape[0])
    return np.einsum("ki,ij,kj->k", xs, q, xs)


def brute_force_solve(q: np.ndarray) -> tuple[float, list[str], list[int]]:
    """Exhaustively enumerate all bitstrings; return minimum and all minimizers.

    Returns (ground_energy, ground_states, dec_states) with states sorted by
    decimal value.
    """
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    if q.shape != (n, n):
        raise ValidationError(f"Q must be square, got {q.shape}")
    if n > BRUTE_FORCE_LIMIT:
        raise CapacityError(f"n={n} exceeds enumeration bound {BRUTE_FORCE_LIMIT}")
    costs = all_costs(q)
    energy = float(costs.min())
    # Exact-minimum tie detection: costs are computed identically for every
    # bitstring, so direct equality is the right comparison.
    decs = [int(k) for k in np.flatnonzero(costs == energy)]
    states = [dec_to_bitstring(k, n) for k in decs]
    return energy, states, decs


def _random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    m = rng.uniform(-1.0, 1.0, size=(n, n))
    upper = np.triu(m)
    return upper + np.triu(m, 1).T


def generate_instance(n: int, seed: int) -> QuboInstance:
    """Draw symmetric matrices (entries uniform in [-1, 1]) until one passes.

    Acceptance requires a unique ground state and a 1-layer noiseless QAOA
    mean probe accuracy inside PROBE_WINDOW. Deterministic per seed.
    """
    from . import qaoa  # deferred: qaoa depends on this module

    if not 3 <= n <= 8:
        raise ValidationError(f"n must be in [3, 8], got {n}")
    rng = np.random.default_rng(seed)
    last_reason = "no candidates tried"
    for attempt in range(REJECTION_BUDGET):
        q = _random_symmetric(rng, n)
        energy, states, decs = brute_force_solve(q)
        if len(states) != 1:
            last_reason = f"degenerate ground state ({len(states)} minimizers)"
            continue
        inst = QuboInstance(
            id=f"rand_n{n}_s{seed}",
            n=n,
            q=q,
            ground_energy=energy,
            ground_states=tuple(states),
            dec_states=tuple(decs),
            seed=seed,
        )
        mean_acc = qaoa.probe_accuracy(inst, seed=seed, attempt=attempt, runs=PROBE_RUNS)
        lo, hi = PROBE_WINDOW
        if not lo <= mean_acc <= hi:
            last_reason = f"probe accuracy {mean_acc:.3f} outside [{lo}, {hi}]"
            continue
        return inst
    raise GenerationError(
        f"no instance accepted within {REJECTION_BUDGET} candidates "
        f"(last rejection: {last_reason})"
    )


def load_instance(path: str | Path) -> QuboInstance:
    with open(path, encoding="utf-8") as fh:
        return QuboInstance.from_dict(json.load(fh))


def save_instance(inst: QuboInstance, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(inst.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def builtin_instances(n: int) -> QuboInstance:
    """The repository's fixed, versioned instance for n qubits (3..6)."""
    if n not in BUILTIN_SIZES:
        raise ValidationError(
            f"no built-in instance for n={n}; supported: {BUILTIN_SIZES}"
        )
    ref = resources.files("toniq").joinpath(f"instances/qubits_{n}.json")
    return QuboInstance.from_dict(json.loads(ref.read_text(encoding="utf-8")))
