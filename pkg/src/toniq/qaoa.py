"""QAOA ansatz construction, evaluation, and single-run optimization.

The ansatz prepares |+...+>, then alternates a phase operator built from
the Ising form of the QUBO with a transverse mixer, for p layers. A
derivative-free simplex search over the 2p angles minimizes the cost
expectation of the simulated outcome distribution; the accuracy of the
final state (total probability on optimal bitstrings) is the run's
result sample.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize

from . import backend as backend_mod
from . import qubo as qubo_mod
from .backend import BackendModel, ExecPlan, route_and_compile, select_layout
from .errors import RunError, ValidationError
from .qubo import QuboInstance
from .seeding import derive_seed
from .simcore import GateOp

DEFAULT_MAX_EVALS_PER_LAYER = 200
DEFAULT_FTOL = 1e-4
DEFAULT_XTOL = 1e-3


@dataclass(frozen=True)
class QaoaParams:
    """Angles for a p-layer ansatz."""

    p: int
    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self):
        if self.p < 1:
            raise ValidationError("layer count must be >= 1")
        object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if len(self.gammas) != self.p or len(self.betas) != self.p:
            raise ValidationError("gammas and betas must each have p entries")


@dataclass(frozen=True)
class OptimizerConfig:
    """Simplex-search settings; max_evals=None means 200 per layer."""

    method: str = "nelder-mead"
    max_evals: int | None = None
    xtol: float = DEFAULT_XTOL
    ftol: float = DEFAULT_FTOL
    init_seed: int = 0

    def __post_init__(self):
        if self.method != "nelder-mead":
            raise ValidationError("only the nelder-mead simplex method is supported")

    def evals_for(self, p: int) -> int:
        n = DEFAULT_MAX_EVALS_PER_LAYER * p if self.max_evals is None else self.max_evals
        if n < 2 * p + 2:
            raise ValidationError(f"max_evals {n} < {2 * p + 2} (simplex minimum)")
        return n


@dataclass(frozen=True)
class QaoaRunResult:
    accuracy: float
    final_cost: float
    evals_used: int
    params: QaoaParams

    def __post_init__(self):
        if not -1e-12 <= self.accuracy <= 1 + 1e-12:
            raise ValidationError(f"accuracy {self.accuracy} outside [0, 1]")
        object.__setattr__(self, "accuracy", float(min(1.0, max(0.0, self.accuracy))))


# ---------------------------------------------------------------------------
# QUBO -> Ising and the ansatz gate list
# ---------------------------------------------------------------------------

def ising_fields(q: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Fields h, couplings J (strict upper triangle), and constant offset.

    Substituting x_i = (1 - z_i)/2 into x^T Q x (Q symmetric) gives
    cost(z) = offset + sum_i h_i z_i + sum_{i<j} J_ij z_i z_j with
      h_i = -Q_ii/2 - sum_{j != i} Q_ij / 2,
      J_ij = Q_ij / 2,
      offset = sum_i Q_ii/2 + sum_{i<j} Q_ij/2.
    """
    q = np.asarray(q, dtype=float)
    n = q.shape[0]
    diag = np.diag(q)
    offdiag_sums = q.sum(axis=1) - diag
    h = -0.5 * diag - 0.5 * offdiag_sums
    j = np.triu(q, k=1) / 2.0
    offset = 0.5 * diag.sum() + 0.5 * np.triu(q, k=1).sum()
    return h, j, float(offset)


class _AnsatzStructure:
    """Gate skeleton of the ansatz plus slot/coefficient arrays.

    Each rotation gate's angle is coeff * theta[slot] where theta is the
    flat parameter vector (p gammas then p betas); this lets optimization
    loops rebuild angle arrays without reconstructing gate objects.
    """

    def __init__(self, inst: QuboInstance, p: int):
        if p < 1:
            raise ValidationError("layer count must be >= 1")
        self.n = inst.n
        self.p = p
        h, j, self.offset = ising_fields(inst.q)
        self.h = h
        pairs = [
            (a, b, j[a, b])
            for a in range(inst.n)
            for b in range(a + 1, inst.n)
            if j[a, b] != 0.0
        ]

        kinds: list[str] = []
        targets: list[tuple[int, ...]] = []
        slot: list[int] = []
        coeff: list[float] = []

        def add(kind, tgt, s, c):
            kinds.append(kind)
            targets.append(tgt)
            slot.append(s)
            coeff.append(c)

        for qb in range(inst.n):
            add("H", (qb,), 0, 0.0)
        for layer in range(p):
            g_slot, b_slot = layer, p + layer
            for qb in range(inst.n):
                if h[qb] != 0.0:
                    add("RZ", (qb,), g_slot, 2.0 * h[qb])
            for a, b, val in pairs:
                add("RZZ", (a, b), g_slot, 2.0 * val)
            for qb in range(inst.n):
                add("RX", (qb,), b_slot, 2.0)
        self.kinds = tuple(kinds)
        self.targets = tuple(targets)
        self.slot = np.array(slot, dtype=np.intp)
        self.coeff = np.array(coeff)
        self.is_rotation = np.array([k != "H" for k in kinds])

    def angles(self, theta: np.ndarray) -> np.ndarray:
        return self.coeff * theta[self.slot]

    def materialize(self, theta: np.ndarray) -> list[GateOp]:
        ang = self.angles(theta)
        return [
            GateOp(k, t, ang[i] if self.is_rotation[i] else None)
            for i, (k, t) in enumerate(zip(self.kinds, self.targets))
        ]


def build_ansatz(inst: QuboInstance, params: QaoaParams) -> list[GateOp]:
    """Logical gate list: H everywhere, then p x (phase layer, mixer)."""
    struct = _AnsatzStructure(inst, params.p)
    theta = np.concatenate([params.gammas, params.betas])
    return struct.materialize(theta)


# ---------------------------------------------------------------------------
# Distribution evaluation
# ---------------------------------------------------------------------------

def cost_expectation(dist: np.ndarray, inst: QuboInstance) -> float:
    """Expected cost sum_x dist(x) * (x^T Q x), exact."""
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (1 << inst.n,):
        raise ValidationError(f"distribution must have {1 << inst.n} entries")
    return float(dist @ qubo_mod.all_costs(inst.q))


def accuracy_of(dist: np.ndarray, inst: QuboInstance) -> float:
    """Probability that a measurement returns an optimal bitstring."""
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (1 << inst.n,):
        raise ValidationError(f"distribution must have {1 << inst.n} entries")
    return float(dist[list(inst.dec_states)].sum())


@lru_cache(maxsize=32)
def _hadamard_matrix(n: int) -> np.ndarray:
    h1 = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2.0)
    m = np.array([[1.0]])
    for _ in range(n):
        m = np.kron(h1, m)
    return m


@lru_cache(maxsize=32)
def _x_basis_phase_weights(n: int) -> np.ndarray:
    # eigenvalue of sum_i Z_i on |b>: n - 2 * popcount(b)
    b = np.arange(1 << n)
    pop = np.zeros(1 << n, dtype=np.int64)
    for i in range(n):
        pop += (b >> i) & 1
    return (n - 2 * pop).astype(float)


class _FastNoiselessEvaluator:
    """Layer-wise statevector evolution; equals the gate-by-gate circuit.

    The phase layer is diagonal: each basis state picks up the phase
    exp(-i gamma * (cost - offset)). The mixer is RX(2 beta) on every
    qubit, i.e. a diagonal phase conjugated by the Hadamard transform.
    """

    def __init__(self, inst: QuboInstance, p: int):
        self.n, self.p = inst.n, p
        costs = qubo_mod.all_costs(inst.q)
        _, _, offset = ising_fields(inst.q)
        self.phase_energy = costs - offset
        self.hmat = _hadamard_matrix(inst.n)
        self.mixer_energy = _x_basis_phase_weights(inst.n)
        self.costs = costs
        self.dec_states = list(inst.dec_states)

    def distribution(self, theta: np.ndarray) -> np.ndarray:
        p = self.p
        amp = np.full(1 << self.n, 1.0 / math.sqrt(1 << self.n), dtype=complex)
        for layer in range(p):
            amp = amp * np.exp(-1j * theta[layer] * self.phase_energy)
            amp = self.hmat @ amp
            amp *= np.exp(-1j * theta[p + layer] * self.mixer_energy)
            amp = self.hmat @ amp
        return np.abs(amp) ** 2


# ---------------------------------------------------------------------------
# One optimization run
# ---------------------------------------------------------------------------

def run_once(
    inst: QuboInstance,
    backend: BackendModel,
    n_layers: int = 1,
    opt: OptimizerConfig | None = None,
    run_seed: int = 0,
    mitigate: bool = False,
    shots: int | None = None,
) -> QaoaRunResult:
    """Optimize the ansatz angles on a backend; returns the accuracy sample.

    Initial angles are drawn from run_seed (gammas uniform in [0, 2pi),
    betas uniform in [0, pi)); given identical inputs the result is
    deterministic. Noisy backends route the circuit through their
    coupling map and evolve a density matrix with per-gate noise.

    The optimizer always minimizes the exact expectation of the simulated
    distribution. When shots is given, the returned accuracy is instead
    estimated from that many measurement samples of the final state
    (binomial counting of decision-state hits), which is what a physical
    device would report.
    """
    if n_layers < 1:
        raise ValidationError("n_layers must be >= 1")
    if shots is not None and shots < 1:
        raise ValidationError("shots must be >= 1")
    opt = opt or OptimizerConfig()
    max_evals = opt.evals_for(n_layers)
    p = n_layers

    struct = _AnsatzStructure(inst, p)
    rng = np.random.default_rng(run_seed)
    init = np.concatenate([
        rng.uniform(0.0, 2.0 * math.pi, p),
        rng.uniform(0.0, math.pi, p),
    ])

    if backend.noiseless:
        evaluator = _FastNoiselessEvaluator(inst, p)
        dist_of = evaluator.distribution
        mitigation_qubits = None
    else:
        layout = select_layout(backend, inst.n)
        compiled = route_and_compile(struct.materialize(init), backend, layout)
        plan = ExecPlan(compiled, backend)
        sources = np.array(plan.sources, dtype=np.intp)
        safe_sources = np.maximum(sources, 0)

        def dist_of(theta: np.ndarray) -> np.ndarray:
            logical_angles = struct.angles(theta)
            gate_angles = np.where(sources >= 0, logical_angles[safe_sources], 0.0)
            return plan.distribution(gate_angles)

        mitigation_qubits = compiled.layout

    costs = qubo_mod.all_costs(inst.q)
    dec_states = list(inst.dec_states)
    evals = 0

    def observed(theta: np.ndarray) -> np.ndarray:
        dist = dist_of(theta)
        if mitigate and not backend.noiseless:
            dist = backend_mod.mitigate_readout(dist, backend, mitigation_qubits)
        return dist

    def objective(theta: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        value = float(observed(theta) @ costs)
        if not math.isfinite(value):
            raise RunError(f"non-finite cost at evaluation {evals}")
        return value

    res = minimize(
        objective,
        init,
        method="Nelder-Mead",
        options={
            "maxfev": max_evals,
            "maxiter": max_evals,
            "fatol": opt.ftol,
            "xatol": opt.xtol,
            "disp": False,
        },
    )
    theta = np.asarray(res.x, dtype=float)
    final_dist = observed(theta)
    accuracy = float(final_dist[dec_states].sum())
    final_cost = float(final_dist @ costs)
    if shots is not None:
        shot_rng = np.random.default_rng(derive_seed(run_seed, "shots"))
        hit = min(max(accuracy, 0.0), 1.0)
        accuracy = float(shot_rng.binomial(shots, hit)) / float(shots)
    params = QaoaParams(
        p=p, gammas=tuple(theta[:p]), betas=tuple(theta[p:])
    )
    return QaoaRunResult(
        accuracy=accuracy,
        final_cost=final_cost,
        evals_used=int(res.nfev),
        params=params,
    )


# ---------------------------------------------------------------------------
# Batches and the instance-generation probe
# ---------------------------------------------------------------------------

def run_batch(
    inst: QuboInstance,
    backend: BackendModel,
    n_layers: int,
    seeds: list[int],
    opt: OptimizerConfig | None = None,
    mitigate: bool = False,
    shots: int | None = None,
    jobs: int = 1,
) -> tuple[np.ndarray, list[int]]:
    """run_once over a seed list; returns (accuracies, failed indices).

    Failed runs (RunError) yield no sample; callers enforce their own
    failure budgets. jobs > 1 distributes runs across processes; results
    are identical to the serial order because each run is seed-pure.
    """
    if jobs <= 1 or len(seeds) < 4:
        return _batch_chunk(inst, backend, n_layers, seeds, opt, mitigate, shots)

    chunks = [list(c) for c in np.array_split(np.array(seeds, dtype=object), jobs)]
    args = [
        (inst.to_dict(), backend.to_dict(), n_layers, [int(s) for s in chunk],
         opt, mitigate, shots)
        for chunk in chunks if chunk
    ]
    accs: list[np.ndarray] = []
    failed: list[int] = []
    offset = 0
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        for chunk, (a, f) in zip(
            (c for c in chunks if c), pool.map(_batch_worker, args)
        ):
            accs.append(a)
            failed.extend(offset + i for i in f)
            offset += len(chunk)
    return np.concatenate(accs) if accs else np.array([]), failed


def _batch_chunk(inst, backend, n_layers, seeds, opt, mitigate, shots):
    values = []
    failed = []
    for i, seed in enumerate(seeds):
        try:
            r = run_once(inst, backend, n_layers, opt, int(seed),
                         mitigate=mitigate, shots=shots)
            values.append(r.accuracy)
        except RunError:
            failed.append(i)
    return np.array(values, dtype=float), failed


def _batch_worker(args):
    inst_d, backend_d, n_layers, seeds, opt, mitigate, shots = args
    inst = QuboInstance.from_dict(inst_d)
    b = BackendModel.from_dict(backend_d)
    return _batch_chunk(inst, b, n_layers, seeds, opt, mitigate, shots)


def probe_accuracy(
    inst: QuboInstance, seed: int, attempt: int = 0, runs: int = 50
) -> float:
    """Mean single-layer noiseless accuracy over a few quick runs.

    Instance generation uses this to reject trivially easy or hopeless
    matrices; see the generation rejection window.
    """
    b = backend_mod.noiseless_backend(inst.n)
    total = 0.0
    for i in range(runs):
        r = run_once(inst, b, 1, run_seed=derive_seed(seed, "probe", attempt, i))
        total += r.accuracy
    return total / runs
