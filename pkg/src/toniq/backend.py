"""Target QPU models: topology, noise calibration, layout, routing, execution.

A BackendModel describes a device (coupling map plus uniform or per-edge
noise numbers). Logical QAOA circuits are placed onto the device by
select_layout, made hardware-executable by route_and_compile, and run with
noise by execute, which returns the exact outcome distribution over the
logical qubits.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import simcore
from .errors import CapacityError, MitigationError, RoutingError, ValidationError
from .simcore import GateOp

DEFAULT_P1 = 0.001
DEFAULT_P2 = 0.01
DEFAULT_T1 = 100.0   # microseconds
DEFAULT_T2 = 80.0
DEFAULT_DUR1 = 0.05  # 50 ns single-qubit gate
DEFAULT_DUR2 = 0.3   # 300 ns two-qubit gate
DEFAULT_READOUT = (0.01, 0.01)

PRESET_KINDS = ("heavy_hex_16", "two_line_27", "i_shape_7")


def _ekey(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def _per_qubit(value, n: int, name: str) -> tuple:
    """Broadcast a scalar to n entries or validate a length-n sequence."""
    if np.isscalar(value):
        return (float(value),) * n
    seq = tuple(value)
    if len(seq) != n:
        raise ValidationError(f"{name} must have {n} entries, got {len(seq)}")
    return seq


@dataclass(eq=False)
class BackendModel:
    """Immutable device description. Treat instances as read-only."""

    name: str
    num_qubits: int
    coupling: tuple[tuple[int, int], ...]
    p1: float = DEFAULT_P1
    p2_default: float = DEFAULT_P2
    p2_edges: dict[tuple[int, int], float] = field(default_factory=dict)
    t1: tuple[float, ...] | float = DEFAULT_T1
    t2: tuple[float, ...] | float = DEFAULT_T2
    dur1: float = DEFAULT_DUR1
    dur2: float = DEFAULT_DUR2
    readout: tuple[tuple[float, float], ...] | tuple[float, float] = DEFAULT_READOUT
    noiseless: bool = False

    def __post_init__(self):
        n = int(self.num_qubits)
        if n < 1:
            raise ValidationError("num_qubits must be >= 1")
        self.num_qubits = n

        edges = sorted({_ekey(int(a), int(b)) for a, b in self.coupling})
        for a, b in edges:
            if a == b:
                raise ValidationError(f"self-loop edge ({a},{b})")
            if not (0 <= a < n and 0 <= b < n):
                raise ValidationError(f"edge ({a},{b}) outside 0..{n - 1}")
        self.coupling = tuple(edges)
        self._check_connected()

        if self.noiseless:
            self.p1 = 0.0
            self.p2_default = 0.0
            self.p2_edges = {}
            self.t1 = (math.inf,) * n
            self.t2 = (math.inf,) * n
            self.readout = ((0.0, 0.0),) * n
        else:
            self.t1 = _per_qubit(self.t1, n, "t1")
            self.t2 = _per_qubit(self.t2, n, "t2")
            ro = self.readout
            if len(ro) == 2 and np.isscalar(ro[0]):
                ro = (tuple(float(x) for x in ro),) * n
            if len(ro) != n:
                raise ValidationError(f"readout must have {n} entries")
            self.readout = tuple((float(a), float(b)) for a, b in ro)
            self.p2_edges = {_ekey(*k): float(v) for k, v in self.p2_edges.items()}

        self.p1 = float(self.p1)
        self.p2_default = float(self.p2_default)
        self.dur1 = float(self.dur1)
        self.dur2 = float(self.dur2)
        self._validate_noise()

    def _check_connected(self):
        mentioned = sorted({q for e in self.coupling for q in e})
        if not mentioned:
            return
        adj = {q: [] for q in mentioned}
        for a, b in self.coupling:
            adj[a].append(b)
            adj[b].append(a)
        seen = {mentioned[0]}
        stack = [mentioned[0]]
        while stack:
            for v in adj[stack.pop()]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        if len(seen) != len(mentioned):
            raise ValidationError("coupling graph is disconnected")

    def _validate_noise(self):
        if not 0.0 <= self.p1 <= 1.0:
            raise ValidationError(f"p1 {self.p1} outside [0, 1]")
        if not 0.0 <= self.p2_default <= 1.0:
            raise ValidationError(f"p2_default {self.p2_default} outside [0, 1]")
        for key, v in self.p2_edges.items():
            if key not in set(self.coupling):
                raise ValidationError(f"p2 override for non-edge {key}")
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"p2[{key}] {v} outside [0, 1]")
        if self.dur1 <= 0 or self.dur2 <= 0:
            raise ValidationError("gate durations must be positive")
        for q in range(self.num_qubits):
            t1, t2 = self.t1[q], self.t2[q]
            if t1 <= 0 or t2 <= 0:
                raise ValidationError(f"t1/t2 must be positive on qubit {q}")
            if not math.isinf(t2) and t2 > 2 * t1 + 1e-12:
                raise ValidationError(f"t2 > 2*t1 on qubit {q} (unphysical)")
            p01, p10 = self.readout[q]
            if not (0.0 <= p01 <= 1.0 and 0.0 <= p10 <= 1.0):
                raise ValidationError(f"readout probabilities on qubit {q} invalid")

    @cached_property
    def adjacency(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {q: [] for q in range(self.num_qubits)}
        for a, b in self.coupling:
            adj[a].append(b)
            adj[b].append(a)
        return {q: tuple(sorted(vs)) for q, vs in adj.items()}

    def p2_of(self, a: int, b: int) -> float:
        key = _ekey(a, b)
        if key not in set(self.coupling):
            raise ValidationError(f"({a},{b}) is not a coupling edge")
        return self.p2_edges.get(key, self.p2_default)

    # -- persistence ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "num_qubits": self.num_qubits,
            "coupling": [list(e) for e in self.coupling],
            "p1": self.p1,
            "p2_default": self.p2_default,
            "p2_edges": {f"{a}-{b}": v for (a, b), v in sorted(self.p2_edges.items())},
            "t1": [] if self.noiseless else list(self.t1),
            "t2": [] if self.noiseless else list(self.t2),
            "dur1": self.dur1,
            "dur2": self.dur2,
            "readout": [] if self.noiseless else [list(r) for r in self.readout],
            "noiseless": self.noiseless,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BackendModel":
        p2_edges = {}
        for key, v in d.get("p2_edges", {}).items():
            a, _, b = key.partition("-")
            p2_edges[_ekey(int(a), int(b))] = float(v)
        noiseless = bool(d.get("noiseless", False))
        return cls(
            name=d["name"],
            num_qubits=d["num_qubits"],
            coupling=tuple(tuple(e) for e in d["coupling"]),
            p1=d.get("p1", 0.0),
            p2_default=d.get("p2_default", 0.0),
            p2_edges=p2_edges,
            t1=d.get("t1") or DEFAULT_T1,
            t2=d.get("t2") or DEFAULT_T2,
            dur1=d.get("dur1", DEFAULT_DUR1),
            dur2=d.get("dur2", DEFAULT_DUR2),
            readout=d.get("readout") or (0.0, 0.0),
            noiseless=noiseless,
        )


def save_backend(b: BackendModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(b.to_dict(), indent=2, sort_keys=True) + "\n")


def load_backend(path: str | Path) -> BackendModel:
    return BackendModel.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# Topology presets
# ---------------------------------------------------------------------------

_PRESET_EDGES = {
    # 16-qubit heavy-hexagon patch
    "heavy_hex_16": (
        (0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7),
        (7, 10), (8, 9), (8, 11), (10, 12), (11, 14), (12, 13), (12, 15),
        (13, 14),
    ),
    # two 13/14-qubit lines joined at both ends
    "two_line_27": tuple(
        [(i, i + 1) for i in range(12)]
        + [(i, i + 1) for i in range(13, 26)]
        + [(0, 13), (12, 26)]
    ),
    # 2-qubit bar joined to a 5-qubit spine
    "i_shape_7": ((0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)),
}

_PRESET_SIZES = {"heavy_hex_16": 16, "two_line_27": 27, "i_shape_7": 7}


def topology_preset(
    kind: str,
    *,
    name: str | None = None,
    p1: float = DEFAULT_P1,
    p2: float = DEFAULT_P2,
    t1: float = DEFAULT_T1,
    t2: float = DEFAULT_T2,
    dur1: float = DEFAULT_DUR1,
    dur2: float = DEFAULT_DUR2,
    readout: tuple[float, float] = DEFAULT_READOUT,
    noiseless: bool = False,
) -> BackendModel:
    """A named coupling map with uniform noise parameters."""
    if kind not in _PRESET_EDGES:
        raise ValidationError(f"unknown preset {kind!r}; choose from {PRESET_KINDS}")
    return BackendModel(
        name=name or kind,
        num_qubits=_PRESET_SIZES[kind],
        coupling=_PRESET_EDGES[kind],
        p1=p1,
        p2_default=p2,
        t1=t1,
        t2=t2,
        dur1=dur1,
        dur2=dur2,
        readout=readout,
        noiseless=noiseless,
    )


def noiseless_backend(n: int, name: str = "noiseless") -> BackendModel:
    """Fully connected noise-free device; reference runs execute on this."""
    coupling = tuple((i, j) for i in range(n) for j in range(i + 1, n))
    return BackendModel(name=name, num_qubits=n, coupling=coupling, noiseless=True)


# ---------------------------------------------------------------------------
# Layout selection
# ---------------------------------------------------------------------------

def _readout_err(b: BackendModel, q: int) -> float:
    p01, p10 = b.readout[q]
    return 0.5 * (p01 + p10)


def select_layout(b: BackendModel, n: int) -> tuple[int, ...]:
    """Greedy connected-subgraph growth over the device's best qubits.

    Seeds at the edge with the highest fidelity score (1 - p2), then
    repeatedly adds the neighboring qubit maximizing best added edge
    fidelity minus mean readout error. Ties break to the lowest physical
    index, making the result deterministic.
    """
    if n < 1:
        raise ValidationError("need at least one logical qubit")
    if n > b.num_qubits:
        raise CapacityError(f"{n} logical qubits > {b.num_qubits} on {b.name}")

    if n == 1:
        best = min(range(b.num_qubits), key=lambda q: (_readout_err(b, q), q))
        return (best,)
    if not b.coupling:
        raise CapacityError(f"{b.name} has no coupling edges for {n} qubits")

    seed = max(b.coupling, key=lambda e: (1.0 - b.p2_of(*e), (-e[0], -e[1])))
    chosen = [seed[0], seed[1]]
    in_set = set(chosen)
    while len(chosen) < n:
        best_q, best_score = None, None
        for q in range(b.num_qubits):
            if q in in_set:
                continue
            fids = [1.0 - b.p2_of(q, s) for s in b.adjacency[q] if s in in_set]
            if not fids:
                continue
            score = max(fids) - _readout_err(b, q)
            if best_score is None or score > best_score:
                best_q, best_score = q, score
        if best_q is None:
            raise CapacityError(
                f"no connected region of {n} qubits reachable on {b.name}"
            )
        chosen.append(best_q)
        in_set.add(best_q)
    return tuple(chosen)


# ---------------------------------------------------------------------------
# Routing and compilation
# ---------------------------------------------------------------------------

@dataclass
class CompiledCircuit:
    """Hardware gate stream over physical qubits.

    `layout` is the final logical-to-physical map after any SWAP
    relabeling. `sources[k]` is the index of the logical gate that
    produced physical gate k (-1 for routing-inserted gates); rotation
    angles pass through unchanged, which lets callers rebind parameters
    without recompiling.
    """

    gates: tuple[GateOp, ...]
    layout: tuple[int, ...]
    gate_counts: dict[str, int]
    swaps_inserted: int
    sources: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.layout)) != len(self.layout):
            raise ValidationError("layout is not injective")
        if len(self.sources) != len(self.gates):
            raise ValidationError("sources length mismatch")
        bad = {g.kind for g in self.gates} - {"H", "RX", "RZ", "CNOT"}
        if bad:
            raise ValidationError(f"compiled stream contains {sorted(bad)}")


def _bfs_path(b: BackendModel, start: int, goal: int) -> list[int]:
    if start == goal:
        return [start]
    parent = {start: start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for v in b.adjacency[u]:  # sorted neighbors: deterministic paths
            if v not in parent:
                parent[v] = u
                if v == goal:
                    path = [goal]
                    while path[-1] != start:
                        path.append(parent[path[-1]])
                    return path[::-1]
                queue.append(v)
    raise RoutingError(f"qubits {start} and {goal} are disconnected on {b.name}")


def route_and_compile(
    logical: list[GateOp] | tuple[GateOp, ...],
    b: BackendModel,
    layout: tuple[int, ...],
) -> CompiledCircuit:
    """Map a logical {H, RX, RZ, RZZ} circuit onto the coupling graph.

    A non-adjacent RZZ pair is routed by SWAPping the first qubit of the
    pair along a BFS shortest path until adjacent; SWAPs permanently
    relabel the layout. Everything is then decomposed to {H, RX, RZ,
    CNOT}: RZZ(t) on (a,b) becomes CNOT(a,b) RZ(t) on b CNOT(a,b), and
    each SWAP becomes 3 CNOTs.
    """
    n_logical = len(layout)
    if len(set(layout)) != n_logical:
        raise ValidationError("layout is not injective")
    for p in layout:
        if not 0 <= p < b.num_qubits:
            raise ValidationError(f"layout maps to invalid physical qubit {p}")

    pos = list(layout)                      # logical -> physical
    occupant: dict[int, int] = {p: l for l, p in enumerate(pos)}

    gates: list[GateOp] = []
    sources: list[int] = []
    swaps = 0

    def emit(kind, targets, angle, src):
        gates.append(GateOp(kind, targets, angle))
        sources.append(src)

    def emit_cnot(a, c, src=-1):
        emit("CNOT", (a, c), None, src)

    for src, g in enumerate(logical):
        if g.kind in ("H", "RX", "RZ"):
            (lq,) = g.targets
            emit(g.kind, (pos[lq],), g.angle, src)
        elif g.kind == "RZZ":
            li, lj = g.targets
            pj = pos[lj]
            cur = pos[li]
            if pj not in b.adjacency[cur]:
                path = _bfs_path(b, cur, pj)
                for nxt in path[1:-1]:
                    # SWAP(cur, nxt) as 3 CNOTs, then relabel occupants
                    emit_cnot(cur, nxt)
                    emit_cnot(nxt, cur)
                    emit_cnot(cur, nxt)
                    swaps += 1
                    lu, lv = occupant.get(cur), occupant.get(nxt)
                    if lu is not None:
                        pos[lu] = nxt
                        occupant[nxt] = lu
                    else:
                        occupant.pop(nxt, None)
                    if lv is not None:
                        pos[lv] = cur
                        occupant[cur] = lv
                    else:
                        occupant.pop(cur, None)
                    cur = nxt
            emit_cnot(cur, pos[lj], src)
            emit("RZ", (pos[lj],), g.angle, src)
            emit_cnot(cur, pos[lj], src)
        else:
            raise ValidationError(f"logical circuits may not contain {g.kind}")

    counts: dict[str, int] = {}
    for g in gates:
        counts[g.kind] = counts.get(g.kind, 0) + 1
    return CompiledCircuit(
        gates=tuple(gates),
        layout=tuple(pos),
        gate_counts=counts,
        swaps_inserted=swaps,
        sources=tuple(sources),
    )


def rebind_angles(c: CompiledCircuit, logical) -> CompiledCircuit:
    """Same routed structure, angles re-read from a new logical gate list."""
    gates = tuple(
        GateOp(g.kind, g.targets, logical[src].angle) if g.angle is not None else g
        for g, src in zip(c.gates, c.sources)
    )
    return CompiledCircuit(gates, c.layout, dict(c.gate_counts), c.swaps_inserted, c.sources)


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------

class ExecPlan:
    """Reusable execution plan for one compiled circuit on one backend.

    Simulates only the physical qubits the circuit touches. Per gate
    (unless the backend is noiseless) applies depolarizing noise with p1
    or the edge's p2, then amplitude damping and dephasing for the gate
    duration. Angles can be supplied per call, so one plan serves a whole
    optimization run.
    """

    def __init__(self, c: CompiledCircuit, b: BackendModel):
        touched = sorted({q for g in c.gates for q in g.targets} | set(c.layout))
        self.m = len(touched)
        if self.m > 12:
            raise CapacityError(f"circuit touches {self.m} qubits; cap is 12")
        compact = {p: i for i, p in enumerate(touched)}
        self.noiseless = b.noiseless
        self.kinds = tuple(g.kind for g in c.gates)
        self.targets = tuple(tuple(compact[q] for q in g.targets) for g in c.gates)
        self.base_angles = np.array(
            [g.angle if g.angle is not None else 0.0 for g in c.gates]
        )
        self.sources = c.sources

        # per-gate noise descriptors in compact indices
        self.noise: list[tuple | None] = []
        if not b.noiseless:
            decay1 = {}
            decay2 = {}
            for p in touched:
                t1, t2 = b.t1[p], b.t2[p]
                rate = max(0.0, 1.0 / t2 - 0.5 / t1)
                decay1[p] = (1.0 - math.exp(-b.dur1 / t1),
                             0.5 * (1.0 - math.exp(-b.dur1 * rate)))
                decay2[p] = (1.0 - math.exp(-b.dur2 / t1),
                             0.5 * (1.0 - math.exp(-b.dur2 * rate)))
            for g in c.gates:
                if len(g.targets) == 1:
                    (p,) = g.targets
                    self.noise.append(((b.p1,), ((compact[p], *decay1[p]),)))
                else:
                    pa, pb = g.targets
                    self.noise.append((
                        (b.p2_of(pa, pb),),
                        ((compact[pa], *decay2[pa]), (compact[pb], *decay2[pb])),
                    ))

        # logical marginalization: bit i of the logical outcome is the
        # compact-simulation bit of layout[i]
        n_logical = len(c.layout)
        xs = np.arange(1 << self.m)
        y = np.zeros(1 << self.m, dtype=np.int64)
        for l, p in enumerate(c.layout):
            y |= ((xs >> compact[p]) & 1) << l
        self._marginal_map = y
        self._n_logical = n_logical
        self.readout_flips = None
        if not b.noiseless:
            flips = [b.readout[p] for p in c.layout]
            if any(f != (0.0, 0.0) for f in flips):
                self.readout_flips = flips

    def distribution(self, angles: np.ndarray | None = None) -> np.ndarray:
        """Exact logical outcome distribution for the given gate angles."""
        ang = self.base_angles if angles is None else angles
        rotation = simcore.ROTATION_KINDS
        if self.noiseless:
            arr = simcore.StateVector.zero(self.m).amp
            for k, kind in enumerate(self.kinds):
                theta = ang[k] if kind in rotation else None
                mat = simcore.matrix_of(kind, theta)
                simcore._apply_matrix_sv(arr, mat, self.targets[k], self.m)
            probs = np.abs(arr) ** 2
        else:
            rho = simcore.DensityMatrix.zero(self.m).rho
            for k, kind in enumerate(self.kinds):
                theta = ang[k] if kind in rotation else None
                mat = simcore.matrix_of(kind, theta)
                targets = self.targets[k]
                simcore._apply_matrix_dm(rho, mat, targets, self.m)
                (depol_p,), qubits = self.noise[k]
                simcore.depolarize_in_place(rho, self.m, targets, depol_p)
                for q, gamma, flip in qubits:
                    simcore.damp_dephase_in_place(rho, self.m, q, gamma, flip)
            probs = np.maximum(np.diag(rho).real, 0.0)

        out = np.bincount(self._marginal_map, weights=probs,
                          minlength=1 << self._n_logical)
        if self.readout_flips is not None:
            out = simcore.apply_readout_error(out, self.readout_flips)
        return out


def execute(c: CompiledCircuit, b: BackendModel) -> np.ndarray:
    """Run a compiled circuit from |0...0> and return the exact logical
    outcome distribution (readout error included unless noiseless)."""
    return ExecPlan(c, b).distribution()


def mitigate_readout(
    dist: np.ndarray, b: BackendModel, qubits: tuple[int, ...] | None = None
) -> np.ndarray:
    """Invert the per-qubit confusion matrices on a measured distribution.

    `qubits[i]` names the physical qubit behind logical bit i (defaults
    to 0..n-1). Negative entries from the inversion are clipped and the
    result renormalized.
    """
    dist = np.array(dist, dtype=float)
    n = int(np.log2(dist.size))
    if dist.size != 1 << n:
        raise ValidationError("distribution length must be a power of 2")
    if qubits is None:
        qubits = tuple(range(n))
    if len(qubits) != n:
        raise ValidationError("qubit list length must match distribution size")
    for bit, q in enumerate(qubits):
        p01, p10 = b.readout[q]
        det = 1.0 - p01 - p10
        if abs(det) < 1e-12:
            raise MitigationError(f"confusion matrix singular on qubit {q}")
        inv = np.array([[1.0 - p10, -p10], [-p01, 1.0 - p01]]) / det
        idx = simcore._pattern_indices(n, (bit,))
        dist[idx] = inv @ dist[idx]
    np.maximum(dist, 0.0, out=dist)
    total = dist.sum()
    if total <= 0:
        raise MitigationError("mitigation produced an empty distribution")
    return dist / total
