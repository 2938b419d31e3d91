"""Reference scoring curves, H-Scores, comparisons, and robustness.

The reference curve is the empirical CDF of accuracies from N noiseless
optimization runs, binned into a 100-bin histogram on [0, 1] and
evaluated by linear interpolation. A backend's H-Score is twice the mean
curve value of its M accuracy samples: a backend statistically identical
to the noiseless reference scores 1, a perfect sampler scores 2, and a
useless one scores 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import chi2

from . import qaoa as qaoa_mod
from .backend import BackendModel, noiseless_backend
from .errors import RunBudgetError, ScoringContextError, ValidationError
from .qubo import QuboInstance
from .seeding import derive_seed

NUM_BINS = 100
DEFAULT_N = 10_000
DEFAULT_M = 1_000
DEFAULT_REPEATS = 200
# Accuracy samples default to shot estimation: a converged optimizer lands
# on a handful of exact accuracy values (point masses inside single CDF
# bins), and interpolating a binned CDF at a point mass is biased away from
# the mid-rank value, so self-scoring would not land near 1. Binomial shot
# noise (sigma ~ 0.007 at 4000 shots) spreads each mass over neighboring
# bins, restoring E[F(X)] = 1/2 on self-comparison. shots=None scores the
# exact distribution instead.
DEFAULT_SHOTS = 4_000
FAILURE_BUDGET = 0.01


@dataclass(frozen=True)
class AccuracySamples:
    """Accuracy values from repeated runs of one configuration."""

    values: tuple[float, ...]
    instance_id: str
    n_layers: int
    backend_name: str
    master_seed: int

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ValidationError("accuracy values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    def to_dict(self) -> dict:
        return {
            "values": list(self.values),
            "instance_id": self.instance_id,
            "n_layers": self.n_layers,
            "backend_name": self.backend_name,
            "master_seed": self.master_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AccuracySamples":
        return cls(
            values=tuple(d["values"]),
            instance_id=d["instance_id"],
            n_layers=int(d["n_layers"]),
            backend_name=d["backend_name"],
            master_seed=int(d["master_seed"]),
        )


@dataclass(frozen=True)
class ScoringCurve:
    """Empirical reference CDF on [0, 1] with uniform bins."""

    bin_edges: tuple[float, ...]
    cdf: tuple[float, ...]
    n_used: int
    instance_id: str
    n_layers: int
    master_seed: int

    def __post_init__(self):
        edges = tuple(float(e) for e in self.bin_edges)
        cdf = tuple(float(c) for c in self.cdf)
        if len(edges) != len(cdf):
            raise ValidationError("bin_edges and cdf must have equal length")
        if len(edges) < 2:
            raise ValidationError("curve needs at least two edges")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise ValidationError("bin_edges must be strictly increasing")
        if cdf[0] != 0.0 or cdf[-1] != 1.0:
            raise ValidationError("cdf must start at 0 and end at 1")
        if any(b < a - 1e-12 for a, b in zip(cdf, cdf[1:])):
            raise ValidationError("cdf must be non-decreasing")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "cdf", cdf)

    def to_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "n_layers": self.n_layers,
            "N_used": self.n_used,
            "master_seed": self.master_seed,
            "bin_edges": list(self.bin_edges),
            "cdf": list(self.cdf),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoringCurve":
        return cls(
            bin_edges=tuple(d["bin_edges"]),
            cdf=tuple(d["cdf"]),
            n_used=int(d["N_used"]),
            instance_id=d["instance_id"],
            n_layers=int(d["n_layers"]),
            master_seed=int(d["master_seed"]),
        )


@dataclass(frozen=True)
class HScoreReport:
    """One H-Score plus optional per-run scores and repeat statistics."""

    h_score: float
    m_used: int
    instance_id: str
    n_layers: int
    backend_name: str
    master_seed: int
    per_run_scores: tuple[float, ...] | None = None
    stats: dict | None = field(default=None)

    def __post_init__(self):
        if not 0.0 <= self.h_score <= 2.0:
            raise ValidationError(f"h_score {self.h_score} outside [0, 2]")

    @property
    def scores_retained(self) -> bool:
        return self.per_run_scores is not None

    def to_dict(self) -> dict:
        return {
            "h_score": self.h_score,
            "M_used": self.m_used,
            "instance_id": self.instance_id,
            "n_layers": self.n_layers,
            "backend_name": self.backend_name,
            "master_seed": self.master_seed,
            "per_run_scores": (
                list(self.per_run_scores) if self.per_run_scores is not None else None
            ),
            "stats": self.stats,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "HScoreReport":
        scores = d.get("per_run_scores")
        return cls(
            h_score=float(d["h_score"]),
            m_used=int(d["M_used"]),
            instance_id=d["instance_id"],
            n_layers=int(d["n_layers"]),
            backend_name=d["backend_name"],
            master_seed=int(d["master_seed"]),
            per_run_scores=tuple(scores) if scores is not None else None,
            stats=d.get("stats"),
        )


# ---------------------------------------------------------------------------
# Curve construction and evaluation
# ---------------------------------------------------------------------------

def curve_from_values(
    values: np.ndarray | list[float],
    instance_id: str,
    n_layers: int,
    master_seed: int = 0,
) -> ScoringCurve:
    """Histogram + cumulative sum + interpolation support, from raw values."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise ValidationError("cannot build a curve from zero samples")
    if vals.min() < 0.0 or vals.max() > 1.0:
        raise ValidationError("curve samples must lie in [0, 1]")
    hist, edges = np.histogram(vals, bins=NUM_BINS, range=(0.0, 1.0))
    cdf = np.concatenate([[0.0], np.cumsum(hist) / vals.size])
    cdf[-1] = 1.0  # guard against fp summation drift
    return ScoringCurve(
        bin_edges=tuple(edges),
        cdf=tuple(cdf),
        n_used=int(vals.size),
        instance_id=instance_id,
        n_layers=n_layers,
        master_seed=master_seed,
    )


def build_reference(
    inst: QuboInstance,
    n_layers: int,
    n_runs: int = DEFAULT_N,
    master_seed: int = 0,
    opt: qaoa_mod.OptimizerConfig | None = None,
    shots: int | None = DEFAULT_SHOTS,
    jobs: int = 1,
) -> ScoringCurve:
    """Noiseless-run accuracy CDF used to score every other backend."""
    if n_runs < 100:
        raise ValidationError(f"reference needs N >= 100 runs, got {n_runs}")
    ref_backend = noiseless_backend(inst.n)
    seeds = [derive_seed(master_seed, "ref", i) for i in range(n_runs)]
    values, failed = qaoa_mod.run_batch(
        inst, ref_backend, n_layers, seeds, opt=opt, shots=shots, jobs=jobs
    )
    if len(failed) > FAILURE_BUDGET * n_runs:
        raise RunBudgetError(
            f"{len(failed)} of {n_runs} reference runs failed "
            f"(budget {FAILURE_BUDGET:.0%})"
        )
    return curve_from_values(values, inst.id, n_layers, master_seed)


def evaluate_curve(curve: ScoringCurve, x) -> float | np.ndarray:
    """Piecewise-linear CDF value at accuracy x (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValidationError("accuracy must lie in [0, 1]")
    out = np.interp(arr, curve.bin_edges, curve.cdf)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------

def _require_context(id_a, layers_a, id_b, layers_b, what: str):
    if id_a != id_b or layers_a != layers_b:
        raise ScoringContextError(
            f"{what}: ({id_a}, {layers_a} layers) vs ({id_b}, {layers_b} layers)"
        )


def h_score(
    samples: AccuracySamples, curve: ScoringCurve, retain_scores: bool = True
) -> HScoreReport:
    """C = (2/M) * sum F(X_i); 1 matches the reference, 2 is perfect."""
    if not samples.values:
        raise ValidationError("cannot score an empty sample set")
    _require_context(
        samples.instance_id, samples.n_layers,
        curve.instance_id, curve.n_layers,
        "samples/curve context mismatch",
    )
    per_run = evaluate_curve(curve, np.array(samples.values))
    score = 2.0 * float(np.mean(per_run))
    return HScoreReport(
        h_score=score,
        m_used=len(samples.values),
        instance_id=samples.instance_id,
        n_layers=samples.n_layers,
        backend_name=samples.backend_name,
        master_seed=samples.master_seed,
        per_run_scores=tuple(per_run) if retain_scores else None,
    )


def compare_distr(samples_a: AccuracySamples, samples_b: AccuracySamples) -> float:
    """2 * mean_b-curve(a): > 1 means a outperforms b, < 1 means worse."""
    if not samples_a.values or not samples_b.values:
        raise ValidationError("cannot compare empty sample sets")
    _require_context(
        samples_a.instance_id, samples_a.n_layers,
        samples_b.instance_id, samples_b.n_layers,
        "comparison context mismatch",
    )
    curve_b = curve_from_values(
        np.array(samples_b.values), samples_b.instance_id, samples_b.n_layers,
        samples_b.master_seed,
    )
    return 2.0 * float(np.mean(evaluate_curve(curve_b, np.array(samples_a.values))))


def collect_samples(
    inst: QuboInstance,
    backend: BackendModel,
    n_layers: int,
    m_runs: int,
    master_seed: int,
    opt: qaoa_mod.OptimizerConfig | None = None,
    mitigate: bool = False,
    shots: int | None = DEFAULT_SHOTS,
    jobs: int = 1,
    start: int = 0,
    seed_context: str = "score",
) -> AccuracySamples:
    """M scoring runs on a backend, seeded per (master, context, name, i)."""
    if m_runs < 1:
        raise ValidationError("need at least one scoring run")
    seeds = [
        derive_seed(master_seed, seed_context, backend.name, i)
        for i in range(start, start + m_runs)
    ]
    values, failed = qaoa_mod.run_batch(
        inst, backend, n_layers, seeds,
        opt=opt, mitigate=mitigate, shots=shots, jobs=jobs,
    )
    if len(failed) > FAILURE_BUDGET * m_runs:
        raise RunBudgetError(
            f"{len(failed)} of {m_runs} scoring runs failed on {backend.name}"
        )
    return AccuracySamples(
        values=tuple(values),
        instance_id=inst.id,
        n_layers=n_layers,
        backend_name=backend.name,
        master_seed=master_seed,
    )


# ---------------------------------------------------------------------------
# Robustness
# ---------------------------------------------------------------------------

def fit_hscore_stats(scores: np.ndarray | list[float]) -> dict:
    """Gaussian fit plus 95% intervals for the mean and the std."""
    arr = np.asarray(scores, dtype=float)
    r = arr.size
    if r < 2:
        raise ValidationError("need at least 2 repeat scores to fit")
    mean = float(np.mean(arr))
    std = float(np.std(arr, ddof=1))
    half = 1.96 * std / np.sqrt(r)
    lo_chi = float(chi2.ppf(0.975, df=r - 1))
    hi_chi = float(chi2.ppf(0.025, df=r - 1))
    return {
        "repeats": int(r),
        "mean": mean,
        "std": std,
        "ci95_mean": [mean - half, mean + half],
        "ci95_std": [
            std * float(np.sqrt((r - 1) / lo_chi)),
            std * float(np.sqrt((r - 1) / hi_chi)),
        ],
    }


def robustness(
    inst: QuboInstance,
    backend: BackendModel,
    n_layers: int,
    repeats: int = DEFAULT_REPEATS,
    m_runs: int = DEFAULT_M,
    n_runs: int = DEFAULT_N,
    master_seed: int = 0,
    curve: ScoringCurve | None = None,
    opt: qaoa_mod.OptimizerConfig | None = None,
    mitigate: bool = False,
    shots: int | None = DEFAULT_SHOTS,
    jobs: int = 1,
    same_seed_repeats: bool = False,
) -> HScoreReport:
    """Distribution of the H-Score itself over repeated scoring batches.

    Each repeat draws M fresh scoring runs (fresh seeds unless
    same_seed_repeats, which replays repeat 0 exactly and so must yield
    zero spread). The Gaussian fit and intervals land in report.stats.
    """
    if repeats < 10:
        raise ValidationError("robustness needs repeats >= 10")
    if curve is None:
        curve = build_reference(
            inst, n_layers, n_runs, master_seed, opt=opt, shots=shots, jobs=jobs
        )
    else:
        _require_context(
            inst.id, n_layers, curve.instance_id, curve.n_layers,
            "robustness curve mismatch",
        )
    scores = []
    for r in range(repeats):
        r_eff = 0 if same_seed_repeats else r
        samples = collect_samples(
            inst, backend, n_layers, m_runs, master_seed,
            opt=opt, mitigate=mitigate, shots=shots, jobs=jobs,
            seed_context=f"robust-{r_eff}",
        )
        scores.append(h_score(samples, curve, retain_scores=False).h_score)
    stats = fit_hscore_stats(scores)
    return HScoreReport(
        h_score=stats["mean"],
        m_used=m_runs,
        instance_id=inst.id,
        n_layers=n_layers,
        backend_name=backend.name,
        master_seed=master_seed,
        per_run_scores=tuple(scores),
        stats=stats,
    )


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _write_json(path: str | Path, payload: dict, provenance: dict | None) -> None:
    if provenance:
        payload = {**payload, "provenance": provenance}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def save_curve(curve: ScoringCurve, path, provenance: dict | None = None) -> None:
    _write_json(path, curve.to_dict(), provenance)


def load_curve(path) -> ScoringCurve:
    return ScoringCurve.from_dict(json.loads(Path(path).read_text()))


def save_samples(s: AccuracySamples, path, provenance: dict | None = None) -> None:
    _write_json(path, s.to_dict(), provenance)


def load_samples(path) -> AccuracySamples:
    return AccuracySamples.from_dict(json.loads(Path(path).read_text()))


def save_report(r: HScoreReport, path, provenance: dict | None = None) -> None:
    _write_json(path, r.to_dict(), provenance)


def load_report(path) -> HScoreReport:
    return HScoreReport.from_dict(json.loads(Path(path).read_text()))
