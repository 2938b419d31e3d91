"""Fleet management: rank backends by H-Score and evaluate selection policies.

Scoring runs are organized as per-backend streams: run i of backend b is
seeded by hash(master_seed, "score", b.name, i) regardless of why the run
is needed. Ranking M runs, pooled subsets, and random-selection trials
therefore share work and agree exactly wherever they overlap (a fleet of
one pools to precisely that backend's own score).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import qaoa as qaoa_mod
from . import scoring as scoring_mod
from .backend import BackendModel
from .errors import RunBudgetError, ValidationError
from .qubo import QuboInstance
from .scoring import AccuracySamples, HScoreReport, ScoringCurve
from .seeding import derive_seed, rng_for

STRATEGIES = ("ranked_top_k", "random_k", "worst_k")
DEFAULT_TRIALS = 200


@dataclass(frozen=True)
class FleetRanking:
    """Backends sorted by H-Score, best first; ties break by name."""

    entries: tuple[tuple[str, float], ...]
    instance_id: str
    n_layers: int
    excluded: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        names = [name for name, _ in self.entries]
        if len(set(names)) != len(names):
            raise ValidationError("ranking contains duplicate backend names")
        key = [(-score, name) for name, score in self.entries]
        if key != sorted(key):
            raise ValidationError("ranking entries are not sorted")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.entries)

    def to_dict(self) -> dict:
        return {
            "entries": [[n, s] for n, s in self.entries],
            "instance_id": self.instance_id,
            "n_layers": self.n_layers,
            "excluded": [list(e) for e in self.excluded],
        }


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of choosing k backends by a strategy and pooling their runs."""

    strategy: str
    chosen: tuple[str, ...]
    pooled_report: HScoreReport
    trials: int | None = None
    trial_mean: float | None = None
    trial_std: float | None = None
    trial_scores: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "chosen": list(self.chosen),
            "pooled_report": self.pooled_report.to_dict(),
            "trials": self.trials,
            "trial_mean": self.trial_mean,
            "trial_std": self.trial_std,
            "trial_scores": (
                list(self.trial_scores) if self.trial_scores is not None else None
            ),
        }


class _SampleStreams:
    """Lazily extended per-backend accuracy streams with fixed seeding."""

    def __init__(self, inst, n_layers, master_seed, opt=None, mitigate=False,
                 shots=scoring_mod.DEFAULT_SHOTS, jobs=1):
        self.inst = inst
        self.n_layers = n_layers
        self.master_seed = master_seed
        self.opt = opt
        self.mitigate = mitigate
        self.shots = shots
        self.jobs = jobs
        self._runs: dict[str, list[float | None]] = {}

    def _extend(self, b: BackendModel, upto: int) -> None:
        runs = self._runs.setdefault(b.name, [])
        if len(runs) >= upto:
            return
        lo, hi = len(runs), upto
        seeds = [
            derive_seed(self.master_seed, "score", b.name, i) for i in range(lo, hi)
        ]
        values, failed = qaoa_mod.run_batch(
            self.inst, b, self.n_layers, seeds,
            opt=self.opt, mitigate=self.mitigate, shots=self.shots, jobs=self.jobs,
        )
        failed_set = set(failed)
        it = iter(values)
        for i in range(hi - lo):
            runs.append(None if i in failed_set else float(next(it)))

    def take(self, b: BackendModel, count: int) -> list[float]:
        """Accuracies of runs 0..count-1 of this backend (failures dropped)."""
        self._extend(b, count)
        window = self._runs[b.name][:count]
        bad = sum(1 for v in window if v is None)
        if bad > scoring_mod.FAILURE_BUDGET * count:
            raise RunBudgetError(
                f"{bad} of {count} scoring runs failed on {b.name}"
            )
        return [v for v in window if v is not None]


def _round_robin_shares(m_runs: int, chosen: list[str]) -> dict[str, int]:
    """M runs over k backends: remainder goes to the first names in sorted
    order, so the pooled multiset is independent of selection order."""
    k = len(chosen)
    base, extra = divmod(m_runs, k)
    shares = {}
    for rank, name in enumerate(sorted(chosen)):
        shares[name] = base + (1 if rank < extra else 0)
    return shares


def _pooled_samples(
    streams: _SampleStreams, backends: dict[str, BackendModel],
    chosen: list[str], m_runs: int,
) -> AccuracySamples:
    shares = _round_robin_shares(m_runs, chosen)
    values: list[float] = []
    for name in sorted(chosen):
        values.extend(streams.take(backends[name], shares[name]))
    return AccuracySamples(
        values=tuple(values),
        instance_id=streams.inst.id,
        n_layers=streams.n_layers,
        backend_name=",".join(sorted(chosen)),
        master_seed=streams.master_seed,
    )


def rank_fleet(
    backends: list[BackendModel],
    inst: QuboInstance,
    n_layers: int,
    m_runs: int,
    curve: ScoringCurve,
    master_seed: int = 0,
    opt=None,
    mitigate: bool = False,
    shots: int | None = scoring_mod.DEFAULT_SHOTS,
    jobs: int = 1,
    streams: _SampleStreams | None = None,
) -> FleetRanking:
    """Score every backend with M runs each and sort descending."""
    if not backends:
        raise ValidationError("fleet must contain at least one backend")
    names = [b.name for b in backends]
    if len(set(names)) != len(names):
        raise ValidationError("fleet backend names must be unique")
    scoring_mod._require_context(
        inst.id, n_layers, curve.instance_id, curve.n_layers, "ranking curve mismatch"
    )
    streams = streams or _SampleStreams(
        inst, n_layers, master_seed, opt=opt, mitigate=mitigate,
        shots=shots, jobs=jobs,
    )
    scored: list[tuple[str, float]] = []
    excluded: list[tuple[str, str]] = []
    for b in backends:
        try:
            values = streams.take(b, m_runs)
            samples = AccuracySamples(
                values=tuple(values), instance_id=inst.id, n_layers=n_layers,
                backend_name=b.name, master_seed=master_seed,
            )
            scored.append((b.name, scoring_mod.h_score(samples, curve).h_score))
        except RunBudgetError as exc:
            excluded.append((b.name, str(exc)))
    scored.sort(key=lambda e: (-e[1], e[0]))
    return FleetRanking(
        entries=tuple(scored),
        instance_id=inst.id,
        n_layers=n_layers,
        excluded=tuple(excluded),
    )


def select_and_pool(
    backends: list[BackendModel],
    k: int,
    strategy: str,
    inst: QuboInstance,
    n_layers: int,
    m_runs: int,
    curve: ScoringCurve,
    master_seed: int = 0,
    trials: int = DEFAULT_TRIALS,
    opt=None,
    mitigate: bool = False,
    shots: int | None = scoring_mod.DEFAULT_SHOTS,
    jobs: int = 1,
) -> SelectionOutcome:
    """Choose k backends by a strategy, pool M runs round-robin, score once.

    random_k repeats the choice `trials` times and reports the mean and
    std of the pooled score over trials; its chosen set and pooled report
    are those of the first trial.
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}; choose {STRATEGIES}")
    if not 1 <= k <= len(backends):
        raise ValidationError(f"k={k} outside 1..{len(backends)}")
    by_name = {b.name: b for b in backends}
    streams = _SampleStreams(
        inst, n_layers, master_seed, opt=opt, mitigate=mitigate,
        shots=shots, jobs=jobs,
    )
    ranking = rank_fleet(
        backends, inst, n_layers, m_runs, curve,
        master_seed, opt=opt, mitigate=mitigate, shots=shots, jobs=jobs,
        streams=streams,
    )
    if len(ranking.entries) < k:
        raise RunBudgetError(
            f"only {len(ranking.entries)} backends scored successfully, need {k}"
        )

    def pooled_report(chosen: list[str]) -> HScoreReport:
        samples = _pooled_samples(streams, by_name, chosen, m_runs)
        return scoring_mod.h_score(samples, curve, retain_scores=True)

    if strategy == "ranked_top_k":
        chosen = list(ranking.names[:k])
        return SelectionOutcome("ranked_top_k", tuple(chosen), pooled_report(chosen))
    if strategy == "worst_k":
        chosen = list(ranking.names[-k:])
        return SelectionOutcome("worst_k", tuple(chosen), pooled_report(chosen))

    pool_names = sorted(ranking.names)
    first_choice: list[str] | None = None
    first_report: HScoreReport | None = None
    trial_scores = []
    for t in range(trials):
        rng = rng_for(master_seed, "trial", t)
        chosen = sorted(rng.choice(pool_names, size=k, replace=False).tolist())
        report = pooled_report(chosen)
        trial_scores.append(report.h_score)
        if first_choice is None:
            first_choice, first_report = chosen, report
    arr = np.asarray(trial_scores)
    return SelectionOutcome(
        strategy="random_k",
        chosen=tuple(first_choice),
        pooled_report=first_report,
        trials=trials,
        trial_mean=float(arr.mean()),
        trial_std=float(arr.std(ddof=1)) if trials > 1 else 0.0,
        trial_scores=tuple(float(s) for s in trial_scores),
    )
