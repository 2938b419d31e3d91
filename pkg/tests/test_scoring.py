"""Reference curves, H-Scores, distribution comparison, and robustness."""

import numpy as np
import pytest

from toniq import scoring as scoring_mod
from toniq.backend import noiseless_backend
from toniq.errors import RunBudgetError, ScoringContextError, ValidationError
from toniq.scoring import (
    AccuracySamples,
    HScoreReport,
    ScoringCurve,
    build_reference,
    collect_samples,
    compare_distr,
    curve_from_values,
    evaluate_curve,
    fit_hscore_stats,
    h_score,
    load_curve,
    load_report,
    load_samples,
    robustness,
    save_curve,
    save_report,
    save_samples,
)


def synthetic_samples(values, name="syn", inst_id="synth", layers=1, seed=0):
    return AccuracySamples(
        values=tuple(values), instance_id=inst_id, n_layers=layers,
        backend_name=name, master_seed=seed,
    )


# -- containers ---------------------------------------------------------------

def test_samples_validation_and_round_trip():
    s = synthetic_samples([0.1, 0.5, 1.0])
    assert AccuracySamples.from_dict(s.to_dict()) == s
    with pytest.raises(ValidationError):
        synthetic_samples([0.1, 1.2])
    with pytest.raises(ValidationError):
        synthetic_samples([-0.01])


def test_curve_validation():
    good = dict(bin_edges=(0.0, 0.5, 1.0), cdf=(0.0, 0.4, 1.0),
                n_used=10, instance_id="x", n_layers=1, master_seed=0)
    ScoringCurve(**good)
    with pytest.raises(ValidationError):
        ScoringCurve(**{**good, "cdf": (0.0, 0.4)})
    with pytest.raises(ValidationError):
        ScoringCurve(**{**good, "bin_edges": (0.0, 0.5, 0.5)})
    with pytest.raises(ValidationError):
        ScoringCurve(**{**good, "cdf": (0.1, 0.4, 1.0)})
    with pytest.raises(ValidationError):
        ScoringCurve(**{**good, "cdf": (0.0, 0.4, 0.9)})
    with pytest.raises(ValidationError):
        ScoringCurve(**{**good, "cdf": (0.0, 0.7, 1.0), "bin_edges": (0.0, 1.0, 0.5)})


def test_report_validation_and_round_trip():
    r = HScoreReport(h_score=1.2, m_used=5, instance_id="x", n_layers=1,
                     backend_name="b", master_seed=0,
                     per_run_scores=(0.5, 0.7), stats={"mean": 1.2})
    assert HScoreReport.from_dict(r.to_dict()) == r
    assert r.scores_retained
    slim = HScoreReport(h_score=1.2, m_used=5, instance_id="x", n_layers=1,
                        backend_name="b", master_seed=0)
    assert not slim.scores_retained
    with pytest.raises(ValidationError):
        HScoreReport(h_score=2.5, m_used=5, instance_id="x", n_layers=1,
                     backend_name="b", master_seed=0)


# -- curve construction and evaluation ----------------------------------------

def test_curve_from_values_shape():
    vals = np.array([0.05, 0.15, 0.15, 0.95])
    curve = curve_from_values(vals, "x", 1)
    assert len(curve.bin_edges) == 101
    assert curve.bin_edges[0] == 0.0 and curve.bin_edges[-1] == 1.0
    assert curve.cdf[0] == 0.0 and curve.cdf[-1] == 1.0
    assert curve.n_used == 4
    assert all(b >= a for a, b in zip(curve.cdf, curve.cdf[1:]))
    with pytest.raises(ValidationError):
        curve_from_values([], "x", 1)
    with pytest.raises(ValidationError):
        curve_from_values([1.5], "x", 1)


def test_curve_interpolation_hand_check():
    # one sample at 0.055: its bin is [0.05, 0.06), so the CDF climbs
    # linearly from 0 at 0.05 to 1 at 0.06
    curve = curve_from_values([0.055], "x", 1)
    assert evaluate_curve(curve, 0.05) == 0.0
    assert evaluate_curve(curve, 0.055) == pytest.approx(0.5)
    assert evaluate_curve(curve, 0.06) == 1.0
    assert evaluate_curve(curve, 0.0) == 0.0
    assert evaluate_curve(curve, 1.0) == 1.0
    with pytest.raises(ValidationError):
        evaluate_curve(curve, 1.01)


def test_uniform_values_give_identity_curve():
    vals = (np.arange(2000) + 0.5) / 2000
    curve = curve_from_values(vals, "u", 1)
    grid = np.linspace(0.05, 0.95, 19)
    assert np.allclose(evaluate_curve(curve, grid), grid, atol=1e-12)


def test_continuous_distribution_self_scores_near_one():
    # probability integral transform: scoring fresh draws from the
    # reference's own distribution must average F ~ 1/2, so C ~ 1
    rng = np.random.default_rng(0)
    ref = np.clip(rng.normal(0.7, 0.05, 5000), 0, 1)
    fresh = np.clip(rng.normal(0.7, 0.05, 1000), 0, 1)
    curve = curve_from_values(ref, "syn", 1)
    c = 2.0 * float(np.mean(evaluate_curve(curve, fresh)))
    assert c == pytest.approx(1.0, abs=0.05)


# -- scoring ------------------------------------------------------------------

def test_extremes_score_exactly():
    rng = np.random.default_rng(1)
    curve = curve_from_values(rng.uniform(0.2, 0.8, 500), "x", 1)
    perfect = h_score(synthetic_samples([1.0] * 50, inst_id="x"), curve)
    useless = h_score(synthetic_samples([0.0] * 50, inst_id="x"), curve)
    assert perfect.h_score == 2.0
    assert useless.h_score == 0.0


def test_h_score_is_twice_mean_curve_value():
    rng = np.random.default_rng(2)
    curve = curve_from_values(rng.uniform(0, 1, 400), "x", 1)
    vals = rng.uniform(0, 1, 30)
    report = h_score(synthetic_samples(vals, inst_id="x"), curve)
    want = 2.0 * np.mean([evaluate_curve(curve, v) for v in vals])
    assert report.h_score == pytest.approx(want, abs=1e-12)
    assert report.per_run_scores is not None
    assert len(report.per_run_scores) == 30
    slim = h_score(synthetic_samples(vals, inst_id="x"), curve, retain_scores=False)
    assert slim.per_run_scores is None
    assert slim.h_score == report.h_score


def test_score_context_must_match():
    curve = curve_from_values([0.5, 0.6], "inst_a", 1)
    with pytest.raises(ScoringContextError):
        h_score(synthetic_samples([0.5], inst_id="inst_b"), curve)
    with pytest.raises(ScoringContextError):
        h_score(synthetic_samples([0.5], inst_id="inst_a", layers=2), curve)
    with pytest.raises(ValidationError):
        h_score(synthetic_samples([], inst_id="inst_a"), curve)


def test_compare_distr_detects_shift():
    rng = np.random.default_rng(5)
    a = np.clip(rng.normal(0.6, 0.05, 2000), 0, 1)
    b = np.clip(rng.normal(0.6, 0.05, 2000), 0, 1)
    same = compare_distr(synthetic_samples(a, "a"), synthetic_samples(b, "b"))
    assert same == pytest.approx(1.0, abs=0.05)
    up = compare_distr(
        synthetic_samples(np.clip(a + 0.2, 0, 1), "a"), synthetic_samples(b, "b")
    )
    down = compare_distr(
        synthetic_samples(b, "b"), synthetic_samples(np.clip(a + 0.2, 0, 1), "a")
    )
    assert up > 1.2
    assert down < 0.8
    with pytest.raises(ScoringContextError):
        compare_distr(
            synthetic_samples(a, "a", inst_id="p"),
            synthetic_samples(b, "b", inst_id="q"),
        )


# -- sample collection against real runs --------------------------------------

def test_build_reference_small(inst3):
    curve = build_reference(inst3, 1, n_runs=100, master_seed=0)
    again = build_reference(inst3, 1, n_runs=100, master_seed=0)
    assert curve == again
    assert curve.n_used == 100
    assert curve.instance_id == inst3.id
    with pytest.raises(ValidationError):
        build_reference(inst3, 1, n_runs=50)


def test_reference_failure_budget(inst3, monkeypatch):
    def mostly_fail(inst, backend, n_layers, seeds, **kw):
        keep = len(seeds) // 2
        return np.full(keep, 0.5), list(range(len(seeds) - keep))

    monkeypatch.setattr(scoring_mod.qaoa_mod, "run_batch", mostly_fail)
    with pytest.raises(RunBudgetError):
        build_reference(inst3, 1, n_runs=100)
    with pytest.raises(RunBudgetError):
        collect_samples(inst3, noiseless_backend(3), 1, 50, 0)


def test_collect_samples_seeding(inst3):
    b = noiseless_backend(3)
    s1 = collect_samples(inst3, b, 1, 5, master_seed=0)
    s2 = collect_samples(inst3, b, 1, 5, master_seed=0)
    assert s1 == s2
    renamed = noiseless_backend(3)
    renamed.name = "other"
    s3 = collect_samples(inst3, renamed, 1, 5, master_seed=0)
    assert s3.values != s1.values  # seeds mix in the backend name
    tail = collect_samples(inst3, b, 1, 2, master_seed=0, start=3)
    assert tail.values == s1.values[3:]
    with pytest.raises(ValidationError):
        collect_samples(inst3, b, 1, 0, master_seed=0)


def test_reference_and_scoring_seeds_are_disjoint(inst3):
    b = noiseless_backend(3)
    curve_vals = build_reference(inst3, 1, n_runs=100, master_seed=0)
    scored = collect_samples(inst3, b, 1, 100, master_seed=0)
    report = h_score(scored, curve_vals)
    assert 0.0 < report.h_score < 2.0


# -- robustness ----------------------------------------------------------------

def test_fit_hscore_stats_formulas():
    stats = fit_hscore_stats([1.0, 2.0, 3.0, 4.0, 5.0])
    assert stats["repeats"] == 5
    assert stats["mean"] == pytest.approx(3.0)
    assert stats["std"] == pytest.approx(np.sqrt(2.5))
    half = 1.96 * np.sqrt(2.5) / np.sqrt(5)
    assert stats["ci95_mean"] == pytest.approx([3.0 - half, 3.0 + half])
    # chi-square interval for the std, df = 4 (table values)
    lo = np.sqrt(2.5) * np.sqrt(4 / 11.143286781877796)
    hi = np.sqrt(2.5) * np.sqrt(4 / 0.4844185570879299)
    assert stats["ci95_std"] == pytest.approx([lo, hi])
    with pytest.raises(ValidationError):
        fit_hscore_stats([1.0])


def test_robustness_same_seed_repeats_has_zero_spread(inst3):
    b = noiseless_backend(3)
    report = robustness(
        inst3, b, 1, repeats=10, m_runs=5, n_runs=100,
        master_seed=0, same_seed_repeats=True,
    )
    assert report.stats["std"] == pytest.approx(0.0, abs=1e-12)
    assert len(report.per_run_scores) == 10
    assert len(set(report.per_run_scores)) == 1
    assert report.h_score == pytest.approx(report.per_run_scores[0], abs=1e-12)


def test_robustness_fresh_seeds_spread(inst3):
    b = noiseless_backend(3)
    curve = build_reference(inst3, 1, n_runs=100, master_seed=0)
    report = robustness(
        inst3, b, 1, repeats=10, m_runs=5, n_runs=100,
        master_seed=0, curve=curve,
    )
    assert report.stats["std"] > 0.0
    assert report.stats["repeats"] == 10
    lo, hi = report.stats["ci95_mean"]
    assert lo <= report.h_score <= hi
    with pytest.raises(ValidationError):
        robustness(inst3, b, 1, repeats=5, m_runs=5, n_runs=100)


def test_robustness_rejects_foreign_curve(inst3, inst4):
    curve = build_reference(inst4, 1, n_runs=100, master_seed=0)
    with pytest.raises(ScoringContextError):
        robustness(inst3, noiseless_backend(3), 1, repeats=10, m_runs=5,
                   n_runs=100, curve=curve)


# -- persistence ---------------------------------------------------------------

def test_save_load_round_trips(tmp_path, inst3):
    curve = build_reference(inst3, 1, n_runs=100, master_seed=0)
    save_curve(curve, tmp_path / "c.json", provenance={"tool": "test"})
    assert load_curve(tmp_path / "c.json") == curve

    samples = collect_samples(inst3, noiseless_backend(3), 1, 5, 0)
    save_samples(samples, tmp_path / "s.json")
    assert load_samples(tmp_path / "s.json") == samples

    report = h_score(samples, curve)
    save_report(report, tmp_path / "r.json")
    assert load_report(tmp_path / "r.json") == report
