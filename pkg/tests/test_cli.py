"""End-to-end command-line behavior: outputs, caching, exit codes."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from toniq.backend import BackendModel, noiseless_backend, save_backend
from toniq.cli import main
from toniq.scoring import AccuracySamples, load_curve, load_report, save_samples

RUNNER = CliRunner()

REF = ["--ref-runs", "100"]


def invoke(*args, **kw):
    return RUNNER.invoke(main, [str(a) for a in args], **kw)


def write_fleet(tmp_path):
    clean = noiseless_backend(3)
    clean.name = "clean"
    noisy = BackendModel(
        name="noisy", num_qubits=3, coupling=((0, 1), (1, 2), (0, 2)),
        p1=0.01, p2_default=0.3, t1=50.0, t2=60.0, readout=(0.05, 0.05),
    )
    paths = []
    for b in (clean, noisy):
        p = tmp_path / f"{b.name}.json"
        save_backend(b, p)
        paths.append(p.name)
    fleet = tmp_path / "fleet.json"
    fleet.write_text(json.dumps(paths))
    return fleet


def test_version():
    res = invoke("--version")
    assert res.exit_code == 0
    assert "toniq" in res.output


def test_reference_builds_curve(tmp_path):
    res = invoke("reference", "--qubits", 3, "--runs", 100, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    files = list(tmp_path.glob("curve_*.json"))
    assert len(files) == 1
    curve = load_curve(files[0])
    assert curve.n_used == 100
    assert curve.instance_id == "builtin_n3"
    payload = json.loads(files[0].read_text())
    assert payload["provenance"]["seed"] == 0
    assert "N=100" in res.output


def test_reference_rejects_small_n(tmp_path):
    res = invoke("reference", "--qubits", 3, "--runs", 50, "--out", tmp_path)
    assert res.exit_code == 2
    assert "error" in res.stderr


def test_instance_selection_is_exclusive(tmp_path):
    res = invoke("reference", "--out", tmp_path)
    assert res.exit_code == 2
    res = invoke("reference", "--qubits", 3, "--instance", "x.json",
                 "--out", tmp_path)
    assert res.exit_code == 2


def test_score_synthetic_extremes(tmp_path):
    res = invoke("score", "--qubits", 3, "--synthetic", "perfect",
                 "--runs", 20, *REF, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "H-Score: 2.0000" in res.output
    res = invoke("score", "--qubits", 3, "--synthetic", "zero",
                 "--runs", 20, *REF, "--out", tmp_path)
    assert res.exit_code == 0
    assert "H-Score: 0.0000" in res.output
    report = load_report(tmp_path / "score_synthetic_zero_builtin_n3_p1_M20_s0.json")
    assert report.h_score == 0.0
    csv_text = (tmp_path / "score_synthetic_zero_builtin_n3_p1_M20_s0.csv").read_text()
    assert csv_text.startswith("# config_hash:")
    assert "run_index,accuracy,score" in csv_text


def test_score_requires_backend_or_synthetic(tmp_path):
    res = invoke("score", "--qubits", 3, "--out", tmp_path)
    assert res.exit_code == 2


def test_score_reuses_cached_curve(tmp_path):
    first = invoke("score", "--qubits", 3, "--backend", "noiseless",
                   "--runs", 5, *REF, "--out", tmp_path)
    assert first.exit_code == 0, first.output
    assert "reference curve built" in first.output
    second = invoke("score", "--qubits", 3, "--backend", "noiseless",
                    "--runs", 5, *REF, "--out", tmp_path)
    assert second.exit_code == 0
    assert "reference curve built" not in second.output
    assert first.output.splitlines()[-2:] == second.output.splitlines()[-2:]


def test_score_writes_samples_and_report(tmp_path):
    res = invoke("score", "--qubits", 3, "--backend", "noiseless",
                 "--runs", 5, *REF, "--out", tmp_path)
    assert res.exit_code == 0
    stem = "score_noiseless_builtin_n3_p1_M5_s0"
    report = load_report(tmp_path / f"{stem}.json")
    assert 0.0 < report.h_score < 2.0
    samples = json.loads((tmp_path / f"{stem}_samples.json").read_text())
    assert len(samples["values"]) == 5


def test_data_dir_env_var(tmp_path):
    data_dir = tmp_path / "env_results"
    res = invoke("score", "--qubits", 3, "--synthetic", "perfect",
                 "--runs", 5, *REF, env={"TONIQ_DATA_DIR": str(data_dir)})
    assert res.exit_code == 0, res.output
    assert (data_dir / "score_synthetic_perfect_builtin_n3_p1_M5_s0.json").exists()


def test_rank_fleet_cli(tmp_path):
    fleet = write_fleet(tmp_path)
    res = invoke("rank", "--qubits", 3, "--fleet", fleet, "--runs", 30,
                 *REF, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    lines = [l for l in res.output.splitlines() if l and l[0].isdigit()]
    assert lines[0].startswith("1. clean")
    assert lines[1].startswith("2. noisy")
    rank_json = json.loads((tmp_path / "rank_builtin_n3_p1_M30_s0.json").read_text())
    assert [e[0] for e in rank_json["entries"]] == ["clean", "noisy"]
    assert (tmp_path / "rank_builtin_n3_p1_M30_s0.csv").exists()


def test_rank_needs_backends(tmp_path):
    res = invoke("rank", "--qubits", 3, "--out", tmp_path)
    assert res.exit_code == 2


def test_select_cli(tmp_path):
    fleet = write_fleet(tmp_path)
    res = invoke("select", "--qubits", 3, "--fleet", fleet, "-k", 1,
                 "--strategy", "ranked_top_k", "--runs", 30, *REF,
                 "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "chosen=clean" in res.output
    outcome = json.loads(
        (tmp_path / "select_ranked_top_k_k1_builtin_n3_p1_M30_s0.json").read_text()
    )
    assert outcome["chosen"] == ["clean"]
    assert outcome["trials"] is None


def test_select_random_k_writes_trials(tmp_path):
    fleet = write_fleet(tmp_path)
    res = invoke("select", "--qubits", 3, "--fleet", fleet, "-k", 1,
                 "--strategy", "random_k", "--trials", 4, "--runs", 10,
                 *REF, "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "trials=4" in res.output
    trials_csv = tmp_path / "select_random_k_k1_builtin_n3_p1_M10_s0_trials.csv"
    assert trials_csv.exists()
    assert "trial,h_score" in trials_csv.read_text()


def test_compare_cli(tmp_path):
    rng_vals_a = [0.7, 0.72, 0.68, 0.71, 0.69]
    rng_vals_b = [0.5, 0.52, 0.48, 0.51, 0.49]
    a = AccuracySamples(tuple(rng_vals_a), "builtin_n3", 1, "a", 0)
    b = AccuracySamples(tuple(rng_vals_b), "builtin_n3", 1, "b", 0)
    save_samples(a, tmp_path / "a.json")
    save_samples(b, tmp_path / "b.json")
    res = invoke("compare", tmp_path / "a.json", tmp_path / "b.json",
                 "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "outperforms" in res.output
    payload = json.loads((tmp_path / "compare_a_vs_b_builtin_n3_p1.json").read_text())
    assert payload["value"] == 2.0


def test_compare_context_mismatch_exits_3(tmp_path):
    a = AccuracySamples((0.5,), "builtin_n3", 1, "a", 0)
    b = AccuracySamples((0.5,), "builtin_n4", 1, "b", 0)
    save_samples(a, tmp_path / "a.json")
    save_samples(b, tmp_path / "b.json")
    res = invoke("compare", tmp_path / "a.json", tmp_path / "b.json",
                 "--out", tmp_path)
    assert res.exit_code == 3


def test_robustness_cli_same_seed(tmp_path):
    res = invoke("robustness", "--qubits", 3, "--backend", "noiseless",
                 "--repeats", 10, "--runs", 5, *REF, "--same-seed-repeats",
                 "--out", tmp_path)
    assert res.exit_code == 0, res.output
    assert "std=0.0000" in res.output
    stem = "robust_noiseless_builtin_n3_p1_R10_M5_s0"
    assert (tmp_path / f"{stem}.json").exists()
    assert (tmp_path / f"{stem}.csv").exists()


def test_missing_instance_file_exits_5(tmp_path):
    res = invoke("score", "--instance", tmp_path / "missing.json",
                 "--synthetic", "perfect", "--out", tmp_path)
    assert res.exit_code == 5


def test_singular_mitigation_exits_4(tmp_path):
    bad = BackendModel(
        name="singular", num_qubits=3, coupling=((0, 1), (1, 2), (0, 2)),
        p1=0.0, p2_default=0.0, t1=1e12, t2=1e12, readout=(0.5, 0.5),
    )
    path = tmp_path / "singular.json"
    save_backend(bad, path)
    res = invoke("score", "--qubits", 3, "--backend", path, "--mitigate",
                 "--runs", 5, *REF, "--out", tmp_path)
    assert res.exit_code == 4


def test_report_renders_charts(tmp_path):
    invoke("score", "--qubits", 3, "--synthetic", "perfect",
           "--runs", 5, *REF, "--out", tmp_path)
    invoke("score", "--qubits", 3, "--backend", "noiseless",
           "--runs", 5, *REF, "--out", tmp_path)
    res = invoke("report", "--results", tmp_path)
    assert res.exit_code == 0, res.output
    assert (tmp_path / "hscore_bars.svg").exists()
    assert (tmp_path / "accuracy_heatmap.svg").exists()
    summary = (tmp_path / "summary.csv").read_text()
    assert "backend,n_layers,h_score,M_used,source" in summary
    assert "synthetic_perfect" in summary


def test_report_empty_dir(tmp_path):
    res = invoke("report", "--results", tmp_path)
    assert res.exit_code == 0
    assert "nothing to report" in res.output


def test_rerun_is_byte_identical(tmp_path):
    # same seed and config, two separate output directories
    outs = []
    for sub in ("one", "two"):
        d = tmp_path / sub
        r1 = invoke("score", "--qubits", 3, "--backend", "noiseless",
                    "--runs", 5, *REF, "--seed", 7, "--out", d)
        assert r1.exit_code == 0, r1.output
        r2 = invoke("report", "--results", d)
        assert r2.exit_code == 0
        outs.append(d)
    names = sorted(p.name for p in outs[0].iterdir())
    assert names == sorted(p.name for p in outs[1].iterdir())
    for name in names:
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes(), name
