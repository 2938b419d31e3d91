"""Command-line interface.

Subcommands mirror the library surface: reference (build a scoring
curve), score (H-Score one backend), rank/select (fleet operations),
compare (two sample sets), robustness (H-Score spread), and report
(SVG/CSV charts from a results directory). Every command is
reproducible byte-for-byte given the same inputs and --seed; outputs
embed provenance (config hash, seed, version).

Exit codes: 0 ok, 2 validation, 3 scoring-context, 4 runtime/run
budget, 5 I/O.
"""

from __future__ import annotations

import csv
import functools
import hashlib
import json
import os
import sys
from pathlib import Path

import click

from . import __version__
from . import fleet as fleet_mod
from . import qaoa as qaoa_mod
from . import report as report_mod
from . import scoring as scoring_mod
from .backend import (
    PRESET_KINDS,
    BackendModel,
    load_backend,
    noiseless_backend,
    topology_preset,
)
from .errors import (
    GenerationError,
    MitigationError,
    RoutingError,
    RunError,
    ScoringContextError,
    ToniqError,
    ValidationError,
)
from .qubo import builtin_instances, load_instance
from .scoring import AccuracySamples

EXIT_VALIDATION = 2
EXIT_CONTEXT = 3
EXIT_RUNTIME = 4
EXIT_IO = 5

FAST_N = 2_000
FAST_M = 300
FAST_REPEATS = 30


def _fail(code: int, exc: BaseException) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as exc:
            _fail(EXIT_VALIDATION, exc)
        except ScoringContextError as exc:
            _fail(EXIT_CONTEXT, exc)
        except (RunError, GenerationError, MitigationError, RoutingError) as exc:
            _fail(EXIT_RUNTIME, exc)
        except ToniqError as exc:
            _fail(EXIT_RUNTIME, exc)
        except (OSError, json.JSONDecodeError) as exc:
            _fail(EXIT_IO, exc)

    return wrapper


def _out_dir(out: str | None) -> Path:
    root = out or os.environ.get("TONIQ_DATA_DIR") or "toniq_results"
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _resolve_instance(qubits: int | None, instance: str | None):
    if (qubits is None) == (instance is None):
        raise ValidationError("choose exactly one of --qubits or --instance")
    return builtin_instances(qubits) if qubits is not None else load_instance(instance)


def _resolve_backend(spec: str, n: int) -> BackendModel:
    if spec == "noiseless":
        return noiseless_backend(n)
    if spec in PRESET_KINDS:
        return topology_preset(spec)
    return load_backend(spec)


def _load_fleet(fleet_path: str | None, backend_specs: tuple[str, ...], n: int):
    backends: list[BackendModel] = []
    if fleet_path:
        base = Path(fleet_path).parent
        entries = json.loads(Path(fleet_path).read_text())
        if not isinstance(entries, list):
            raise ValidationError("fleet file must be a JSON list of backend paths")
        for entry in entries:
            p = Path(entry)
            backends.append(load_backend(p if p.is_absolute() else base / p))
    backends.extend(_resolve_backend(s, n) for s in backend_specs)
    if not backends:
        raise ValidationError("no backends given; use --fleet or --backend")
    return backends


def _provenance(config: dict, seed: int, fast: bool) -> dict:
    blob = json.dumps(config, sort_keys=True).encode()
    return {
        "config_hash": hashlib.sha256(blob).hexdigest()[:16],
        "seed": seed,
        "version": __version__,
        "profile": "fast" if fast else "default",
    }


def _prov_lines(prov: dict) -> list[str]:
    return [f"{k}: {prov[k]}" for k in sorted(prov)]


def _write_csv(path: Path, prov: dict, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        for line in _prov_lines(prov):
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "+" for c in name)


def _curve_name(inst_id: str, layers: int, ref_runs: int, seed: int,
                shots: int | None) -> str:
    tag = "exact" if shots is None else str(shots)
    return f"curve_{_safe(inst_id)}_p{layers}_N{ref_runs}_s{seed}_sh{tag}.json"


def _get_curve(
    curve_path, inst, layers, ref_runs, seed, shots, jobs, out, prov
) -> scoring_mod.ScoringCurve:
    """Load an explicit curve, else reuse/build the default-named one."""
    if curve_path:
        return scoring_mod.load_curve(curve_path)
    auto = out / _curve_name(inst.id, layers, ref_runs, seed, shots)
    if auto.exists():
        return scoring_mod.load_curve(auto)
    curve = scoring_mod.build_reference(
        inst, layers, ref_runs, seed, shots=shots, jobs=jobs
    )
    scoring_mod.save_curve(curve, auto, prov)
    click.echo(f"reference curve built: {auto}")
    return curve


# shared option stacks ------------------------------------------------------

def _instance_opts(fn):
    fn = click.option("--qubits", type=int, default=None,
                      help="Built-in instance size (3-6).")(fn)
    fn = click.option("--instance", type=click.Path(), default=None,
                      help="Path to an instance JSON file.")(fn)
    return fn


def _common_opts(fn):
    fn = click.option("-p", "--layers", type=int, default=1, show_default=True,
                      help="Ansatz layer count.")(fn)
    fn = click.option("--seed", type=int, default=0, show_default=True,
                      help="Master seed; all run seeds derive from it.")(fn)
    fn = click.option("--out", type=click.Path(), default=None,
                      help="Output directory (default TONIQ_DATA_DIR or "
                           "./toniq_results).")(fn)
    fn = click.option("--fast", is_flag=True,
                      help="CI profile: N=2000, M=300, repeats=30.")(fn)
    fn = click.option("--jobs", type=int, default=1, show_default=True,
                      help="Parallel worker processes.")(fn)
    fn = click.option("--shots", type=int, default=scoring_mod.DEFAULT_SHOTS,
                      show_default=True,
                      help="Measurement samples per accuracy estimate; "
                           "0 scores the exact distribution.")(fn)
    return fn


def _shots_arg(shots: int) -> int | None:
    if shots < 0:
        raise ValidationError("shots must be >= 0")
    return None if shots == 0 else shots


@click.group()
@click.version_option(__version__, prog_name="toniq")
def main():
    """Benchmark simulated QPUs with QAOA-based H-Scores."""


@main.command()
@_instance_opts
@_common_opts
@click.option("--runs", "-N", "runs", type=int, default=None,
              help="Reference run count N (default 10000, fast 2000).")
@_guarded
def reference(qubits, instance, layers, seed, out, fast, jobs, shots, runs):
    """Build the noiseless reference scoring curve."""
    inst = _resolve_instance(qubits, instance)
    shots = _shots_arg(shots)
    n_runs = runs if runs is not None else (FAST_N if fast else scoring_mod.DEFAULT_N)
    out_dir = _out_dir(out)
    config = {"command": "reference", "instance": inst.id, "layers": layers,
              "N": n_runs, "seed": seed, "shots": shots}
    prov = _provenance(config, seed, fast)
    curve = scoring_mod.build_reference(
        inst, layers, n_runs, seed, shots=shots, jobs=jobs
    )
    path = out_dir / _curve_name(inst.id, layers, n_runs, seed, shots)
    scoring_mod.save_curve(curve, path, prov)
    click.echo(f"reference curve: {path}")
    click.echo(f"instance={inst.id} layers={layers} N={curve.n_used} "
               f"bins={len(curve.cdf) - 1}")


@main.command()
@_instance_opts
@_common_opts
@click.option("--backend", "backend_spec", default=None,
              help="Backend: JSON path, preset name, or 'noiseless'.")
@click.option("--curve", "curve_path", type=click.Path(), default=None,
              help="Existing curve file (default: reuse or build).")
@click.option("--runs", "-M", "runs", type=int, default=None,
              help="Scoring run count M (default 1000, fast 300).")
@click.option("--ref-runs", type=int, default=None,
              help="Reference N when the curve must be built.")
@click.option("--mitigate", is_flag=True, help="Invert readout error.")
@click.option("--synthetic", type=click.Choice(["perfect", "zero"]), default=None,
              help="Test hook: score an ideal/useless sampler instead.")
@_guarded
def score(qubits, instance, layers, seed, out, fast, jobs, shots, backend_spec,
          curve_path, runs, ref_runs, mitigate, synthetic):
    """Score one backend: M runs, H-Score report plus per-run CSV."""
    inst = _resolve_instance(qubits, instance)
    shots = _shots_arg(shots)
    m_runs = runs if runs is not None else (FAST_M if fast else scoring_mod.DEFAULT_M)
    n_ref = ref_runs if ref_runs is not None else (
        FAST_N if fast else scoring_mod.DEFAULT_N
    )
    if backend_spec is None and synthetic is None:
        raise ValidationError("give --backend (or --synthetic for the test hook)")
    out_dir = _out_dir(out)

    if synthetic:
        backend_name = f"synthetic_{synthetic}"
    else:
        backend = _resolve_backend(backend_spec, inst.n)
        backend_name = backend.name
    config = {"command": "score", "instance": inst.id, "layers": layers,
              "M": m_runs, "N": n_ref, "seed": seed, "backend": backend_name,
              "mitigate": mitigate, "shots": shots, "synthetic": synthetic}
    prov = _provenance(config, seed, fast)

    curve = _get_curve(
        curve_path, inst, layers, n_ref, seed, shots, jobs, out_dir, prov
    )
    if synthetic:
        value = 1.0 if synthetic == "perfect" else 0.0
        samples = AccuracySamples(
            values=(value,) * m_runs, instance_id=inst.id, n_layers=layers,
            backend_name=backend_name, master_seed=seed,
        )
    else:
        samples = scoring_mod.collect_samples(
            inst, backend, layers, m_runs, seed,
            mitigate=mitigate, shots=shots, jobs=jobs,
        )
    rep = scoring_mod.h_score(samples, curve)

    stem = f"score_{_safe(backend_name)}_{_safe(inst.id)}_p{layers}_M{m_runs}_s{seed}"
    report_path = out_dir / f"{stem}.json"
    scoring_mod.save_report(rep, report_path, prov)
    scoring_mod.save_samples(samples, out_dir / f"{stem}_samples.json", prov)
    _write_csv(
        out_dir / f"{stem}.csv", prov,
        ["run_index", "accuracy", "score"],
        [(i, a, s) for i, (a, s) in
         enumerate(zip(samples.values, rep.per_run_scores))],
    )
    click.echo(f"H-Score: {rep.h_score:.4f} (backend={backend_name}, "
               f"M={rep.m_used}, layers={layers})")
    click.echo(f"report: {report_path}")


def _fleet_opts(fn):
    fn = click.option("--fleet", "fleet_path", type=click.Path(), default=None,
                      help="JSON list of backend file paths.")(fn)
    fn = click.option("--backend", "backend_specs", multiple=True,
                      help="Backend spec; repeatable.")(fn)
    fn = click.option("--curve", "curve_path", type=click.Path(), default=None)(fn)
    fn = click.option("--runs", "-M", "runs", type=int, default=None,
                      help="Scoring runs per backend / pooled total.")(fn)
    fn = click.option("--ref-runs", type=int, default=None)(fn)
    fn = click.option("--mitigate", is_flag=True)(fn)
    return fn


@main.command()
@_instance_opts
@_common_opts
@_fleet_opts
@_guarded
def rank(qubits, instance, layers, seed, out, fast, jobs, shots, fleet_path,
         backend_specs, curve_path, runs, ref_runs, mitigate):
    """Rank a fleet of backends by H-Score."""
    inst = _resolve_instance(qubits, instance)
    shots = _shots_arg(shots)
    m_runs = runs if runs is not None else (FAST_M if fast else scoring_mod.DEFAULT_M)
    n_ref = ref_runs if ref_runs is not None else (
        FAST_N if fast else scoring_mod.DEFAULT_N
    )
    backends = _load_fleet(fleet_path, backend_specs, inst.n)
    out_dir = _out_dir(out)
    config = {"command": "rank", "instance": inst.id, "layers": layers,
              "M": m_runs, "N": n_ref, "seed": seed, "shots": shots,
              "backends": sorted(b.name for b in backends), "mitigate": mitigate}
    prov = _provenance(config, seed, fast)
    curve = _get_curve(
        curve_path, inst, layers, n_ref, seed, shots, jobs, out_dir, prov
    )

    ranking = fleet_mod.rank_fleet(
        backends, inst, layers, m_runs, curve, seed,
        mitigate=mitigate, shots=shots, jobs=jobs,
    )
    stem = f"rank_{_safe(inst.id)}_p{layers}_M{m_runs}_s{seed}"
    path = out_dir / f"{stem}.json"
    payload = {**ranking.to_dict(), "provenance": prov}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_csv(
        out_dir / f"{stem}.csv", prov,
        ["rank", "backend", "h_score"],
        [(i + 1, name, s) for i, (name, s) in enumerate(ranking.entries)],
    )
    for i, (name, s) in enumerate(ranking.entries):
        click.echo(f"{i + 1}. {name}  h_score={s:.4f}")
    for name, reason in ranking.excluded:
        click.echo(f"warning: {name} excluded: {reason}", err=True)
    click.echo(f"ranking: {path}")


@main.command()
@_instance_opts
@_common_opts
@_fleet_opts
@click.option("-k", type=int, required=True, help="Backends to select.")
@click.option("--strategy", type=click.Choice(list(fleet_mod.STRATEGIES)),
              default="ranked_top_k", show_default=True)
@click.option("--trials", type=int, default=fleet_mod.DEFAULT_TRIALS,
              show_default=True, help="random_k trial count.")
@_guarded
def select(qubits, instance, layers, seed, out, fast, jobs, shots, fleet_path,
           backend_specs, curve_path, runs, ref_runs, mitigate, k, strategy,
           trials):
    """Select k backends by a strategy and score the pooled runs."""
    inst = _resolve_instance(qubits, instance)
    shots = _shots_arg(shots)
    m_runs = runs if runs is not None else (FAST_M if fast else scoring_mod.DEFAULT_M)
    n_ref = ref_runs if ref_runs is not None else (
        FAST_N if fast else scoring_mod.DEFAULT_N
    )
    backends = _load_fleet(fleet_path, backend_specs, inst.n)
    out_dir = _out_dir(out)
    config = {"command": "select", "instance": inst.id, "layers": layers,
              "M": m_runs, "N": n_ref, "seed": seed, "shots": shots, "k": k,
              "strategy": strategy, "trials": trials,
              "backends": sorted(b.name for b in backends), "mitigate": mitigate}
    prov = _provenance(config, seed, fast)
    curve = _get_curve(
        curve_path, inst, layers, n_ref, seed, shots, jobs, out_dir, prov
    )

    outcome = fleet_mod.select_and_pool(
        backends, k, strategy, inst, layers, m_runs, curve, seed,
        trials=trials, mitigate=mitigate, shots=shots, jobs=jobs,
    )
    stem = f"select_{strategy}_k{k}_{_safe(inst.id)}_p{layers}_M{m_runs}_s{seed}"
    path = out_dir / f"{stem}.json"
    payload = {**outcome.to_dict(), "provenance": prov}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if outcome.trial_scores is not None:
        _write_csv(
            out_dir / f"{stem}_trials.csv", prov,
            ["trial", "h_score"],
            list(enumerate(outcome.trial_scores)),
        )
    click.echo(f"strategy={strategy} chosen={','.join(outcome.chosen)}")
    click.echo(f"pooled H-Score: {outcome.pooled_report.h_score:.4f}")
    if outcome.trials is not None:
        click.echo(f"trials={outcome.trials} mean={outcome.trial_mean:.4f} "
                   f"std={outcome.trial_std:.4f}")
    click.echo(f"outcome: {path}")


@main.command()
@click.argument("samples_a", type=click.Path(exists=True))
@click.argument("samples_b", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@_guarded
def compare(samples_a, samples_b, out):
    """Compare two sample files: > 1 means the first set outperforms."""
    a = scoring_mod.load_samples(samples_a)
    b = scoring_mod.load_samples(samples_b)
    value = scoring_mod.compare_distr(a, b)
    out_dir = _out_dir(out)
    config = {"command": "compare", "a": a.backend_name, "b": b.backend_name,
              "instance": a.instance_id, "layers": a.n_layers}
    prov = _provenance(config, a.master_seed, False)
    path = out_dir / (
        f"compare_{_safe(a.backend_name)}_vs_{_safe(b.backend_name)}"
        f"_{_safe(a.instance_id)}_p{a.n_layers}.json"
    )
    payload = {
        "value": value,
        "samples_a": a.backend_name,
        "samples_b": b.backend_name,
        "instance_id": a.instance_id,
        "n_layers": a.n_layers,
        "provenance": prov,
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    click.echo(f"comparison value: {value:.4f} (>1 means {a.backend_name} "
               f"outperforms {b.backend_name})")
    click.echo(f"result: {path}")


@main.command()
@_instance_opts
@_common_opts
@click.option("--backend", "backend_spec", required=True,
              help="Backend: JSON path, preset name, or 'noiseless'.")
@click.option("--curve", "curve_path", type=click.Path(), default=None)
@click.option("--repeats", type=int, default=None,
              help="Repeat count (default 200, fast 30).")
@click.option("--runs", "-M", "runs", type=int, default=None)
@click.option("--ref-runs", type=int, default=None)
@click.option("--mitigate", is_flag=True)
@click.option("--same-seed-repeats", is_flag=True,
              help="Replay identical seeds every repeat (spread check).")
@_guarded
def robustness(qubits, instance, layers, seed, out, fast, jobs, shots,
               backend_spec, curve_path, repeats, runs, ref_runs, mitigate,
               same_seed_repeats):
    """Repeat the scoring pipeline and fit the H-Score spread."""
    inst = _resolve_instance(qubits, instance)
    shots = _shots_arg(shots)
    n_rep = repeats if repeats is not None else (
        FAST_REPEATS if fast else scoring_mod.DEFAULT_REPEATS
    )
    m_runs = runs if runs is not None else (FAST_M if fast else scoring_mod.DEFAULT_M)
    n_ref = ref_runs if ref_runs is not None else (
        FAST_N if fast else scoring_mod.DEFAULT_N
    )
    backend = _resolve_backend(backend_spec, inst.n)
    out_dir = _out_dir(out)
    config = {"command": "robustness", "instance": inst.id, "layers": layers,
              "repeats": n_rep, "M": m_runs, "N": n_ref, "seed": seed,
              "shots": shots, "backend": backend.name, "mitigate": mitigate,
              "same_seed_repeats": same_seed_repeats}
    prov = _provenance(config, seed, fast)
    curve = _get_curve(
        curve_path, inst, layers, n_ref, seed, shots, jobs, out_dir, prov
    )

    rep = scoring_mod.robustness(
        inst, backend, layers, repeats=n_rep, m_runs=m_runs, n_runs=n_ref,
        master_seed=seed, curve=curve, mitigate=mitigate, shots=shots,
        jobs=jobs, same_seed_repeats=same_seed_repeats,
    )
    stem = (f"robust_{_safe(backend.name)}_{_safe(inst.id)}"
            f"_p{layers}_R{n_rep}_M{m_runs}_s{seed}")
    path = out_dir / f"{stem}.json"
    scoring_mod.save_report(rep, path, prov)
    _write_csv(
        out_dir / f"{stem}.csv", prov,
        ["repeat", "h_score"],
        list(enumerate(rep.per_run_scores)),
    )
    s = rep.stats
    click.echo(f"H-Score over {s['repeats']} repeats: mean={s['mean']:.4f} "
               f"std={s['std']:.4f}")
    click.echo(f"ci95_mean=[{s['ci95_mean'][0]:.4f}, {s['ci95_mean'][1]:.4f}] "
               f"ci95_std=[{s['ci95_std'][0]:.4f}, {s['ci95_std'][1]:.4f}]")
    click.echo(f"report: {path}")


@main.command()
@click.option("--results", "results_dir", type=click.Path(), default=None,
              help="Directory of result JSON files (default output root).")
@click.option("--out", type=click.Path(), default=None,
              help="Chart output directory (default: results dir).")
@_guarded
def report(results_dir, out):
    """Render SVG charts and a summary CSV from saved results."""
    results = Path(results_dir) if results_dir else _out_dir(None)
    written = report_mod.render_report(
        results, out, provenance_lines=[f"version: {__version__}"]
    )
    if not written:
        click.echo("nothing to report")
        return
    for path in written:
        click.echo(f"wrote: {path}")


if __name__ == "__main__":
    main()
