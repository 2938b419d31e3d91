"""Chart and summary emission from a directory of result files.

Scans a results directory for report/samples JSON files written by the
CLI commands and renders three chart types as deterministic SVG: a
grouped H-Score bar chart ordered by single-layer score, a per-layer
accuracy-distribution heatmap, and H-Score histograms with Gaussian
overlays for robustness reports. SVG output is byte-stable: fixed hash
salt, no embedded dates.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("svg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
from scipy.stats import norm  # noqa: E402

plt.rcParams["svg.hashsalt"] = "toniq"

HEATMAP_BINS = 20


def _load_json(path: Path) -> dict | None:
    try:
        return json.loads(path.read_text())
    except (OSError, json.JSONDecodeError):
        return None


def _collect(results_dir: Path):
    """Split the directory's JSON files into reports and samples."""
    reports, samples = [], []
    for path in sorted(results_dir.glob("*.json")):
        d = _load_json(path)
        if d is None:
            continue
        if "h_score" in d and "backend_name" in d:
            reports.append((path.name, d))
        elif "values" in d and "backend_name" in d:
            samples.append((path.name, d))
    return reports, samples


def _savefig(fig, path: Path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _bar_chart(reports, out: Path) -> Path | None:
    """Grouped bars: one group per backend, one bar per layer count,
    groups ordered by the backend's 1-layer H-Score (descending)."""
    by_backend: dict[str, dict[int, float]] = {}
    for _, d in reports:
        by_backend.setdefault(d["backend_name"], {})[int(d["n_layers"])] = d["h_score"]
    if not by_backend:
        return None
    layer_values = sorted({p for scores in by_backend.values() for p in scores})
    backends = sorted(
        by_backend,
        key=lambda b: (-by_backend[b].get(1, -np.inf), b),
    )
    x = np.arange(len(backends))
    width = 0.8 / len(layer_values)
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(backends)), 4))
    for i, p in enumerate(layer_values):
        heights = [by_backend[b].get(p, 0.0) for b in backends]
        ax.bar(x + (i - (len(layer_values) - 1) / 2) * width, heights, width,
               label=f"{p} layer{'s' if p != 1 else ''}")
    ax.axhline(1.0, color="gray", linewidth=0.8, linestyle="--")
    ax.set_xticks(x)
    ax.set_xticklabels(backends, rotation=30, ha="right")
    ax.set_ylabel("H-Score")
    ax.set_ylim(0, 2)
    ax.set_title("H-Score by backend (sorted by 1-layer score)")
    ax.legend()
    fig.tight_layout()
    path = out / "hscore_bars.svg"
    _savefig(fig, path)
    return path


def accuracy_matrix(samples, bins: int = HEATMAP_BINS):
    """Rows: layer counts (ascending); each row is that layer's accuracy
    histogram normalized to sum exactly 1."""
    by_layer: dict[int, list[float]] = {}
    for _, d in samples:
        by_layer.setdefault(int(d["n_layers"]), []).extend(d["values"])
    layers = sorted(by_layer)
    rows = []
    for p in layers:
        hist, _ = np.histogram(by_layer[p], bins=bins, range=(0.0, 1.0))
        total = hist.sum()
        rows.append(hist / total if total else hist.astype(float))
    return layers, np.array(rows)


def _heatmap(samples, out: Path) -> Path | None:
    layers, matrix = accuracy_matrix(samples)
    if not layers:
        return None
    fig, ax = plt.subplots(figsize=(6, 0.5 * len(layers) + 2))
    im = ax.imshow(
        matrix, aspect="auto", origin="lower",
        extent=(0.0, 1.0, -0.5, len(layers) - 0.5), cmap="viridis",
    )
    ax.set_yticks(range(len(layers)))
    ax.set_yticklabels([str(p) for p in layers])
    ax.set_xlabel("accuracy")
    ax.set_ylabel("layers")
    ax.set_title("Accuracy distribution by layer count")
    fig.colorbar(im, ax=ax, label="fraction of runs")
    fig.tight_layout()
    path = out / "accuracy_heatmap.svg"
    _savefig(fig, path)
    return path


def _hscore_histograms(reports, out: Path) -> list[Path]:
    paths = []
    for fname, d in reports:
        stats = d.get("stats")
        scores = d.get("per_run_scores")
        if not stats or not scores:
            continue
        scores = np.asarray(scores, dtype=float)
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist(scores, bins=min(30, max(5, scores.size // 5)),
                density=True, alpha=0.7, edgecolor="black")
        mean, std = stats["mean"], stats["std"]
        if std > 0:
            xs = np.linspace(scores.min(), scores.max(), 200)
            ax.plot(xs, norm.pdf(xs, mean, std), "r-",
                    label=f"Normal({mean:.4f}, {std:.4f})")
            ax.legend()
        ax.set_xlabel("H-Score")
        ax.set_ylabel("density")
        ax.set_title(f"H-Score spread: {d['backend_name']}, "
                     f"{d['n_layers']} layer(s)")
        fig.tight_layout()
        path = out / f"hscore_hist_{Path(fname).stem}.svg"
        _savefig(fig, path)
        paths.append(path)
    return paths


def _summary_csv(reports, out: Path, provenance_lines: list[str]) -> Path:
    path = out / "summary.csv"
    with path.open("w", newline="") as fh:
        for line in provenance_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["backend", "n_layers", "h_score", "M_used", "source"])
        rows = sorted(
            (d["backend_name"], int(d["n_layers"]), d["h_score"], d["M_used"], name)
            for name, d in reports
        )
        writer.writerows(rows)
    return path


def render_report(
    results_dir: str | Path,
    out_dir: str | Path | None = None,
    provenance_lines: list[str] | None = None,
) -> list[Path]:
    """Render every chart supported by the directory's contents.

    Returns the written paths; empty list means there was nothing to
    report on.
    """
    results_dir = Path(results_dir)
    out = Path(out_dir) if out_dir else results_dir
    reports, samples = _collect(results_dir)
    if not reports and not samples:
        return []
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if reports:
        p = _bar_chart(reports, out)
        if p:
            written.append(p)
        written.extend(_hscore_histograms(reports, out))
        written.append(_summary_csv(reports, out, provenance_lines or []))
    if samples:
        p = _heatmap(samples, out)
        if p:
            written.append(p)
    return written
