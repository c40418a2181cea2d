"""Render result CSVs into figures next to the delimited output.

The CSVs written by the CLI carry ``# key=value`` provenance lines; the
``kind`` key selects the figure set. Rendering is optional everywhere:
the CSV/JSON files remain the primary interface.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

_SAVEFIG = {"dpi": 120}
_MODE_STYLE = {
    "sla-aware": {"color": "tab:blue", "marker": "o"},
    "qos-ga": {"color": "tab:orange", "marker": "s"},
    "random": {"color": "tab:green", "marker": "^"},
}


def read_result_csv(path: str | Path) -> tuple[dict, list[dict]]:
    """Split a result file into its provenance header and data rows."""
    provenance: dict[str, str] = {}
    lines = Path(path).read_text().splitlines()
    data_start = 0
    for idx, line in enumerate(lines):
        if line.startswith("#"):
            key, _, value = line.lstrip("# ").partition("=")
            provenance[key] = value
            data_start = idx + 1
        else:
            break
    rows = list(csv.DictReader(lines[data_start:]))
    return provenance, rows


def render(csv_path: str | Path, out_dir: str | Path) -> list[Path]:
    """Render the figure set matching the CSV's ``kind`` provenance."""
    provenance, rows = read_result_csv(csv_path)
    kind = provenance.get("kind")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "sweep":
        return render_sweep_figures(provenance, rows, out)
    if kind == "trace":
        return render_trace_figures(provenance, rows, out)
    if kind == "converge_traces":
        return render_converge_figures(provenance, rows, out)
    raise ValueError(f"{csv_path}: no figure set for kind {kind!r}")


def render_sweep_figures(provenance: dict, rows: list[dict],
                         out: Path) -> list[Path]:
    """Mean total time and mean SLA violator count versus the swept grid."""
    vary = provenance.get("vary", "grid")
    figures = []
    for metric, ylabel, fname in (
            ("total_time_s", "mean total execution time (s)",
             f"sweep_{vary}_total_time.png"),
            ("n_distinct", "mean requests violating SLA",
             f"sweep_{vary}_violations.png")):
        fig, ax = plt.subplots(figsize=(6, 4))
        for mode in sorted({r["mode"] for r in rows}):
            pts: dict[float, list[float]] = {}
            for r in rows:
                if r["mode"] == mode:
                    pts.setdefault(float(r["grid_value"]), []).append(
                        float(r[metric]))
            xs = sorted(pts)
            ys = [sum(pts[x]) / len(pts[x]) for x in xs]
            ax.plot(xs, ys, label=mode, **_MODE_STYLE.get(mode, {}))
        ax.set_xlabel(vary)
        ax.set_ylabel(ylabel)
        ax.legend()
        ax.grid(alpha=0.3)
        fig.tight_layout()
        path = out / fname
        fig.savefig(path, **_SAVEFIG)
        plt.close(fig)
        figures.append(path)
    return figures


def render_trace_figures(provenance: dict, rows: list[dict],
                         out: Path) -> list[Path]:
    """Fitness and feasible-time convergence curves of one optimizer run."""
    gens = [int(r["generation"]) for r in rows]
    best = [float(r["best_F"]) for r in rows]
    mean = [float(r["mean_F"]) for r in rows]
    label = provenance.get("mode", "run")

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(gens, best, label=f"{label} best", color="tab:blue")
    ax.plot(gens, mean, label=f"{label} mean", color="tab:blue", alpha=0.4)
    ax.set_xlabel("generation")
    ax.set_ylabel("fitness")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fitness_path = out / "trace_fitness.png"
    fig.savefig(fitness_path, **_SAVEFIG)
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    feas = [(g, float(r["best_feasible_time_s"]))
            for g, r in zip(gens, rows) if r["best_feasible_time_s"]]
    if feas:
        ax.plot([p[0] for p in feas], [p[1] for p in feas], color="tab:red")
    ax.set_xlabel("generation")
    ax.set_ylabel("best feasible total time (s)")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    time_path = out / "trace_time.png"
    fig.savefig(time_path, **_SAVEFIG)
    plt.close(fig)
    return [fitness_path, time_path]


def render_converge_figures(provenance: dict, rows: list[dict],
                            out: Path) -> list[Path]:
    """Per-iteration fitness/time distributions grouped by parameter value,
    one pair of box plots per convergence stage."""
    figures = []
    stages = sorted({r["stage"] for r in rows})
    for stage in stages:
        stage_rows = [r for r in rows if r["stage"] == stage]
        values = sorted({float(r["value"]) for r in stage_rows})
        for metric, ylabel, suffix in (
                ("best_F", "fitness over iterations", "fitness"),
                ("best_feasible_time_s", "feasible total time (s)", "time")):
            data = []
            for v in values:
                data.append([float(r[metric]) for r in stage_rows
                             if float(r["value"]) == v and r[metric]])
            fig, ax = plt.subplots(figsize=(6, 4))
            ax.boxplot(data, tick_labels=[_fmt_value(v) for v in values],
                       showfliers=False)
            ax.set_xlabel(stage)
            ax.set_ylabel(ylabel)
            ax.grid(alpha=0.3, axis="y")
            fig.tight_layout()
            path = out / f"converge_{stage}_{suffix}.png"
            fig.savefig(path, **_SAVEFIG)
            plt.close(fig)
            figures.append(path)
    return figures


def _fmt_value(v: float) -> str:
    return f"{int(v)}" if v == int(v) else f"{v:g}"
