"""CSV trace export and standalone SVG plots."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .simulation import SimulationTrace

PALETTE = ("#000000", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#17becf", "#bcbd22", "#7f7f7f")
MAX_POINTS = 2000  # per polyline; plots are thinned, the CSV never is


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def csv_header(n: int) -> list[str]:
    return ["t", "agent", *(f"x{k}" for k in range(1, n + 1)), "u", "err_ref"]


def export_csv(trace: SimulationTrace, path) -> Path:
    """Write one row per (sample, agent), time-major, reference first.

    Agent 0 is the reference model; its ``u`` column holds ``r(t)`` and its
    ``err_ref`` is zero.  Numbers use 9 significant digits.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ref = trace.config.reference
    x, x0, u, err = trace.x, trace.x0, trace.u, trace.err_ref
    N = x.shape[1]
    with path.open("w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(trace.layout.n))
        for k, t in enumerate(trace.t):
            ts = _fmt(t)
            w.writerow([ts, 0, *map(_fmt, x0[k]), _fmt(ref.r(t)), _fmt(0.0)])
            for i in range(N):
                w.writerow([ts, i + 1, *map(_fmt, x[k, i]), _fmt(u[k, i]), _fmt(err[k, i])])
    return path


def read_csv(path) -> dict:
    """Load an exported trace into ``{agent: {column: array}}``."""
    out = {}
    with Path(path).open(newline="", encoding="ascii") as fh:
        for row in csv.DictReader(fh):
            cols = out.setdefault(int(row.pop("agent")), {})
            for k, v in row.items():
                cols.setdefault(k, []).append(float(v))
    return {a: {k: np.array(v) for k, v in cols.items()} for a, cols in out.items()}


# ----------------------------------------------------------------------- svg

def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    return [start + k * step for k in range(int((hi - start) / step + 1e-9) + 1)]


def _thin(t, y):
    if t.shape[0] <= MAX_POINTS:
        return t, y
    idx = np.unique(np.linspace(0, t.shape[0] - 1, MAX_POINTS).astype(int))
    return t[idx], y[idx]


def svg_plot(series: list[tuple[str, np.ndarray, np.ndarray]], title: str, ylabel: str,
             width: int = 720, height: int = 420) -> str:
    """Line plot as an SVG document; ``series`` holds ``(label, t, y)`` triples."""
    ml, mr, mt, mb = 70, 130, 40, 50
    pw, ph = width - ml - mr, height - mt - mb
    ts = np.concatenate([s[1] for s in series]) if series else np.array([0.0, 1.0])
    ys = np.concatenate([s[2] for s in series]) if series else np.array([0.0, 1.0])
    ys = ys[np.isfinite(ys)]
    t_lo, t_hi = float(ts.min()), float(ts.max())
    y_lo, y_hi = (float(ys.min()), float(ys.max())) if ys.size else (0.0, 1.0)
    if t_hi <= t_lo:
        t_hi = t_lo + 1.0
    if y_hi - y_lo < 1e-12:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    def sx(t):
        return ml + (t - t_lo) / (t_hi - t_lo) * pw

    def sy(y):
        return mt + (y_hi - y) / (y_hi - y_lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{ml + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">{title}</text>']
    for tk in _nice_ticks(t_lo, t_hi):
        x = sx(tk)
        out.append(f'<line x1="{x:.1f}" y1="{mt}" x2="{x:.1f}" y2="{mt + ph}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{x:.1f}" y="{mt + ph + 16}" text-anchor="middle">{tk:g}</text>')
    for yk in _nice_ticks(y_lo, y_hi):
        y = sy(yk)
        out.append(f'<line x1="{ml}" y1="{y:.1f}" x2="{ml + pw}" y2="{y:.1f}" stroke="#e5e5e5"/>')
        out.append(f'<text x="{ml - 6}" y="{y + 4:.1f}" text-anchor="end">{yk:g}</text>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 10}" text-anchor="middle">t [s]</text>')
    out.append(f'<text x="18" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {mt + ph / 2:.1f})">{ylabel}</text>')
    for k, (label, t, y) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        t, y = _thin(np.asarray(t), np.asarray(y))
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t, y) if np.isfinite(b))
        dash = ' stroke-dasharray="6 3"' if label == "reference" else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.3"{dash} points="{pts}"/>')
        ly = mt + 14 + 18 * k
        out.append(f'<line x1="{ml + pw + 12}" y1="{ly - 4}" x2="{ml + pw + 36}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{ml + pw + 42}" y="{ly}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


PLOT_SCRIPT = '''\
"""Regenerate the trace plots from {csv_name} with matplotlib."""
import csv
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = defaultdict(lambda: defaultdict(list))
with open("{csv_name}", newline="") as fh:
    for row in csv.DictReader(fh):
        agent = int(row.pop("agent"))
        for key, value in row.items():
            rows[agent][key].append(float(value))

n_states = len([c for c in rows[0] if c.startswith("x")])
for k in range(1, n_states + 1):
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for agent, cols in sorted(rows.items()):
        label = "reference" if agent == 0 else f"agent {{agent}}"
        ax.plot(cols["t"], cols[f"x{{k}}"], "--" if agent == 0 else "-", label=label)
    ax.set_xlabel("t [s]")
    ax.set_ylabel(f"x{{k}}")
    ax.legend()
    fig.savefig(f"state{{k}}.png", dpi=150)

followers = [a for a in sorted(rows) if a != 0]
if followers:
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for agent in followers:
        ax.plot(rows[agent]["t"], rows[agent]["err_ref"], label=f"agent {{agent}}")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("|x_i - x_0|")
    ax.legend()
    fig.savefig("error_norms.png", dpi=150)
'''


def emit_plots(trace: SimulationTrace, out_dir, csv_name: str = "trace.csv") -> list[Path]:
    """Write one overlay per state component, an error-norm plot and a script.

    The error plot is skipped when the scenario has no followers.  Returns
    the SVG paths followed by the script path.
    """
    if len(trace) == 0:
        raise ValueError("empty trace")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t, x, x0 = trace.t, trace.x, trace.x0
    N = x.shape[1]
    files = []
    for k in range(trace.layout.n):
        series = [("reference", t, x0[:, k])]
        series += [(f"agent {i + 1}", t, x[:, i, k]) for i in range(N)]
        p = out_dir / f"state{k + 1}.svg"
        p.write_text(svg_plot(series, f"{trace.config.name}: state {k + 1}", f"x{k + 1}"))
        files.append(p)
    if N:
        series = [(f"agent {i + 1}", t, trace.err_ref[:, i]) for i in range(N)]
        p = out_dir / "error_norms.svg"
        p.write_text(svg_plot(series, f"{trace.config.name}: tracking error", "|x_i - x_0|"))
        files.append(p)
    script = out_dir / "plot_trace.py"
    script.write_text(PLOT_SCRIPT.format(csv_name=csv_name))
    files.append(script)
    return files
