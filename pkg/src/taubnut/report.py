"""Deterministic SVG figures and the text summary for a run directory."""
from __future__ import annotations

import csv
import io
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from . import __version__  # noqa: E402

FIGSIZE = (6.4, 4.0)

STATEMENTS = {
    "curvature": "scalar curvature vanishes for standard Taub-NUT (Lichnerowicz: no L2 harmonic spinors)",
    "symbol-scan": "N(D - lambda) is singular for every real lambda: essential spectrum is R",
    "weighted-scan": "no exponential weight restores full ellipticity",
    "weyl": "quasi-modes with vanishing residual at each lambda: essential spectrum is R",
    "dvert": "vertical operator has a 4-dimensional kernel (fiber modes n = +-1)",
    "spectrum": "discretized D is symmetric with chirality-paired spectrum",
    "kernel-probe": "heuristic evidence on the L2 kernel (index conjectured to vanish)",
    "conformal-check": "norm identity behind finite dimensionality of the L2 kernel",
    "report": "curvature, symbol scan and Weyl quasi-modes rendered together",
    "validate": "positive definiteness constraints a, b, d > 0, c > -2 sqrt(d)",
}


def atomic_write(path: Path, data: str | bytes) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    mode = "wb" if isinstance(data, bytes) else "w"
    kw = {} if isinstance(data, bytes) else {"encoding": "utf-8", "newline": ""}
    with open(tmp, mode, **kw) as fh:
        fh.write(data)
    os.replace(tmp, path)


def read_csv(path: Path) -> tuple[dict, list[dict]]:
    if not Path(path).exists():
        raise FileNotFoundError(f"missing artifact {path}")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
        else:
            body.append(line)
    rows = list(csv.DictReader(body))
    return meta, rows


def _svg(fig, title: str) -> bytes:
    buf = io.BytesIO()
    with plt.rc_context({"svg.hashsalt": "taubnut", "svg.fonttype": "none"}):
        fig.savefig(buf, format="svg", metadata={"Date": None, "Title": title,
                                                 "Creator": f"taubnut {__version__}"})
    plt.close(fig)
    return buf.getvalue()


def _line_plot(xs, ys, xlabel, ylabel, title, logx=False, marker=None, groups=None):
    fig, ax = plt.subplots(figsize=FIGSIZE)
    if groups is None:
        ax.plot(xs, ys, marker=marker, lw=1.2)
    else:
        for label, (gx, gy) in groups.items():
            ax.plot(gx, gy, marker=marker or "o", lw=1.2, label=label)
        ax.legend(fontsize=8)
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    return fig


def emit_report(out_dir: Path) -> list[Path]:
    """Plot kappa(r), sigma_min(lambda) and Weyl residuals from existing CSVs."""
    out_dir = Path(out_dir)
    meta_c, curv = read_csv(out_dir / "curvature.csv")
    meta_s, scan = read_csv(out_dir / "symbol_scan.csv")
    meta_w, weyl = read_csv(out_dir / "weyl.csv")
    seed = meta_c.get("seed", "?")
    written = []

    fig = _line_plot([float(r["r"]) for r in curv], [float(r["kappa"]) for r in curv],
                     "r", "scalar curvature", f"kappa(r), params={meta_c.get('params')}", logx=True)
    p = out_dir / "curvature.svg"
    atomic_write(p, _svg(fig, f"curvature seed={seed}"))
    written.append(p)

    fig = _line_plot([float(r["lambda"]) for r in scan], [float(r["sigma_min"]) for r in scan],
                     "lambda", "min singular value", "sigma_min of N(D) - lambda")
    p = out_dir / "symbol_scan.svg"
    atomic_write(p, _svg(fig, f"symbol-scan seed={seed}"))
    written.append(p)

    groups = {}
    for r in weyl:
        key = f"lambda={float(r['lambda']):g}, n={r['n']}"
        gx, gy = groups.setdefault(key, ([], []))
        gx.append(int(r["k"]))
        gy.append(float(r["residual_ratio"]))
    fig = _line_plot(None, None, "k (support doubling)", "||(D - lambda) u|| / ||u||",
                     "Weyl quasi-mode residuals", groups=groups)
    fig.axes[0].set_yscale("log")
    p = out_dir / "weyl.svg"
    atomic_write(p, _svg(fig, f"weyl seed={seed}"))
    written.append(p)

    kmax = max(abs(float(r["kappa"])) for r in curv)
    smax = max(float(r["sigma_min"]) for r in scan)
    lines = [
        f"taubnut {__version__} report  seed={seed}",
        "",
        f"curvature      max |kappa| = {kmax:.3e}    shadows: {STATEMENTS['curvature']}",
        f"symbol-scan    max sigma_min = {smax:.3e}  shadows: {STATEMENTS['symbol-scan']}",
    ]
    for key, (gx, gy) in groups.items():
        lines.append(f"weyl {key:<18} residuals " + " ".join(f"{v:.4f}" for v in gy))
    lines.append(f"               shadows: {STATEMENTS['weyl']}")
    p = out_dir / "summary.txt"
    atomic_write(p, "\n".join(lines) + "\n")
    written.append(p)
    return written
