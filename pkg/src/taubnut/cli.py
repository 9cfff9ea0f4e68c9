"""Command-line front end: ``taubnut <experiment> [flags]``."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .dirac import ModeSpec
from .errors import NumericalError, ParameterError
from .grid import Grid1D
from .metric import (MetricParams, conformal_profile, require_valid, ricci_tensor,
                     scalar_curvature, validate)
from .report import STATEMENTS, atomic_write, emit_report
from . import spectral, symbol

EXPERIMENTS = ("validate", "curvature", "dvert", "symbol-scan", "weighted-scan", "spectrum",
               "weyl", "kernel-probe", "conformal-check", "report")


@dataclass
class RunConfig:
    experiment: str
    params: MetricParams
    grid: Grid1D
    lam: list[float]
    modes: list[int]
    r: list[float]
    gamma: list[float]
    d: float | None
    out: Path
    seed: int = 0
    threshold: float = 0.05
    extra: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _range(text: str) -> list[float]:
    """``lo:hi:count`` (inclusive linspace) or a comma list."""
    if ":" in text:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n)).tolist()
    return [float(v) for v in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="taubnut", description="Dirac operator laboratory for generalized Taub-NUT metrics")
    p.add_argument("experiment", choices=EXPERIMENTS, metavar="experiment",
                   help="one of: " + ", ".join(EXPERIMENTS))
    p.add_argument("--params", help="a,b,c,d")
    p.add_argument("--standard", help="a,b (sets c=2b/a, d=b^2/a^2)")
    p.add_argument("--grid", help="xmin,xmax,N")
    p.add_argument("--lambda", dest="lam", help="lo:hi:count or comma list")
    p.add_argument("--modes", help="comma list of fiber indices n")
    p.add_argument("--r", help="lo:hi:count radii for curvature")
    p.add_argument("--gamma", help="comma list of weights for weighted-scan")
    p.add_argument("--d", type=float, help="fiber parameter for dvert/symbol scans")
    p.add_argument("--threshold", type=float, help="kernel-probe eigenvalue threshold")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--config", help="flat JSON config; flags override")
    return p


DEFAULTS = {
    "params": "1,1,2,1", "grid": "0.05,1,64", "lam": "-5:5:101", "modes": "-3,-2,-1,0,1,2,3",
    "r": "0.05:50:50", "gamma": "-2,-1,-0.5,0.5,1,2", "out": "taubnut-out", "seed": 0,
    "threshold": 0.05,
}
_CONFIG_KEYS = {"lambda": "lam"}


def _join_values(argv):
    """Glue ``--flag -5:5`` into ``--flag=-5:5`` so negative ranges parse."""
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--lambda", "--gamma", "--r", "--params", "--standard", "--grid", "--modes"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def make_config(argv=None) -> RunConfig:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_values(argv))
    merged = dict(DEFAULTS)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            for k, v in json.load(fh).items():
                merged[_CONFIG_KEYS.get(k, k)] = v
    if args.params is not None and args.standard is not None:
        raise ParameterError("give --params or --standard, not both")
    if args.params is not None or args.standard is not None:
        # a parameter flag replaces whichever form the config file used
        merged.pop("standard", None)
    for k, v in vars(args).items():
        if v is not None and k not in ("config", "experiment"):
            merged[k] = v
    if merged.get("standard") is not None:
        sv = merged["standard"]
        a, b = (float(v) for v in (sv if isinstance(sv, list) else str(sv).split(",")))
        params = MetricParams.standard(a, b)
    else:
        pv = merged["params"]
        params = MetricParams(*pv) if isinstance(pv, list) else MetricParams.parse(pv)

    def listify(v, conv):
        if isinstance(v, list):
            return [conv(t) for t in v]
        return [conv(t) for t in _range(str(v))] if conv is float else [int(t) for t in str(v).split(",")]

    g = merged["grid"]
    grid = Grid1D(*g) if isinstance(g, list) else Grid1D.parse(g)
    return RunConfig(
        experiment=args.experiment, params=params, grid=grid,
        lam=listify(merged["lam"], float), modes=listify(merged["modes"], int),
        r=listify(merged["r"], float), gamma=listify(merged["gamma"], float),
        d=merged.get("d"), out=Path(merged["out"]), seed=int(merged["seed"]),
        threshold=float(merged["threshold"]),
    )


# -- output helpers ----------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.15g}"
    return str(v)


def _provenance(cfg: RunConfig) -> str:
    p = ",".join(_fmt(v) for v in cfg.params.as_tuple())
    return f"# taubnut={__version__} experiment={cfg.experiment} params={p} seed={cfg.seed}"


def write_csv(cfg: RunConfig, name: str, header: list[str], rows) -> Path:
    buf = io.StringIO()
    buf.write(_provenance(cfg) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    path = cfg.out / name
    atomic_write(path, buf.getvalue())
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.15g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(cfg: RunConfig, name: str, payload: dict) -> Path:
    payload = dict(payload)
    payload["provenance"] = {"version": __version__, "experiment": cfg.experiment,
                             "params": list(cfg.params.as_tuple()), "seed": cfg.seed}
    path = cfg.out / name
    atomic_write(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("TAUBNUT_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = _workers()
    if n == 1:
        return [fn(v) for v in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _mode_for(n: int) -> ModeSpec:
    return ModeSpec(abs(n) / 2 if n else 0.0, n)


# -- experiments -------------------------------------------------------------

def run_validate(cfg):
    rep = validate(cfg.params)
    if not rep.ok:
        print("invalid parameters: " + "; ".join(rep.violations))
        return 1, []
    print(f"ok; standard Taub-NUT: {rep.standard}")
    return 0, []


def run_curvature(cfg):
    def row(r):
        ric = ricci_tensor(cfg.params, r)
        return [r, scalar_curvature(cfg.params, r)] + ric.ravel().tolist()
    header = ["r", "kappa"] + [f"ricci_{i}{j}" for i in range(4) for j in range(4)]
    rows = _pmap(row, cfg.r)
    return 0, [write_csv(cfg, "curvature.csv", header, rows)]


def _d(cfg):
    return cfg.d if cfg.d is not None else cfg.params.d


def run_dvert(cfg):
    d = _d(cfg)
    kd = symbol.dvert_kernel_dimension(d, cfg.modes)
    rows = []
    for n in cfg.modes:
        w = np.sort(np.linalg.eigvalsh(symbol.dvert_matrix(d, n)))
        rows.append([d, n] + w.tolist() + [kd[n]])
    print(f"total kernel dimension over modes {cfg.modes}: {sum(kd.values())}")
    return 0, [write_csv(cfg, "dvert.csv", ["d", "n", "eig0", "eig1", "eig2", "eig3", "kernel_dim"], rows)]


def run_symbol_scan(cfg):
    d = _d(cfg)

    def one(lam):
        rep = symbol.is_fully_elliptic(d, lam)
        res = symbol.shifted_min_singular(d, lam, *symbol.witness_grid(lam))
        return res, rep
    results = _pmap(one, cfg.lam)
    rows, wit = [], []
    for res, rep in results:
        w = res.witness
        rows.append([res.lam, w.xi, w.tau[0], w.tau[1], w.n, res.sigma_min])
        wit.append({"lambda": res.lam, "xi": rep.witness.xi, "tau": list(rep.witness.tau),
                    "n": rep.witness.n, "fully_elliptic": rep.fully_elliptic,
                    "residual": rep.residual,
                    "kernel_vector_re": rep.kernel_vector.real.tolist(),
                    "kernel_vector_im": rep.kernel_vector.imag.tolist()})
    worst = max(r[-1] for r in rows)
    if worst > 1e-10:
        raise NumericalError(f"symbol scan found a regular lambda (sigma_min={worst:.3e})")
    return 0, [write_csv(cfg, "symbol_scan.csv", ["lambda", "xi", "tau1", "tau2", "n", "sigma_min"], rows),
               write_json(cfg, "symbol_witnesses.json", {"d": d, "witnesses": wit})]


def run_weighted_scan(cfg):
    d = _d(cfg)
    rows = []
    for gam in cfg.gamma:
        for ang in np.linspace(0, 2 * math.pi, 8, endpoint=False):
            pt, s = symbol.weighted_witness(d, gam, float(ang))
            rows.append([gam, 0.0, pt.xi, pt.tau[0], pt.tau[1], pt.n, s, "witness"])
        # off-locus controls: direction fixed, |tau| away from |gamma|
        for scale in (0.5, 1.5):
            tau = (scale * abs(gam), 0.0)
            s = symbol.min_singular(symbol.weighted_symbol(d, gam, 0.0, tau, 1))
            rows.append([gam, 0.0, 0.0, tau[0], tau[1], 1, s, "control"])
    header = ["gamma", "lambda", "xi", "tau1", "tau2", "n", "sigma_min", "kind"]
    return 0, [write_csv(cfg, "weighted_scan.csv", header, rows)]


def run_spectrum(cfg):
    def one(n):
        mode = _mode_for(n)
        return mode, spectral.block_spectrum(cfg.params, mode, cfg.grid, count=8)
    rows = []
    for mode, res in _pmap(one, cfg.modes):
        for k, (w, r) in enumerate(zip(res.eigenvalues, res.residuals)):
            rows.append([mode.j, mode.n, k, w, r])
    return 0, [write_csv(cfg, "spectrum.csv", ["j", "n", "index", "eigenvalue", "residual"], rows)]


def run_weyl(cfg):
    lams = cfg.lam if len(cfg.lam) <= 8 else [0.0, 1.0, -2.5]
    jobs = [(lam, 1) for lam in lams] + [(lams[0], 0)]
    out = _pmap(lambda job: spectral.weyl_sequence(cfg.params, job[0], n=job[1]), jobs)
    rows = []
    for probes in out:
        for k, p in enumerate(probes):
            rows.append([p.lam, k, p.r_inner, p.r_outer, p.n, p.j, p.residual_ratio])
    return 0, [write_csv(cfg, "weyl.csv", ["lambda", "k", "r_inner", "r_outer", "n", "j", "residual_ratio"], rows)]


def run_kernel_probe(cfg):
    x0 = cfg.grid.x_min
    rep = spectral.kernel_probe(cfg.params, [x0, x0 / 2, x0 / 4], cfg.threshold, x_max=cfg.grid.x_max)
    print(rep["label"])
    return 0, [write_json(cfg, "kernel_probe.json", rep)]


def run_conformal_check(cfg):
    params = cfg.params
    h = conformal_profile(params)
    rng = np.random.default_rng(cfg.seed)
    coef = rng.normal(size=4) + 1j * rng.normal(size=4)

    def bump(lo, hi):
        def phi(r, t, ph, ch):
            r = np.asarray(r, dtype=float)
            u = (r - lo) * (hi - r)
            b = np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)
            ang = np.cos(t / 2) * np.exp(0.5j * (ch + ph))
            return np.stack([c * b * ang for c in coef])
        return phi

    cases = [
        ("below_window", bump(0.2, 0.8 * h.r1), lambda r: np.ones_like(np.asarray(r, float))),
        ("constant_h", bump(0.5, 3.0), lambda r: 4.0 * np.ones_like(np.asarray(r, float))),
        ("across_window", bump(0.5 * h.r1, 2.0 * h.r2), h),
    ]
    rows = []
    for name, phi, hf in cases:
        lo, hi = {"below_window": (0.2, 0.8 * h.r1), "constant_h": (0.5, 3.0),
                  "across_window": (0.5 * h.r1, 2.0 * h.r2)}[name]
        c = spectral.conformal_norm_check(params, phi, hf, (lo, hi))
        rows.append([name, c.lhs, c.rhs, c.defect, c.norm_sq])
    return 0, [write_csv(cfg, "conformal_check.csv", ["case", "lhs", "rhs", "defect", "norm_sq"], rows)]


def run_report(cfg):
    paths = []
    for fn in (run_curvature, run_symbol_scan, run_weyl):
        _, p = fn(cfg)
        paths += p
    paths += emit_report(cfg.out)
    print((cfg.out / "summary.txt").read_text(encoding="utf-8"), end="")
    return 0, paths


DISPATCH = {
    "validate": run_validate, "curvature": run_curvature, "dvert": run_dvert,
    "symbol-scan": run_symbol_scan, "weighted-scan": run_weighted_scan,
    "spectrum": run_spectrum, "weyl": run_weyl, "kernel-probe": run_kernel_probe,
    "conformal-check": run_conformal_check, "report": run_report,
}


def run(cfg: RunConfig) -> int:
    if cfg.experiment != "validate":
        require_valid(cfg.params)
        cfg.out.mkdir(parents=True, exist_ok=True)
    status, paths = DISPATCH[cfg.experiment](cfg)
    if status == 0:
        print(f"[{cfg.experiment}] shadows: {STATEMENTS[cfg.experiment]}")
        for p in paths:
            print(f"  wrote {p}")
    return status


def main(argv=None) -> int:
    try:
        cfg = make_config(argv)
        return run(cfg)
    except ParameterError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
