"""Spectral experiments on the sector blocks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla
from scipy.interpolate import CubicSpline

from .clifford import kernel_spinor
from .dirac import (ModeSpec, RadialSystem, apply_direct, arclength, assemble_block, inner,
                    sector_field)
from .errors import NumericalError
from .grid import Grid1D
from .metric import MetricParams, metric_tensor, normalize_b, require_valid, volume_density

__all__ = [
    "Grid1D", "EigResult", "block_spectrum", "WeylProbe", "weyl_sequence",
    "conformal_norm_check", "kernel_probe", "convergence_order", "pairing_defect",
    "ConformalCheck", "lift_to_product", "direct_sector_ritz",
]

DENSE_LIMIT = 2400


@dataclass(frozen=True)
class EigResult:
    eigenvalues: np.ndarray
    residuals: np.ndarray
    vectors: np.ndarray = field(repr=False)
    mode: ModeSpec
    grid: Grid1D
    solver: str


def block_spectrum(params: MetricParams, mode: ModeSpec, grid: Grid1D, count: int = 8,
                   system: RadialSystem | None = None, solver: str = "auto") -> EigResult:
    """``count`` smallest-|lambda| eigenpairs of a sector block, residual-certified."""
    system = system or assemble_block(params, mode, grid)
    h = system.matrix
    dim = h.shape[0]
    count = min(count, dim)
    if solver == "auto":
        solver = "dense" if dim <= DENSE_LIMIT else "shift-invert"
    if solver == "dense":
        w, v = np.linalg.eigh(h.toarray())
    elif solver == "shift-invert":
        # deterministic start vector
        v0 = np.ones(dim, dtype=complex) / math.sqrt(dim)
        try:
            w, v = spla.eigsh(h.tocsc(), k=count, sigma=0.0, which="LM", v0=v0, tol=1e-13)
        except spla.ArpackNoConvergence as exc:
            raise NumericalError(f"shift-invert Lanczos did not converge: {exc}") from exc
    else:
        raise ValueError(f"unknown solver {solver!r}")
    order = np.argsort(np.abs(w), kind="stable")[:count]
    w, v = w[order], v[:, order]
    resid = np.linalg.norm(h @ v - v * w, axis=0)
    bad = resid >= 1e-8 * (1 + np.abs(w))
    if np.any(bad):
        raise NumericalError(f"eigen-residuals above tolerance: {resid[bad]}")
    return EigResult(w, resid, v, mode, grid, solver)


def pairing_defect(w: np.ndarray) -> float:
    """Largest relative mismatch between sorted positive and negated negative eigenvalues."""
    pos = np.sort(w[w > 0])
    neg = np.sort(-w[w < 0])
    k = min(len(pos), len(neg))
    if k == 0:
        return 0.0
    return float(np.max(np.abs(pos[:k] - neg[:k]) / np.maximum(1.0, pos[:k])))


def convergence_order(params: MetricParams, mode: ModeSpec, grid: Grid1D, levels: int = 3,
                      which: int = 0) -> tuple[list[float], float]:
    """Eigenvalue ``which`` (by |lambda|, positive branch) over N, 2N, 4N, ... and the observed order."""
    vals = []
    g = grid
    for _ in range(levels):
        res = block_spectrum(params, mode, g, count=2 * which + 2)
        pos = np.sort(res.eigenvalues[res.eigenvalues > 0])
        vals.append(float(pos[which]))
        g = g.refined()
    d1 = abs(vals[-3] - vals[-2])
    d2 = abs(vals[-2] - vals[-1])
    return vals, math.log2(d1 / d2)


# -- Weyl sequences ----------------------------------------------------------

@dataclass(frozen=True)
class WeylProbe:
    lam: float
    r_inner: float
    r_outer: float
    n: int
    j: float
    residual_ratio: float


def _cutoff(t):
    """Smooth bump on (0, 1), zero with all derivatives at the ends."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = (t > 0) & (t < 1)
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (ti * (1 - ti)) + 4.0)
    return out


def weyl_sequence(params: MetricParams, lam: float, k_max: int = 4, n: int = 1,
                  eps0: float = 0.2, spread: float = 8.0, points_per_unit: float = 16.0,
                  points_per_wave: int = 24) -> list[WeylProbe]:
    """Quasi-modes u_k = cutoff_k(x) e^{-i lam s} psi_0 with shrinking x-support.

    psi_0 lies in ker D_vert (j = 1/2, P+ at fiber mode n = 1) and is an
    eigenvector of i c^0 with eigenvalue +1, so the frozen radial symbol
    returns exactly lam.  The phase uses the arclength s, which tends to
    -1/x as x -> 0.  ``n = 0`` gives the control probe in the j = 0 sector,
    where D_vert has gap sqrt(d)/2.
    """
    params = normalize_b(params)
    if n == 1:
        j, spinor = 0.5, kernel_spinor(+1)
        angular = np.array([1.0, 0.0])       # m = +1/2, fiber index 1
    elif n == 0:
        j, spinor = 0.0, kernel_spinor(+1)
        angular = np.array([1.0])            # fiber index 0: D_vert = -(sqrt d / 2) c^1 c^2 c^3 here
    else:
        raise ValueError("weyl_sequence supports the kernel mode n=1 and the control n=0")
    state = np.kron(spinor, angular)

    probes = []
    for k in range(k_max):
        eps = eps0 / 2**k
        lo, hi = eps / spread, eps
        length = float(arclength(params, hi) - arclength(params, lo))
        cells = int(max(points_per_unit * length, points_per_wave * abs(lam) * length / (2 * math.pi), 64))
        h_s = length / cells
        if abs(lam) * h_s > 2 * math.pi / 8:
            raise NumericalError(f"phase e^(-i lam s) unresolved: lam h = {abs(lam) * h_s:.3f}")
        grid = Grid1D(lo * 0.9, hi * 1.1, cells, "inverse")
        mode = ModeSpec(j, 1 if j == 0.5 else 0)
        system = assemble_block(params, mode, grid)
        s0 = float(arclength(params, lo))

        def psi(xs, lo=lo, hi=hi, s0=s0):
            t = (np.log(xs) - math.log(lo)) / (math.log(hi) - math.log(lo))
            amp = _cutoff(t)
            phase = np.exp(1j * lam * (arclength(params, xs) - s0))
            return (amp * phase)[:, None] * state[None, :]

        v = system.from_field(psi)
        r = system.matrix @ v - lam * v
        probes.append(WeylProbe(lam, 1.0 / hi, 1.0 / lo, n, j,
                                float(np.linalg.norm(r) / np.linalg.norm(v))))
    return probes


# -- conformal bookkeeping ---------------------------------------------------

@dataclass(frozen=True)
class ConformalCheck:
    lhs: float
    rhs: float
    defect: float
    norm_sq: float


def _breakpoints(h, lo: float, hi: float) -> list[float]:
    pts = [lo, hi]
    for name in ("r1", "r2"):
        v = getattr(h, name, None)
        if v is not None and lo < v < hi:
            pts.append(float(v))
    return sorted(pts)


def conformal_norm_check(params: MetricParams, phi, h, r_support: tuple[float, float],
                         n_x: int = 200, n_r: int = 96, n_theta: int = 32,
                         n_angle: int = 8) -> ConformalCheck:
    """Compare ||h^{3/4} phi||^2 in L^2(g_d) with int h^{-1/2} |phi|^2 dvol.

    ``phi(r, theta, phi, chi)`` returns spinor values of shape (4, ...) and must
    vanish outside ``r_support``; ``h`` is any positive callable of r and
    g_d = h^{-1} ds^2.  The left side is composite Simpson in log x with the
    density taken from the determinant of the pulled-back g_d and Gauss in
    theta; the right side is Gauss-Legendre in r and cos(theta) with the
    closed-form density.  Both split their
    panels at the transition window of ``h``, where h is only C^2.
    ``defect`` is relative to the right side.
    """
    require_valid(params)
    r_lo, r_hi = r_support
    edge = np.array([r_lo, r_hi])
    th0 = np.full(2, 1.0)
    ends = np.asarray(phi(edge, th0, th0 * 0, th0 * 0))
    if np.max(np.abs(ends)) > 1e-13:
        raise ValueError("test spinor leaks outside its declared support")

    ang = np.arange(n_angle) * 4 * math.pi / n_angle
    w_ang = (4 * math.pi / n_angle) ** 2
    brk = _breakpoints(h, r_lo, r_hi)

    # left side
    tn, tw = np.polynomial.legendre.leggauss(n_theta)
    th_mid = 0.5 * math.pi * (tn + 1)
    w_th = 0.5 * math.pi * tw
    lhs = 0.0
    for r_a, r_b in zip(brk[:-1], brk[1:]):
        # Simpson in u = log x, so dx = x du
        m = 2 * (n_x // 2) + 1
        us = np.linspace(-math.log(r_b), -math.log(r_a), m)
        xs = np.exp(us)
        wx = np.full(m, 2.0)
        wx[1::2] = 4.0
        wx[0] = wx[-1] = 1.0
        wx *= (us[1] - us[0]) / 3 * xs
        for xi, wxi in zip(xs, wx):
            r = 1.0 / xi
            hv = float(h(r))
            jac = np.diag([-r * r, 1.0, 1.0, 1.0])
            mats = np.stack([jac @ metric_tensor(params, r, t) @ jac / hv for t in th_mid])
            dens = np.sqrt(np.linalg.det(mats))
            R, T, P, C = np.meshgrid([r], th_mid, ang, ang, indexing="ij")
            val = np.sum(np.abs(hv ** 0.75 * np.asarray(phi(R, T, P, C))) ** 2, axis=0)[0]
            lhs += wxi * w_ang * float(np.sum((w_th * dens)[:, None, None] * val))

    # right side
    nodes, weights = np.polynomial.legendre.leggauss(n_r)
    un, uw = np.polynomial.legendre.leggauss(n_theta)
    th_gl = np.arccos(un)
    rhs = norm_sq = 0.0
    for r_a, r_b in zip(brk[:-1], brk[1:]):
        rs = 0.5 * (r_b - r_a) * nodes + 0.5 * (r_b + r_a)
        wr = 0.5 * (r_b - r_a) * weights
        R, T, P, C = np.meshgrid(rs, th_gl, ang, ang, indexing="ij")
        phi2 = np.sum(np.abs(np.asarray(phi(R, T, P, C))) ** 2, axis=0)
        # Gauss nodes in cos(theta) absorb the sin(theta) of the density
        dens = volume_density(params, R, T) / np.sin(T)
        base = wr[:, None, None, None] * uw[None, :, None, None] * w_ang * dens * phi2
        hr = np.asarray(h(rs), dtype=float)[:, None, None, None]
        rhs += float(np.sum(base * hr ** -0.5))
        norm_sq += float(np.sum(base))
    return ConformalCheck(lhs, rhs, abs(lhs - rhs) / abs(rhs), norm_sq)


# -- kernel probe ------------------------------------------------------------

def kernel_probe(params: MetricParams, x_mins, threshold: float, x_max: float = 1.0,
                 modes=(ModeSpec(0.5, 1), ModeSpec(0.5, -1), ModeSpec(0.0, 0)),
                 cells_per_unit: float = 4.0, outer_fraction: float = 0.25,
                 mass_tol: float = 0.1) -> dict:
    """Heuristic search for L^2 zero modes on growing truncated domains.

    For each x_min (the outer boundary r = 1/x_min), counts block eigenvalues
    with |lambda| < threshold and records the fraction of each candidate's
    mass in the outermost ``outer_fraction`` of the radial range.  A candidate
    is called normalizable when that fraction stays below ``mass_tol``; the
    probe reports whether such a candidate persists across every domain.
    Candidates carrying more than ``1 - mass_tol`` of their mass in the
    innermost ``outer_fraction`` are flagged as states bound to the
    truncation at x_max and are not counted.
    This is numerical evidence only.
    """
    x_mins = sorted((float(v) for v in x_mins), reverse=True)
    if len(x_mins) < 3:
        raise ValueError("kernel_probe needs at least three nested domains")
    if 0 < threshold < 1e-8:
        raise NumericalError("threshold below the eigen-residual floor (1e-8)")
    params_n = normalize_b(params)
    domains = []
    for xm in x_mins:
        length = 1.0 / xm - 1.0 / x_max
        n_cells = max(16, int(round(cells_per_unit * length)))
        grid = Grid1D(xm, x_max, n_cells, "inverse")
        cands = []
        for mode in modes:
            system = assemble_block(params_n, mode, grid)
            w, v = np.linalg.eigh(system.matrix.toarray())
            nu = system.basis_upper.shape[1]
            n = grid.N
            r_cut = 1.0 / xm - outer_fraction * length
            r_in = 1.0 / x_max + outer_fraction * length
            for k in np.nonzero(np.abs(w) < threshold)[0]:
                up = np.abs(v[: n * nu, k].reshape(n, nu)) ** 2
                lo = np.abs(v[n * nu:, k].reshape(n, -1)) ** 2
                mass_out = (up.sum(axis=1)[1.0 / system.x_int > r_cut].sum()
                            + lo.sum(axis=1)[1.0 / system.x_half > r_cut].sum())
                mass_in = (up.sum(axis=1)[1.0 / system.x_int < r_in].sum()
                           + lo.sum(axis=1)[1.0 / system.x_half < r_in].sum())
                cands.append({"j": mode.j, "n": mode.n, "eigenvalue": float(w[k]),
                              "outer_mass": float(mass_out), "inner_mass": float(mass_in),
                              "boundary_state": bool(mass_in > 1 - mass_tol)})
        cands.sort(key=lambda c: (abs(c["eigenvalue"]), c["j"], c["n"]))
        normalizable = [c for c in cands
                        if c["outer_mass"] < mass_tol and not c["boundary_state"]]
        domains.append({"x_min": xm, "r_max": 1.0 / xm, "N": grid.N,
                        "candidates": cands, "count": len(cands),
                        "normalizable": len(normalizable)})
    persistent = all(d["normalizable"] > 0 for d in domains)
    return {
        "heuristic": True,
        "label": "HEURISTIC EVIDENCE: truncated-domain eigenvalues, not a theorem check",
        "params": list(params.as_tuple()),
        "threshold": threshold,
        "outer_fraction": outer_fraction,
        "mass_tol": mass_tol,
        "domains": domains,
        "persistent_normalizable_candidate": persistent,
    }


# -- collocation oracle ------------------------------------------------------

def lift_to_product(system: RadialSystem, v: np.ndarray, grid) -> np.ndarray:
    """Interpolate a block vector onto a ProductGrid as a full spinor field."""
    up, lo = system.to_field(v)
    t = system.grid.points()
    xu = np.concatenate([system.x_int, [t[-1]]])
    xl = np.concatenate([[t[0]], system.x_half])
    up = np.vstack([up, np.zeros((1, up.shape[1]))])
    lo = np.vstack([np.zeros((1, lo.shape[1])), lo])
    x = np.asarray(grid.x, dtype=float)
    vals = np.concatenate([CubicSpline(xu, up, axis=0)(x), CubicSpline(xl, lo, axis=0)(x)], axis=1)
    dim = int(round(2 * system.j)) + 1
    return sector_field(grid, system.j, vals.reshape(len(x), 4, dim))


def direct_sector_ritz(params: MetricParams, system: RadialSystem, vectors: np.ndarray,
                       grid, x_order: int = 4) -> np.ndarray:
    """Ritz values of the product-grid operator ``apply_direct`` on lifted block vectors."""
    fields = [lift_to_product(system, vectors[:, k], grid) for k in range(vectors.shape[1])]
    images = [apply_direct(params, f, grid, x_order=x_order) for f in fields]
    k = len(fields)
    gram = np.array([[inner(params, grid, fields[b], fields[a]) for b in range(k)] for a in range(k)])
    ray = np.array([[inner(params, grid, images[b], fields[a]) for b in range(k)] for a in range(k)])
    ray = 0.5 * (ray + ray.conj().T)
    return np.sort(sla.eigh(ray, 0.5 * (gram + gram.conj().T), eigvals_only=True))
