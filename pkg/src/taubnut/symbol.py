"""Normal operator of the Dirac operator at the fibered-cusp end (b = 1).

Fiber functions are represented by Fourier modes ``n`` (the field I acts as
``i n``).  The vertical operator on mode ``n`` is the 4x4 matrix
``(sqrt(d)/2) c^1 (i n - c^2 c^3)``.

The base covector ``tau`` is constant along each Hopf fiber, but its frame
components rotate with the (J, K) frame, so Clifford multiplication by it
shifts the fiber mode: it carries range(P-) at mode ``n - 2`` to range(P+) at
mode ``n`` and back.  The normal operator therefore acts on the 4-dimensional
invariant spaces::

    W(n) = range(P+) (x) mode n   (+)   range(P-) (x) mode n-2

on which D_vert is ``(sqrt(d)/2)(n - 1) i c^1`` and, identifying W(n) with
C^4 through P+ + P-, Clifford multiplication is plain ``c(tau)``.
``W(1) = ker D_vert``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .clifford import ID4, bivector, build_gamma, cc_eigenprojectors, clifford_of_tangent


@dataclass(frozen=True)
class SymbolPoint:
    xi: float
    tau: tuple[float, float]
    n: int
    lam: float = 0.0
    gamma: float = 0.0


def _check_d(d: float) -> None:
    if not d > 0:
        raise ValueError(f"d must be positive, got {d}")


def dvert_matrix(d: float, n: int) -> np.ndarray:
    """(sqrt(d)/2) c^1 (i n - c^2 c^3) on fiber mode ``n``."""
    _check_d(d)
    g = build_gamma()
    return 0.5 * math.sqrt(d) * g[1] @ (1j * n * ID4 - bivector())


def dvert_spectrum(d: float, n: int) -> np.ndarray:
    """Closed form: +-(sqrt(d)/2)|n - 1| on P+, +-(sqrt(d)/2)|n + 1| on P-."""
    s = 0.5 * math.sqrt(d)
    return np.sort([s * abs(n - 1), -s * abs(n - 1), s * abs(n + 1), -s * abs(n + 1)])


def dvert_kernel_dimension(d: float, modes: Iterable[int], tol: float = 1e-12) -> dict[int, int]:
    """Kernel dimension of D_vert per fiber mode."""
    out = {}
    for n in modes:
        w = np.linalg.eigvalsh(dvert_matrix(d, n))
        out[n] = int(np.sum(np.abs(w) < tol))
    return out


def paired_dvert(d: float, n: int) -> np.ndarray:
    """D_vert on W(n): P+ D_vert(n) P+ + P- D_vert(n-2) P-."""
    p_plus, p_minus = cc_eigenprojectors()
    return p_plus @ dvert_matrix(d, n) @ p_plus + p_minus @ dvert_matrix(d, n - 2) @ p_minus


def weighted_symbol(d: float, gamma: float, xi: float, tau, n: int) -> np.ndarray:
    """c^0 (i xi - gamma) + i c(tau) + D_vert on W(n)."""
    g = build_gamma()
    return (1j * xi - gamma) * g[0] + 1j * clifford_of_tangent(tau) + paired_dvert(d, n)


def normal_symbol(d: float, xi: float, tau, n: int) -> np.ndarray:
    """i xi c^0 + i c(tau) + D_vert on W(n); Hermitian."""
    return weighted_symbol(d, 0.0, xi, tau, n)


def band_symbol(d: float, xi: float, tau, modes: Sequence[int], gamma: float = 0.0) -> np.ndarray:
    """Normal operator on the span of fiber modes ``modes`` (each tensor C^4).

    Built mode by mode from the fiber-transported Clifford coupling, without
    reference to W(n), so it serves as a cross-check of ``normal_symbol``.
    Modes outside ``modes`` are truncated, which leaves 2-dimensional edge
    blocks at the ends of the band.
    """
    g = build_gamma()
    t2, t3 = (float(v) for v in tau)
    tc = t2 + 1j * t3
    # c(tau) = 1/2 [tc (c^2 - i c^3) + conj(tc) (c^2 + i c^3)] in the frame at the
    # base point; along the fiber tc picks up e^{2it}, which shifts modes by 2.
    raise_op = 0.5 * tc * (g[2] - 1j * g[3])      # P- -> P+, mode n-2 -> n
    lower_op = 0.5 * np.conj(tc) * (g[2] + 1j * g[3])  # P+ -> P-, mode n -> n-2
    modes = list(modes)
    idx = {m: k for k, m in enumerate(modes)}
    dim = 4 * len(modes)
    out = np.zeros((dim, dim), dtype=complex)
    for n, k in idx.items():
        blk = slice(4 * k, 4 * k + 4)
        out[blk, blk] = (1j * xi - gamma) * g[0] + dvert_matrix(d, n)
        if n - 2 in idx:
            lo = slice(4 * idx[n - 2], 4 * idx[n - 2] + 4)
            out[blk, lo] += 1j * raise_op
            out[lo, blk] += 1j * lower_op
    return out


def min_singular(m: np.ndarray) -> float:
    return float(np.linalg.svd(m, compute_uv=False)[-1])


@dataclass(frozen=True)
class ScanResult:
    lam: float
    sigma_min: float
    witness: SymbolPoint


def shifted_min_singular(d: float, lam: float, xis: Sequence[float], taus: Sequence,
                         modes: Sequence[int]) -> ScanResult:
    """Minimum singular value of N(D)(xi, tau) - lam over the given grid."""
    if not len(xis) or not len(taus) or not len(modes):
        raise ValueError("empty search grid")
    best = None
    for n in modes:
        for tau in taus:
            for xi in xis:
                s = min_singular(normal_symbol(d, xi, tau, n) - lam * ID4)
                if best is None or s < best[0]:
                    best = (s, SymbolPoint(float(xi), (float(tau[0]), float(tau[1])), int(n), lam))
    return ScanResult(lam, best[0], best[1])


def witness_grid(lam: float, extent: float = 5.0, count: int = 11,
                 modes: Sequence[int] = (-1, 0, 1, 2, 3)):
    """Default scan grid; always contains the analytic witness xi=lam, tau=0, n=1."""
    xis = sorted(set(np.round(np.linspace(-extent, extent, count), 12).tolist()) | {float(lam)})
    taus = [(0.0, 0.0), (0.5, 0.0), (0.0, 1.0), (1.0, 1.0)]
    return xis, taus, list(modes)


@dataclass(frozen=True)
class EllipticityReport:
    fully_elliptic: bool
    witness: SymbolPoint
    kernel_vector: np.ndarray
    residual: float


def is_fully_elliptic(d: float, lam: float,
                      xis: Sequence[float] | None = None) -> EllipticityReport:
    """Check invertibility of N(D - lam) on the witness grid.

    Never elliptic: at xi=lam, tau=0 on W(1) the shifted symbol has a kernel.
    """
    xs, taus, modes = witness_grid(lam)
    res = shifted_min_singular(d, lam, xis if xis is not None else xs, taus, modes)
    w = res.witness
    m = normal_symbol(d, w.xi, w.tau, w.n) - lam * ID4
    _, s, vh = np.linalg.svd(m)
    v = vh[-1].conj()
    return EllipticityReport(bool(s[-1] > 1e-10), w, v, float(np.linalg.norm(m @ v)))


def weighted_witness(d: float, gamma: float, angle: float = 0.0) -> tuple[SymbolPoint, float]:
    """sigma_min of the weighted symbol at xi=0, |tau|=|gamma|, n=1."""
    tau = (abs(gamma) * math.cos(angle), abs(gamma) * math.sin(angle))
    s = min_singular(weighted_symbol(d, gamma, 0.0, tau, 1))
    return SymbolPoint(0.0, tau, 1, 0.0, gamma), s


def weighted_singular_locus(d: float, gamma: float, xi: float, tau, n: int) -> float:
    """Distance of the exact square from zero.

    The weighted symbol on W(n) squares to
    (xi^2 + |tau|^2 + d (n-1)^2 / 4 - gamma^2 + 2 i xi gamma) Id, so it is
    singular iff xi = 0 and |tau|^2 + d (n-1)^2 / 4 = gamma^2.
    """
    t2 = float(np.dot(tau, tau))
    return abs(xi * xi + t2 + d * (n - 1) ** 2 / 4 - gamma * gamma + 2j * xi * gamma)
