"""The explicit Dirac operator in the spinor trivialization of the frame V0..V3.

With x = 1/r and ``E1 = J/2``, ``E2 = K/2``, ``E3 = I/2``::

    D = c^0 (a0 d/dx + z0) + a1 c^1 E3 + a2 (c^2 E2 + c^3 E1) + (z1 + z3) c^1 c^2 c^3

    a0 = alpha x^2          z0 = -x^2 (alpha beta)' / (2 beta) - x (x alpha)'
    a1 = alpha beta         z1 = -alpha beta / 2
    a2 = alpha x            z3 = x^2 alpha / (4 beta)

Two discretizations live here:

* ``apply_direct`` acts on spinor fields sampled on an (x, theta, phi, chi)
  product grid (Fourier in phi and chi, centered differences in x, theta).
  It is the brute-force reference.
* ``assemble_block`` reduces to one angular sector of spin ``j`` and
  discretizes the radial direction on a staggered grid in the arclength
  s = int dx / a0.  The block is Hermitian by construction and chirally
  off-diagonal, so its spectrum is exactly symmetric about zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .clifford import ID4, bivector, build_gamma, cubic
from .errors import CoordinateError, NumericalError
from .grid import Grid1D
from .metric import MetricParams, alpha, beta, dalpha, dbeta, normalize_b, require_valid


# -- coefficients ------------------------------------------------------------

@dataclass(frozen=True)
class DiracCoefficients:
    x: float
    a0: float
    z0: float
    a1: float
    z1: float
    a2: float
    z3: float
    d_alpha_beta: float


def _coefficients(params: MetricParams, x):
    al, be = alpha(params, x), beta(params, x)
    dal, dbe = dalpha(params, x), dbeta(params, x)
    dab = dal * be + al * dbe
    z0 = -x * x * dab / (2 * be) - x * (al + x * dal)
    return al * x * x, z0, al * be, -0.5 * al * be, al * x, x * x * al / (4 * be), dab


def dirac_coefficients(params: MetricParams, x: float) -> DiracCoefficients:
    require_valid(params)
    if not x > 0:
        raise CoordinateError(f"x must be positive, got {x}")
    a0, z0, a1, z1, a2, z3, dab = (float(v) for v in _coefficients(params, x))
    return DiracCoefficients(x, a0, z0, a1, z1, a2, z3, dab)


def arclength(params: MetricParams, x):
    """s(x) = int dx / (alpha x^2), so that a0 d/dx = d/ds; increasing in x."""
    a, b = params.a, params.b
    q = np.sqrt(a * x + b)
    rb = math.sqrt(b)
    return -q / x + a / (2 * rb) * np.log((q - rb) / (q + rb))


def radial_density(params: MetricParams, x):
    """Volume density in x: sqrt(det g) dr / dx without the sin(theta) factor."""
    return alpha(params, x) ** -4 / beta(params, x) / x**4


# -- angular sectors ---------------------------------------------------------

@dataclass(frozen=True)
class ModeSpec:
    """Angular sector ``j`` and the fiber index ``n`` of its P+ component."""
    j: float
    n: int

    def __post_init__(self):
        two_j = Fraction(self.j) * 2
        if two_j.denominator != 1 or two_j < 0:
            raise ValueError(f"j must be a non-negative half-integer, got {self.j}")
        if abs(self.n) > two_j or (self.n - int(two_j)) % 2:
            raise ValueError(f"fiber index n={self.n} incompatible with j={self.j}")

    @property
    def charge(self) -> int:
        """Eigenvalue of -2i (I/2 - c^2 c^3 / 2); n - 1 on the P+ component."""
        return self.n - 1


@lru_cache(maxsize=None)
def sector_matrices(j: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(E1, E2, E3) = (J/2, K/2, I/2) on the spin-j sector.

    Basis ordered by m = j, j-1, ..., -j, with E3 = i m, so fiber index n = 2m.
    E1 = i L2, E2 = i L1 in terms of the standard angular momentum matrices;
    this matches the coordinate fields on the j = 1/2 functions in
    ``sector_functions``.
    """
    dim = int(round(2 * j)) + 1
    m = j - np.arange(dim)
    lp = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        lp[k - 1, k] = math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    l1 = 0.5 * (lp + lp.T)
    l2 = -0.5j * (lp - lp.T)
    l3 = np.diag(m).astype(complex)
    return 1j * l2, 1j * l1, 1j * l3


def sector_fiber_indices(j: float) -> np.ndarray:
    dim = int(round(2 * j)) + 1
    return np.rint(2 * (j - np.arange(dim))).astype(int)


def sector_functions(j: float, theta, phi, chi) -> list[np.ndarray]:
    """Functions on S^3 spanning one copy of the spin-j sector (j in {0, 1/2})."""
    if j == 0:
        return [np.ones(np.broadcast(theta, phi, chi).shape, dtype=complex)]
    if j == 0.5:
        return [
            np.cos(theta / 2) * np.exp(0.5j * (chi + phi)),
            np.sin(theta / 2) * np.exp(0.5j * (phi - chi)),
        ]
    raise NotImplementedError("explicit sector functions only for j = 0, 1/2")


def angular_operator(params: MetricParams, x: float, j: float) -> np.ndarray:
    """Zero-order-in-x part of D on the sector: a Hermitian 4(2j+1) matrix.

    Ordering is spinor index major, sector index minor.
    """
    g = build_gamma()
    e1, e2, e3 = sector_matrices(j)
    dim = e1.shape[0]
    _, _, a1, z1, a2, z3, _ = _coefficients(params, x)
    return (a1 * np.kron(g[1], e3) + a2 * (np.kron(g[2], e2) + np.kron(g[3], e1))
            + (z1 + z3) * np.kron(cubic(), np.eye(dim)))


def fiber_generator(j: float) -> np.ndarray:
    """I/2 - c^2 c^3 / 2 on spinor (x) sector; commutes with ``angular_operator``."""
    _, _, e3 = sector_matrices(j)
    dim = e3.shape[0]
    return np.kron(ID4, e3) - 0.5 * np.kron(bivector(), np.eye(dim))


def _charge_basis(j: float, charge: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases (upper, lower chirality) of the charge eigenspace."""
    dim = int(round(2 * j)) + 1
    gen = fiber_generator(j)
    half = 2 * dim
    out = []
    for sl in (slice(0, half), slice(half, 2 * half)):
        blk = -2j * gen[sl, sl]
        w, v = np.linalg.eigh(0.5 * (blk + blk.conj().T))
        out.append(v[:, np.abs(w - charge) < 1e-9])
    return out[0], out[1]


# -- staggered radial block --------------------------------------------------

@dataclass(frozen=True)
class RadialSystem:
    """Hermitian sector block and the data needed to map vectors back to fields."""
    params: MetricParams
    mode: ModeSpec | None
    j: float
    grid: Grid1D
    matrix: sp.csr_matrix
    x_int: np.ndarray      # integer nodes (upper chirality)
    x_half: np.ndarray     # half nodes (lower chirality)
    w_int: np.ndarray
    w_half: np.ndarray
    basis_upper: np.ndarray
    basis_lower: np.ndarray

    @property
    def shape(self):
        return self.matrix.shape

    def to_field(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Spinor-sector values psi at the integer and half nodes.

        Inverts v = sqrt(w) sqrt(mu) psi, where mu = rho a0 is the volume density in s.
        """
        nu, nl = self.basis_upper.shape[1], self.basis_lower.shape[1]
        n = self.grid.N
        up = v[: n * nu].reshape(n, nu) @ self.basis_upper.T
        lo = v[n * nu:].reshape(n, nl) @ self.basis_lower.T
        mu_i = radial_density(self.params, self.x_int) * alpha(self.params, self.x_int) * self.x_int**2
        mu_h = radial_density(self.params, self.x_half) * alpha(self.params, self.x_half) * self.x_half**2
        up = up / np.sqrt(self.w_int * mu_i)[:, None]
        lo = lo / np.sqrt(self.w_half * mu_h)[:, None]
        return up, lo

    def from_field(self, psi_fn) -> np.ndarray:
        """Sample ``psi_fn(x) -> (len(x), 4(2j+1))`` into block coordinates."""
        p = self.params
        half = self.basis_upper.shape[0]
        mu_i = radial_density(p, self.x_int) * alpha(p, self.x_int) * self.x_int**2
        mu_h = radial_density(p, self.x_half) * alpha(p, self.x_half) * self.x_half**2
        up = psi_fn(self.x_int)[:, :half] * np.sqrt(self.w_int * mu_i)[:, None]
        lo = psi_fn(self.x_half)[:, half:] * np.sqrt(self.w_half * mu_h)[:, None]
        return np.concatenate([(up @ self.basis_upper.conj()).ravel(),
                               (lo @ self.basis_lower.conj()).ravel()])


def assemble_block(params: MetricParams, mode: ModeSpec | float, grid: Grid1D,
                   restrict: bool = True) -> RadialSystem:
    """Discretized Dirac operator on one angular sector.

    ``mode`` is a ModeSpec (restricted to its fiber charge when ``restrict``)
    or a bare ``j`` (whole sector, dimension 4 (2j+1) N).  Boundary condition:
    the lower chirality vanishes at x_min and the upper at x_max.
    """
    params = normalize_b(params)
    if isinstance(mode, ModeSpec):
        j = mode.j
        spec = mode
    else:
        j, spec, restrict = float(mode), None, False
    dim = int(round(2 * j)) + 1
    half = 2 * dim
    if restrict:
        bu, bl = _charge_basis(j, spec.charge)
        if bu.shape[1] == 0 or bu.shape[1] != bl.shape[1]:
            raise ValueError(f"mode {spec} has an unbalanced or empty charge space")
    else:
        bu = np.eye(half, dtype=complex)
        bl = np.eye(half, dtype=complex)

    t = grid.points()
    s = arclength(params, t)
    n = grid.N
    x_int, x_half = t[1:-1:2], t[2:-1:2]
    # integer node i sits at t[2i+1], half node k at t[2k+2]; t[0], t[-1] are ghosts
    s_int, s_half = s[1:-1:2], s[2:-1:2]
    s_left = np.concatenate([[s[0]], s_half[:-1]])     # half node i-1 (ghost for i=0)
    w_int = s_half - s_left
    s_right = np.concatenate([s_int[1:], [s[-1]]])     # integer node k+1 (ghost at end)
    w_half = s_right - s_int

    nu, nl = bu.shape[1], bl.shape[1]
    rows, cols, vals = [], [], []

    def put(i, k, blk):
        r0, c0 = i * nu, k * nl
        rr, cc = np.nonzero(np.abs(blk) > 0)
        rows.extend((r0 + rr).tolist())
        cols.extend((c0 + cc).tolist())
        vals.extend(blk[rr, cc].tolist())

    eye_c = bu.conj().T @ bl
    for i in range(n):
        ur = angular_operator(params, float(x_int[i]), j)[:half, half:]
        ur_c = bu.conj().T @ ur @ bl
        for k, sign in ((i - 1, -1.0), (i, 1.0)):
            if k < 0:
                continue
            blk = sign / math.sqrt(w_int[i] * w_half[k]) * eye_c
            blk = blk + 0.5 * math.sqrt(w_int[i] / w_half[k]) * ur_c
            put(i, k, blk)
    t_mat = sp.csr_matrix((vals, (rows, cols)), shape=(n * nu, n * nl))
    h = sp.bmat([[None, t_mat], [t_mat.conj().T, None]], format="csr")
    return RadialSystem(params, spec, j, grid, h, x_int, x_half, w_int, w_half, bu, bl)


def hermitian_defect(m) -> float:
    d = m - m.conj().T
    if sp.issparse(d):
        return float(abs(d).max()) if d.nnz else 0.0
    return float(np.max(np.abs(d)))


def export_coo(m, path) -> None:
    """Write a matrix as ``row col re im`` lines (0-based)."""
    coo = sp.coo_matrix(m)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# shape {coo.shape[0]} {coo.shape[1]}\n")
        for k in order:
            v = complex(coo.data[k])
            fh.write(f"{coo.row[k]} {coo.col[k]} {v.real:.15e} {v.imag:.15e}\n")


# -- direct collocation on the product grid ----------------------------------

@dataclass(frozen=True)
class ProductGrid:
    """(x, theta, phi, chi) grid: theta cell-centred, phi and chi on [0, 4 pi)."""
    x: np.ndarray
    n_theta: int = 32
    n_phi: int = 8
    n_chi: int = 8

    def __post_init__(self):
        if min(self.n_theta, self.n_phi, self.n_chi) < 8:
            raise ValueError("angular resolution must be at least 8 per angle")
        if np.any(np.asarray(self.x) <= 0):
            raise ValueError("x grid must be positive")

    @property
    def theta(self):
        return (np.arange(self.n_theta) + 0.5) * math.pi / self.n_theta

    @property
    def phi(self):
        return np.arange(self.n_phi) * 4 * math.pi / self.n_phi

    @property
    def chi(self):
        return np.arange(self.n_chi) * 4 * math.pi / self.n_chi

    @property
    def shape(self):
        return (len(self.x), self.n_theta, self.n_phi, self.n_chi)

    def mesh(self):
        return np.meshgrid(self.x, self.theta, self.phi, self.chi, indexing="ij")

    def weights(self, params: MetricParams) -> np.ndarray:
        """Quadrature weights for the Riemannian volume (trapezoid in x)."""
        x = np.asarray(self.x, dtype=float)
        wx = np.zeros_like(x)
        dx = np.diff(x)
        wx[:-1] += dx / 2
        wx[1:] += dx / 2
        wx = wx * radial_density(params, x)
        wt = np.sin(self.theta) * math.pi / self.n_theta
        wp = 4 * math.pi / self.n_phi
        wc = 4 * math.pi / self.n_chi
        return wx[:, None, None, None] * wt[None, :, None, None] * wp * wc


def _spectral_derivative(field: np.ndarray, axis: int, period: float) -> np.ndarray:
    n = field.shape[axis]
    k = np.fft.fftfreq(n, d=period / n) * 2 * math.pi
    if n % 2 == 0:
        k[n // 2] = 0.0
    shape = [1] * field.ndim
    shape[axis] = n
    return np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(field, axis=axis), axis=axis)


def nyquist_check(field: np.ndarray, tol: float = 1e-8) -> None:
    """Raise when Fourier content in phi or chi reaches the highest resolved modes."""
    for axis in (3, 4):
        n = field.shape[axis]
        spec = np.abs(np.fft.fft(field, axis=axis)) ** 2
        spec = np.moveaxis(spec, axis, 0).reshape(n, -1).sum(axis=1)
        total = spec.sum()
        if total == 0:
            continue
        k = np.abs(np.fft.fftfreq(n) * n)
        edge = spec[k >= n // 2 - 1].sum()
        if edge > tol * total:
            raise NumericalError(f"fiber/azimuthal modes under-resolved on axis {axis} "
                                 f"(edge fraction {edge / total:.2e})")


def _centered_x(field: np.ndarray, x: np.ndarray, order: int) -> np.ndarray:
    d = np.gradient(field, x, axis=1, edge_order=2)
    if order == 2:
        return d
    if order != 4:
        raise ValueError("x_order must be 2 or 4")
    h = np.diff(x)
    if not np.allclose(h, h[0], rtol=1e-10):
        raise ValueError("fourth-order x stencil needs a uniform x grid")
    h = h[0]
    d[:, 2:-2] = (field[:, :-4] - 8 * field[:, 1:-3] + 8 * field[:, 3:-1] - field[:, 4:]) / (12 * h)
    return d


def apply_direct(params: MetricParams, field: np.ndarray, grid: ProductGrid,
                 check: bool = True, x_order: int = 2) -> np.ndarray:
    """Apply D to spinor values of shape (4, Nx, Ntheta, Nphi, Nchi).

    ``x_order`` selects the second- or fourth-order centered stencil in x;
    the two points at each x end always use the second-order rule.
    """
    params = normalize_b(params)
    field = np.asarray(field, dtype=complex)
    if field.shape != (4,) + grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    if check:
        nyquist_check(field)
    x = np.asarray(grid.x, dtype=float)
    th = grid.theta[None, :, None, None]
    ch = grid.chi[None, None, None, :]
    a0, z0, a1, z1, a2, z3, _ = _coefficients(params, x)
    xs = (slice(None), None, None, None)

    d_x = _centered_x(field, x, x_order)
    d_th = np.gradient(field, grid.theta, axis=2, edge_order=2)
    d_ph = _spectral_derivative(field, 3, 4 * math.pi)
    d_ch = _spectral_derivative(field, 4, 4 * math.pi)
    st, ct = np.sin(th), np.cos(th)
    sx, cx = np.sin(ch), np.cos(ch)
    e1 = cx * d_th + sx / st * d_ph - sx * ct / st * d_ch
    e2 = -sx * d_th + cx / st * d_ph - cx * ct / st * d_ch
    e3 = d_ch

    g = build_gamma()

    def cl(m, v):
        return np.einsum("ab,b...->a...", m, v)

    out = cl(g[0], a0[xs] * d_x + z0[xs] * field)
    out += cl(g[1], a1[xs] * e3)
    out += cl(g[2], a2[xs] * e2) + cl(g[3], a2[xs] * e1)
    out += cl(cubic(), (z1 + z3)[xs] * field)
    return out


def inner(params: MetricParams, grid: ProductGrid, u: np.ndarray, v: np.ndarray) -> complex:
    """L^2 pairing <u, v> = int v^* u dvol (linear in the first slot)."""
    w = grid.weights(params)
    return complex(np.sum(w * np.einsum("a...,a...->...", u, v.conj())))


def sector_field(grid: ProductGrid, j: float, coeff: np.ndarray) -> np.ndarray:
    """Field sum_{s,m} coeff[:, s, m] (x) e_s u_m on the product grid.

    ``coeff`` has shape (Nx, 4, 2j+1).
    """
    _, th, ph, ch = grid.mesh()
    funcs = sector_functions(j, th[0], ph[0], ch[0])
    out = np.zeros((4,) + grid.shape, dtype=complex)
    for m, u in enumerate(funcs):
        out += np.einsum("xs,tpc->sxtpc", coeff[:, :, m], u)
    return out


def symmetry_defect(params: MetricParams, psi: np.ndarray, phi: np.ndarray,
                    grid: ProductGrid, margin: int = 2, x_order: int = 4) -> float:
    """|<D psi, phi> - <psi, D phi>| for fields supported away from the x boundary."""
    for f in (psi, phi):
        edge = np.abs(f[:, :margin]).max() + np.abs(f[:, -margin:]).max()
        if edge > 0:
            raise ValueError("test spinor support touches the radial boundary")
    dpsi = apply_direct(params, psi, grid, x_order=x_order)
    dphi = apply_direct(params, phi, grid, x_order=x_order)
    return abs(inner(params, grid, dpsi, phi) - inner(params, grid, psi, dphi))
