import math

import numpy as np
import pytest
import scipy.sparse as sp

from taubnut.clifford import bivector, build_gamma
from taubnut.dirac import (ModeSpec, ProductGrid, _coefficients, _spectral_derivative,
                           angular_operator, apply_direct, arclength, assemble_block,
                           dirac_coefficients, export_coo, fiber_generator, hermitian_defect,
                           inner, radial_density, sector_field, sector_matrices,
                           symmetry_defect)
from taubnut.errors import CoordinateError, NumericalError
from taubnut.grid import Grid1D
from taubnut.metric import MetricParams, alpha, beta, volume_density


def bump(x, c, w):
    t = (x - c) / w
    return np.where(np.abs(t) < 1, (1 - t * t) ** 4, 0.0)


def dbump(x, c, w):
    t = (x - c) / w
    return np.where(np.abs(t) < 1, -8 * t * (1 - t * t) ** 3 / w, 0.0)


# -- coefficients ------------------------------------------------------------

def test_coefficient_examples(standard):
    c = dirac_coefficients(standard, 1.0)
    assert c.a1 == pytest.approx(math.sqrt(2), abs=1e-6)
    assert c.d_alpha_beta == pytest.approx(1 / (2 * math.sqrt(2)), abs=1e-6)
    assert c.z0 == pytest.approx(-0.618718, abs=1e-6)
    assert c.a0 == pytest.approx(1 / math.sqrt(2)) and c.a2 == pytest.approx(1 / math.sqrt(2))
    assert c.z1 == pytest.approx(-c.a1 / 2) and c.z3 == pytest.approx(1 / (4 * math.sqrt(2) * 2))


def test_coefficients_at_infinity(generic):
    c = dirac_coefficients(generic, 1e-9)
    assert abs(c.z0) < 1e-8 and abs(c.z3) < 1e-8
    assert c.a1 == pytest.approx(math.sqrt(generic.d / generic.b), rel=1e-8)
    with pytest.raises(CoordinateError):
        dirac_coefficients(generic, 0.0)


def test_coefficient_derivative_oracle(rng):
    for _ in range(10):
        p = MetricParams(rng.uniform(0.3, 2), 1.0, rng.uniform(-1, 2), rng.uniform(0.5, 2))
        x, h = rng.uniform(0.05, 2), 1e-6
        ab = lambda s: alpha(p, s) * beta(p, s)
        xa = lambda s: s * alpha(p, s)
        fd_ab = (ab(x + h) - ab(x - h)) / (2 * h)
        fd_xa = (xa(x + h) - xa(x - h)) / (2 * h)
        c = dirac_coefficients(p, x)
        assert c.d_alpha_beta == pytest.approx(fd_ab, rel=1e-7)
        assert c.z0 == pytest.approx(-x * x * fd_ab / (2 * beta(p, x)) - x * fd_xa, rel=1e-7)


def test_z0_is_half_divergence_of_v0(generic):
    # formal symmetry: z0 = (1 / 2 rho) d/dx (rho a0)
    x = np.linspace(0.1, 2, 9)
    h = 1e-6
    ra = lambda s: radial_density(generic, s) * _coefficients(generic, s)[0]
    div = (ra(x + h) - ra(x - h)) / (2 * h) / radial_density(generic, x)
    np.testing.assert_allclose(_coefficients(generic, x)[1], 0.5 * div, rtol=1e-7)


def test_radial_density_matches_volume_form(generic):
    x = np.array([0.1, 0.5, 2.0])
    r = 1 / x
    np.testing.assert_allclose(radial_density(generic, x),
                               volume_density(generic, r, math.pi / 2) / x**2, rtol=1e-12)


def test_arclength_derivative(generic):
    x, h = np.array([0.05, 0.3, 1.5]), 1e-6
    ds = (arclength(generic, x + h) - arclength(generic, x - h)) / (2 * h)
    np.testing.assert_allclose(ds, 1 / _coefficients(generic, x)[0], rtol=1e-7)


# -- sectors -----------------------------------------------------------------

@pytest.mark.parametrize("j", [0.5, 1.0, 1.5, 2.0])
def test_sector_brackets(j):
    e1, e2, e3 = sector_matrices(j)
    for a, b, c in ((e1, e2, e3), (e2, e3, e1), (e3, e1, e2)):
        assert np.abs(a @ b - b @ a - c).max() < 1e-13
        assert np.abs(a + a.conj().T).max() < 1e-14
    m = j - np.arange(int(2 * j) + 1)
    np.testing.assert_allclose(np.diag(e3), 1j * m)


@pytest.mark.parametrize("j", [0.0, 0.5, 1.0, 1.5])
def test_angular_operator_hermitian_and_commutes_with_fiber(generic, j):
    a = angular_operator(generic, 0.4, j)
    assert np.abs(a - a.conj().T).max() < 1e-14
    f = fiber_generator(j)
    assert np.abs(a @ f - f @ a).max() < 1e-13


def test_mode_spec_validation():
    ModeSpec(0.5, 1)
    ModeSpec(1.5, -3)
    for j, n in ((0.5, 0), (0.5, 3), (0.3, 1), (1.0, 1)):
        with pytest.raises(ValueError):
            ModeSpec(j, n)
    assert ModeSpec(0.5, 1).charge == 0


# -- direct collocation ------------------------------------------------------

def _sector_action(p, x, coeff, dcoeff, j):
    """Reference: c^0 (a0 d/dx + z0) + angular operator, mode by mode."""
    g = build_gamma()
    dim = int(2 * j) + 1
    out = np.zeros_like(coeff)
    for i, xi in enumerate(x):
        c = dirac_coefficients(p, xi)
        a = angular_operator(p, xi, j)
        rad = g[0] @ (c.a0 * dcoeff[i] + c.z0 * coeff[i])
        out[i] = rad + (a @ coeff[i].reshape(4 * dim)).reshape(4, dim)
    return out


def test_apply_direct_matches_sector_reduction(generic, rng):
    cmat = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    errs = []
    for nx, nt in ((81, 16), (161, 32)):
        x = np.linspace(0.2, 1.0, nx)
        grid = ProductGrid(x, nt, 8, 8)
        coeff = bump(x, 0.6, 0.3)[:, None, None] * cmat[None]
        dcoeff = dbump(x, 0.6, 0.3)[:, None, None] * cmat[None]
        got = apply_direct(generic, sector_field(grid, 0.5, coeff), grid)
        ref = sector_field(grid, 0.5, _sector_action(generic, x, coeff, dcoeff, 0.5))
        errs.append(np.abs(got - ref).max() / np.abs(ref).max())
    assert errs[1] < 2e-3
    assert errs[0] / errs[1] > 3.0


def test_apply_direct_zero_linear_and_chirality(generic, rng):
    grid = ProductGrid(np.linspace(0.2, 1.0, 41), 8, 8, 8)
    zero = np.zeros((4,) + grid.shape, dtype=complex)
    assert np.abs(apply_direct(generic, zero, grid)).max() == 0
    x = grid.x
    c1 = bump(x, 0.5, 0.2)[:, None, None] * (rng.normal(size=(4, 2)) + 0j)[None]
    c2 = bump(x, 0.7, 0.2)[:, None, None] * (1j * rng.normal(size=(4, 2)))[None]
    u, v = sector_field(grid, 0.5, c1), sector_field(grid, 0.5, c2)
    lhs = apply_direct(generic, 2 * u - 3j * v, grid)
    rhs = 2 * apply_direct(generic, u, grid) - 3j * apply_direct(generic, v, grid)
    assert np.abs(lhs - rhs).max() < 1e-12 * np.abs(lhs).max()
    w = build_gamma().chirality
    wu = np.einsum("ab,b...->a...", w, u)
    lhs = apply_direct(generic, wu, grid)
    rhs = -np.einsum("ab,b...->a...", w, apply_direct(generic, u, grid))
    assert np.abs(lhs - rhs).max() < 1e-12 * np.abs(rhs).max()


def test_apply_direct_preserves_fiber_charge(generic, rng):
    # D commutes with the spinor lift L = d/dchi - c^2 c^3 / 2 of the fiber rotation
    grid = ProductGrid(np.linspace(0.2, 1.0, 41), 12, 8, 8)
    _, th, ph, ch = grid.mesh()
    x = grid.x[:, None, None, None]
    f = np.zeros((4,) + grid.shape, dtype=complex)
    for a in range(4):
        k1, k2 = rng.integers(-1, 2, size=2)
        f[a] = (bump(x, 0.6, 0.3) * np.sin(th) ** 2 * np.cos(th)
                * np.exp(0.5j * (k1 * ph + k2 * ch)))
    cc = bivector()

    def lift(u):
        return _spectral_derivative(u, 4, 4 * math.pi) - 0.5 * np.einsum("ab,b...->a...", cc, u)
    lhs = apply_direct(generic, lift(f), grid)
    rhs = lift(apply_direct(generic, f, grid))
    assert np.abs(lhs - rhs).max() < 1e-10 * np.abs(rhs).max()


def test_apply_direct_locality(generic):
    grid = ProductGrid(np.linspace(0.2, 1.0, 81), 8, 8, 8)
    x = grid.x
    coeff = bump(x, 0.4, 0.1)[:, None, None] * np.ones((1, 4, 2))
    out = apply_direct(generic, sector_field(grid, 0.5, coeff), grid)
    far = np.abs(x - 0.4) > 0.1 + 3 * (x[1] - x[0])
    assert np.abs(out[:, far]).max() == 0


def test_nyquist_flagged(generic):
    grid = ProductGrid(np.linspace(0.2, 1.0, 17), 8, 8, 8)
    _, th, ph, ch = grid.mesh()
    f = np.zeros((4,) + grid.shape, dtype=complex)
    f[0] = np.exp(0.5j * 4 * ch) * np.sin(th)
    with pytest.raises(NumericalError):
        apply_direct(generic, f, grid)


def test_product_grid_minimum_resolution():
    with pytest.raises(ValueError):
        ProductGrid(np.linspace(0.2, 1, 10), 4, 8, 8)


# -- radial block ------------------------------------------------------------

@pytest.mark.parametrize("mode", [ModeSpec(0.5, 1), ModeSpec(0.5, -1), ModeSpec(1.5, 3),
                                  ModeSpec(1.0, 0), ModeSpec(0.0, 0)])
@pytest.mark.parametrize("scheme", ["inverse", "linear"])
def test_block_hermitian_and_paired(generic, mode, scheme):
    sys_ = assemble_block(generic, mode, Grid1D(0.1, 1.0, 24, scheme))
    m = sys_.matrix
    assert hermitian_defect(m) < 1e-10
    w = np.linalg.eigvalsh(m.toarray())
    assert np.abs(w + w[::-1]).max() < 1e-8 * max(1.0, np.abs(w).max())
    # anticommutes with the discrete chirality
    n = m.shape[0] // 2
    om = sp.diags(np.r_[np.ones(n), -np.ones(n)])
    assert abs(om @ m + m @ om).max() == 0


def test_full_sector_dimension(generic):
    for j in (0.5, 1.0, 1.5):
        sys_ = assemble_block(generic, j, Grid1D(0.1, 1.0, 16))
        assert sys_.shape == (4 * int(2 * j + 1) * 16,) * 2


def test_charge_blocks_inside_full_sector(generic):
    # the j = 1/2 sector carries charges -2, 0, 2; ModeSpec reaches 0 (n=1) and -2 (n=-1)
    grid = Grid1D(0.1, 1.0, 16)
    full = np.linalg.eigvalsh(assemble_block(generic, 0.5, grid).matrix.toarray())
    sizes = 0
    for n in (1, -1):
        part = np.linalg.eigvalsh(assemble_block(generic, ModeSpec(0.5, n), grid).matrix.toarray())
        sizes += len(part)
        assert max(np.min(np.abs(full - w)) for w in part) < 1e-10
    assert sizes < len(full)


def test_b_normalized_before_assembly():
    p = MetricParams(2, 2, 0.5, 2)
    q = MetricParams(1, 1, 0.5, 2)
    grid = Grid1D(0.1, 1.0, 16)
    a = assemble_block(p, ModeSpec(0.5, 1), grid).matrix
    b = assemble_block(q, ModeSpec(0.5, 1), grid).matrix
    assert abs(a - b).max() < 1e-14


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 16)
    with pytest.raises(ValueError):
        Grid1D(0.1, 1.0, 8)
    with pytest.raises(ValueError):
        Grid1D(0.5, 0.1, 16)


def test_export_coo_roundtrip(generic, tmp_path):
    m = assemble_block(generic, ModeSpec(0.5, 1), Grid1D(0.1, 1.0, 16)).matrix
    path = tmp_path / "block.txt"
    export_coo(m, path)
    raw = np.loadtxt(path)
    back = sp.coo_matrix((raw[:, 2] + 1j * raw[:, 3], (raw[:, 0].astype(int), raw[:, 1].astype(int))),
                         shape=m.shape)
    assert abs(back - m).max() < 1e-14


# -- formal symmetry ---------------------------------------------------------

def _pair(grid, rng, c1, c2, w=0.3):
    x = grid.x
    a = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    b = rng.normal(size=(4, 2)) + 1j * rng.normal(size=(4, 2))
    u = sector_field(grid, 0.5, bump(x, c1, w)[:, None, None] * a[None])
    v = sector_field(grid, 0.5, bump(x, c2, w)[:, None, None] * b[None])
    return u, v


def test_symmetry_defect_small_and_converging(generic):
    out = []
    for nx in (81, 161):
        grid = ProductGrid(np.linspace(0.2, 1.0, nx), 8, 8, 8)
        u, v = _pair(grid, np.random.default_rng(3), 0.55, 0.62)
        nu = math.sqrt(abs(inner(generic, grid, u, u)))
        nv = math.sqrt(abs(inner(generic, grid, v, v)))
        out.append(symmetry_defect(generic, u / nu, v / nv, grid))
    assert out[1] < 1e-6
    assert out[0] / out[1] >= 4


def test_disjoint_supports(generic):
    grid = ProductGrid(np.linspace(0.2, 1.0, 81), 8, 8, 8)
    u, v = _pair(grid, np.random.default_rng(4), 0.35, 0.8, w=0.1)
    du, dv = apply_direct(generic, u, grid), apply_direct(generic, v, grid)
    assert abs(inner(generic, grid, du, v)) < 1e-8
    assert abs(inner(generic, grid, u, dv)) < 1e-8


def test_symmetry_defect_rejects_boundary_support(generic):
    grid = ProductGrid(np.linspace(0.2, 1.0, 41), 8, 8, 8)
    f = sector_field(grid, 0.5, np.ones((41, 4, 2), dtype=complex))
    with pytest.raises(ValueError):
        symmetry_defect(generic, f, f, grid)
