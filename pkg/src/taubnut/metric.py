"""Generalized Taub-NUT metrics.

The line element on R^4 minus the origin is::

    ds^2 = f(r) (dr^2 + r^2 dtheta^2 + r^2 sin^2(theta) dphi^2)
           + g(r) (dchi + cos(theta) dphi)^2

    f(r) = (a + b r) / r,    g(r) = (a r + b r^2) / (1 + c r + d r^2)

Coordinate routines use the ordering ``(r, theta, phi, chi)``.  The inverse
radius ``x = 1/r`` is used for the frame and Dirac coefficients.

Angular vector fields are the duals ``E1, E2, E3`` of the Euler one-forms::

    s1 = cos(chi) dtheta + sin(chi) sin(theta) dphi
    s2 = -sin(chi) dtheta + cos(chi) sin(theta) dphi
    s3 = dchi + cos(theta) dphi

with ``I = 2 E3``, ``J = 2 E1``, ``K = 2 E2``.  They satisfy [I, J] = 2K
cyclically, and ``ds^2 = f dr^2 + f r^2 (s1^2 + s2^2) + g s3^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import CoordinateError, NumericalError, ParameterError


@dataclass(frozen=True)
class MetricParams:
    a: float
    b: float
    c: float
    d: float

    @classmethod
    def standard(cls, a: float, b: float) -> "MetricParams":
        """Euclidean Taub-NUT up to scale: c = 2b/a, d = b^2/a^2."""
        return cls(a, b, 2.0 * b / a, (b / a) ** 2)

    @classmethod
    def parse(cls, text: str) -> "MetricParams":
        parts = [float(p) for p in text.split(",")]
        if len(parts) != 4:
            raise ParameterError(f"expected a,b,c,d; got {text!r}")
        return cls(*parts)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...] = ()
    standard: bool = False

    def __bool__(self) -> bool:
        return self.ok


def validate(params: MetricParams) -> ValidationReport:
    """Check a, b, d > 0 and c > -2 sqrt(d)."""
    a, b, c, d = params.as_tuple()
    bad = []
    if not all(math.isfinite(v) for v in (a, b, c, d)):
        bad.append("non-finite parameter")
    if not a > 0:
        bad.append("a ≤ 0")
    if not b > 0:
        bad.append("b ≤ 0")
    if not d > 0:
        bad.append("d ≤ 0")
    elif not c > -2.0 * math.sqrt(d):
        bad.append("c ≤ −2√d")
    if bad:
        return ValidationReport(False, tuple(bad))
    return ValidationReport(True, (), _standard_predicate(params))


def require_valid(params: MetricParams) -> MetricParams:
    rep = validate(params)
    if not rep.ok:
        raise ParameterError("; ".join(rep.violations))
    return params


def _standard_predicate(params: MetricParams, rtol: float = 1e-12) -> bool:
    a, b, c, d = params.as_tuple()
    return math.isclose(c, 2 * b / a, rel_tol=rtol, abs_tol=rtol) and math.isclose(
        d, (b / a) ** 2, rel_tol=rtol, abs_tol=rtol
    )


def is_standard(params: MetricParams) -> bool:
    """True iff the parameters give the original Euclidean Taub-NUT metric."""
    return _standard_predicate(require_valid(params))


def normalize_b(params: MetricParams) -> MetricParams:
    """Rescale the metric by 1/b, which maps (a, b, c, d) to (a/b, 1, c, d)."""
    require_valid(params)
    if params.b == 1.0:
        return params
    return replace(params, a=params.a / params.b, b=1.0)


# -- profile functions -------------------------------------------------------

@dataclass(frozen=True)
class RadialProfile:
    r: float
    x: float
    f: float
    df: float
    g: float
    dg: float
    alpha: float
    dalpha: float
    beta: float
    dbeta: float


def f_of_r(params: MetricParams, r):
    return (params.a + params.b * r) / r


def g_of_r(params: MetricParams, r):
    a, b, c, d = params.as_tuple()
    return (a * r + b * r * r) / (1.0 + c * r + d * r * r)


def df_of_r(params: MetricParams, r):
    return -params.a / (r * r)


def dg_of_r(params: MetricParams, r):
    a, b, c, d = params.as_tuple()
    den = 1.0 + c * r + d * r * r
    return ((a + 2 * b * r) * den - (a * r + b * r * r) * (c + 2 * d * r)) / den**2


def alpha(params: MetricParams, x):
    return 1.0 / np.sqrt(params.a * x + params.b)


def dalpha(params: MetricParams, x):
    return -0.5 * params.a * (params.a * x + params.b) ** -1.5


def beta(params: MetricParams, x):
    return np.sqrt(x * x + params.c * x + params.d)


def dbeta(params: MetricParams, x):
    return (2 * x + params.c) / (2.0 * beta(params, x))


def eval_profiles(params: MetricParams, r: float) -> RadialProfile:
    """Profile values and first derivatives at radius ``r`` (alpha, beta in x=1/r)."""
    require_valid(params)
    if not r > 0:
        raise CoordinateError(f"r must be positive, got {r}")
    x = 1.0 / r
    return RadialProfile(
        r=r, x=x,
        f=float(f_of_r(params, r)), df=float(df_of_r(params, r)),
        g=float(g_of_r(params, r)), dg=float(dg_of_r(params, r)),
        alpha=float(alpha(params, x)), dalpha=float(dalpha(params, x)),
        beta=float(beta(params, x)), dbeta=float(dbeta(params, x)),
    )


# -- coordinate tensors ------------------------------------------------------

def _check_theta(theta: float) -> None:
    if not 0.0 < theta < math.pi:
        raise CoordinateError(f"theta={theta} is on or beyond a pole")


def _metric_from(f, g, r, theta) -> np.ndarray:
    st, ct = math.sin(theta), math.cos(theta)
    m = np.zeros((4, 4))
    m[0, 0] = f
    m[1, 1] = f * r * r
    m[2, 2] = f * r * r * st * st + g * ct * ct
    m[2, 3] = m[3, 2] = g * ct
    m[3, 3] = g
    return m


def metric_tensor(params: MetricParams, r: float, theta: float) -> np.ndarray:
    """Coordinate components of ds^2 in (r, theta, phi, chi)."""
    require_valid(params)
    if not r > 0:
        raise CoordinateError(f"r must be positive, got {r}")
    _check_theta(theta)
    return _metric_from(f_of_r(params, r), g_of_r(params, r), r, theta)


def volume_density(params: MetricParams, r, theta):
    """sqrt(det g) = f^(3/2) g^(1/2) r^2 sin(theta)."""
    return f_of_r(params, r) ** 1.5 * np.sqrt(g_of_r(params, r)) * r * r * np.sin(theta)


def _metric_dr(params: MetricParams, r: float, theta: float) -> np.ndarray:
    f, df = f_of_r(params, r), df_of_r(params, r)
    dg = dg_of_r(params, r)
    st, ct = math.sin(theta), math.cos(theta)
    m = np.zeros((4, 4))
    m[0, 0] = df
    m[1, 1] = df * r * r + 2 * f * r
    m[2, 2] = (df * r * r + 2 * f * r) * st * st + dg * ct * ct
    m[2, 3] = m[3, 2] = dg * ct
    m[3, 3] = dg
    return m


def _metric_dtheta(params: MetricParams, r: float, theta: float) -> np.ndarray:
    f, g = f_of_r(params, r), g_of_r(params, r)
    st, ct = math.sin(theta), math.cos(theta)
    m = np.zeros((4, 4))
    m[2, 2] = 2 * st * ct * (f * r * r - g)
    m[2, 3] = m[3, 2] = -g * st
    return m


# -- frame -------------------------------------------------------------------

def angular_fields(theta: float, chi: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(I, J, K) as coordinate vectors in (r, theta, phi, chi)."""
    st, ct = math.sin(theta), math.cos(theta)
    sx, cx = math.sin(chi), math.cos(chi)
    e1 = np.array([0.0, cx, sx / st, -sx * ct / st])
    e2 = np.array([0.0, -sx, cx / st, -cx * ct / st])
    e3 = np.array([0.0, 0.0, 0.0, 1.0])
    return 2 * e3, 2 * e1, 2 * e2


@dataclass(frozen=True)
class FrameAtPoint:
    point: tuple[float, float, float, float]
    vectors: np.ndarray  # row a = V_a in (r, theta, phi, chi)
    I: np.ndarray
    J: np.ndarray
    K: np.ndarray


def frame_vectors(params: MetricParams, r: float, theta: float, phi: float = 0.0,
                  chi: float = 0.0) -> FrameAtPoint:
    """Orthonormal frame V0..V3 at (r, theta, phi, chi).

    V0 = alpha x^2 d/dx = -alpha d/dr, V1 = alpha beta I/2,
    V2 = alpha x K/2, V3 = alpha x J/2.  The c^2 leg carries K and the c^3
    leg carries J; with this pairing the Dirac operator commutes with the
    spinor lift I/2 - c^2 c^3/2 of the fiber rotation.
    """
    require_valid(params)
    if not r > 0:
        raise CoordinateError(f"r must be positive, got {r}")
    _check_theta(theta)
    x = 1.0 / r
    al, be = float(alpha(params, x)), float(beta(params, x))
    I, J, K = angular_fields(theta, chi)
    v = np.zeros((4, 4))
    v[0, 0] = -al
    v[1] = al * be * I / 2
    v[2] = al * x * K / 2
    v[3] = al * x * J / 2
    return FrameAtPoint((r, theta, phi, chi), v, I, J, K)


def gram_matrix(params: MetricParams, frame: FrameAtPoint) -> np.ndarray:
    r, theta = frame.point[:2]
    return frame.vectors @ metric_tensor(params, r, theta) @ frame.vectors.T


def flow_commutator(X: Callable[[np.ndarray], np.ndarray], Y: Callable[[np.ndarray], np.ndarray],
                    p: np.ndarray, t: float, steps: int = 16) -> np.ndarray:
    """Flow-loop estimate of the bracket [X, Y](p).

    The loop Phi^Y_{-t} Phi^X_{-t} Phi^Y_t Phi^X_t (p) - p equals t^2 [X, Y](p)
    plus O(t^3); averaging the loops for +t and -t cancels the t^3 term.
    """

    def flow(field, q, s):
        h = s / steps
        for _ in range(steps):
            k1 = field(q)
            k2 = field(q + 0.5 * h * k1)
            k3 = field(q + 0.5 * h * k2)
            k4 = field(q + h * k3)
            q = q + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        return q

    p = np.asarray(p, dtype=float)

    def loop(s):
        q = flow(X, p, s)
        q = flow(Y, q, s)
        q = flow(X, q, -s)
        q = flow(Y, q, -s)
        return (q - p) / s**2
    return 0.5 * (loop(t) + loop(-t))


# -- curvature ---------------------------------------------------------------

_MIN_STEP = 1e-10


def _richardson(fun: Callable[[float], np.ndarray], x0: float, h: float,
                levels: int = 4) -> np.ndarray:
    """Central-difference derivative of ``fun`` at ``x0`` with Richardson extrapolation."""
    if h < _MIN_STEP * max(1.0, abs(x0)):
        raise NumericalError(f"finite-difference step underflow at {x0} (h={h})")
    table = []
    for k in range(levels):
        hk = h / 2**k
        row = [(fun(x0 + hk) - fun(x0 - hk)) / (2 * hk)]
        for m in range(1, k + 1):
            prev = table[k - 1][m - 1]
            row.append(row[m - 1] + (row[m - 1] - prev) / (4**m - 1))
        table.append(row)
    return table[-1][-1]


def _christoffel(ginv: np.ndarray, dg: list[np.ndarray]) -> np.ndarray:
    """Gamma^a_{bc} from the inverse metric and the r, theta derivatives of g."""
    d = np.zeros((4, 4, 4))  # d[k, i, j] = partial_k g_ij
    d[0], d[1] = dg
    lower = 0.5 * (np.einsum("bdc->dbc", d) + np.einsum("cdb->dbc", d) - d)
    # lower[d, b, c] = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    return np.einsum("ad,dbc->abc", ginv, lower)


def _ricci_from(gam: Callable[[float, float], np.ndarray], r: float, theta: float,
                rel_step: float) -> np.ndarray:
    g0 = gam(r, theta)
    dgam = np.zeros((4, 4, 4, 4))  # dgam[k, a, b, c] = partial_k Gamma^a_bc
    dgam[0] = _richardson(lambda s: gam(s, theta), r, rel_step * r)
    dgam[1] = _richardson(lambda s: gam(r, s), theta, rel_step)
    # R^a_{bcd} = d_c G^a_db - d_d G^a_cb + G^a_ce G^e_db - G^a_de G^e_cb
    riem = (np.einsum("cadb->abcd", dgam) - np.einsum("dacb->abcd", dgam)
            + np.einsum("ace,edb->abcd", g0, g0) - np.einsum("ade,ecb->abcd", g0, g0))
    return np.einsum("abad->bd", riem)


def _gamma_mixed(params: MetricParams):
    def gam(r, theta):
        ginv = np.linalg.inv(_metric_from(f_of_r(params, r), g_of_r(params, r), r, theta))
        return _christoffel(ginv, [_metric_dr(params, r, theta), _metric_dtheta(params, r, theta)])
    return gam


def _gamma_numeric(params: MetricParams, rel_step: float):
    def met(r, theta):
        return _metric_from(f_of_r(params, r), g_of_r(params, r), r, theta)

    def gam(r, theta):
        dr = _richardson(lambda s: met(s, theta), r, rel_step * r)
        dth = _richardson(lambda s: met(r, s), theta, rel_step)
        return _christoffel(np.linalg.inv(met(r, theta)), [dr, dth])
    return gam


def ricci_coordinates(params: MetricParams, r: float, theta: float = math.pi / 2,
                      method: str = "mixed") -> np.ndarray:
    """Coordinate Ricci tensor R_{mu nu}.

    ``method="mixed"`` builds Christoffel symbols from closed-form first
    derivatives and differentiates them numerically; ``method="numeric"``
    differentiates the metric itself numerically, then the symbols.
    """
    require_valid(params)
    if not r > 0:
        raise CoordinateError(f"r must be positive, got {r}")
    _check_theta(theta)
    if method == "mixed":
        return _ricci_from(_gamma_mixed(params), r, theta, 2e-2)
    if method == "numeric":
        return _ricci_from(_gamma_numeric(params, 1e-2), r, theta, 4e-2)
    raise ValueError(f"unknown curvature method {method!r}")


def ricci_tensor(params: MetricParams, r: float, theta: float = math.pi / 2,
                 chi: float = 0.0, method: str = "mixed") -> np.ndarray:
    """Ricci tensor in components of the orthonormal frame V0..V3."""
    ric = ricci_coordinates(params, r, theta, method)
    v = frame_vectors(params, r, theta, 0.0, chi).vectors
    return v @ ric @ v.T


def scalar_curvature(params: MetricParams, r: float, theta: float = math.pi / 2,
                     method: str = "mixed") -> float:
    ric = ricci_coordinates(params, r, theta, method)
    return float(np.einsum("ij,ij->", np.linalg.inv(metric_tensor(params, r, theta)), ric))


# -- conformal objects -------------------------------------------------------

@dataclass(frozen=True)
class ConformalProfile:
    """h(r) = 1 below r1, h = r (a + b r) above r2, quintic smoothstep blend between."""
    params: MetricParams
    r1: float = 1.0
    r2: float = 2.0

    def __post_init__(self):
        if not 0 < self.r1 < self.r2:
            raise ValueError("transition window must satisfy 0 < r1 < r2")
        if self.r1 * (self.params.a + self.params.b * self.r1) < 1.0:
            raise ValueError("r1 (a + b r1) < 1: window would push h below 1")

    def _outer(self, r):
        return r * (self.params.a + self.params.b * r)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        t = np.clip((r - self.r1) / (self.r2 - self.r1), 0.0, 1.0)
        s = t**3 * (10 - 15 * t + 6 * t * t)
        return 1.0 + s * (self._outer(r) - 1.0)


def default_window(params: MetricParams) -> tuple[float, float]:
    """[1, 2], shifted outward when r (a + b r) < 1 at r = 1."""
    a, b = params.a, params.b
    if a + b >= 1.0:
        return 1.0, 2.0
    r1 = (-a + math.sqrt(a * a + 4 * b)) / (2 * b)  # root of r (a + b r) = 1
    return r1, 2.0 * r1


def conformal_profile(params: MetricParams, r1: float | None = None,
                      r2: float | None = None) -> ConformalProfile:
    require_valid(params)
    w1, w2 = default_window(params)
    return ConformalProfile(params, w1 if r1 is None else r1, w2 if r2 is None else r2)


@dataclass(frozen=True)
class DMetricForm:
    x: float
    radial: float    # coefficient of dx^2 / x^2
    base: float      # coefficient of s1^2 + s2^2
    vertical: float  # coefficient of s3^2, equals x^2 / (x^2 + c x + d)


def dmetric_form(params: MetricParams, x: float, h: ConformalProfile | None = None) -> DMetricForm:
    """Closed-form coefficients of h^-1 ds^2 in the x coordinate where h = r (a + b r)."""
    require_valid(params)
    h = h or conformal_profile(params)
    if not 0 < x <= 1.0 / h.r2:
        raise CoordinateError(f"x={x} is outside the exact regime (0, {1.0 / h.r2}]")
    return DMetricForm(x, 1.0, 1.0, x * x / (x * x + params.c * x + params.d))


def conformal_metric_x(params: MetricParams, x: float, theta: float,
                       h: ConformalProfile | None = None) -> np.ndarray:
    """h^-1 ds^2 in coordinates (x, theta, phi, chi), evaluated by direct pull-back."""
    h = h or conformal_profile(params)
    r = 1.0 / x
    jac = np.diag([-r * r, 1.0, 1.0, 1.0])  # dr/dx = -1/x^2
    return jac @ metric_tensor(params, r, theta) @ jac / float(h(r))


def dmetric_tensor_x(form: DMetricForm, theta: float, chi: float = 0.0) -> np.ndarray:
    """dx^2/x^2 + base (s1^2 + s2^2) + vertical s3^2 in (x, theta, phi, chi)."""
    st, ct = math.sin(theta), math.cos(theta)
    m = np.zeros((4, 4))
    m[0, 0] = form.radial / form.x**2
    # s1^2 + s2^2 = dtheta^2 + sin^2 dphi^2
    m[1, 1] = form.base
    m[2, 2] = form.base * st * st + form.vertical * ct * ct
    m[2, 3] = m[3, 2] = form.vertical * ct
    m[3, 3] = form.vertical
    return m
