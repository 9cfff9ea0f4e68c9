"""Clifford algebra of R^4 acting on the spinor space C^4.

The representation is fixed once, in chiral block form::

    c^0 = [[0, 1], [-1, 0]],    c^k = [[0, i s_k], [i s_k, 0]]   (k = 1, 2, 3)

with ``s_k`` the Pauli matrices.  Every generator is skew-Hermitian with
square ``-1``, and the chirality ``omega = c^0 c^1 c^2 c^3`` is diagonal, so
components 0,1 and 2,3 carry opposite chirality.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
ID4 = np.eye(4, dtype=complex)


@dataclass(frozen=True)
class GammaSet:
    gamma: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    chirality: np.ndarray

    def __getitem__(self, mu: int) -> np.ndarray:
        return self.gamma[mu]


def _block(upper: np.ndarray) -> np.ndarray:
    z = np.zeros((2, 2), dtype=complex)
    return np.block([[z, upper], [-upper.conj().T, z]])


@lru_cache(maxsize=None)
def build_gamma() -> GammaSet:
    """Return the fixed chiral representation of c^0..c^3."""
    gam = tuple(
        g.copy() for g in
        [_block(np.eye(2, dtype=complex))] + [_block(1j * s) for s in PAULI]
    )
    omega = gam[0] @ gam[1] @ gam[2] @ gam[3]
    for g in gam:
        g.setflags(write=False)
    omega.setflags(write=False)
    return GammaSet(gamma=gam, chirality=omega)


def bivector() -> np.ndarray:
    """c^2 c^3, skew-Hermitian with square -1."""
    g = build_gamma()
    return g[2] @ g[3]


def bivector_exp(t: float) -> np.ndarray:
    """exp(t c^2 c^3) = cos(t) + sin(t) c^2 c^3, using (c^2 c^3)^2 = -1."""
    return np.cos(t) * ID4 + np.sin(t) * bivector()


def clifford_of_tangent(tau) -> np.ndarray:
    """c(tau) = tau_2 c^2 + tau_3 c^3 for a base tangent vector ``tau``."""
    t2, t3 = np.asarray(tau, dtype=float)
    g = build_gamma()
    return t2 * g[2] + t3 * g[3]


@lru_cache(maxsize=None)
def cc_eigenprojectors() -> tuple[np.ndarray, np.ndarray]:
    """Projectors (P+, P-) onto the +i and -i eigenspaces of c^2 c^3."""
    cc = bivector()
    p_plus = 0.5 * (ID4 - 1j * cc)
    p_minus = 0.5 * (ID4 + 1j * cc)
    p_plus.setflags(write=False)
    p_minus.setflags(write=False)
    return p_plus, p_minus


def cubic() -> np.ndarray:
    """c^1 c^2 c^3, Hermitian and chirality-odd."""
    g = build_gamma()
    return g[1] @ g[2] @ g[3]


def kernel_spinor(sign: int = 1) -> np.ndarray:
    """Unit spinor in range(P+) with ``i c^0 v = sign * v``.

    The radial symbol ``i xi c^0`` acts on it as ``sign * xi``, which is what the
    essential-spectrum witnesses need.
    """
    g = build_gamma()
    p_plus, _ = cc_eigenprojectors()
    w, v = np.linalg.eigh(p_plus @ (1j * g[0]) @ p_plus + 10.0 * (ID4 - p_plus))
    # eigenvalues of the compressed operator on range(P+) are +-1; the shifted
    # complement sits at 10
    idx = int(np.argmin(np.abs(w - sign)))
    vec = v[:, idx]
    k = int(np.argmax(np.abs(vec)))
    return vec * (abs(vec[k]) / vec[k])
