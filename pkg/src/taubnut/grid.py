"""Radial grids on x = 1/r."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid1D:
    """``N`` staggered cells on [x_min, x_max].

    ``scheme`` is ``"inverse"`` (uniform in r = 1/x) or ``"linear"`` (uniform in x).
    """
    x_min: float
    x_max: float
    N: int
    scheme: str = "inverse"

    def __post_init__(self):
        if not 0 < self.x_min < self.x_max:
            raise ValueError("need 0 < x_min < x_max")
        if self.N < 16:
            raise ValueError("need N >= 16")
        if self.scheme not in ("inverse", "linear"):
            raise ValueError(f"unknown spacing scheme {self.scheme!r}")

    @classmethod
    def parse(cls, text: str, scheme: str = "inverse") -> "Grid1D":
        lo, hi, n = text.split(",")
        return cls(float(lo), float(hi), int(n), scheme)

    def points(self) -> np.ndarray:
        """2N + 2 positions in x, ordered by increasing x.

        Even offsets 0, 2, ... 2N (after the leading point) alternate with half
        nodes; the first and last entries are Dirichlet ghost positions.
        """
        m = 2 * self.N + 2
        if self.scheme == "linear":
            return np.linspace(self.x_min, self.x_max, m)
        return np.sort(1.0 / np.linspace(1.0 / self.x_min, 1.0 / self.x_max, m))

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.x_min, self.x_max, self.N * factor, self.scheme)
