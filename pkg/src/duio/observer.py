"""Per-node reduced-order estimator on the quotient space."""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch
from .geometry import ObserverDesign
from .linalg import as_matrix, as_vector


class LocalObserver:
    """Propagates the quotient estimate s and assembles xi = [s; y].

    The estimator never sees the unknown inputs: by construction the
    projection annihilates their input directions, so the error
    e = s - P x obeys e(t+1) = A_bar e(t) regardless of what drives the
    plant.
    """

    def __init__(self, design: ObserverDesign, B_known, s0=None):
        self.design = design
        self.B = as_matrix(B_known, "B_known")
        if self.B.shape[0] != design.T.shape[1]:
            raise DimensionMismatch(
                f"B_known has {self.B.shape[0]} rows, expected {design.T.shape[1]}")
        q = design.q
        self.s = np.zeros(q) if s0 is None else as_vector(s0, "s0")
        if self.s.size != q:
            raise DimensionMismatch(f"s0 has length {self.s.size}, expected {q}")

    def step(self, y, u) -> np.ndarray:
        """Advance s by one sample using the previous measurement and input.

        s <- A_bar s - P (L y) + P (B u), evaluated exactly in that grouping.
        """
        d = self.design
        y = as_vector(y, "y")
        u = as_vector(u, "u")
        if y.size != d.L.shape[1]:
            raise DimensionMismatch(f"y has length {y.size}, expected {d.L.shape[1]}")
        if u.size != self.B.shape[1]:
            raise DimensionMismatch(f"u has length {u.size}, expected {self.B.shape[1]}")
        self.s = d.A_bar @ self.s - d.P @ (d.L @ y) + d.P @ (self.B @ u)
        return self.s

    def xi(self, y) -> np.ndarray:
        """Auxiliary measurement [s; y], index-aligned with the rows of T."""
        y = as_vector(y, "y")
        if y.size != self.design.L.shape[1]:
            raise DimensionMismatch(
                f"y has length {y.size}, expected {self.design.L.shape[1]}")
        return np.concatenate([self.s, y])


def observer_step(obs: LocalObserver, y, u) -> np.ndarray:
    """Functional alias for LocalObserver.step."""
    return obs.step(y, u)


def assemble_xi(obs: LocalObserver, y) -> np.ndarray:
    """Functional alias for LocalObserver.xi."""
    return obs.xi(y)
