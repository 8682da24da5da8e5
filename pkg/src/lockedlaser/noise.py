"""White-noise covariance of the linearised Langevin sources (x, y, N).

Two tables are kept. The symmetric one is what a real-valued simulation can
realise: the quantum cross-correlators between ``y`` and the other sources are
purely imaginary and drop out under symmetrisation. The normally ordered table
feeds the photodetection (external) variances and is not positive
semidefinite in general.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveSemidefinite
from .model import OperatingPoint

STATE_LABELS = ("x", "y", "N")


def symmetric_noise_matrix(kappa, mu, n, Gamma1, c, p):
    sqrt_n = np.sqrt(n)
    d = 0.5 * kappa * (1.0 - 0.5 * mu)
    xn = -0.5 * kappa * (1.0 - mu) * sqrt_n
    nn = kappa * (1.0 - mu) * Gamma1 * (2.0 - p) / c
    return np.array([[d, 0.0, xn],
                     [0.0, d, 0.0],
                     [xn, 0.0, nn]])


def normal_ordered_noise_matrix(kappa, mu, n, Gamma1, c, p):
    sqrt_n = np.sqrt(n)
    d = 0.5 * kappa * (1.0 - mu)
    xn = -kappa * (1.0 - mu) * sqrt_n
    nn = kappa * (1.0 - mu) * Gamma1 * (2.0 - p) / c
    return np.array([[d, 0.0, xn],
                     [0.0, d, 0.0],
                     [xn, 0.0, nn]])


@dataclass(frozen=True)
class NoiseCovariance:
    """Symmetric 3x3 delta-correlator strengths, ``<xi_i(t) xi_j(t')> = M_ij delta(t - t')``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise ValueError("noise covariance must be 3x3")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    def check_psd(self):
        tr = float(np.trace(self.matrix))
        lo = self.min_eigenvalue
        if lo < -1e-12 * max(tr, 0.0):
            raise NotPositiveSemidefinite(
                f"noise covariance has negative eigenvalue {lo:.6g}", eigenvalue=lo)
        return self

    def factor(self) -> np.ndarray:
        """Matrix ``L`` with ``L @ L.T == matrix``; lower triangular when definite."""
        try:
            return np.linalg.cholesky(self.matrix)
        except np.linalg.LinAlgError:
            w, v = np.linalg.eigh(self.matrix)
            return v * np.sqrt(np.clip(w, 0.0, None))


def build_noise_covariance(op: OperatingPoint) -> NoiseCovariance:
    m = symmetric_noise_matrix(op.kappa, op.mu, op.n, op.Gamma1, op.c, op.p)
    return NoiseCovariance(m).check_psd()
