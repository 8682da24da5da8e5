"""Inner loops of the Langevin integrator.

Both integrators reduce to the affine recursion ``x[k+1] = M x[k] + w[k]``
with ``w = B z`` and pre-drawn standard normals ``z``; only ``M`` and the increment covariance
differ. The numba kernel walks the steps directly. The numpy twin diagonalises
``M`` and runs each eigenmode through ``scipy.signal.lfilter``, which gives
the same trajectory up to rounding.
"""

from __future__ import annotations

import numpy as np
from scipy import signal

from ._accel import njit, resolve_backend


@njit
def _affine_recursion_numba(M, B, z, x, stride, out):
    d = x.shape[0]
    nsteps = z.shape[0]
    tmp = np.empty(d)
    rec = 0
    for k in range(nsteps):
        for i in range(d):
            acc = 0.0
            for j in range(d):
                acc += M[i, j] * x[j] + B[i, j] * z[k, j]
            tmp[i] = acc
        for i in range(d):
            x[i] = tmp[i]
        if (k + 1) % stride == 0:
            for i in range(d):
                out[rec, i] = x[i]
            rec += 1
    return rec


@njit
def _affine_recursion3_numba(M, B, z, x, stride, out):
    m00, m01, m02 = M[0, 0], M[0, 1], M[0, 2]
    m10, m11, m12 = M[1, 0], M[1, 1], M[1, 2]
    m20, m21, m22 = M[2, 0], M[2, 1], M[2, 2]
    b00, b01, b02 = B[0, 0], B[0, 1], B[0, 2]
    b10, b11, b12 = B[1, 0], B[1, 1], B[1, 2]
    b20, b21, b22 = B[2, 0], B[2, 1], B[2, 2]
    x0, x1, x2 = x[0], x[1], x[2]
    rec = 0
    for k in range(z.shape[0]):
        z0, z1, z2 = z[k, 0], z[k, 1], z[k, 2]
        y0 = m00 * x0 + m01 * x1 + m02 * x2 + b00 * z0 + b01 * z1 + b02 * z2
        y1 = m10 * x0 + m11 * x1 + m12 * x2 + b10 * z0 + b11 * z1 + b12 * z2
        y2 = m20 * x0 + m21 * x1 + m22 * x2 + b20 * z0 + b21 * z1 + b22 * z2
        x0, x1, x2 = y0, y1, y2
        if (k + 1) % stride == 0:
            out[rec, 0] = x0
            out[rec, 1] = x1
            out[rec, 2] = x2
            rec += 1
    x[0], x[1], x[2] = x0, x1, x2
    return rec


class _ModalFilter:
    """Eigen-decomposition of ``M`` reused across chunks."""

    max_condition = 1e8

    def __init__(self, M):
        lam, V = np.linalg.eig(M)
        if np.linalg.cond(V) > self.max_condition:
            raise np.linalg.LinAlgError("propagator is (nearly) defective")
        self.lam = lam
        self.V = V
        self.Vinv = np.linalg.inv(V)
        self.real = np.isrealobj(M)

    def run(self, increments, x, stride, out):
        u = increments @ self.Vinv.T
        z0 = self.Vinv @ x
        z = np.empty_like(u)
        for j, lam in enumerate(self.lam):
            z[:, j], _ = signal.lfilter([1.0], [1.0, -lam], u[:, j], zi=[lam * z0[j]])
        picked = z[stride - 1::stride] @ self.V.T
        last = self.V @ z[-1]
        if self.real:
            picked = picked.real
            last = last.real
        out[:picked.shape[0]] = picked
        x[:] = last
        return picked.shape[0]


def _affine_recursion_loop(M, increments, x, stride, out):
    rec = 0
    for k in range(increments.shape[0]):
        x[:] = M @ x + increments[k]
        if (k + 1) % stride == 0:
            out[rec] = x
            rec += 1
    return rec


class Propagator:
    """Holds ``M`` and the noise factor ``B`` plus any backend precomputation.

    Each step is ``x <- M x + B z`` with ``z`` standard normal.
    """

    def __init__(self, M, B, backend=None):
        self.M = np.ascontiguousarray(M, dtype=float)
        self.B = np.ascontiguousarray(B, dtype=float)
        self.backend = resolve_backend(backend)
        self._modal = None
        if self.backend == "numpy":
            try:
                self._modal = _ModalFilter(self.M)
            except np.linalg.LinAlgError:
                self._modal = None

    def advance(self, z, x, stride, out):
        """Advance ``x`` in place through ``len(z)`` steps.

        The state after every ``stride``-th step is written to consecutive rows
        of ``out``; the number of rows written is returned.
        """
        z = np.ascontiguousarray(z, dtype=float)
        stride = int(stride)
        if self.backend == "numba":
            if x.shape[0] == 3:
                return _affine_recursion3_numba(self.M, self.B, z, x, stride, out)
            return _affine_recursion_numba(self.M, self.B, z, x, stride, out)
        increments = z @ self.B.T
        if self._modal is None:
            return _affine_recursion_loop(self.M, increments, x, stride, out)
        return self._modal.run(increments, x, stride, out)


def affine_recursion(M, B, z, x, stride, out, backend=None):
    return Propagator(M, B, backend).advance(z, x, stride, out)
