"""Closed-form quadrature noise spectra of the phase-locked laser.

Spectral densities follow the convention
``<G_w G_w'> = (G^2)_w * delta(w + w')`` with
``G_w = (2 pi)^(-1/2) * int G(t) exp(i w t) dt``, so a stationary variance is
``(1 / 2 pi) * int (G^2)_w dw``.

Two variants are kept where the derivation offers a shortcut: ``"full"``
evaluates the complete rational expressions with ``Gamma1 = gamma1 + c n``,
``"saturated"`` uses the ``Gamma1 ~ c n >> kappa`` limit.
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGrid, PhaseDiffusionDivergence, SingularSystem, UnstableDrift
from .model import OperatingPoint
from .noise import NoiseCovariance, STATE_LABELS, build_noise_covariance
from .quadrature import integrate_even

FORMS = ("full", "saturated")
SHOT_NOISE = 0.25
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class SpectralCurve:
    omega: np.ndarray
    value: np.ndarray
    label: str = ""

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float).ravel()
        value = np.array(self.value, dtype=float).ravel()
        if omega.size == 0:
            raise EmptyGrid("spectral curve needs at least one frequency")
        if omega.shape != value.shape:
            raise ValueError("omega and value must have the same length")
        if omega.size > 1 and not np.all(np.diff(omega) > 0):
            raise ValueError("omega must be strictly increasing")
        if not np.all(np.isfinite(value)):
            raise ValueError(f"non-finite values in spectral curve {self.label!r}")
        omega.setflags(write=False)
        value.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "value", value)

    def __len__(self):
        return self.omega.size

    def at(self, w: float) -> float:
        idx = np.flatnonzero(self.omega == w)
        if idx.size == 0:
            raise KeyError(w)
        return float(self.value[idx[0]])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("omega,value\n")
        for w, v in zip(self.omega, self.value):
            buf.write(f"{w:.16e},{v:.16e}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, label: str = "") -> "SpectralCurve":
        lines = text.strip("\n").split("\n")
        if lines[0].strip() != "omega,value":
            raise ValueError("expected header 'omega,value'")
        rows = np.array([[float(t) for t in line.split(",")] for line in lines[1:]])
        return cls(rows[:, 0], rows[:, 1], label)

    def to_json(self) -> str:
        return json.dumps([[float(w), float(v)] for w, v in zip(self.omega, self.value)])

    @classmethod
    def from_json(cls, text: str, label: str = "") -> "SpectralCurve":
        rows = np.array(json.loads(text), dtype=float).reshape(-1, 2)
        return cls(rows[:, 0], rows[:, 1], label)


def as_grid(omega_grid) -> np.ndarray:
    w = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    if w.size == 0:
        raise EmptyGrid("frequency grid is empty")
    if w.ndim != 1:
        raise ValueError("frequency grid must be one-dimensional")
    if w.size > 1 and not np.all(np.diff(w) > 0):
        raise ValueError("frequency grid must be strictly increasing")
    return w


def log_symmetric_grid(op_or_kappa, mu=None, points_per_decade=16, span=(1e-2, 1e2),
                       include_zero=True) -> np.ndarray:
    """Symmetric grid, log-spaced on each side, covering ``kappa*mu/2`` and ``kappa``.

    ``span`` multiplies the smallest and largest characteristic rate to give
    the covered magnitude range.
    """
    if isinstance(op_or_kappa, OperatingPoint):
        kappa, mu = op_or_kappa.kappa, op_or_kappa.mu
    else:
        kappa = float(op_or_kappa)
        mu = 0.0 if mu is None else float(mu)
    rates = [kappa] + ([0.5 * kappa * mu] if mu > 0 else [])
    lo = span[0] * min(rates)
    hi = span[1] * max(rates)
    decades = math.log10(hi / lo)
    npts = max(2, int(math.ceil(decades * points_per_decade)) + 1)
    pos = np.logspace(math.log10(lo), math.log10(hi), npts)
    parts = [-pos[::-1]] + ([np.zeros(1)] if include_zero else []) + [pos]
    return np.concatenate(parts)


def linear_grid(omega_min, omega_max, points) -> np.ndarray:
    return np.linspace(omega_min, omega_max, int(points))


# -- closed forms on plain arrays ---------------------------------------------

def _xx_denominator(w2, kappa, mu, cn, Gamma1):
    half = 0.5 * kappa * mu
    a = w2 - cn * kappa * (1.0 - mu) - half * Gamma1
    b = Gamma1 + half
    return a * a + w2 * b * b


def x_variance_full(omega, kappa, mu, cn, Gamma1, p):
    w2 = np.asarray(omega, dtype=float) ** 2
    pre = 0.5 * kappa * (1.0 - 0.5 * mu)
    num = w2 + Gamma1**2 - cn * Gamma1 * 0.5 * p * (1.0 - mu) / (1.0 - 0.5 * mu)
    return pre * num / _xx_denominator(w2, kappa, mu, cn, Gamma1)


def x_variance_saturated(omega, kappa, mu, p):
    w2 = np.asarray(omega, dtype=float) ** 2
    num = 1.0 - 0.5 * mu - 0.5 * (1.0 - mu) * p
    return 0.5 * kappa * num / (kappa**2 * (1.0 - 0.5 * mu) ** 2 + w2)


def y_variance(omega, kappa, mu):
    w2 = np.asarray(omega, dtype=float) ** 2
    return 0.5 * kappa * (1.0 - 0.5 * mu) / (w2 + 0.25 * kappa**2 * mu**2)


def x_normal_full(omega, kappa, mu, cn, Gamma1, p):
    w2 = np.asarray(omega, dtype=float) ** 2
    num = w2 + Gamma1**2 - cn * Gamma1 * (1.0 + 0.5 * p)
    return 0.5 * kappa * (1.0 - mu) * num / _xx_denominator(w2, kappa, mu, cn, Gamma1)


def x_normal_saturated(omega, kappa, mu, p):
    w2 = np.asarray(omega, dtype=float) ** 2
    return -0.25 * kappa * (1.0 - mu) * p / (kappa**2 * (1.0 - 0.5 * mu) ** 2 + w2)


def y_normal(omega, kappa, mu):
    w2 = np.asarray(omega, dtype=float) ** 2
    return 0.5 * kappa * (1.0 - mu) / (w2 + 0.25 * kappa**2 * mu**2)


def _check_form(form):
    if form not in FORMS:
        raise ValueError(f"form must be one of {FORMS}, got {form!r}")


def _check_y_grid(op, w):
    if op.mu == 0.0 and np.any(w == 0.0):
        raise PhaseDiffusionDivergence(
            "free-running laser (mu = 0): phase-quadrature spectrum diverges at omega = 0")


# -- operating-point level ------------------------------------------------------

def intracavity_variance_x(op: OperatingPoint, omega_grid, form="full") -> SpectralCurve:
    _check_form(form)
    w = as_grid(omega_grid)
    if form == "full":
        v = x_variance_full(w, op.kappa, op.mu, op.cn, op.Gamma1, op.p)
    else:
        v = x_variance_saturated(w, op.kappa, op.mu, op.p)
    return SpectralCurve(w, v, f"dx2_{form}")


def intracavity_variance_y(op: OperatingPoint, omega_grid) -> SpectralCurve:
    w = as_grid(omega_grid)
    _check_y_grid(op, w)
    return SpectralCurve(w, y_variance(w, op.kappa, op.mu), "dy2")


def normally_ordered_variances(op: OperatingPoint, omega_grid, form="full"):
    """Normally ordered intracavity variances ``(:dx^2:)_w`` and ``(:dy^2:)_w``."""
    _check_form(form)
    w = as_grid(omega_grid)
    _check_y_grid(op, w)
    if form == "full":
        vx = x_normal_full(w, op.kappa, op.mu, op.cn, op.Gamma1, op.p)
    else:
        vx = x_normal_saturated(w, op.kappa, op.mu, op.p)
    vy = y_normal(w, op.kappa, op.mu)
    return SpectralCurve(w, vx, f":dx2:_{form}"), SpectralCurve(w, vy, ":dy2:")


def external_variances(op: OperatingPoint, omega_grid, form="full"):
    """Output-beam quadrature variances; vacuum level is exactly 1/4."""
    nx, ny = normally_ordered_variances(op, omega_grid, form)
    k = op.kappa
    return (SpectralCurve(nx.omega, SHOT_NOISE + k * nx.value, f"dX2_{form}"),
            SpectralCurve(ny.omega, SHOT_NOISE + k * ny.value, "dY2"))


# -- general linear-response route ----------------------------------------------

def drift_matrix(op: OperatingPoint) -> np.ndarray:
    half = 0.5 * op.kappa * op.mu
    s = op.sqrt_n
    return np.array([[-half, 0.0, 0.5 * op.c * s],
                     [0.0, -half, 0.0],
                     [-2.0 * op.kappa * (1.0 - op.mu) * s, 0.0, -op.Gamma1]])


@dataclass(frozen=True)
class TransferModel:
    """Drift of the state ``(dx, dy, dN1)`` and the white-noise strengths driving it."""

    drift: np.ndarray
    noise_cov: NoiseCovariance

    def __post_init__(self):
        d = np.array(self.drift, dtype=float)
        if d.shape != (3, 3):
            raise ValueError("drift must be 3x3")
        d.setflags(write=False)
        object.__setattr__(self, "drift", d)

    @classmethod
    def from_operating_point(cls, op: OperatingPoint) -> "TransferModel":
        return cls(drift_matrix(op), build_noise_covariance(op))

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.drift)

    @property
    def max_rate(self) -> float:
        return float(np.abs(self.eigenvalues).max())

    def check_stable(self):
        ev = self.eigenvalues
        if np.any(ev.real >= 0.0):
            raise UnstableDrift("drift has an eigenvalue with non-negative real part",
                                max_real=float(ev.real.max()))
        return self


def spectral_density_matrix(drift, noise, omega_grid) -> np.ndarray:
    """Complex spectral matrix ``H(w) Q H(w)^H`` with ``H = (A + i w)^-1``.

    Shape ``(len(omega), 3, 3)``. Hermitian at each frequency; the real part is
    even in ``w`` and the imaginary part odd.
    """
    w = as_grid(omega_grid)
    A = np.asarray(drift, dtype=float)
    Q = np.asarray(noise, dtype=float)
    dim = A.shape[0]
    M = A[None, :, :] + 1j * w[:, None, None] * np.eye(dim)[None, :, :]
    cond = np.linalg.cond(M)
    bad = np.flatnonzero(~(cond <= MAX_CONDITION))
    if bad.size:
        i = bad[0]
        raise SingularSystem(f"drift + i*omega is singular at omega = {w[i]:.6g}",
                             omega=w[i], condition=cond[i])
    H = np.linalg.solve(M, np.broadcast_to(np.eye(dim, dtype=complex), M.shape))
    return H @ Q @ np.conj(np.swapaxes(H, 1, 2))


@dataclass(frozen=True)
class SpectralMatrix:
    omega: np.ndarray
    complex_values: np.ndarray
    labels: tuple = field(default=STATE_LABELS)

    def curve(self, i, j) -> SpectralCurve:
        i = self.labels.index(i) if isinstance(i, str) else i
        j = self.labels.index(j) if isinstance(j, str) else j
        return SpectralCurve(self.omega, self.complex_values[:, i, j].real,
                             f"S_{self.labels[i]}{self.labels[j]}")

    @property
    def curves(self):
        n = len(self.labels)
        return [[self.curve(i, j) for j in range(n)] for i in range(n)]


def general_spectrum(model: TransferModel, omega_grid) -> SpectralMatrix:
    """Full 3x3 spectral matrix from the drift and noise covariance.

    Curves carry the real (symmetrised) part; the complex matrix is kept on
    :attr:`SpectralMatrix.complex_values`.
    """
    model.check_stable()
    w = as_grid(omega_grid)
    S = spectral_density_matrix(model.drift, model.noise_cov.matrix, w)
    return SpectralMatrix(w, S)


# -- phase locking ----------------------------------------------------------------

@dataclass(frozen=True)
class PhaseVariance:
    phase_variance: float
    y_variance: float
    y_variance_lorentzian: float
    quadrature_error: float
    closed_form_phase_variance: float

    @property
    def ratio_to_closed_form(self) -> float:
        return self.phase_variance / self.closed_form_phase_variance

    @property
    def quadrature_vs_lorentzian(self) -> float:
        return abs(self.y_variance - self.y_variance_lorentzian) / self.y_variance_lorentzian

    def to_dict(self) -> dict:
        return {
            "phase_variance": self.phase_variance,
            "y_variance": self.y_variance,
            "y_variance_lorentzian": self.y_variance_lorentzian,
            "quadrature_error": self.quadrature_error,
            "closed_form_phase_variance": self.closed_form_phase_variance,
            "ratio_to_closed_form": self.ratio_to_closed_form,
        }


def phase_variance(op: OperatingPoint) -> PhaseVariance:
    """Integrated phase-quadrature variance and the resulting phase variance.

    The integral is done by adaptive quadrature; the Lorentzian antiderivative
    ``(1 - mu/2) / (2 mu)`` and the commonly quoted ``1 / sqrt(4 n_in n)`` are
    reported alongside for comparison.
    """
    if op.mu == 0.0:
        raise PhaseDiffusionDivergence("phase variance diverges without injection (mu = 0)")
    kappa, mu = op.kappa, op.mu
    peak = float(y_variance(0.0, kappa, mu))

    def f(w):
        return 0.5 * kappa * (1.0 - 0.5 * mu) / (w * w + 0.25 * kappa**2 * mu**2)

    integral, err = integrate_even(f, [0.5 * kappa * mu, kappa], epsabs=1e-12 * peak)
    dy2 = integral / (2.0 * math.pi)
    lorentz = (1.0 - 0.5 * mu) / (2.0 * mu)
    closed = 1.0 / math.sqrt(4.0 * op.params.n_in * op.n)
    return PhaseVariance(dy2 / op.n, dy2, lorentz, err / (2.0 * math.pi), closed)
