"""EPR resource from two locked lasers and the protocols built on it.

Two lasers with identical parameters are locked at ``phi_in = 0`` and
``phi_in = pi/2`` so the first squeezes the X quadrature and the second the Y
quadrature; mixing them on a 50/50 beamsplitter gives the entangled pair.
Every protocol quantity below is expressed through the external quadrature
variances of those two beams.

``form`` selects how the squeezed-quadrature variance is obtained:
``"saturated"`` (default) and ``"full"`` use :func:`external_variances`,
``"closed"`` uses the protocol's own closed expression where one exists.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import (ConfigError, NonIdenticalLasers, NonPositiveInputVariance,
                     QuadratureNonConvergence)
from .model import LaserParams, OperatingPoint, solve_steady_state
from .quadrature import integrate_even
from .spectra import SHOT_NOISE, SpectralCurve, as_grid, external_variances

PHASE_TOL = 1e-12
SCALINGS = ("kappa", "two_pi")


# -- EPR source ---------------------------------------------------------------

@dataclass(frozen=True)
class EprSource:
    laser1: OperatingPoint
    laser2: OperatingPoint

    def __post_init__(self):
        if abs(self.laser1.params.phi_in) > PHASE_TOL or \
                abs(self.laser2.params.phi_in - 0.5 * math.pi) > PHASE_TOL:
            raise ConfigError("EPR source needs laser1 at phi_in = 0 and laser2 at pi/2",
                              phi1=self.laser1.params.phi_in, phi2=self.laser2.params.phi_in)

    @classmethod
    def from_params(cls, params: LaserParams, params2: LaserParams | None = None):
        """Lock ``params`` at phase 0 and ``params2`` (default: same) at pi/2."""
        p1 = params.replace(phi_in=0.0)
        p2 = (params2 or params).replace(phi_in=0.5 * math.pi)
        return cls(solve_steady_state(p1), solve_steady_state(p2))

    @property
    def identical_params(self) -> bool:
        return self.laser1.params.same_except_phase(self.laser2.params)

    def require_identical(self):
        if not self.identical_params:
            raise NonIdenticalLasers("protocol formula assumes identical lasers "
                                     "(all parameters except phi_in equal)")

    @property
    def kappa(self) -> float:
        return self.laser1.kappa

    @property
    def mu(self) -> float:
        return self.laser1.mu

    @property
    def p(self) -> float:
        return self.laser1.p

    @property
    def lam(self) -> float:
        """``mu^2 / 4``."""
        return 0.25 * self.mu**2

    def squeezed_variances(self, omega_grid, form="saturated"):
        """``(dX_1^2)_w`` of laser 1 and ``(dY_2^2)_w`` of laser 2.

        Laser 2 is locked a quarter period later, so its lab-frame Y quadrature
        is its own locked-frame X quadrature.
        """
        x1, _ = external_variances(self.laser1, omega_grid, form)
        x2, _ = external_variances(self.laser2, omega_grid, form)
        return (SpectralCurve(x1.omega, x1.value, "dX1^2"),
                SpectralCurve(x2.omega, x2.value, "dY2^2"))


def _require_forms(form, allowed):
    if form not in allowed:
        raise ValueError(f"form must be one of {allowed}, got {form!r}")


# -- Duan criterion -------------------------------------------------------------

def duan_closed_form(omega, kappa, mu, p):
    w2 = np.asarray(omega, dtype=float) ** 2
    k2 = kappa * kappa
    num = w2 + k2 * (0.25 * mu * mu + (1.0 - p) * (1.0 - mu))
    return num / (w2 + k2 * (1.0 - 0.5 * mu) ** 2)


def duan_pair(src: EprSource, omega_grid, form="saturated"):
    """``2((dQ1 + dQ2)^2)_w`` and ``2((dP1 - dP2)^2)_w``."""
    _require_forms(form, ("saturated", "full"))
    x1, y2 = src.squeezed_variances(omega_grid, form)
    return (SpectralCurve(x1.omega, 4.0 * x1.value, "duan_Q"),
            SpectralCurve(y2.omega, 4.0 * y2.value, "duan_P"))


def duan_combined_variance(src: EprSource, omega_grid, form="closed") -> SpectralCurve:
    src.require_identical()
    _require_forms(form, ("closed", "saturated", "full"))
    if form == "closed":
        w = as_grid(omega_grid)
        return SpectralCurve(w, duan_closed_form(w, src.kappa, src.mu, src.p), "duan")
    q, _ = duan_pair(src, omega_grid, form)
    return SpectralCurve(q.omega, q.value, "duan")


@dataclass(frozen=True)
class DuanBand:
    omega_star: float
    empty: bool
    everywhere: bool
    threshold: float

    @property
    def interval(self):
        if self.empty:
            return None
        return (-self.omega_star, self.omega_star)


def duan_entangled_band(src: EprSource, threshold=1.0, omega_max=None, form="closed",
                        rtol=1e-9) -> DuanBand:
    """Largest ``[-w*, w*]`` on which the combined variance stays below ``threshold``.

    The search is capped at ``omega_max`` (default ``1e3 * kappa``); when the
    curve is still below threshold there, ``everywhere`` is set and ``w*`` is
    the cap.
    """
    src.require_identical()
    cap = 1e3 * src.kappa if omega_max is None else float(omega_max)

    def g(w):
        return float(duan_combined_variance(src, [w], form).value[0]) - threshold

    if g(0.0) >= 0.0:
        return DuanBand(0.0, True, False, threshold)
    if g(cap) < 0.0:
        return DuanBand(cap, False, True, threshold)
    w_star = optimize.bisect(g, 0.0, cap, rtol=rtol, xtol=1e-300, maxiter=2000)
    return DuanBand(w_star, False, False, threshold)


# -- dense coding --------------------------------------------------------------

@dataclass(frozen=True)
class DenseCodingParams:
    """Alice's beamsplitter reflectivity, photon flux ``P`` [1/s] and bandwidth [rad/s]."""

    reflectivity_R: float
    P: float
    delta_omega_A: float

    def __post_init__(self):
        if not 0.0 < self.reflectivity_R < 1.0:
            raise ConfigError("reflectivity_R must lie in (0, 1)")
        if not self.P >= 0.0:
            raise ConfigError("P must be >= 0")
        if not self.delta_omega_A > 0.0:
            raise ConfigError("delta_omega_A must be positive")

    @property
    def transmissivity_T(self) -> float:
        return 1.0 - self.reflectivity_R

    def d_A(self, kappa, scaling="kappa") -> float:
        return _scale(scaling) * self.delta_omega_A / kappa

    def script_P(self, kappa, scaling="kappa") -> float:
        return _scale(scaling) * self.P / kappa

    @classmethod
    def from_dimensionless(cls, reflectivity_R, script_P, d_A, kappa=1.0, scaling="kappa"):
        s = _scale(scaling)
        return cls(reflectivity_R, script_P * kappa / s, d_A * kappa / s)

    def to_dict(self) -> dict:
        return {"reflectivity_R": self.reflectivity_R, "P": self.P,
                "delta_omega_A": self.delta_omega_A}


def _scale(scaling):
    if scaling not in SCALINGS:
        raise ValueError(f"scaling must be one of {SCALINGS}, got {scaling!r}")
    return 1.0 if scaling == "kappa" else 2.0 * math.pi


def gaussian_signal(omega, P, delta_omega):
    w = np.asarray(omega, dtype=float)
    half = 0.5 * delta_omega**2
    return P / math.sqrt(math.pi * half) * np.exp(-w * w / half)


def alice_signal_spectrum(dc: DenseCodingParams, omega_grid) -> SpectralCurve:
    """Gaussian signal variance; integrates to ``P`` over all frequencies."""
    w = as_grid(omega_grid)
    return SpectralCurve(w, gaussian_signal(w, dc.P, dc.delta_omega_A), "sigma_A")


def snr_closed_form(omega, kappa, mu, p, R, sigma, simplified=False):
    """Saturated-regime SNR; ``simplified`` drops the O(mu) corrections (p = 1 only)."""
    w2 = np.asarray(omega, dtype=float) ** 2
    k2 = kappa * kappa
    if simplified:
        return (w2 + k2) / (w2 + (R + 0.25 * mu * mu) * k2) * R * sigma
    a = w2 + (1.0 - 0.5 * mu) ** 2 * k2
    return R * sigma * a / (a - (1.0 - R) * p * (1.0 - mu) * k2)


def _snr_values(src, dc, w, form):
    sigma = gaussian_signal(w, dc.P, dc.delta_omega_A)
    R, T = dc.reflectivity_R, dc.transmissivity_T
    if form == "closed":
        return snr_closed_form(w, src.kappa, src.mu, src.p, R, sigma)
    x1, _ = external_variances(src.laser1, w, form)
    return R * sigma / (R + T * 4.0 * x1.value)


def snr_spectrum(src: EprSource, dc: DenseCodingParams, omega_grid,
                 form="saturated") -> SpectralCurve:
    """``R sigma_w / (R + T * 4 (dX_1^2)_w)``."""
    src.require_identical()
    _require_forms(form, ("closed", "saturated", "full"))
    w = as_grid(omega_grid)
    return SpectralCurve(w, _snr_values(src, dc, w, form), f"snr_{form}")


@dataclass(frozen=True)
class ShannonInformation:
    information: float          # raw, [1/s] in nats (or bits)
    dimensionless: float
    abserr: float
    scaling: str
    bits: bool

    def to_dict(self) -> dict:
        return {"information": self.information, "dimensionless": self.dimensionless,
                "abserr": self.abserr, "scaling": self.scaling, "bits": self.bits}


def shannon_information(src: EprSource, dc: DenseCodingParams, form="saturated",
                        scaling="kappa", bits=False, epsabs=1e-10) -> ShannonInformation:
    """Mutual-information stream density ``int ln(1 + SNR_w) dw``.

    ``dimensionless`` is ``s * I / kappa`` with ``s = 1`` for ``scaling="kappa"``
    and ``2 pi`` for ``"two_pi"``.
    """
    src.require_identical()
    _require_forms(form, ("closed", "saturated", "full"))
    kappa = src.kappa

    def f(w):
        return math.log1p(float(_snr_values(src, dc, np.array([w]), form)[0]))

    scales = [dc.delta_omega_A, kappa, kappa * math.sqrt(dc.reflectivity_R + src.lam)]
    value, err = integrate_even(f, scales, epsabs=epsabs * kappa, epsrel=1e-10)
    if not math.isfinite(value):
        raise QuadratureNonConvergence("non-finite mutual information", value=value)
    if bits:
        value /= math.log(2.0)
        err /= math.log(2.0)
    return ShannonInformation(value, _scale(scaling) * value / kappa, err, scaling, bits)


def smi_dimensionless(d_A, script_P, reflectivity_R, lam, p, scaling="kappa",
                      epsabs=1e-10) -> float:
    """Dimensionless mutual information for one point of the bandwidth sweep.

    Frequencies in units of ``kappa``. The gain over shot noise is
    ``(u^2 + 1) / (u^2 + 1 - p (1 - R - lam))``, which for ``p = 1`` is the
    familiar ``(u^2 + 1) / (u^2 + R + lam)`` and for ``p = 0`` is one.
    """
    if not 0.0 <= p <= 1.0:
        raise ConfigError("sweep pump parameter must lie in [0, 1]")
    s = _scale(scaling)
    delta = d_A / s
    power = script_P / s
    R = reflectivity_R
    half = 0.5 * delta * delta
    amp = R * power / math.sqrt(math.pi * half)
    floor = 1.0 - p * (1.0 - R - lam)

    def f(u):
        u2 = u * u
        return math.log1p((u2 + 1.0) / (u2 + floor) * amp * math.exp(-u2 / half))

    v, _ = integrate_even(f, [delta, 1.0, math.sqrt(max(floor, 1e-300))],
                          epsabs=epsabs, epsrel=1e-10)
    return s * v


@dataclass(frozen=True)
class SmiSweep:
    d_A: np.ndarray
    smi: np.ndarray
    lam: float
    p: float
    elapsed: float

    @property
    def peak(self) -> float:
        return float(self.smi.max())

    @property
    def peak_d_A(self) -> float:
        return float(self.d_A[np.argmax(self.smi)])

    def to_csv(self) -> str:
        lines = ["d_A,smi"] + [f"{d:.16e},{v:.16e}" for d, v in zip(self.d_A, self.smi)]
        return "\n".join(lines) + "\n"


def smi_sweep(d_A_grid, script_P=3.0, reflectivity_R=0.01, lam=0.001, p=1.0,
              scaling="kappa") -> SmiSweep:
    t0 = time.perf_counter()
    d = np.asarray(d_A_grid, dtype=float)
    v = np.array([smi_dimensionless(x, script_P, reflectivity_R, lam, p, scaling) for x in d])
    return SmiSweep(d, v, lam, p, time.perf_counter() - t0)


@dataclass(frozen=True)
class OutputComposition:
    """Linear coefficients of Bob's two output beams.

    Keys are ``signal`` (Alice's classical amplitude), ``vac1``, ``vac2`` and
    ``source`` (the source beam entering the same port).
    """

    R: float
    T: float
    B1: dict
    B2: dict

    def operator_norm(self, beam: str) -> float:
        """Squared norm over quantum modes; the classical signal carries no noise."""
        c = getattr(self, beam)
        return c["vac1"] ** 2 + c["vac2"] ** 2 + c["source"] ** 2

    def printed_norm(self, beam: str) -> float:
        c = getattr(self, beam)
        return sum(v * v for v in c.values())

    def quadrature_noise(self, beam: str, source_variance):
        """Detected-quadrature noise with vacuum inputs at 1/4."""
        c = getattr(self, beam)
        return (c["vac1"] ** 2 + c["vac2"] ** 2) * SHOT_NOISE \
            + c["source"] ** 2 * np.asarray(source_variance, dtype=float)


def dense_coding_output_fields(src: EprSource, dc: DenseCodingParams) -> OutputComposition:
    src.require_identical()
    R, T = dc.reflectivity_R, dc.transmissivity_T
    a = math.sqrt(0.5 * R)
    t = math.sqrt(T)
    return OutputComposition(R, T,
                             {"signal": a, "vac1": a, "vac2": a, "source": t},
                             {"signal": a, "vac1": a, "vac2": -a, "source": t})


# -- teleportation -----------------------------------------------------------

def fidelity_closed_form(omega, kappa, p):
    w2 = np.asarray(omega, dtype=float) ** 2
    k2 = kappa * kappa
    return 0.5 * (w2 + k2) / (w2 + k2 * (1.0 - 0.5 * p))


def teleport_fidelity_spectrum(src: EprSource, omega_grid, input_variances=None,
                               form="saturated") -> SpectralCurve:
    """Spectral fidelity of coherent-state (default) or Gaussian input teleportation.

    ``input_variances`` is an optional pair of curves or arrays for
    ``(dX_in^2, dY_in^2)``; both default to the vacuum level 1/4.
    """
    src.require_identical()
    _require_forms(form, ("closed", "saturated", "full"))
    w = as_grid(omega_grid)
    if form == "closed":
        if input_variances is not None:
            raise ConfigError("the closed fidelity form assumes coherent input")
        return SpectralCurve(w, fidelity_closed_form(w, src.kappa, src.p), "fidelity_closed")
    if input_variances is None:
        vin_x = vin_y = np.full(w.shape, SHOT_NOISE)
    else:
        vin_x, vin_y = (np.broadcast_to(np.asarray(getattr(v, "value", v), dtype=float),
                                        w.shape) for v in input_variances)
    if np.any(vin_x <= 0.0) or np.any(vin_y <= 0.0):
        raise NonPositiveInputVariance("input quadrature variances must be positive")
    x1, y2 = src.squeezed_variances(w, form)
    F = np.sqrt(1.0 / (1.0 + x1.value / vin_x)) * np.sqrt(1.0 / (1.0 + y2.value / vin_y))
    return SpectralCurve(w, F, f"fidelity_{form}")
