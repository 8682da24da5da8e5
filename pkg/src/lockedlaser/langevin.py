"""Monte-Carlo integration of the linearised Langevin equations.

The state ``(dx, dy, dN1)`` obeys ``d s = A s dt + dW`` with
``<dW dW^T> = Q dt`` and ``Q`` the symmetric noise table. Trajectories start
from the stationary covariance, are integrated at step ``dt`` and recorded
every ``stride`` steps; spectra come from the Welch estimator in
:mod:`lockedlaser.welch`.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import ConfigError, StepTooLarge, UnstableDrift
from ._accel import resolve_backend
from .kernels import Propagator
from .model import OperatingPoint
from .noise import STATE_LABELS, NoiseCovariance, build_noise_covariance
from .spectra import (SpectralCurve, TransferModel, drift_matrix, general_spectrum,
                      x_variance_full, y_variance)
from .welch import angular_frequencies, cross_spectra, segment_layout

INTEGRATORS = ("euler", "exact")
DT_GUARD = 0.01
NYQUIST_FACTOR = 50.0
MIN_LINE_PERIODS = 50.0
CHUNK_STEPS = 1 << 18


@dataclass(frozen=True)
class SimConfig:
    """Integration and spectral-estimation settings.

    ``sample_interval`` is the spacing of the recorded samples fed to the
    Welch estimator; ``None`` picks a Nyquist frequency ``50x`` the fastest
    drift rate. It is rounded to a whole number of steps.
    """

    dt: float
    duration: float
    n_segments: int = 64
    window: str = "hann"
    seed: int = 0
    n_trajectories: int = 1
    integrator: str = "euler"
    sample_interval: float | None = None

    def __post_init__(self):
        if not self.dt > 0 or not self.duration > 0:
            raise ConfigError("dt and duration must be positive")
        if int(self.n_segments) != self.n_segments or self.n_segments < 8:
            raise ConfigError("n_segments must be an integer >= 8")
        if int(self.n_trajectories) != self.n_trajectories or self.n_trajectories < 1:
            raise ConfigError("n_trajectories must be a positive integer")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.integrator not in INTEGRATORS:
            raise ConfigError(f"integrator must be one of {INTEGRATORS}")
        if self.sample_interval is not None and not self.sample_interval > 0:
            raise ConfigError("sample_interval must be positive")
        object.__setattr__(self, "n_segments", int(self.n_segments))
        object.__setattr__(self, "n_trajectories", int(self.n_trajectories))
        object.__setattr__(self, "seed", int(self.seed))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        names = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown SimConfig keys: {unknown}")
        return cls(**data)


@dataclass
class SimResult:
    omega: np.ndarray
    mean: np.ndarray          # complex (3, 3, nfreq)
    stderr_real: np.ndarray   # (3, 3, nfreq)
    config: SimConfig
    sample_interval: float
    stride: int
    segment_length: int
    backend: str
    wall_time: float = 0.0
    labels: tuple = field(default=STATE_LABELS)

    @property
    def bin_width(self) -> float:
        return 2.0 * math.pi / (self.segment_length * self.sample_interval)

    def _index(self, k):
        return self.labels.index(k) if isinstance(k, str) else k

    def curve(self, i, j) -> SpectralCurve:
        i, j = self._index(i), self._index(j)
        return SpectralCurve(self.omega, self.mean[i, j].real,
                             f"S_{self.labels[i]}{self.labels[j]}")

    def stderr(self, i, j) -> SpectralCurve:
        i, j = self._index(i), self._index(j)
        return SpectralCurve(self.omega, self.stderr_real[i, j],
                             f"stderr_{self.labels[i]}{self.labels[j]}")

    @property
    def estimated(self):
        return [[self.curve(i, j) for j in range(3)] for i in range(3)]

    @property
    def stderr_curves(self):
        return [[self.stderr(i, j) for j in range(3)] for i in range(3)]

    def sidecar(self) -> dict:
        pairs = {}
        for i in range(3):
            for j in range(i, 3):
                pairs[self.labels[i] + self.labels[j]] = self.stderr_real[i, j].tolist()
        return {
            "config": self.config.to_dict(),
            "seed": self.config.seed,
            "sample_interval": self.sample_interval,
            "stride": self.stride,
            "segment_length": self.segment_length,
            "omega": self.omega.tolist(),
            "stderr": pairs,
        }

    def write(self, stem, fmt="csv") -> list[Path]:
        """Write one file per unique channel pair plus ``<stem>.sidecar.json``."""
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        written = []
        for i in range(3):
            for j in range(i, 3):
                c = self.curve(i, j)
                path = stem.with_name(f"{stem.name}_{self.labels[i]}{self.labels[j]}.{fmt}")
                path.write_text(c.to_csv() if fmt == "csv" else c.to_json(), newline="\n")
                written.append(path)
        side = stem.with_name(stem.name + ".sidecar.json")
        side.write_text(json.dumps(self.sidecar(), indent=1), newline="\n")
        written.append(side)
        return written


# -- linear-algebra helpers -------------------------------------------------------

def _check_stable(drift):
    ev = np.linalg.eigvals(drift)
    if np.any(ev.real >= 0.0):
        raise UnstableDrift("drift has an eigenvalue with non-negative real part",
                            max_real=float(ev.real.max()))
    return ev


def lyapunov_covariance(drift, noise) -> np.ndarray:
    """Solve ``A C + C A^T + Q = 0``."""
    A = np.asarray(drift, dtype=float)
    _check_stable(A)
    C = linalg.solve_continuous_lyapunov(A, -np.asarray(noise, dtype=float))
    return 0.5 * (C + C.T)


def stationary_covariance(op: OperatingPoint) -> np.ndarray:
    return lyapunov_covariance(drift_matrix(op), build_noise_covariance(op).matrix)


def _psd_factor(C):
    try:
        return np.linalg.cholesky(C)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(0.5 * (C + C.T))
        return v * np.sqrt(np.clip(w, 0.0, None))


def exact_discretization(drift, noise, h):
    """Propagator ``expm(A h)`` and increment covariance over one step (Van Loan)."""
    A = np.asarray(drift, dtype=float)
    Q = np.asarray(noise, dtype=float)
    d = A.shape[0]
    blk = np.zeros((2 * d, 2 * d))
    blk[:d, :d] = -A
    blk[:d, d:] = Q
    blk[d:, d:] = A.T
    E = linalg.expm(blk * h)
    Phi = E[d:, d:].T
    Qh = Phi @ E[:d, d:]
    return Phi, 0.5 * (Qh + Qh.T)


def _step_operators(drift, noise, cfg, stride):
    A = np.asarray(drift, dtype=float)
    if cfg.integrator == "euler":
        M = np.eye(A.shape[0]) + cfg.dt * A
        B = _psd_factor(np.asarray(noise, dtype=float)) * math.sqrt(cfg.dt)
    else:
        M, Qh = exact_discretization(A, noise, cfg.dt)
        B = _psd_factor(Qh)
    return M, B


def resolve_stride(drift, cfg) -> int:
    if cfg.sample_interval is None:
        rate = float(np.abs(np.linalg.eigvals(drift)).max())
        target = math.pi / (NYQUIST_FACTOR * rate)
    else:
        target = cfg.sample_interval
    return max(1, int(round(target / cfg.dt)))


# -- trajectory engine ----------------------------------------------------------------

def trajectory_streams(seed, n):
    """Independent generators per trajectory, fixed by ``seed`` alone."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [np.random.Generator(np.random.SFC64(c)) for c in children]


def run_trajectory(drift, noise, cfg, rng, n_samples, stride, x0=None, backend=None):
    """Integrate one trajectory and return the recorded samples ``(n_samples, d)``.

    ``x0=None`` draws the initial state from the stationary covariance.
    """
    A = np.asarray(drift, dtype=float)
    d = A.shape[0]
    if x0 is None:
        C = lyapunov_covariance(A, noise)
        x = _psd_factor(C) @ rng.standard_normal(d)
    else:
        x = np.array(x0, dtype=float)
    M, B = _step_operators(A, noise, cfg, stride)
    prop = Propagator(M, B, backend)
    out = np.empty((n_samples, d))
    total = n_samples * stride
    chunk = stride * max(1, CHUNK_STEPS // stride)
    rec = 0
    for start in range(0, total, chunk):
        m = min(chunk, total - start)
        rec += prop.advance(rng.standard_normal((m, d)), x, stride, out[rec:])
    assert rec == n_samples
    return out


def _estimate(drift, noise, cfg, backend=None):
    A = np.asarray(drift, dtype=float)
    stride = resolve_stride(A, cfg)
    h = stride * cfg.dt
    n_samples = int(cfg.duration / h)
    layout = segment_layout(n_samples, cfg.n_segments)
    n_samples = layout.used_samples
    backend_name = resolve_backend(backend)
    means = []
    seg_vars = []
    for rng in trajectory_streams(cfg.seed, cfg.n_trajectories):
        rec = run_trajectory(A, noise, cfg, rng, n_samples, stride, backend=backend)
        acc = cross_spectra(rec, h, layout, cfg.window)
        means.append(acc.mean)
        seg_vars.append(acc.seg_var_real)
    means = np.array(means)
    mean = means.mean(axis=0)
    T = cfg.n_trajectories
    if T >= 2:
        stderr = means.real.std(axis=0, ddof=1) / math.sqrt(T)
    else:
        stderr = np.sqrt(seg_vars[0] / cfg.n_segments)
    omega = angular_frequencies(layout.segment_length, h)
    return omega, mean, stderr, h, stride, layout.segment_length, backend_name


def simulate(op: OperatingPoint, cfg: SimConfig, backend=None) -> SimResult:
    """Monte-Carlo spectra of ``(dx, dy, dN1)`` at the given operating point."""
    t0 = time.perf_counter()
    model = TransferModel.from_operating_point(op)
    ev = _check_stable(model.drift)
    rate = float(np.abs(ev).max())
    if cfg.integrator == "euler" and cfg.dt > DT_GUARD / rate:
        raise StepTooLarge(f"dt = {cfg.dt:.3g} exceeds {DT_GUARD} / max|eigenvalue| = "
                           f"{DT_GUARD / rate:.3g}", dt=cfg.dt, limit=DT_GUARD / rate)
    if op.mu > 0:
        need = MIN_LINE_PERIODS * 2.0 * math.pi / (op.kappa * op.mu)
        if cfg.duration < need:
            raise ConfigError(f"duration {cfg.duration:.6g} shorter than "
                              f"{MIN_LINE_PERIODS:g} locking periods ({need:.6g})",
                              duration=cfg.duration, required=need)
    omega, mean, se, h, stride, L, be = _estimate(model.drift, model.noise_cov.matrix, cfg,
                                                 backend)
    return SimResult(omega, mean, se, cfg, h, stride, L, be, time.perf_counter() - t0)


# -- verification helpers ---------------------------------------------------------------

def band_mask(omega, half_width, bin_width=None):
    """Bins with ``|w| <= half_width``.

    With ``bin_width`` given, the zero bin and its two neighbours are dropped:
    per-segment mean removal changes exactly those Hann-windowed bins, so they
    do not estimate the spectrum.
    """
    m = np.abs(omega) <= half_width
    if bin_width is not None:
        m &= np.abs(omega) > 1.5 * bin_width
    return m


def relative_rms(estimate, reference) -> float:
    e = np.asarray(estimate, dtype=float)
    r = np.asarray(reference, dtype=float)
    return float(np.sqrt(np.mean(((e - r) / r) ** 2)))


def compare_with_analytic(result: SimResult, op: OperatingPoint, band=3.0) -> dict:
    """Relative RMS deviation of the diagonal estimates over ``|w| <= band * kappa``.

    Bins disturbed by the per-segment mean removal are excluded (see
    :func:`band_mask`). Returns ``{channel: {"closed_form": ..., "general": ...}}``; the population
    channel has no closed form and reports the linear-response value only.
    """
    mask = band_mask(result.omega, band * op.kappa, result.bin_width)
    w = result.omega[mask]
    S = general_spectrum(TransferModel.from_operating_point(op), w)
    closed = {
        "x": x_variance_full(w, op.kappa, op.mu, op.cn, op.Gamma1, op.p),
        "y": y_variance(w, op.kappa, op.mu),
    }
    out = {}
    for k, lab in enumerate(STATE_LABELS):
        est = result.mean[k, k].real[mask]
        row = {"general": relative_rms(est, S.complex_values[:, k, k].real)}
        if lab in closed:
            row["closed_form"] = relative_rms(est, closed[lab])
        out[lab] = row
    return out


@dataclass(frozen=True)
class CalibrationResult:
    omega: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    analytic: np.ndarray

    @property
    def z_scores(self) -> np.ndarray:
        return (self.estimate - self.analytic) / self.stderr


def welch_calibration(rate: float, strength: float, cfg: SimConfig,
                      backend=None) -> CalibrationResult:
    """Run a single Ornstein-Uhlenbeck channel ``ds = -rate s dt + dW``.

    Its exact spectrum is ``strength / (rate^2 + w^2)``.
    """
    A = np.array([[-float(rate)]])
    Q = np.array([[float(strength)]])
    omega, mean, se, *_ = _estimate(A, Q, cfg, backend)
    analytic = strength / (rate**2 + omega**2)
    return CalibrationResult(omega, mean[0, 0].real, se[0, 0], analytic)


# -- pinned certification point ---------------------------------------------------

CERTIFICATION_LASER = dict(kappa=1.0, g=0.01, gamma1=0.01, gamma2=200.0, gamma_perp=200.0,
                           pump_rate_R=1e6, pump_p=1.0, n_in=400.0, phi_in=0.0)
CERTIFICATION_TOLERANCE = 0.05


def certification_setup(seed=20240611, n_trajectories=24):
    """Operating point and configuration of the analytic-vs-Monte-Carlo check.

    ``kappa = 1``, ``p = 1``, ``R = 1e6``, ``n_in = 400`` (``mu ~ 0.0198``);
    duration ``2e4 / kappa``, 64 segments, ``dt = 1e-3 / max|eigenvalue|``.
    """
    from .model import LaserParams, solve_steady_state

    op = solve_steady_state(LaserParams(**CERTIFICATION_LASER))
    rate = TransferModel.from_operating_point(op).max_rate
    cfg = SimConfig(dt=1e-3 / rate, duration=2e4 / op.kappa, n_segments=64, seed=seed,
                    n_trajectories=n_trajectories)
    return op, cfg


def certify(seed=20240611, n_trajectories=24, backend=None):
    """Run the pinned check; returns ``(passed, report)``."""
    op, cfg = certification_setup(seed, n_trajectories)
    result = simulate(op, cfg, backend=backend)
    report = compare_with_analytic(result, op)
    passed = all(v <= CERTIFICATION_TOLERANCE for row in report.values() for v in row.values())
    return passed, {"rms": report, "tolerance": CERTIFICATION_TOLERANCE,
                    "wall_time": result.wall_time, "backend": result.backend,
                    "config": cfg.to_dict()}
