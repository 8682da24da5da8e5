"""Laser parameters, semiclassical steady state and regime checks.

The injection ratio is ``mu = sqrt(n_in / n)``: injected amplitude over the
intracavity amplitude. With that orientation the steady-state condition
``sqrt(n) * (sqrt(n) - sqrt(n_in)) = R / kappa`` becomes ``n (1 - mu) = R / kappa``
and ``kappa * mu / 2`` is the locking half-bandwidth. The inverse convention
``sqrt(n / n_in)`` is exposed as :attr:`OperatingPoint.mu_inverse` for
comparison only.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError, NoLasing, NonPositiveRate

# Regime thresholds. The underlying approximations only ask for "much greater
# than"; these numbers make that auditable.
ADIABATIC_FACTOR = 100.0
SATURATION_FACTOR = 100.0
WEAK_INJECTION_MAX = 0.1
MACROSCOPIC_MIN = 1e4

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class LaserParams:
    """Physical parameters of one injection-locked laser.

    Rates are angular frequencies in rad/s except ``pump_rate_R`` (atoms per
    second). ``n_in`` is the injected field expressed as an intracavity photon
    number and ``phi_in`` its phase, folded into ``[0, 2*pi)``.
    """

    kappa: float
    g: float
    gamma1: float
    gamma2: float
    gamma_perp: float
    pump_rate_R: float
    pump_p: float
    n_in: float
    phi_in: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "g", "gamma1", "gamma2", "gamma_perp"):
            value = float(getattr(self, name))
            if not value > 0.0 or not math.isfinite(value):
                raise NonPositiveRate(f"{name} must be a positive finite rate, got {value!r}",
                                      parameter=name, value=value)
            object.__setattr__(self, name, value)
        R = float(self.pump_rate_R)
        if R < 0.0 or not math.isfinite(R):
            raise NonPositiveRate(f"pump_rate_R must be non-negative, got {R!r}",
                                  parameter="pump_rate_R", value=R)
        p = float(self.pump_p)
        if not p <= 1.0:
            raise ConfigError(f"pump_p must satisfy p <= 1, got {p!r}", parameter="pump_p")
        n_in = float(self.n_in)
        if not n_in >= 0.0 or not math.isfinite(n_in):
            raise ConfigError(f"n_in must be >= 0, got {n_in!r}", parameter="n_in")
        phi = float(self.phi_in) % TWO_PI
        if phi >= TWO_PI:  # -tiny % 2pi rounds to 2pi
            phi = 0.0
        object.__setattr__(self, "pump_rate_R", R)
        object.__setattr__(self, "pump_p", p)
        object.__setattr__(self, "n_in", n_in)
        object.__setattr__(self, "phi_in", phi)

    @property
    def c(self) -> float:
        """Saturation constant ``2 g^2 / gamma_perp``."""
        return 2.0 * self.g**2 / self.gamma_perp

    def replace(self, **changes) -> "LaserParams":
        data = asdict(self)
        data.update(changes)
        return LaserParams(**data)

    def same_except_phase(self, other: "LaserParams") -> bool:
        a = asdict(self)
        b = asdict(other)
        a.pop("phi_in")
        b.pop("phi_in")
        return a == b

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LaserParams":
        names = [f.name for f in fields(cls)]
        unknown = sorted(set(data) - set(names))
        if unknown:
            raise ConfigError(f"unknown LaserParams keys: {unknown}", keys=",".join(unknown))
        missing = [n for n in names if n != "phi_in" and n not in data]
        if missing:
            raise ConfigError(f"missing LaserParams keys: {missing}", keys=",".join(missing))
        return cls(**{k: data[k] for k in names if k in data})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "LaserParams":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class RegimeFlag:
    name: str
    ok: bool
    ratio: float
    threshold: float
    inequality: str


@dataclass(frozen=True)
class RegimeWarning:
    flag: str
    inequality: str
    ratio: float
    threshold: float

    @property
    def message(self) -> str:
        return f"{self.flag} violated, ratio {self.ratio:.6g}"

    def __str__(self):
        return f"{self.message} (requires {self.inequality})"


@dataclass(frozen=True)
class OperatingPoint:
    """Steady state of one laser plus the rates derived from it."""

    params: LaserParams
    n: float
    mu: float
    N1: float
    c: float
    Gamma1: float
    flags: dict = field(default_factory=dict)

    @property
    def kappa(self) -> float:
        return self.params.kappa

    @property
    def p(self) -> float:
        return self.params.pump_p

    @property
    def cn(self) -> float:
        return self.c * self.n

    @property
    def sqrt_n(self) -> float:
        return math.sqrt(self.n)

    @property
    def mu_inverse(self) -> float:
        """The ``sqrt(n / n_in)`` convention; infinite without injection."""
        if self.params.n_in == 0.0:
            return math.inf
        return math.sqrt(self.n / self.params.n_in)

    @property
    def locking_rate(self) -> float:
        """Quadrature relaxation rate ``kappa * mu / 2``."""
        return 0.5 * self.params.kappa * self.mu

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mu": self.mu,
            "N1": self.N1,
            "c": self.c,
            "Gamma1": self.Gamma1,
            "mu_inverse_convention": self.mu_inverse,
            "flags": {k: {"ok": f.ok, "ratio": f.ratio, "threshold": f.threshold,
                          "inequality": f.inequality}
                      for k, f in self.flags.items()},
        }


def steady_state_amplitude(kappa: float, R: float, n_in: float) -> float:
    """Positive root of ``s (s - sqrt(n_in)) = R / kappa`` for ``s = sqrt(n)``."""
    a = math.sqrt(n_in)
    return 0.5 * (a + math.sqrt(n_in + 4.0 * R / kappa))


def solve_steady_state(params: LaserParams) -> OperatingPoint:
    """Solve the semiclassical steady state and populate the regime flags.

    Raises
    ------
    NoLasing
        If the pump rate is zero (no gain-supported field).
    """
    if params.pump_rate_R == 0.0:
        raise NoLasing("pump rate R = 0: no lasing steady state", n_in=params.n_in)
    kappa = params.kappa
    sqrt_n = steady_state_amplitude(kappa, params.pump_rate_R, params.n_in)
    n = sqrt_n * sqrt_n
    mu = math.sqrt(params.n_in) / sqrt_n
    c = params.c
    Gamma1 = params.gamma1 + c * n
    N1 = params.pump_rate_R / params.gamma1

    adiabatic = min(params.gamma2, params.gamma_perp) / max(params.gamma1, kappa)
    saturation = c * n / params.gamma1
    flags = {
        "adiabatic_ok": RegimeFlag("adiabatic_ok", adiabatic >= ADIABATIC_FACTOR, adiabatic,
                                   ADIABATIC_FACTOR,
                                   "min(gamma2, gamma_perp) >= 100 * max(gamma1, kappa)"),
        "saturation_ok": RegimeFlag("saturation_ok", saturation >= SATURATION_FACTOR, saturation,
                                    SATURATION_FACTOR, "c * n >= 100 * gamma1"),
        "weak_injection_ok": RegimeFlag("weak_injection_ok", mu <= WEAK_INJECTION_MAX, mu,
                                        WEAK_INJECTION_MAX, "mu <= 0.1"),
        "macroscopic_ok": RegimeFlag("macroscopic_ok", n >= MACROSCOPIC_MIN, n,
                                     MACROSCOPIC_MIN, "n >= 1e4"),
    }
    return OperatingPoint(params=params, n=n, mu=mu, N1=N1, c=c, Gamma1=Gamma1, flags=flags)


def steady_state_residual(op: OperatingPoint) -> float:
    p = op.params
    s = math.sqrt(op.n)
    return s * (s - math.sqrt(p.n_in)) - p.pump_rate_R / p.kappa


def validate_regime(op: OperatingPoint) -> list[RegimeWarning]:
    """One warning per violated approximation; empty when all hold."""
    return [RegimeWarning(f.name, f.inequality, f.ratio, f.threshold)
            for f in op.flags.values() if not f.ok]
