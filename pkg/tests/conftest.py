import mpmath
import pytest

from lockedlaser import LaserParams, solve_steady_state

CERT = dict(kappa=1.0, g=0.01, gamma1=0.01, gamma2=200.0, gamma_perp=200.0,
            pump_rate_R=1e6, pump_p=1.0, n_in=400.0)


def params_at_mu(mu, kappa=1.0, R=1e6, p=1.0, **kw):
    """Parameters whose steady state has the requested injection ratio ``mu``.

    With ``n_in = mu^2 n`` the steady-state condition gives ``n = R / (kappa (1 - mu))``.
    """
    n = R / (kappa * (1.0 - mu))
    base = dict(CERT, kappa=kappa, pump_rate_R=R, pump_p=p, n_in=mu * mu * n)
    base.update(kw)
    return LaserParams(**base)


@pytest.fixture
def cert_params():
    return LaserParams(**CERT)


@pytest.fixture
def cert_op(cert_params):
    return solve_steady_state(cert_params)


def mp_spectrum(op, omega, ordering="symmetric", dps=40):
    """High-precision ``(A + i w)^-1 Q (A + i w)^-H`` built from scratch in mpmath."""
    with mpmath.workdps(dps):
        k = mpmath.mpf(op.params.kappa)
        c = 2 * mpmath.mpf(op.params.g) ** 2 / mpmath.mpf(op.params.gamma_perp)
        R = mpmath.mpf(op.params.pump_rate_R)
        nin = mpmath.mpf(op.params.n_in)
        s = (mpmath.sqrt(nin) + mpmath.sqrt(nin + 4 * R / k)) / 2
        n = s * s
        mu = mpmath.sqrt(nin / n)
        G1 = mpmath.mpf(op.params.gamma1) + c * n
        p = mpmath.mpf(op.params.pump_p)
        A = mpmath.matrix([[-k * mu / 2, 0, c * s / 2],
                           [0, -k * mu / 2, 0],
                           [-2 * k * (1 - mu) * s, 0, -G1]])
        nn = k * (1 - mu) * G1 * (2 - p) / c
        if ordering == "symmetric":
            d, xn = k / 2 * (1 - mu / 2), -k / 2 * (1 - mu) * s
        else:
            d, xn = k / 2 * (1 - mu), -k * (1 - mu) * s
        Q = mpmath.matrix([[d, 0, xn], [0, d, 0], [xn, 0, nn]])
        w = mpmath.mpf(omega)
        H = (A + 1j * w * mpmath.eye(3)) ** -1
        return H * Q * H.transpose_conj()
