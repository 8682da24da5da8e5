"""Adaptive quadrature over the real line for Lorentzian-like integrands."""

from __future__ import annotations

import warnings

import numpy as np
from scipy import integrate

from .errors import QuadratureNonConvergence


def _breakpoints(scales):
    pts = set()
    for s in scales:
        s = abs(float(s))
        if s > 0.0 and np.isfinite(s):
            pts.update((0.25 * s, s, 4.0 * s, 16.0 * s))
    return sorted(pts)


def integrate_half_line(f, scales, epsabs=0.0, epsrel=1e-11, limit=400):
    """Integrate ``f`` over ``[0, inf)``.

    The finite part is split at multiples of each characteristic ``scale`` so
    narrow peaks are never skipped; the tail is mapped to a finite interval by
    QUADPACK's infinite-range rule.

    Returns ``(value, abserr)``.
    """
    edges = [0.0] + _breakpoints(scales) + [np.inf]
    total = 0.0
    err = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for a, b in zip(edges[:-1], edges[1:]):
            try:
                v, e = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
            except integrate.IntegrationWarning as exc:
                raise QuadratureNonConvergence(
                    f"adaptive quadrature did not converge on [{a}, {b}]: {exc}",
                    lower=a, upper=b) from exc
            total += v
            err += e
    return total, err


def integrate_even(f, scales, epsabs=0.0, epsrel=1e-11, limit=400):
    """Integrate an even function over the whole real line."""
    v, e = integrate_half_line(f, scales, epsabs=epsabs, epsrel=epsrel, limit=limit)
    return 2.0 * v, 2.0 * e
