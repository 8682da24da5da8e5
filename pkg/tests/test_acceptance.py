"""Acceptance criteria, one test each.

Every test prints a ``PASS``/``FAIL`` line with the measured quantity. Run the
file directly (``python3 tests/test_acceptance.py``) for the summary alone.
"""

import io
import json
import math
import sys
import tempfile
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lockedlaser import (LaserParams, cli, langevin, protocols,  # noqa: E402
                         solve_steady_state, spectra)
from lockedlaser.quadrature import integrate_even  # noqa: E402

from conftest import CERT, params_at_mu  # noqa: E402

RNG_SEED = 20240611


def _line(number, title, ok, detail):
    return f"{'PASS' if ok else 'FAIL'} [{number}] {title}: {detail}"


# -- criteria ---------------------------------------------------------------------

def criterion_1():
    t0 = time.perf_counter()
    passed, report = langevin.certify(seed=RNG_SEED, n_trajectories=24)
    elapsed = time.perf_counter() - t0
    worst = max(v for row in report["rms"].values() for v in row.values())
    ok = passed and elapsed < 60.0
    parts = ", ".join(f"{ch}/{ref} {v:.4f}" for ch, row in report["rms"].items()
                      for ref, v in row.items())
    return ok, (f"relative RMS over |w| <= 3 kappa: {parts}; worst {worst:.4f} <= 0.05; "
                f"{elapsed:.1f} s < 60 s")


def criterion_2():
    rng = np.random.default_rng(RNG_SEED)
    worst_x = worst_d = 0.0
    for _ in range(100):
        mu = 10 ** rng.uniform(-4, math.log10(0.5))
        kappa = 10 ** rng.uniform(-1, 1)
        op = solve_steady_state(params_at_mu(mu, kappa=kappa, R=10 ** rng.uniform(4, 9),
                                             p=0.0))
        w = spectra.log_symmetric_grid(op)
        X, _ = spectra.external_variances(op, w, form="saturated")
        worst_x = max(worst_x, float(np.max(np.abs(X.value - 0.25))))
        src = protocols.EprSource.from_params(op.params)
        d = protocols.duan_combined_variance(src, w).value
        worst_d = max(worst_d, float(np.max(np.abs(d - 1.0))))
    ok = worst_x <= 1e-12 and worst_d <= 1e-12
    return ok, f"max |dX^2 - 1/4| = {worst_x:.1e}, max |Duan - 1| = {worst_d:.1e} (100 draws)"


def criterion_3():
    mu = 0.019801
    op = solve_steady_state(params_at_mu(mu, p=1.0))
    X0 = spectra.external_variances(op, [0.0], form="saturated")[0].value[0]
    with mpmath.workdps(50):
        m = mpmath.mpf(mu)
        ref = float(mpmath.mpf(1) / 4 - (1 - m) / (4 * (1 - m / 2) ** 2))
    rel = abs(X0 / ref - 1)
    w = spectra.log_symmetric_grid(op)
    worst = np.inf
    for form in spectra.FORMS:
        X, Y = spectra.external_variances(op, w, form)
        worst = min(worst, float(np.min(X.value * Y.value)))
    ok = rel <= 1e-6 and worst >= 1 / 16 and 1e-5 < X0 < 1e-4
    return ok, (f"(dX^2)_0 = {X0:.6e} vs oracle {ref:.6e} (rel {rel:.1e}); "
                f"min dX^2 dY^2 = {worst:.6f} >= 1/16")


def criterion_4():
    op = solve_steady_state(LaserParams(**CERT))
    src = protocols.EprSource.from_params(op.params)
    w = spectra.log_symmetric_grid(op, span=(1e-2, 1e3))
    d = protocols.duan_combined_variance(src, w)
    with mpmath.workdps(50):
        m = mpmath.mpf(src.mu)
        ref = float((m**2 / 4) / (1 - m / 2) ** 2)
    rel = abs(d.at(0.0) / ref - 1)
    ok = rel <= 1e-9 and bool(np.all(d.value < 1.0))
    return ok, (f"V(0) = {d.at(0.0):.10e} vs {ref:.10e} (rel {rel:.1e}); "
                f"max on grid {d.value.max():.6f} < 1")


def criterion_5():
    op = solve_steady_state(params_at_mu(0.02, p=0.0))
    src = protocols.EprSource.from_params(op.params)
    dc = protocols.DenseCodingParams(0.01, 1.0, 1.0)
    res = protocols.shannon_information(src, dc)
    target = dc.reflectivity_R * dc.P
    rel = abs(res.information / target - 1)
    return rel < 0.02, f"I = {res.information:.6e} vs R P = {target:.6e} (rel {rel:.2%} < 2%)"


def criterion_6():
    d = np.linspace(0.1, 20.0, 200)
    curves = {lam: protocols.smi_sweep(d, 3.0, 0.01, lam, 1.0) for lam in (0.1, 0.01, 0.001)}
    classical = protocols.smi_sweep(d, 3.0, 0.01, 0.001, 0.0)
    peak = curves[0.001].peak
    ordered = bool(np.all(curves[0.001].smi > curves[0.01].smi)
                   and np.all(curves[0.01].smi > curves[0.1].smi))
    slowest = max(c.elapsed for c in [*curves.values(), classical])
    ok = (abs(peak - 0.6) <= 0.1 and abs(classical.peak - 0.04) <= 0.02 and ordered
          and slowest < 5.0)
    return ok, (f"peak {peak:.4f} (0.6 +- 0.1), p=0 peak {classical.peak:.4f} (0.04 +- 0.02), "
                f"ordered {ordered}, slowest curve {slowest:.2f} s < 5 s")


def criterion_7():
    F0 = [float(protocols.fidelity_closed_form(0.0, 1.0, p)) for p in (0.0, 0.5, 1.0)]
    exact = all(F == 1 / (2 - p) for F, p in zip(F0, (0.0, 0.5, 1.0)))
    Fk = float(protocols.fidelity_closed_form(1.0, 1.0, 1.0))
    rel = abs(Fk / (2 / 3) - 1)
    ok = exact and rel <= 1e-12
    return ok, f"F_0 = {F0} for p = 0, 0.5, 1; F(kappa, p=1) = {Fk:.15f} (rel {rel:.1e})"


def criterion_8():
    worst = 0.0
    for mu in (0.02, 0.2):
        op = solve_steady_state(params_at_mu(mu))
        model = spectra.TransferModel.from_operating_point(op)
        C = langevin.stationary_covariance(op)
        scales = sorted(set(np.round(np.abs(model.eigenvalues), 12)))
        for i, j in ((0, 0), (1, 1), (2, 2), (0, 2)):
            def f(w, i=i, j=j):
                return spectra.general_spectrum(model, [w]).complex_values[0, i, j].real
            v, _ = integrate_even(f, scales, epsabs=1e-13 * abs(C[i, j]))
            worst = max(worst, abs(v / (2 * math.pi) / C[i, j] - 1))
    return worst <= 1e-6, f"max entrywise relative deviation {worst:.1e} <= 1e-6"


def criterion_9():
    laser = dict(CERT, n_in=0.04 * 1e6 / 0.8)
    cfg = {"laser": laser, "sim": {"dt": 1e-3, "duration": 2000.0, "n_segments": 16,
                                   "seed": 7, "n_trajectories": 2}}
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        (tmp / "cfg.json").write_text(json.dumps(cfg))
        for name in ("first", "second"):
            code = cli.run(["simulate", "-c", str(tmp / "cfg.json"), "-o",
                            str(tmp / name / "run")], stdout=io.StringIO())
            if code != 0:
                return False, f"simulate exited with {code}"
        files = sorted(p.name for p in (tmp / "first").iterdir())
        same = all((tmp / "first" / f).read_bytes() == (tmp / "second" / f).read_bytes()
                   for f in files)
    return same, f"{len(files)} output files, bit-identical: {same}"


CRITERIA = [
    (1, "analytic vs Monte-Carlo spectra", criterion_1),
    (2, "shot-noise limit", criterion_2),
    (3, "squeezing depth", criterion_3),
    (4, "Duan band", criterion_4),
    (5, "dense coding Poisson limit", criterion_5),
    (6, "mutual information bandwidth sweep", criterion_6),
    (7, "teleportation fidelity", criterion_7),
    (8, "Lyapunov vs spectral integral", criterion_8),
    (9, "determinism", criterion_9),
]


@pytest.mark.parametrize("number,title,check", CRITERIA, ids=[f"criterion_{c[0]}" for c in CRITERIA])
def test_criterion(number, title, check, capsys):
    ok, detail = check()
    with capsys.disabled():
        print("\n" + _line(number, title, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = []
    for number, title, check in CRITERIA:
        ok, detail = check()
        print(_line(number, title, ok, detail), flush=True)
        results.append(ok)
    sys.exit(0 if all(results) else 1)
