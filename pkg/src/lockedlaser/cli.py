"""Command-line entry point: ``lockedlaser <subcommand> [--config FILE] [flags]``.

A run is described by one JSON object (see :data:`RUN_CONFIG_SCHEMA`); flags
override the file. Results go to ``output.path`` or standard output. Exit
status is 0 on success, 1 on invalid input and 2 on numerical failure; errors
are printed to standard error as JSON.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import langevin, protocols, spectra
from .errors import ConfigError, LaserModelError
from .model import LaserParams, solve_steady_state, validate_regime

OUTPUT_DIR_ENV = "LOCKEDLASER_OUTPUT_DIR"

_LASER = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kappa", "g", "gamma1", "gamma2", "gamma_perp", "pump_rate_R", "pump_p",
                 "n_in"],
    "properties": {k: {"type": "number"} for k in
                   ("kappa", "g", "gamma1", "gamma2", "gamma_perp", "pump_rate_R", "pump_p",
                    "n_in", "phi_in")},
}

RUN_CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lockedlaser run configuration",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "operation": {"type": "string"},
        "laser": _LASER,
        "laser2": _LASER,
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["omega_min", "omega_max", "points"],
            "properties": {
                "omega_min": {"type": "number"},
                "omega_max": {"type": "number"},
                "points": {"type": "integer", "minimum": 1},
                "spacing": {"enum": ["linear", "log-symmetric"]},
            },
        },
        "sim": {
            "type": "object",
            "additionalProperties": False,
            "required": ["duration"],
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "duration": {"type": "number", "exclusiveMinimum": 0},
                "n_segments": {"type": "integer", "minimum": 8},
                "window": {"type": "string"},
                "seed": {"type": "integer", "minimum": 0},
                "n_trajectories": {"type": "integer", "minimum": 1},
                "integrator": {"enum": list(langevin.INTEGRATORS)},
                "sample_interval": {"type": ["number", "null"]},
            },
        },
        "dense_coding": {
            "type": "object",
            "additionalProperties": False,
            "required": ["reflectivity_R", "P", "delta_omega_A"],
            "properties": {k: {"type": "number"} for k in
                           ("reflectivity_R", "P", "delta_omega_A")},
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "d_A_min": {"type": "number", "exclusiveMinimum": 0},
                "d_A_max": {"type": "number", "exclusiveMinimum": 0},
                "points": {"type": "integer", "minimum": 2},
                "script_P": {"type": "number", "minimum": 0},
                "sqrt_R": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "lam": {"type": "number", "minimum": 0},
                "p": {"type": "number", "minimum": 0, "maximum": 1},
                "scaling": {"enum": list(protocols.SCALINGS)},
            },
        },
        "form": {"enum": ["full", "saturated", "closed"]},
        "quantity": {"enum": ["x", "y", "N", "xN"]},
        "quadrature": {"enum": ["X", "Y"]},
        "threshold": {"type": "number"},
        "normalized": {"type": "boolean"},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "path": {"type": ["string", "null"]},
                "format": {"enum": ["csv", "json"]},
            },
        },
    },
}

_COMMON = {"operation", "output"}
ALLOWED = {
    "steady-state": {"laser"},
    "spectrum": {"laser", "grid", "form", "quantity", "normalized"},
    "external-spectrum": {"laser", "grid", "form", "quadrature", "normalized"},
    "phase-variance": {"laser"},
    "simulate": {"laser", "sim", "normalized"},
    "duan": {"laser", "laser2", "grid", "form", "threshold", "normalized"},
    "dense-coding-snr": {"laser", "laser2", "grid", "form", "dense_coding", "normalized"},
    "dense-coding-smi": {"laser", "laser2", "form", "dense_coding"},
    "smi-sweep": {"sweep"},
    "teleport-fidelity": {"laser", "laser2", "grid", "form", "normalized"},
    "selftest": {"sim"},
}
REQUIRED = {
    "steady-state": {"laser"},
    "spectrum": {"laser"},
    "external-spectrum": {"laser"},
    "phase-variance": {"laser"},
    "simulate": {"laser", "sim"},
    "duan": {"laser"},
    "dense-coding-snr": {"laser", "dense_coding"},
    "dense-coding-smi": {"laser", "dense_coding"},
    "smi-sweep": set(),
    "teleport-fidelity": {"laser"},
    "selftest": set(),
}
DEFAULT_SWEEP = {"d_A_min": 0.1, "d_A_max": 20.0, "points": 200, "script_P": 3.0, "sqrt_R": 0.1,
              "lam": 0.001, "p": 1.0, "scaling": "kappa"}


# -- config handling ------------------------------------------------------------

def validate_config(config: dict, operation: str) -> dict:
    try:
        jsonschema.validate(config, RUN_CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    if config.get("operation", operation) != operation:
        raise ConfigError(f"config is for {config['operation']!r}, not {operation!r}")
    extra = set(config) - ALLOWED[operation] - _COMMON
    if extra:
        raise ConfigError(f"{operation} does not use config keys {sorted(extra)}")
    missing = REQUIRED[operation] - set(config)
    if missing:
        raise ConfigError(f"{operation} requires config keys {sorted(missing)}")
    return config


def _set(cfg, path, value):
    if value is None:
        return
    node = cfg
    for k in path[:-1]:
        node = node.setdefault(k, {})
    node[path[-1]] = value


def build_config(args) -> dict:
    cfg = {}
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
    _set(cfg, ("output", "path"), args.output)
    _set(cfg, ("output", "format"), args.format)
    for key in ("form", "quantity", "quadrature", "threshold"):
        _set(cfg, (key,), getattr(args, key, None))
    if getattr(args, "normalized", False):
        cfg["normalized"] = True
    if args.command in ("simulate", "selftest"):
        _set(cfg, ("sim", "seed"), args.seed)
        _set(cfg, ("sim", "n_trajectories"), args.trajectories)
    if args.command == "smi-sweep":
        for flag, key in (("d_min", "d_A_min"), ("d_max", "d_A_max"), ("points", "points"),
                          ("script_P", "script_P"), ("sqrt_R", "sqrt_R"), ("lam", "lam"),
                          ("p", "p"), ("scaling", "scaling")):
            _set(cfg, ("sweep", key), getattr(args, flag))
    return cfg


def make_grid(cfg: dict, op=None) -> np.ndarray:
    g = cfg.get("grid")
    if g is None:
        return spectra.log_symmetric_grid(op)
    spacing = g.get("spacing", "linear")
    if spacing == "linear":
        return spectra.linear_grid(g["omega_min"], g["omega_max"], g["points"])
    lo, hi, n = g["omega_min"], g["omega_max"], g["points"]
    if not 0 < lo < hi:
        raise ConfigError("log-symmetric grid needs 0 < omega_min < omega_max")
    pos = np.logspace(math.log10(lo), math.log10(hi), n)
    return np.concatenate([-pos[::-1], [0.0], pos])


def _laser(cfg) -> LaserParams:
    return LaserParams.from_dict(cfg["laser"])


def _form(cfg, default):
    return cfg.get("form", default)


def _scaled(curve, op, cfg):
    if cfg.get("normalized"):
        return spectra.SpectralCurve(curve.omega / op.kappa, curve.value, curve.label)
    return curve


# -- output --------------------------------------------------------------------

def _resolve_path(path):
    p = Path(path)
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    return p


def _emit(text: str, cfg: dict, stdout):
    path = cfg.get("output", {}).get("path")
    if path:
        p = _resolve_path(path)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, newline="\n")
    else:
        stdout.write(text)


def _fmt(cfg):
    return cfg.get("output", {}).get("format", "csv")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _curve_text(curve, cfg):
    return curve.to_csv() if _fmt(cfg) == "csv" else curve.to_json() + "\n"


def _record(inputs, values, notes=""):
    return {"inputs": inputs, "values": values, "tolerance_notes": notes}


def _curve_record_text(curve, cfg, inputs, notes="", extra=None):
    if _fmt(cfg) == "csv":
        return curve.to_csv()
    values = [[float(w), float(v)] for w, v in zip(curve.omega, curve.value)]
    rec = _record(inputs, values, notes)
    if extra:
        rec.update(extra)
    return _dump(rec)


# -- subcommands ----------------------------------------------------------------

def cmd_steady_state(cfg, stdout):
    op = solve_steady_state(_laser(cfg))
    out = op.to_dict()
    out["warnings"] = [w.message for w in validate_regime(op)]
    _emit(_dump(out), cfg, stdout)


def cmd_spectrum(cfg, stdout):
    op = solve_steady_state(_laser(cfg))
    w = make_grid(cfg, op)
    q = cfg.get("quantity", "x")
    if q == "x":
        curve = spectra.intracavity_variance_x(op, w, _form(cfg, "full"))
    elif q == "y":
        curve = spectra.intracavity_variance_y(op, w)
    else:
        S = spectra.general_spectrum(spectra.TransferModel.from_operating_point(op), w)
        curve = S.curve("N", "N") if q == "N" else S.curve("x", "N")
    _emit(_curve_text(_scaled(curve, op, cfg), cfg), cfg, stdout)


def cmd_external_spectrum(cfg, stdout):
    op = solve_steady_state(_laser(cfg))
    w = make_grid(cfg, op)
    X, Y = spectra.external_variances(op, w, _form(cfg, "full"))
    curve = X if cfg.get("quadrature", "X") == "X" else Y
    _emit(_curve_text(_scaled(curve, op, cfg), cfg), cfg, stdout)


def cmd_phase_variance(cfg, stdout):
    op = solve_steady_state(_laser(cfg))
    res = spectra.phase_variance(op)
    rec = _record(cfg["laser"], res.to_dict(),
                  "adaptive quadrature, absolute tolerance 1e-12 x peak spectral value")
    _emit(_dump(rec), cfg, stdout)


def _sim_config(cfg, op):
    sim = dict(cfg.get("sim", {}))
    if "dt" not in sim:
        sim["dt"] = 1e-3 / spectra.TransferModel.from_operating_point(op).max_rate
    return langevin.SimConfig.from_dict(sim)


def cmd_simulate(cfg, stdout):
    op = solve_steady_state(_laser(cfg))
    sc = _sim_config(cfg, op)
    res = langevin.simulate(op, sc)
    path = cfg.get("output", {}).get("path")
    files = []
    if path:
        files = [str(p) for p in res.write(_resolve_path(path), _fmt(cfg))]
    summary = {
        "config": sc.to_dict(),
        "sample_interval": res.sample_interval,
        "segment_length": res.segment_length,
        "backend": res.backend,
        "rms_vs_analytic": langevin.compare_with_analytic(res, op),
        "files": files,
    }
    stdout.write(_dump(summary))


def _source(cfg):
    second = LaserParams.from_dict(cfg["laser2"]) if "laser2" in cfg else None
    src = protocols.EprSource.from_params(_laser(cfg), second)
    src.require_identical()
    return src


def cmd_duan(cfg, stdout):
    src = _source(cfg)
    w = make_grid(cfg, src.laser1)
    form = _form(cfg, "closed")
    curve = protocols.duan_combined_variance(src, w, form)
    band = protocols.duan_entangled_band(src, cfg.get("threshold", 1.0),
                                         omega_max=float(np.abs(w).max()), form=form)
    extra = {"band": {"omega_star": band.omega_star, "empty": band.empty,
                      "everywhere": band.everywhere, "threshold": band.threshold}}
    _emit(_curve_record_text(_scaled(curve, src.laser1, cfg), cfg, cfg["laser"],
                             "band edge by bisection, relative 1e-9", extra), cfg, stdout)


def cmd_dense_coding_snr(cfg, stdout):
    src = _source(cfg)
    dc = protocols.DenseCodingParams(**cfg["dense_coding"])
    w = make_grid(cfg, src.laser1)
    curve = protocols.snr_spectrum(src, dc, w, _form(cfg, "saturated"))
    _emit(_curve_record_text(_scaled(curve, src.laser1, cfg), cfg,
                             {"laser": cfg["laser"], "dense_coding": cfg["dense_coding"]}),
          cfg, stdout)


def cmd_dense_coding_smi(cfg, stdout):
    src = _source(cfg)
    dc = protocols.DenseCodingParams(**cfg["dense_coding"])
    res = protocols.shannon_information(src, dc, _form(cfg, "saturated"))
    rec = _record({"laser": cfg["laser"], "dense_coding": cfg["dense_coding"]}, res.to_dict(),
                  "adaptive quadrature, absolute tolerance 1e-10 kappa; natural log")
    _emit(_dump(rec), cfg, stdout)


def cmd_smi_sweep(cfg, stdout):
    sw = dict(DEFAULT_SWEEP)
    sw.update(cfg.get("sweep", {}))
    d = np.linspace(sw["d_A_min"], sw["d_A_max"], sw["points"])
    res = protocols.smi_sweep(d, sw["script_P"], sw["sqrt_R"] ** 2, sw["lam"], sw["p"],
                              sw["scaling"])
    if _fmt(cfg) == "csv":
        text = res.to_csv()
    else:
        text = _dump(_record(sw, [[float(a), float(b)] for a, b in zip(res.d_A, res.smi)],
                             "adaptive quadrature per point, absolute tolerance 1e-10"))
    _emit(text, cfg, stdout)


def cmd_teleport_fidelity(cfg, stdout):
    src = _source(cfg)
    w = make_grid(cfg, src.laser1)
    curve = protocols.teleport_fidelity_spectrum(src, w, form=_form(cfg, "saturated"))
    _emit(_curve_record_text(_scaled(curve, src.laser1, cfg), cfg, cfg["laser"]), cfg, stdout)


def cmd_selftest(cfg, stdout):
    sim = cfg.get("sim", {})
    passed, report = langevin.certify(seed=sim.get("seed", 20240611),
                                      n_trajectories=sim.get("n_trajectories", 24))
    tol = report["tolerance"]
    for ch, row in report["rms"].items():
        for ref, v in row.items():
            status = "PASS" if v <= tol else "FAIL"
            stdout.write(f"{status} S_{ch}{ch} vs {ref}: relative RMS {v:.4f} (limit {tol})\n")
    stdout.write(f"{'PASS' if passed else 'FAIL'} selftest ({report['backend']}, "
                 f"{report['wall_time']:.1f} s)\n")
    return 0 if passed else 2


COMMANDS = {
    "steady-state": cmd_steady_state,
    "spectrum": cmd_spectrum,
    "external-spectrum": cmd_external_spectrum,
    "phase-variance": cmd_phase_variance,
    "simulate": cmd_simulate,
    "duan": cmd_duan,
    "dense-coding-snr": cmd_dense_coding_snr,
    "dense-coding-smi": cmd_dense_coding_smi,
    "smi-sweep": cmd_smi_sweep,
    "teleport-fidelity": cmd_teleport_fidelity,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lockedlaser", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", "-c", help="JSON run configuration")
        p.add_argument("--output", "-o", help="output file (simulate: file stem)")
        p.add_argument("--format", choices=["csv", "json"])
        return p

    add("steady-state", "steady state, derived rates and regime flags")
    p = add("spectrum", "intracavity spectra")
    p.add_argument("--quantity", choices=["x", "y", "N", "xN"])
    p.add_argument("--form", choices=list(spectra.FORMS))
    p = add("external-spectrum", "output-beam quadrature variances")
    p.add_argument("--quadrature", choices=["X", "Y"])
    p.add_argument("--form", choices=list(spectra.FORMS))
    add("phase-variance", "integrated phase variance with diagnostics")
    p = add("simulate", "Monte-Carlo Langevin spectra")
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectories", type=int)
    p = add("duan", "combined EPR variances and entangled band")
    p.add_argument("--form", choices=["closed", "saturated", "full"])
    p.add_argument("--threshold", type=float)
    for name, h in (("dense-coding-snr", "dense-coding SNR spectrum"),
                    ("dense-coding-smi", "dense-coding mutual information"),
                    ("teleport-fidelity", "spectral teleportation fidelity")):
        p = add(name, h)
        p.add_argument("--form", choices=["closed", "saturated", "full"])
    p = add("smi-sweep", "mutual information versus signal bandwidth")
    p.add_argument("--d-min", dest="d_min", type=float)
    p.add_argument("--d-max", dest="d_max", type=float)
    p.add_argument("--points", type=int)
    p.add_argument("--script-P", dest="script_P", type=float)
    p.add_argument("--sqrt-R", dest="sqrt_R", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--p", type=float)
    p.add_argument("--scaling", choices=list(protocols.SCALINGS))
    p = add("selftest", "analytic-vs-Monte-Carlo certification")
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectories", type=int)
    p = sub.add_parser("check-config", help="validate a configuration file")
    p.add_argument("operation", choices=sorted(COMMANDS))
    p.add_argument("config")
    sub.add_parser("schema", help="print the configuration JSON schema")
    for p in sub.choices.values():
        if "--normalized" not in p._option_string_actions and p.prog.split()[-1] in {
                k for k, v in ALLOWED.items() if "normalized" in v}:
            p.add_argument("--normalized", action="store_true",
                           help="report frequencies in units of kappa")
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "schema":
            stdout.write(_dump(RUN_CONFIG_SCHEMA))
            return 0
        if args.command == "check-config":
            validate_config(json.loads(Path(args.config).read_text()), args.operation)
            stdout.write(f"OK {args.operation}\n")
            return 0
        cfg = validate_config(build_config(args), args.command)
        code = COMMANDS[args.command](cfg, stdout)
        return code or 0
    except LaserModelError as exc:
        stderr.write(json.dumps({"error": exc.to_dict()}) + "\n")
        return 1 if exc.kind == "validation" else 2
    except (json.JSONDecodeError, OSError) as exc:
        stderr.write(json.dumps({"error": {"code": "bad_config", "kind": "validation",
                                           "message": str(exc)}}) + "\n")
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
