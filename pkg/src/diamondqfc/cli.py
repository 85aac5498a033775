"""
Command-line front end.

Every subcommand takes an optional JSON config (``--config``) whose keys
mirror the command-line flags; flags given on the command line override the
file. The merged config is schema-validated before any computation. Each
run writes its data files plus ``<command>.run.json``, a record holding the
config echo, package version and wall-clock time.

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

import jsonschema
import numpy as np

from . import __version__
from .errors import NumericalError, QFCError
from .scheme import SCHEME_TABLE_VERSION

OUTPUT_ENV = "DIAMONDQFC_OUTPUT_DIR"

_NUM = {"type": "number"}
_RANGE = {"oneOf": [{"type": "string", "pattern": r"^[-+0-9.eE]+:[-+0-9.eE]+:[-+0-9.eE]+$"},
                    {"type": "array", "items": _NUM, "minItems": 1}, _NUM]}
_COEFF = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]}
_STATE = {"type": "object", "additionalProperties": False, "required": ["dim", "entries"],
          "properties": {"dim": {"type": "integer", "minimum": 1},
                         "entries": {"type": "array",
                                     "items": {"type": "array", "items": _NUM,
                                               "minItems": 2, "maxItems": 2}}}}
_MEDIUM = {
    "band": {"type": "string"},
    "gamma_deph": {"type": "number", "minimum": 0},
    "convention": {"enum": ["fine_structure", "partial"]},
    "alpha_c_rule": {"enum": ["dipole", "cross_section"]},
    "alpha_c_override": {"type": ["number", "null"], "minimum": 0},
    "alpha_s_override": {"type": ["number", "null"], "minimum": 0},
    "method": {"enum": ["exact-sliced", "magnus1", "magnus2"]},
    "tol": {"type": "number", "exclusiveMinimum": 0},
    "slices": {"type": "integer", "minimum": 2},
    "quad_order": {"type": "integer", "minimum": 1},
    "absorbing": {"type": "boolean"},
}
_OPT = {
    "bounds": {"enum": ["capped", "capped50", "unbounded"]},
    "seed": {"type": "integer", "minimum": 0},
    "budget": {"type": "integer", "minimum": 1},
    "restarts": {"type": "integer", "minimum": 0},
    "seeds": {"type": "array", "items": {"type": "array", "items": _NUM, "minItems": 5, "maxItems": 5}},
    "workers": {"type": "integer", "minimum": 1},
}
_COMMON = {"command": {"type": "string"}, "output": {"type": "string"}}
_PARAMS = {"type": "array", "items": _NUM, "minItems": 5, "maxItems": 5}


def _schema(props, required=()):
    return {"type": "object", "additionalProperties": False,
            "properties": {**_COMMON, **props}, "required": list(required)}


SCHEMAS = {
    "ce": _schema({**_MEDIUM, "od": {"type": "number", "minimum": 0}, "params": _PARAMS},
                  ["band", "od", "params"]),
    "optimize": _schema({**_MEDIUM, **_OPT, "od": {"type": "number", "minimum": 0}},
                        ["band", "od"]),
    "sweep": _schema({**_MEDIUM, **_OPT, "od": _RANGE, "nonabsorbing_overlay": {"type": "boolean"}},
                     ["band", "od"]),
    "coupling": _schema({**_MEDIUM, "od": {"type": "number", "minimum": 0}, "params": _PARAMS,
                         "grid_size": {"type": "integer", "minimum": 2}},
                        ["band", "od", "params"]),
    "variances": _schema({
        "input": {"enum": ["fock", "coherent", "squeezed_coherent"]},
        "n": {"type": "integer", "minimum": 0}, "beta": _COEFF, "r": {"type": "number", "minimum": 0},
        "db": {"type": "number", "minimum": 0}, "phi": _NUM, "eta": _RANGE,
        "phase": _NUM, "corrected": {"type": "boolean"}}, ["input"]),
    "convert": _schema({
        "input": {"enum": ["fock", "coherent", "state"]},
        "n": {"type": "integer", "minimum": 0}, "beta": _COEFF, "state": _STATE,
        "coeff": _COEFF, "eta": {"type": "number", "minimum": 0, "maximum": 1},
        "corrected": {"type": "boolean"}, "n_max": {"type": "integer", "minimum": 1},
        "curves": _RANGE}, []),
    "qubit": _schema({
        "encoding": {"enum": ["single-rail", "path", "polarization"]},
        "state": _STATE, "coeff": _COEFF, "coeff_d": _COEFF, "coeff_u": _COEFF,
        "corrected": {"type": "boolean"}}, ["encoding", "state"]),
    "epr": _schema({"grid": _RANGE,
                    "etas": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1},
                             "minItems": 4, "maxItems": 4}}, []),
}


class ConfigError(Exception):
    pass


# -- helpers ------------------------------------------------------------------------


def parse_range(spec):
    """``"a:b:step"`` (inclusive), a list, or a single number, as a list of floats."""
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if isinstance(spec, list):
        return [float(x) for x in spec]
    a, b, step = (float(x) for x in spec.split(":"))
    if step <= 0 or b < a:
        raise ConfigError(f"config.od: invalid range {spec!r}")
    n = int(round((b - a) / step))
    return [round(a + k * step, 12) for k in range(n + 1)]


def _coeff(v, default=1.0):
    if v is None:
        return complex(default)
    if isinstance(v, list):
        return complex(v[0], v[1])
    return complex(v)


def _fmt(v):
    return f"{float(v) + 0.0:.10g}"


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([x if isinstance(x, str) else _fmt(x) for x in r])
    return buf.getvalue()


def _complex_json(z):
    return [float(np.real(z)), float(np.imag(z))]


def _point(cfg, od, params):
    from .propagation import OperatingPoint
    kwargs = {k: cfg[k] for k in ("gamma_deph", "convention") if k in cfg}
    if "alpha_c_rule" in cfg:
        kwargs["alpha_c_rule"] = cfg["alpha_c_rule"]
    if cfg.get("alpha_c_override") is not None:
        kwargs["alpha_c"] = cfg["alpha_c_override"]
    if cfg.get("alpha_s_override") is not None:
        kwargs["alpha_s"] = cfg["alpha_s_override"]
    return OperatingPoint.from_params(cfg["band"], od, params, **kwargs)


def _prop_kwargs(cfg):
    out = {k: cfg[k] for k in ("tol", "slices", "quad_order") if k in cfg}
    out["absorbing"] = cfg.get("absorbing", True)
    return out


# -- subcommands ---------------------------------------------------------------------


def cmd_ce(cfg):
    from .propagation import conversion_metrics, transfer_matrix
    method = cfg.get("method", "exact-sliced")
    p = _point(cfg, cfg["od"], cfg["params"])
    T = transfer_matrix(p, method, **_prop_kwargs(cfg))
    m = conversion_metrics(T)
    header = ["od", "eta_d", "eta_u", "T_d", "T_u", "delta_p", "delta_c", "delta",
              "omega_c", "omega_d", "method"]
    row = [p.od, m.eta_d, m.eta_u, m.T_d, m.T_u, *p.params, method]
    result = {"A": _complex_json(T.A), "B": _complex_json(T.B), "C": _complex_json(T.C),
              "D": _complex_json(T.D), "eta_d": m.eta_d, "eta_u": m.eta_u, "T_d": m.T_d,
              "T_u": m.T_u, "diagnostics": T.diagnostics}
    return {"ce.csv": _csv_text(header, [row])}, result, \
        "diamondqfc.propagation.transfer_matrix(OperatingPoint.from_params(band, od, params), method)"


def _problem(cfg, od):
    from .optimize import OptProblem
    bounds = cfg.get("bounds", "capped50")
    bounds = "capped50" if bounds == "capped" else bounds
    point_kwargs = {k: cfg[k] for k in ("gamma_deph", "convention", "alpha_c_rule") if k in cfg}
    if cfg.get("alpha_c_override") is not None:
        point_kwargs["alpha_c"] = cfg["alpha_c_override"]
    if cfg.get("alpha_s_override") is not None:
        point_kwargs["alpha_s"] = cfg["alpha_s_override"]
    return OptProblem(cfg["band"], od, bounds, seeds=tuple(tuple(s) for s in cfg.get("seeds", [])),
                      budget=cfg.get("budget", 20000), restarts=cfg.get("restarts", 8),
                      sampler_seed=cfg.get("seed", 0),
                      final_method=cfg.get("method", "exact-sliced"), tol=cfg.get("tol", 1e-8),
                      absorbing=cfg.get("absorbing", True), point_kwargs=point_kwargs,
                      workers=cfg.get("workers", os.cpu_count() or 1))


def _opt_summary(r):
    return {"od": r.point.od, "eta_d": r.eta_d, "eta_u": r.eta_u, "T_d": r.T_d,
            "params": list(r.params), "mirror_eta_d": r.mirror_eta_d, "evals": r.evals,
            "flags": list(r.flags), "parent": None if r.parent is None else list(r.parent),
            "settings": r.settings, "restarts": len(r.restarts)}


def cmd_optimize(cfg):
    from .optimize import maximize_ce, write_results_csv
    r = maximize_ce(_problem(cfg, cfg["od"]))
    return {"optimize.csv": write_results_csv([r])}, _opt_summary(r), \
        "diamondqfc.optimize.maximize_ce(OptProblem(...)) then transfer_matrix at each row"


def cmd_sweep(cfg):
    from dataclasses import replace

    from .optimize import sweep_od, write_results_csv
    grid = parse_range(cfg["od"])
    template = _problem(cfg, grid[0])
    results = sweep_od(template, grid)
    files = {"sweep.csv": write_results_csv(results)}
    payload = {"absorbing": [_opt_summary(r) for r in results]}
    if cfg.get("nonabsorbing_overlay", False):
        na = sweep_od(replace(template, absorbing=False), grid)
        files["sweep_nonabsorbing.csv"] = write_results_csv(na)
        payload["nonabsorbing"] = [_opt_summary(r) for r in na]
    return files, payload, "diamondqfc.optimize.sweep_od(OptProblem(...), od_grid)"


def cmd_coupling(cfg):
    from .propagation import coupling_profile
    p = _point(cfg, cfg["od"], cfg["params"])
    prof = coupling_profile(p, cfg.get("grid_size", 65))
    rows = [(z, oc.real, oc.imag, u) for z, oc, u in zip(prof.zeta, prof.omega_c, prof.intensity)]
    result = {"A0": prof.A0, "B0": prof.B0, "C0": _complex_json(prof.C0), "D0": prof.D0,
              "alpha_c": p.scales.alpha_c}
    return {"coupling.csv": _csv_text(["zeta", "omega_c_re", "omega_c_im", "intensity"], rows)}, \
        result, "diamondqfc.propagation.coupling_profile(point, grid_size)"


def cmd_variances(cfg):
    from .states import (Coherent, Fock, SqueezedCoherent, output_variances, squeeze_parameter,
                         squeezing_db)
    kind = cfg["input"]
    if kind == "fock":
        spec = Fock(cfg.get("n", 1))
    elif kind == "coherent":
        spec = Coherent(_coeff(cfg.get("beta")))
    else:
        r = cfg["r"] if "r" in cfg else squeeze_parameter(cfg.get("db", 6.0))
        spec = SqueezedCoherent(_coeff(cfg.get("beta"), 0.0), r, cfg.get("phi", 0.0))
    etas = parse_range(cfg.get("eta", "0:1:0.05"))
    phase = cfg.get("phase", 0.0)
    rows = []
    for eta in etas:
        q = output_variances(spec, np.sqrt(eta) * np.exp(1j * phase), cfg.get("corrected", True))
        rows.append((eta, q.var_x, q.var_y, squeezing_db(q.var_x), squeezing_db(q.var_y)))
    header = ["eta", "var_x", "var_y", "noise_x_db", "noise_y_db"]
    return {"variances.csv": _csv_text(header, rows)}, {"input": repr(spec), "points": len(rows)}, \
        "diamondqfc.states.output_variances(spec, sqrt(eta) * exp(i phase), corrected)"


def cmd_convert(cfg):
    from .states import (coherent_nmax, coherent_state, convert_coherent, convert_fock,
                         convert_state, fidelity, fidelity_curves, fock_state, state_from_json,
                         state_to_json)
    files, result = {}, {}
    kind = cfg.get("input")
    if kind is not None:
        if "coeff" in cfg:
            c = _coeff(cfg["coeff"])
        else:
            c = complex(np.sqrt(cfg.get("eta", 1.0)))
        corrected = cfg.get("corrected", True)
        if kind == "fock":
            n = cfg.get("n", 1)
            n_max = cfg.get("n_max", n)
            out = convert_fock(n, abs(c) ** 2, n_max)
            ref = fock_state(n, n_max)
        elif kind == "coherent":
            beta = _coeff(cfg.get("beta"))
            n_max = cfg.get("n_max", coherent_nmax(beta))
            out = convert_coherent(beta, c, corrected, n_max)
            ref = coherent_state(beta, n_max)
        else:
            if "state" not in cfg:
                raise ConfigError("config.state: required when input is 'state'")
            rho = state_from_json(cfg["state"])
            out = convert_state(rho, c, corrected)
            w, v = np.linalg.eigh(rho)
            ref = v[:, -1]
        result = {"fidelity": fidelity(out, ref), "diagonal": [float(x) for x in np.diag(out).real],
                  "trace": float(np.trace(out).real)}
        files["state.json"] = json.dumps(state_to_json(out), indent=1) + "\n"
    if "curves" in cfg:
        rows = fidelity_curves(parse_range(cfg["curves"]))
        files["fidelity_curves.csv"] = _csv_text(["eta", "F_fock1", "F_coh1", "F_coh10"], rows)
    if not files:
        raise ConfigError("config: give 'input' and/or 'curves'")
    return files, result, "diamondqfc.states.convert_* and fidelity; fidelity_curves(etas)"


def cmd_qubit(cfg):
    from .qubits import path_channel, polarization_channel, single_rail_channel
    from .states import state_from_json, state_to_json
    rho = state_from_json(cfg["state"])
    if rho.shape != (2, 2):
        raise ConfigError("config.state.dim: qubit input must have dim 2")
    corrected = cfg.get("corrected", True)
    enc = cfg["encoding"]
    if enc == "single-rail":
        res = single_rail_channel(rho, _coeff(cfg.get("coeff")), corrected)
    else:
        fn = path_channel if enc == "path" else polarization_channel
        res = fn(rho, _coeff(cfg.get("coeff_d")), _coeff(cfg.get("coeff_u")), corrected)
    result = {"encoding": enc, "leakage": res.leakage, "output": state_to_json(res.rho),
              "logical": state_to_json(res.logical)}
    return {"qubit.json": json.dumps(result, indent=1) + "\n"}, result, \
        f"diamondqfc.qubits.{enc.replace('-', '_')}_channel(rho, coeffs, corrected)"


def cmd_epr(cfg):
    from .qubits import chsh_value, epr_postselect, epr_surface
    files, result = {}, {}
    if "grid" in cfg or "etas" not in cfg:
        rows = epr_surface(parse_range(cfg.get("grid", "0:1:0.05")))
        files["epr_surface.csv"] = _csv_text(["eta_bar_a", "eta_bar_b", "F", "S"], rows)
    if "etas" in cfg:
        r = epr_postselect(*cfg["etas"])
        result = {"P_c": r.P_c, "F": r.F, "S": r.S, "S_explicit": chsh_value(r.rho_post),
                  "branch": r.branch, "eta_bar_a": r.eta_bar_a, "eta_bar_b": r.eta_bar_b,
                  "rho_post": [[_complex_json(z) for z in row] for row in r.rho_post]}
        files["epr.json"] = json.dumps(result, indent=1) + "\n"
    return files, result, "diamondqfc.qubits.epr_surface(grid) / epr_postselect(etas)"


COMMANDS = {"ce": cmd_ce, "optimize": cmd_optimize, "sweep": cmd_sweep, "coupling": cmd_coupling,
            "variances": cmd_variances, "convert": cmd_convert, "qubit": cmd_qubit, "epr": cmd_epr}


# -- argument parsing --------------------------------------------------------------------


def _json_arg(s):
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        return s


def build_parser():
    parser = argparse.ArgumentParser(prog="diamondqfc", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--version", action="version", version=f"diamondqfc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file; flags override its keys")
        for key, prop in schema["properties"].items():
            if key == "command":
                continue
            flag = "--" + key.replace("_", "-")
            if prop.get("type") == "boolean":
                sp.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None)
            elif prop.get("type") == "integer":
                sp.add_argument(flag, dest=key, type=int, default=None)
            elif prop.get("type") == "number" or prop.get("type") == ["number", "null"]:
                sp.add_argument(flag, dest=key, type=float, default=None)
            elif prop.get("type") == "string" or "enum" in prop:
                sp.add_argument(flag, dest=key, default=None)
            else:
                # arrays, objects and range strings: JSON text or a plain string
                sp.add_argument(flag, dest=key, type=_json_arg, default=None)
    return parser


def load_config(args):
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config: top level must be an object")
        if cfg.get("command", args.command) != args.command:
            raise ConfigError(f"config.command: {cfg['command']!r} does not match {args.command!r}")
    for k, v in vars(args).items():
        if k in ("config", "command") or v is None:
            continue
        cfg[k] = v
    cfg["command"] = args.command
    return cfg


def validate(cfg):
    schema = SCHEMAS[cfg["command"]]
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(cfg),
                    key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = ".".join(str(p) for p in e.absolute_path)
        if e.validator == "additionalProperties":
            extra = sorted(set(e.instance) - set(schema["properties"]))
            path = extra[0] if extra else path
        raise ConfigError(f"config{'.' + path if path else ''}: {e.message}")


def run(cfg, out_dir=None):
    """Validate ``cfg``, execute it and write outputs; returns the RunRecord dict."""
    validate(cfg)
    out_dir = out_dir or cfg.get("output") or os.environ.get(OUTPUT_ENV) or "."
    t0 = time.time()
    files, result, call = COMMANDS[cfg["command"]](cfg)
    record = {"config": cfg, "version": __version__, "scheme_table_version": SCHEME_TABLE_VERSION,
              "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(t0)),
              "wall_clock_s": time.time() - t0, "library_call": call,
              "outputs": sorted(files), "result": result}
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            fh.write(text)
    with open(os.path.join(out_dir, f"{cfg['command']}.run.json"), "w") as fh:
        json.dump(record, fh, indent=1, default=str)
        fh.write("\n")
    return record


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        record = run(cfg)
    except (ConfigError, jsonschema.ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except QFCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for name in record["outputs"]:
        print(name)
    if record["result"]:
        print(json.dumps(record["result"], indent=1, default=str)[:2000])
    return 0


if __name__ == "__main__":
    sys.exit(main())
