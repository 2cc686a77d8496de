"""Command-line entry point: ``plaplace <command> [flags]``.

Values come from three layers, later ones winning: built-in defaults, a JSON
file given by ``--config`` (same field names as RunConfig), and flags.
Invalid input exits with status 2 and a JSON error on stderr; numerical
failures exit with status 1.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import re
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from . import classify as C
from .classify import classify_trajectory
from .energy import flux_moments, energy_E, lyapunov_W, pps_V, positivity_multipliers
from .errors import (BracketError, NotFoundError, ParameterError, PlaplaceError,
                     UndefinedRegimeError)
from .exponents import (Params, a_underline, alpha0_of, classify_regime, compare,
                        compute_exponents, eta_bar_constant, is_p_two, k_ell,
                        lambda_constant, varrho_constant)
from .output import error_json, render_csv, render_json
from .phase_plane import delta_of, in_S
from .profile_ode import IntegratorControls, Termination, default_controls, solve
from .selfsim import SelfSimilarSolution, reconstruct_u
from .shooting import (bisect_fast_decay, find_min_zero_threshold, shooting_controls,
                       sweep_initial_values)

COMMANDS = ("constants", "integrate", "phase", "diagnose", "classify", "sweep",
            "find-fast", "find-zeros", "reconstruct")
CONTROL_FIELDS = tuple(f.name for f in dataclasses.fields(IntegratorControls))
JSON_ONLY = {"constants", "classify", "find-fast", "find-zeros"}


class UsageError(Exception):
    def __init__(self, field: Optional[str], message: str):
        super().__init__(message)
        self.field = field


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        m = re.search(r"argument (?:--)?([\w-]+)", message)
        raise UsageError(m.group(1).replace("-", "_") if m else None, message)


@dataclass
class RunConfig:
    command: str
    params: Params
    controls: IntegratorControls
    options: Dict[str, Any] = field(default_factory=dict)
    output: Optional[str] = None
    format: str = "json"
    strict: bool = False

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "params": self.params.to_dict(),
            "controls": dataclasses.asdict(self.controls),
            "options": dict(self.options),
            "format": self.format,
            "strict": self.strict,
        }


def _number(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"numeric value required, got {text!r}")
    return v


def _integer(text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"integer value required, got {text!r}")


def _number_list(text: str) -> List[float]:
    return [_number(t) for t in text.split(",") if t.strip()]


def _build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--config", default=S, help="JSON file with RunConfig fields")
    for name in ("N", "p", "q", "alpha"):
        common.add_argument(f"--{name}", type=_number, default=S)
    common.add_argument("--r0", type=_number, default=S)
    common.add_argument("--rel-tol", type=_number, default=S)
    common.add_argument("--abs-tol", type=_number, default=S)
    common.add_argument("--r-max", type=_number, default=S)
    common.add_argument("--max-steps", type=_integer, default=S)
    common.add_argument("--event-tol", type=_number, default=S)
    common.add_argument("--support-tol", type=_number, default=S)
    common.add_argument("--r-handoff", type=_number, default=S)
    common.add_argument("--output", "-o", default=S)
    common.add_argument("--format", choices=("csv", "json"), default=S)
    common.add_argument("--strict", action="store_true", default=S,
                        help="exit 1 if the decay class is Undetermined")

    top = _Parser(prog="plaplace", description="Radial self-similar profiles of a p-Laplacian heat equation with absorption.")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("constants", parents=[common])
    for name in ("integrate", "classify"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("--a", type=_number, default=S)
    sp = sub.add_parser("phase", parents=[common])
    sp.add_argument("--a", type=_number, default=S)
    sp.add_argument("--d", type=_number, default=S, help="substitution exponent (default delta)")
    sp = sub.add_parser("diagnose", parents=[common])
    sp.add_argument("--a", type=_number, default=S)
    sp.add_argument("--lambda", dest="lam", type=_number, default=S)
    sp.add_argument("--sigma", type=_number, default=S)
    sp.add_argument("--e", type=_number, default=S)
    sp.add_argument("--case", choices=("i", "ii", "iii"), default=S)
    sp = sub.add_parser("sweep", parents=[common])
    sp.add_argument("--a-min", type=_number, default=S)
    sp.add_argument("--a-max", type=_number, default=S)
    sp.add_argument("--steps", type=_integer, default=S)
    sp.add_argument("--a-grid", type=_number_list, default=S)
    sp.add_argument("--threads", type=_integer, default=S)
    sp = sub.add_parser("find-fast", parents=[common])
    sp.add_argument("--a-lo", type=_number, default=S)
    sp.add_argument("--a-hi", type=_number, default=S)
    sp.add_argument("--tol", type=_number, default=S)
    sp = sub.add_parser("find-zeros", parents=[common])
    sp.add_argument("--m", type=_integer, default=S)
    sp.add_argument("--a-max", type=_number, default=S)
    sp.add_argument("--n-scan", type=_integer, default=S)
    sp.add_argument("--tol", type=_number, default=S)
    sp = sub.add_parser("reconstruct", parents=[common])
    sp.add_argument("--a", type=_number, default=S)
    sp.add_argument("--t", type=_number_list, default=S)
    sp.add_argument("--x", type=_number_list, default=S)
    sp.add_argument("--x-min", type=_number, default=S)
    sp.add_argument("--x-max", type=_number, default=S)
    sp.add_argument("--x-steps", type=_integer, default=S)
    return top


DEFAULTS: Dict[str, Dict[str, Any]] = {
    "integrate": {"a": 1.0},
    "classify": {"a": 1.0},
    "phase": {"a": 1.0, "d": None},
    "diagnose": {"a": 1.0, "lam": None, "sigma": None, "e": None, "case": None},
    "sweep": {"a_min": 0.1, "a_max": 10.0, "steps": 100, "a_grid": None, "threads": None},
    "find-fast": {"a_lo": 0.5, "a_hi": 20.0, "tol": 1e-12},
    "find-zeros": {"m": 0, "a_max": 20.0, "n_scan": 40, "tol": 1e-12},
    "reconstruct": {"a": 1.0, "t": [1.0], "x": None, "x_min": 0.0, "x_max": 10.0, "x_steps": 101},
    "constants": {},
}
DEFAULT_FORMAT = {"constants": "json", "classify": "json", "find-fast": "json",
                  "find-zeros": "json", "integrate": "csv", "phase": "csv",
                  "diagnose": "csv", "sweep": "csv", "reconstruct": "csv"}


def _load_file(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError("config", f"cannot read config file {path!r}: {exc}")
    if not isinstance(data, dict):
        raise UsageError("config", "config file must hold a JSON object")
    return data


def parse_config(argv: Optional[List[str]] = None) -> RunConfig:
    ns = vars(_build_parser().parse_args(argv))
    cmd = ns.pop("command")
    file = _load_file(ns.pop("config")) if "config" in ns else {}

    pfile = dict(file.get("params", {}))
    pvals = {k: ns.pop(k, pfile.get(k)) for k in ("N", "p", "q", "alpha")}
    for k in ("N", "p", "q"):
        if pvals[k] is None:
            raise UsageError(k, f"missing required parameter {k}")
    if pvals["alpha"] is None:
        # the self-similar value is the natural default
        try:
            pvals["alpha"] = alpha0_of(float(pvals["p"]), float(pvals["q"]))
        except PlaplaceError as exc:
            raise UsageError("alpha", str(exc))
    params = Params(*(float(pvals[k]) for k in ("N", "p", "q", "alpha")))

    cfile = dict(file.get("controls", {}))
    unknown = set(cfile) - set(CONTROL_FIELDS)
    if unknown:
        raise UsageError(sorted(unknown)[0], f"unknown control field {sorted(unknown)[0]!r}")
    for k in CONTROL_FIELDS:
        if k in ns:
            cfile[k] = ns.pop(k)
    controls = default_controls(params, **cfile)

    opts = dict(DEFAULTS[cmd])
    fopts = dict(file.get("options", {}))
    for k, v in fopts.items():
        if k not in opts:
            raise UsageError(k, f"unknown option {k!r} for {cmd}")
        opts[k] = v
    for k in list(ns):
        if k in opts:
            opts[k] = ns.pop(k)

    fmt = ns.pop("format", file.get("format", DEFAULT_FORMAT[cmd]))
    if cmd in JSON_ONLY and fmt != "json":
        raise UsageError("format", f"{cmd} writes JSON only")
    strict = bool(ns.pop("strict", file.get("strict", False)))
    output = ns.pop("output", file.get("output"))
    cfg = RunConfig(cmd, params, controls, opts, output, fmt, strict)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    o = cfg.options
    for k, v in o.items():
        if isinstance(v, float) and not math.isfinite(v):
            raise UsageError(k, f"{k} must be finite")
    if cfg.command == "sweep":
        if o["a_grid"] is None and not (o["steps"] >= 1 and o["a_min"] <= o["a_max"]):
            raise UsageError("steps", "need steps >= 1 and a_min <= a_max")
        if o["threads"] is not None and o["threads"] < 1:
            raise UsageError("threads", "threads must be positive")
    if cfg.command == "phase" and (cfg.params.p >= 2.0 or is_p_two(cfg.params.p)):
        raise UsageError("p", "the phase command requires p < 2")
    if cfg.command == "reconstruct":
        if compare(cfg.params.alpha, alpha0_of(cfg.params.p, cfg.params.q)) != "=":
            raise UsageError("alpha", "reconstruct requires alpha = alpha0 (omit --alpha)")
        if any(t <= 0 for t in o["t"]):
            raise UsageError("t", "times must be positive")
        if o["x"] is None and not (o["x_steps"] >= 1 and 0 <= o["x_min"] <= o["x_max"]):
            raise UsageError("x_steps", "need x_steps >= 1 and 0 <= x_min <= x_max")
    if cfg.command == "diagnose" and o["case"] is None:
        given = [o[k] is not None for k in ("lam", "sigma", "e")]
        if any(given) and not all(given):
            raise UsageError("lambda", "diagnose needs all of --lambda, --sigma, --e or none")
    if cfg.command == "find-zeros" and o["m"] < 0:
        raise UsageError("m", "m must be nonnegative")


class NumericalFailure(Exception):
    def __init__(self, message: str, text: str = "", **extra):
        super().__init__(message)
        self.text = text
        self.extra = extra


# ------------------------------------------------------------------ commands


def _constants(cfg: RunConfig):
    P = cfg.params
    ex = compute_exponents(P)
    extra = {}
    for name, fn in (("lambda", lambda_constant), ("varrho", varrho_constant),
                     ("eta_bar", eta_bar_constant), ("k_ell", k_ell), ("a_underline", a_underline)):
        try:
            extra[name] = fn(P)
        except (UndefinedRegimeError, PlaplaceError):
            extra[name] = None
    return render_json({"exponents": ex.to_dict(), "constants": extra,
                        "regime": classify_regime(P).to_dict()}, cfg.to_dict()), 0


def _trajectory_rows(tr, params):
    E = np.asarray(energy_E(tr, params))
    return [(r, w, wp, z, e) for r, w, wp, z, e in zip(tr.r, tr.w, tr.wprime, tr.z, E)]


def _integrate(cfg: RunConfig):
    tr = solve(cfg.options["a"], cfg.params, cfg.controls)
    status = 1 if tr.failed else 0
    if cfg.format == "json":
        res = {"a": tr.a, "termination": tr.termination.value, "r_support": tr.r_support,
               "message": tr.message, "n_steps": tr.n_steps, "used_fallback": tr.used_fallback,
               "zeros": [{"r": r, "dir": d} for r, d in tr.zeros],
               "r": tr.r, "w": tr.w, "wprime": tr.wprime, "z": tr.z, "E": energy_E(tr, cfg.params)}
        return render_json(res, cfg.to_dict()), status
    trailer = [f"zero r={r!r} dir={d:+d}" for r, d in tr.zeros]
    trailer.append(f"termination {tr.termination.value}")
    return render_csv(("r", "w", "wprime", "z", "E"), _trajectory_rows(tr, cfg.params),
                      cfg.to_dict(), trailer), status


def _phase_columns(tr, params, d):
    m = tr.r > 0
    r, w, z = tr.r[m], tr.w[m], tr.z[m]
    tau = np.log(r)
    p = params.p
    y = r ** d * w
    Y = -r ** ((d + 1.0) * (p - 1.0)) * z
    delta = delta_of(params)
    if compare(d, delta) == "=":
        W = np.asarray(lyapunov_W(tau, y, Y, params).W)
        S = np.asarray(in_S(y, Y, params))
        return tau, y, Y, W, S
    return tau, y, Y, None, None


def _phase(cfg: RunConfig):
    P = cfg.params
    d = cfg.options["d"] if cfg.options["d"] is not None else delta_of(P)
    tr = solve(cfg.options["a"], P, cfg.controls)
    tau, y, Y, W, S = _phase_columns(tr, P, d)
    status = 1 if tr.failed else 0
    n = len(tau)
    Wc = W if W is not None else [None] * n
    Sc = S if S is not None else [None] * n
    if cfg.format == "json":
        return render_json({"d": d, "tau": tau, "y": y, "Y": Y, "W": W, "in_S": S,
                            "termination": tr.termination.value}, cfg.to_dict()), status
    return render_csv(("tau", "y", "Y", "W", "in_S"), zip(tau, y, Y, Wc, Sc), cfg.to_dict(),
                      [f"termination {tr.termination.value}"]), status


def _diagnose(cfg: RunConfig):
    P = cfg.params
    o = cfg.options
    tr = solve(o["a"], P, cfg.controls)
    m = tr.r > 0
    r, w, z = tr.r[m], tr.w[m], tr.z[m]

    class _St:
        pass

    st = _St()
    st.r, st.w, st.z = r, w, z
    E = np.asarray(energy_E(st, P))
    fm = flux_moments(st, P)
    n = len(r)
    mult = None
    if o["case"] is not None:
        mult = positivity_multipliers(P, o["case"])
    elif o["lam"] is not None:
        mult = (o["lam"], o["sigma"], o["e"])
    V = np.asarray(pps_V(st, P, *mult).V) if mult is not None else [None] * n
    if P.p < 2.0 and not is_p_two(P.p):
        d = delta_of(P)
        tau, y, Y, W, S = _phase_columns(tr, P, d)
        U = np.asarray(lyapunov_W(tau, y, Y, P).U)
    else:
        W = U = S = [None] * n
    status = 1 if tr.failed else 0
    rows = zip(r, E, np.asarray(fm.J_N), np.asarray(fm.J_alpha), V, W, U, S)
    if cfg.format == "json":
        cols = ("r", "E", "J_N", "J_alpha", "V", "W", "U", "in_S")
        data = {c: list(v) for c, v in zip(cols, zip(*rows))} if n else {c: [] for c in cols}
        data["multipliers"] = mult
        return render_json(data, cfg.to_dict()), status
    return render_csv(("r", "E", "J_N", "J_alpha", "V", "W", "U", "in_S"), rows, cfg.to_dict(),
                      [f"multipliers {json.dumps(mult)}", f"termination {tr.termination.value}"]), status


def _strict_status(cfg: RunConfig, cls: str) -> int:
    return 1 if cfg.strict and cls == C.UNDETERMINED else 0


def _classify(cfg: RunConfig):
    tr = solve(cfg.options["a"], cfg.params, cfg.controls)
    rep = classify_trajectory(tr, cfg.params)
    status = 1 if tr.failed else _strict_status(cfg, rep.decay_class)
    return render_json(rep.to_dict(), cfg.to_dict()), status


def _sweep_grid(o) -> List[float]:
    if o["a_grid"] is not None:
        return [float(a) for a in o["a_grid"]]
    if o["steps"] == 1:
        return [float(o["a_min"])]
    return [float(a) for a in np.linspace(o["a_min"], o["a_max"], o["steps"])]


def _sweep(cfg: RunConfig):
    rows = sweep_initial_values(cfg.params, _sweep_grid(cfg.options), cfg.controls,
                                threads=cfg.options["threads"])
    # thread counts never change the numbers; keep them out of the embedded config
    conf = cfg.to_dict()
    conf["options"] = {k: v for k, v in conf["options"].items() if k != "threads"}
    status = 0
    if any(r.decay_class == "Failed" for r in rows):
        status = 1
    elif cfg.strict and any(r.decay_class == C.UNDETERMINED for r in rows):
        status = 1
    if cfg.format == "json":
        return render_json([dataclasses.asdict(r) for r in rows], conf), status
    trailer = [f"row a={r.a!r} error={r.error}" for r in rows if r.error]
    return render_csv(("a", "L", "L_err", "n_zeros", "class"),
                      ((r.a, r.L, r.L_err, r.n_zeros, r.decay_class) for r in rows), conf, trailer), status


def _overrides(cfg: RunConfig) -> dict:
    base = default_controls(cfg.params)
    return {k: getattr(cfg.controls, k) for k in CONTROL_FIELDS
            if getattr(cfg.controls, k) != getattr(base, k)}


def _find_fast(cfg: RunConfig):
    o = cfg.options
    ov = _overrides(cfg)
    try:
        res = bisect_fast_decay(cfg.params, o["a_lo"], o["a_hi"], o["tol"],
                                controls=shooting_controls(cfg.params, **ov), report_controls=cfg.controls)
    except BracketError as exc:
        raise NumericalFailure(str(exc), kind="bracket")
    return render_json(res.to_dict(), cfg.to_dict()), _strict_status(cfg, res.report.decay_class)


def _find_zeros(cfg: RunConfig):
    o = cfg.options
    ov = _overrides(cfg)
    try:
        res = find_min_zero_threshold(cfg.params, o["m"], o["a_max"],
                                      controls=shooting_controls(cfg.params, **ov),
                                      n_scan=o["n_scan"], tol=o["tol"], report_controls=cfg.controls)
    except NotFoundError as exc:
        raise NumericalFailure(str(exc), kind="not_found", max_count=exc.max_count)
    return render_json(res.to_dict(), cfg.to_dict()), _strict_status(cfg, res.report.decay_class)


def _reconstruct(cfg: RunConfig):
    o = cfg.options
    tr = solve(o["a"], cfg.params, cfg.controls)
    sol = SelfSimilarSolution.from_profile(tr)
    if o["x"] is not None:
        xs = [float(x) for x in o["x"]]
    elif o["x_steps"] == 1:
        xs = [float(o["x_min"])]
    else:
        xs = [float(x) for x in np.linspace(o["x_min"], o["x_max"], o["x_steps"])]
    rows = []
    for t in o["t"]:
        u = np.atleast_1d(reconstruct_u(sol, t, np.asarray(xs)))
        rows += [(t, x, v) for x, v in zip(xs, u)]
    status = 1 if tr.failed else _strict_status(cfg, sol.report.decay_class)
    if cfg.format == "json":
        return render_json({"class": sol.report.decay_class, "t": [r[0] for r in rows],
                            "x": [r[1] for r in rows], "u": [r[2] for r in rows]}, cfg.to_dict()), status
    return render_csv(("t", "x", "u"), rows, cfg.to_dict(), [f"class {sol.report.decay_class}"]), status


HANDLERS = {
    "constants": _constants, "integrate": _integrate, "phase": _phase, "diagnose": _diagnose,
    "classify": _classify, "sweep": _sweep, "find-fast": _find_fast, "find-zeros": _find_zeros,
    "reconstruct": _reconstruct,
}


def execute(cfg: RunConfig) -> int:
    try:
        text, status = HANDLERS[cfg.command](cfg)
    except NumericalFailure as exc:
        sys.stderr.write(error_json(exc.extra.pop("kind", "numerical"), str(exc), **exc.extra) + "\n")
        return 1
    except PlaplaceError as exc:
        sys.stderr.write(error_json("numerical", f"{type(exc).__name__}: {exc}") + "\n")
        return 1
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader closed early (e.g. piped into head); not an error
            sys.stdout = None
    return status


def main(argv: Optional[List[str]] = None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        sys.stderr.write(error_json("invalid_config", str(exc), field=exc.field) + "\n")
        return 2
    except ParameterError as exc:
        sys.stderr.write(error_json("invalid_config", str(exc), field=exc.field) + "\n")
        return 2
    except PlaplaceError as exc:  # e.g. alpha0 undefined for the given p, q
        sys.stderr.write(error_json("invalid_config", str(exc), field=None) + "\n")
        return 2
    return execute(cfg)


if __name__ == "__main__":
    sys.exit(main())
