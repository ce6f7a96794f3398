"""Command line runner: ``python -m lctransport <subcommand> ...``.

Exit codes: 0 success, 1 check failure or numerical error, 2 usage/config error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import catalog
from .bounds import PogorelovParams, build_psi_bar, caffarelli_bound, theorem_1_1_constant
from .errors import ConfigError, TransportError
from .measures import make_measure
from .radial import build_radial, gradient_eigenvalues
from .transport1d import GridSpec, build_transport
from .verify import (SUITES, check_theorem_1_2, check_theorem_1_3, lipschitz_estimate,
                     run_suite, theorem_1_1_params)

INT_KEYS = {"n", "grid_size"}
FLOAT_KEYS = {"lambda", "Lambda", "R", "lambda_q", "tolerance", "span"}
TEXT_KEYS = {"potential", "perturbation", "target_potential"}


@dataclass(frozen=True)
class ExperimentConfig:
    potential: str = "gaussian(1)"
    perturbation: str = "none"
    target_potential: Optional[str] = None
    n: int = 3
    grid_size: int = 4097
    span: Optional[float] = None
    tolerance: float = 1e-12
    R: Optional[float] = None
    lam: Optional[float] = None
    Lam: Optional[float] = None
    lambda_q: Optional[float] = None

    def grid(self) -> GridSpec:
        return GridSpec(self.grid_size, self.span)

    def V(self):
        return catalog.potential_from_spec(self.potential)

    def q(self):
        return catalog.perturbation_from_spec(self.perturbation)


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    vals = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in INT_KEYS:
            try:
                vals[key] = int(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} must be an integer") from None
        elif key in FLOAT_KEYS:
            try:
                vals[key] = float(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: {key} must be a number") from None
        elif key in TEXT_KEYS:
            vals[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    rename = {"lambda": "lam", "Lambda": "Lam"}
    cfg = ExperimentConfig(**{rename.get(k, k): v for k, v in vals.items()})
    if cfg.n < 1:
        raise ConfigError("n must be >= 1")
    if cfg.grid_size < 3:
        raise ConfigError("grid_size must be >= 3")
    if cfg.span is not None and not cfg.span > 0:
        raise ConfigError("span must be positive")
    # fail early on unknown catalog names
    cfg.V()
    cfg.q()
    if cfg.target_potential:
        catalog.potential_from_spec(cfg.target_potential)
    return cfg


def load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None


# -- output helpers ---------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Optional[str], header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _dump_json(obj, path: Optional[str] = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# -- subcommands ---------------------------------------------------------------------

def cmd_transport1d(args) -> int:
    cfg = load_config(args.config)
    V = cfg.V()
    source = make_measure(V)
    if cfg.target_potential:
        target = make_measure(catalog.potential_from_spec(cfg.target_potential), cfg.q())
    else:
        target = make_measure(V, cfg.q())
    tmap = build_transport(source, target, cfg.grid())
    phi_s = source.cdf(tmap.grid)
    phi_t = target.cdf(tmap.values)
    res = tmap.residual
    rows = zip(tmap.grid, tmap.values, tmap.log_deriv, phi_s, phi_t, res)
    _write_csv(args.out, ["x", "T", "logTprime", "phi_source", "phi_target_at_T",
                          "residual_mass_balance"], rows)
    return 0 if float(np.max(res)) <= cfg.tolerance else 1


def cmd_radial(args) -> int:
    cfg = load_config(args.config)
    n = args.n if args.n is not None else cfg.n
    rt = build_radial(cfg.V(), cfg.q(), n, cfg.grid())
    r = rt.profile.grid
    rad, tan = gradient_eigenvalues(rt, r)
    lo, hi = rt.eigen_interval
    rows = zip(r, rt.profile.values, rad, tan, [lo] * r.size, [hi] * r.size)
    _write_csv(args.out, ["r", "Tprofile", "radial_eig", "tangential_eig", "lower_bound",
                          "upper_bound"], rows)
    worst = float(max(np.max(np.abs(np.log(rad))), np.max(np.abs(np.log(tan)))))
    return 0 if worst <= rt.oscillation + 1e-8 else 1


def _params_from(args) -> PogorelovParams:
    cfg = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig()
    vals = {"R": args.R if args.R is not None else cfg.R,
            "lam": args.lam if args.lam is not None else cfg.lam,
            "Lam": args.Lam if args.Lam is not None else cfg.Lam,
            "lambda_q": args.lambda_q if args.lambda_q is not None else cfg.lambda_q}
    missing = [k for k, v in vals.items() if v is None]
    if missing:
        raise ConfigError(f"missing parameters: {', '.join(missing)}")
    try:
        return PogorelovParams(**vals)
    except TransportError as exc:
        raise ConfigError(str(exc)) from None


def cmd_bounds(args) -> int:
    params = _params_from(args)
    report = theorem_1_1_constant(params, strict=args.strict)
    d = report.to_dict()
    if args.json:
        _dump_json(d, args.out)
    else:
        for key, val in d.items():
            if key != "details":
                print(f"{key}: {val}")
        for line in report.details:
            print(f"  {line}")
    return 0


def cmd_psi(args) -> int:
    params = _params_from(args)
    psi = build_psi_bar(params)
    t = np.linspace(0.0, 1.25 * psi.P, args.num)
    _write_csv(args.out, ["t", "theta", "psi_prime", "psi"],
               zip(t, psi.theta(t), psi.psi_prime(t), psi.psi(t)))
    return 0


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    outcomes, skipped = run_suite(args.suite, cfg.V(), cfg.q(), cfg.n, cfg.grid())
    for name, why in skipped:
        print(f"skipped {name}: {why}", file=sys.stderr)
    data = [o.to_dict() for o in outcomes]
    if args.json or args.out:
        _dump_json(data, args.out)
    else:
        for o in outcomes:
            status = "PASS" if o.passed else "FAIL"
            print(f"{status} {o.claim}: measured={o.measured!r} bound={o.bound!r} margin={o.margin!r}")
    return 0 if all(o.passed for o in outcomes) else 1


SWEEP_AXES = ("n", "height", "lambda_q", "sigma")


def _with_height(spec: str, h: float) -> str:
    name, pos, kw = catalog.parse_spec(spec)
    if name in ("none", "zero"):
        raise ConfigError("height sweep needs a perturbation")
    if "height" in kw:
        kw["height"] = h
    elif pos:
        pos[0] = h
    else:
        pos = [h]
    parts = [repr(float(v)) for v in pos] + [f"{k}={float(v)!r}" for k, v in kw.items()]
    return f"{name}({', '.join(parts)})"


def sweep(cfg: ExperimentConfig, axis: str, values) -> list:
    """One row ``(value, quantity, measured, bound, margin, passed)`` per value, in input order."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"axis must be one of {SWEEP_AXES}")

    def one(v):
        if axis == "n":
            if float(v) != int(v):
                raise ConfigError("n must be an integer")
            o = check_theorem_1_3(cfg.V(), cfg.q(), int(v), grid_spec=cfg.grid())
            return (v, o.claim, o.measured, o.bound, o.margin, o.passed)
        if axis == "height":
            q = catalog.perturbation_from_spec(_with_height(cfg.perturbation, v))
            o = check_theorem_1_2(cfg.V(), q, cfg.grid())
            return (v, o.claim, o.measured, o.bound, o.margin, o.passed)
        if axis == "lambda_q":
            V, q = cfg.V(), cfg.q()
            base = theorem_1_1_params(V, q)
            rep = theorem_1_1_constant(replace(base, lambda_q=float(v)), strict=False)
            tmap = build_transport(make_measure(V), make_measure(V, q), cfg.grid())
            m = math.log(lipschitz_estimate(tmap))
            return (v, "thm11:log lipschitz", m, rep.log_final_C, rep.log_final_C - m,
                    m <= rep.log_final_C + 1e-8)
        # sigma: standard Gaussian onto variance sigma^2
        sig = float(v)
        tmap = build_transport(make_measure(catalog.gaussian(1.0)),
                               make_measure(catalog.gaussian(sig)), cfg.grid())
        m = lipschitz_estimate(tmap)
        b = caffarelli_bound(1.0, 1.0 / sig**2)
        return (v, "caffarelli:lipschitz", m, b, b - m, m <= b + 1e-8)

    with ThreadPoolExecutor() as pool:
        return list(pool.map(one, list(values)))


def _parse_values(text: str):
    text = text.strip()
    if not text:
        return []
    try:
        return [float(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"bad value list {text!r}") from None


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    rows = sweep(cfg, args.axis, _parse_values(args.values))
    _write_csv(args.out, ["value", "quantity", "measured", "bound", "margin", "passed"], rows)
    return 0 if all(r[-1] for r in rows) else 1


def _add_param_flags(p):
    p.add_argument("--config")
    p.add_argument("--R", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--Lambda", dest="Lam", type=float)
    p.add_argument("--lambda-q", dest="lambda_q", type=float)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lctransport",
                                 description="Transport maps between perturbed log-concave measures")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transport1d", help="1-D quantile map to CSV")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_transport1d)

    p = sub.add_parser("radial", help="radial profile and gradient eigenvalues to CSV")
    p.add_argument("--config")
    p.add_argument("--n", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_radial)

    p = sub.add_parser("bounds", help="constant chain report")
    _add_param_flags(p)
    p.add_argument("--json", action="store_true")
    p.add_argument("--strict", action="store_true", help="fail when a constant overflows")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("psi", help="sample theta, psi', psi to CSV")
    _add_param_flags(p)
    p.add_argument("--num", type=int, default=1001)
    p.add_argument("--out")
    p.set_defaults(func=cmd_psi)

    p = sub.add_parser("verify", help="run theorem checks")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--config")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="parameter sweep to CSV")
    p.add_argument("--config")
    p.add_argument("--axis", required=True, choices=SWEEP_AXES)
    p.add_argument("--values", default="", help="comma or space separated numbers")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except TransportError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
