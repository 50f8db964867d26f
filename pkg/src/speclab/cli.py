"""
Command-line front end.

    speclab spectrum --domain box:1,2 --bc D --lambda-max 1e3 --out spec.csv
    speclab riesz --domain interval:3.14159265 --bc D --gamma 1 --lambda 10
    speclab verify --suite polya --family boxes2 --lambda-max 1e4
    speclab collapse --domain interval:1 --scale 2 --bc N --out collapse.csv
    speclab shapeopt --family rect2 --lambda 1e2,1e4 --out opt.json
    speclab report a.json b.json

Every option may also be given in a manifest file of `key = value` lines
(--manifest); flags on the command line win.  Exit status is 0 on success,
1 if any checked inequality is violated and 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import experiments as ex
from . import verify as vf
from .riesz import riesz_report, write_riesz_csv
from .spectra import (BudgetExceeded, Box, Interval, domain_tag, eigenvalues_below, first_eigenvalue,
                      parse_bc, parse_domain, write_spectrum_csv)

SCHEMA_VERSION = 1

SUITES = ["polya", "semiclassical", "hersch_protter", "laptev", "extrapolation", "prop31",
          "cylinder_lift", "bracketing", "theorem14", "liyau", "small_energy", "deficit", "two_term"]

# keys that never change the numbers and so stay out of the manifest hash
_RUNTIME_KEYS = {"threads", "out", "manifest"}


class UsageError(Exception):
    pass


class ManifestError(Exception):
    pass


# ---------------------------------------------------------------- manifests

def read_manifest(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path!r}: {exc.strerror}") from exc
    for i, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ManifestError(f"malformed manifest line {i}: expected 'key = value'")
        k, v = (x.strip() for x in line.split("=", 1))
        if not k or not v:
            raise ManifestError(f"malformed manifest line {i}: empty key or value")
        out[k.replace("-", "_")] = v
    return out


def manifest_hash(cfg: dict) -> str:
    items = sorted((k, str(v)) for k, v in cfg.items() if k not in _RUNTIME_KEYS and v is not None)
    text = "\n".join(f"{k} = {v}" for k, v in items)
    return hashlib.sha256(text.encode()).hexdigest()


class Config:
    """Flags over manifest over defaults, with typed accessors."""

    def __init__(self, args: argparse.Namespace):
        flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "func")}
        base = read_manifest(args.manifest) if getattr(args, "manifest", None) else {}
        self.values = {**base, **flags}
        self.command = args.command

    def raw(self, key, default=None):
        return self.values.get(key, default)

    def str(self, key, default=None):
        v = self.raw(key, default)
        return None if v is None else str(v)

    def float(self, key, default=None):
        v = self.raw(key, default)
        if v is None:
            return None
        try:
            return float(v)
        except (TypeError, ValueError):
            raise UsageError(f"{key} must be a number, got {v!r}") from None

    def int(self, key, default=None):
        v = self.raw(key, default)
        if v is None:
            return None
        try:
            f = float(v)
        except (TypeError, ValueError):
            raise UsageError(f"{key} must be an integer, got {v!r}") from None
        if f != int(f):
            raise UsageError(f"{key} must be an integer, got {v!r}")
        return int(f)

    def floats(self, key, default=None):
        v = self.raw(key, default)
        if v is None:
            return None
        if isinstance(v, (list, tuple)):
            return [float(x) for x in v]
        try:
            vals = [float(x) for x in str(v).split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"{key} must be a comma-separated list of numbers") from None
        if not vals:
            raise UsageError(f"{key} is empty")
        return vals

    def seed(self) -> int:
        s = self.int("seed", 0)
        if not 0 <= s < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        return s

    def threads(self) -> int:
        t = self.int("threads", 1)
        if t < 1:
            raise UsageError("threads must be >= 1")
        return t

    def domain(self, default=None):
        text = self.str("domain", default)
        if text is None:
            raise UsageError("a --domain is required")
        return parse_domain(text)

    def bc(self, default="D"):
        return parse_bc(self.str("bc", default))

    def resolved(self) -> dict:
        return {k: (",".join(map(str, v)) if isinstance(v, (list, tuple)) else v)
                for k, v in sorted(self.values.items())}


# ---------------------------------------------------------------- output

def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def envelope(cfg: Config, body: dict) -> dict:
    resolved = {k: v for k, v in cfg.resolved().items() if k not in _RUNTIME_KEYS}
    return {"schema_version": SCHEMA_VERSION, "command": cfg.command, "config": resolved,
            "manifest_hash": manifest_hash(cfg.values), **body,
            "timestamp": datetime.now(timezone.utc).isoformat()}


def dumps(obj) -> str:
    return json.dumps(vf._clean(obj), sort_keys=True, indent=2, default=_json_default) + "\n"


def emit(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path!r}: {exc.strerror}") from None


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def lambda_list(cfg: Config, key="lambda", dom=None) -> list:
    """Explicit list, or a geometric grid from lambda_min/lambda_max/points_per_decade."""
    vals = cfg.floats(key)
    if vals is not None:
        return vals
    hi = cfg.float("lambda_max")
    if hi is None:
        raise UsageError(f"give --{key.replace('_', '-')} or --lambda-max")
    lo = cfg.float("lambda_min")
    if lo is None:
        lo = 0.5 * first_eigenvalue(dom, "D") if dom is not None else hi
    if not 0 < lo <= hi:
        raise UsageError("need 0 < lambda_min <= lambda_max")
    ppd = cfg.float("points_per_decade", 10)
    n = max(1, int(math.ceil(ppd * math.log10(hi / lo))) + 1) if hi > lo else 1
    return vf.geometric_grid(lo, hi, n).tolist()


# ---------------------------------------------------------------- commands

def cmd_spectrum(cfg: Config) -> int:
    dom, bc = cfg.domain(), cfg.bc()
    cutoff = cfg.float("lambda_max")
    if cutoff is None:
        raise UsageError("spectrum needs --lambda-max")
    ev = eigenvalues_below(dom, bc, cutoff)
    emit(write_spectrum_csv(ev), cfg.str("out"))
    return 0


def cmd_riesz(cfg: Config) -> int:
    dom, bc = cfg.domain(), cfg.bc()
    gamma = cfg.float("gamma", 1.0)
    lams = lambda_list(cfg, "lambda", dom)
    ev = eigenvalues_below(dom, bc, max(lams))
    reps = [riesz_report(dom, bc, gamma, lam, ev) for lam in lams]
    if cfg.str("out"):
        emit(write_riesz_csv(reps), cfg.str("out"))
    else:
        for r in reps:
            sys.stdout.write(f"{r.trace!r} {r.polya_ratio!r}\n")
    return 0


def _grids(cfg: Config, doms) -> list | None:
    if cfg.raw("points_per_decade") is None and cfg.raw("lambda_min") is None:
        return None
    out = []
    for dom in doms:
        lo = cfg.float("lambda_min") or 0.5 * first_eigenvalue(dom, "D")
        hi = cfg.float("lambda_max") or vf.lambda_max_for(dom)
        n = max(2, int(math.ceil(cfg.float("points_per_decade", 10) * math.log10(hi / lo))) + 1)
        out.append(vf.geometric_grid(lo, hi, n))
    return out


def _merge(reports: list) -> vf.SuiteReport:
    rep = reports[0]
    for r in reports[1:]:
        rep.merge(r)
        for k, v in r.empirical_constants.items():
            old = rep.empirical_constants.get(k)
            if old is None:
                rep.empirical_constants[k] = v
            elif k.startswith("sup"):
                rep.empirical_constants[k] = max(old, v)
            elif k.startswith("inf"):
                rep.empirical_constants[k] = min(old, v)
    hashes = [r.details.get("grid_hash", "") for r in reports]
    if any(hashes):
        rep.details["grid_hash"] = vf.grid_hash(*hashes)
    return rep


def _per_domain(fn, doms, threads, inject):
    """Run an exact per-domain suite member by member; the merge is in input order."""
    items = list(enumerate(doms))
    return _merge(ex.pmap(lambda it: fn([it[1]], it[0], inject and it[0] == 0), items, threads))


def run_suite(name: str, cfg: Config, inject: bool = False) -> vf.SuiteReport:
    seed = cfg.seed()
    threads = cfg.threads()
    points = cfg.int("points", vf.POINTS)
    lam_max = cfg.float("lambda_max")
    gamma = cfg.float("gamma", 1.0)
    bc_text = cfg.str("bc", "D")
    if name not in ("bracketing",) and bc_text not in ("D", "N"):
        raise UsageError("bc must be D or N for this suite")
    n = cfg.int("n", 20)

    def fam(default):
        # an explicit --domain replaces the family
        if cfg.raw("domain") is not None:
            return [cfg.domain()]
        return vf.family(cfg.str("family", default), n, seed)

    if name == "polya":
        doms = fam("boxes2")
        grids = _grids(cfg, doms)
        return _per_domain(lambda d, i, inj: vf.verify_polya(d, None if grids is None else [grids[i]], points,
                                                             lam_max, inj), doms, threads, inject)
    if name == "semiclassical":
        doms = fam("boxes2")
        grids = _grids(cfg, doms)
        rep = _per_domain(lambda d, i, inj: vf.verify_semiclassical(d, bc_text, gamma,
                                                                   None if grids is None else [grids[i]],
                                                                   points, lam_max, inj),
                          doms, threads, inject)
        return rep
    if name == "hersch_protter":
        return _per_domain(lambda d, i, inj: vf.verify_hersch_protter(d, inj), fam("boxes2"), threads, inject)
    if name == "laptev":
        return vf.verify_laptev_pointwise(cfg.int("samples", 100_000), seed, inject=inject)
    if name == "extrapolation":
        dom = cfg.domain("box:1,1")
        return vf.verify_extrapolation(dom, bc_text, gamma, cfg.float("gamma_prime", 0.0), cfg.float("c", 1.0),
                                       lam_max or 1e4, points=max(points, 2), inject=inject)
    if name == "prop31":
        dom = cfg.domain("box:1,1.5")
        return vf.verify_prop31(dom, bc_text, cfg.float("gamma0", 0.0), cfg.float("gamma1", 1.0),
                                cfg.float("lambda0", 100.0), cfg.float("lambda1", 400.0), cfg.float("c"),
                                inject=inject)
    if name == "cylinder_lift":
        omega = cfg.domain("interval:1")
        lams = vf.geometric_grid(0.5 * first_eigenvalue(omega, "D"), lam_max or 100 * first_eigenvalue(omega, "D"),
                                 points)
        return vf.verify_cylinder_lift(omega, cfg.float("ell", 10.0), gamma, lams, inject=inject)
    if name == "bracketing":
        box = cfg.domain("box:1,1")
        if not isinstance(box, Box):
            raise UsageError("bracketing needs a box domain")
        lams = vf.geometric_grid(1.0, lam_max or 1e4, points)
        return vf.verify_bracketing(box, cfg.int("slices", 4), gamma, lams, inject=inject)
    if name == "theorem14":
        omega = cfg.domain("interval:1")
        lstar = cfg.float("lambda_star", 50.0)
        lams = vf.geometric_grid(2 * lstar, lam_max or 1e6, points)
        return vf.verify_theorem14_construction(omega, lstar, gamma, lams, bc_text, inject=inject)
    if name == "liyau":
        doms = fam("boxes2")
        return vf.verify_liyau_neumann_count(doms, _grids(cfg, doms), points, inject=inject)
    if name == "small_energy":
        return vf.verify_small_energy_neumann(fam("boxes2"), gamma, None, points, inject=inject)
    if name == "deficit":
        return vf.deficit_profile(cfg.float("w", 0.1), bc_text, inject=inject)
    if name == "two_term":
        doms = fam("boxes2")
        return vf.verify_two_term(doms, bc_text, gamma, _grids(cfg, doms), points, inject=inject)
    raise UsageError(f"unknown suite {name!r}")


def cmd_verify(cfg: Config) -> int:
    names = cfg.str("suite", "polya").split(",")
    inject = bool(cfg.raw("inject_violation", False))
    for s in names:
        if s not in SUITES:
            raise UsageError(f"unknown suite {s!r}; choose from {', '.join(SUITES)}")
    reports = [run_suite(s, cfg, inject) for s in names]
    passed = all(r.passed for r in reports)
    body = {"reports": [r.as_dict() for r in reports], "passed": passed}
    emit(dumps(envelope(cfg, body)), cfg.str("out"))
    if not passed:
        bad = ", ".join(f"{r.suite} ({r.violations})" for r in reports if not r.passed)
        sys.stderr.write(f"speclab: inequality violations in {bad}\n")
    return 0 if passed else 1


def cmd_collapse(cfg: Config) -> int:
    omega = cfg.domain("interval:1")
    axis_len = cfg.float("ell", 1.0)
    spec = ex.CollapseSpec(omega, cfg.float("scale", 1.0), Interval(axis_len),
                           tuple(cfg.floats("lambda", "1e2,1e3,1e4,1e5,1e6")), cfg.float("gamma", 1.0),
                           cfg.str("bc", "D"))
    rows = ex.collapse_experiment(spec, cfg.threads())
    gaps = [r.gap for r in rows]
    monotone = all(b <= a for a, b in zip(gaps, gaps[1:]))
    table = _csv(["j", "lambda", "ratio", "limit", "gap", "rin_sqrt_lambda"],
                 [(r.j, r.lam, r.ratio, r.limit, r.gap, r.rin_sqrt_lambda) for r in rows])
    summary = envelope(cfg, {"limit": rows[0].limit if rows else math.nan,
                             "K": ex.collapse_constant(rows, axis_len), "gap_nonincreasing": monotone,
                             "rows": [vars(r) for r in rows]})
    out = cfg.str("out")
    if out:
        emit(table, out)
        emit(dumps(summary), out.rsplit(".", 1)[0] + ".json")
    else:
        sys.stdout.write(table)
    return 0


def cmd_shapeopt(cfg: Config) -> int:
    name = cfg.str("family", "rect2")
    if name not in ("rect2", "box3", "cylinder", "k_squares"):
        raise UsageError(f"unknown shape family {name!r}")
    bc = cfg.str("bc", "D")
    if bc not in ("D", "N"):
        raise UsageError("bc must be D or N")
    lams = lambda_list(cfg, "lambda")
    results, summary = ex.shapeopt_trajectory(name, bc, cfg.float("gamma", 1.0), lams, cfg.threads())
    table = _csv(["lambda", "best_param", "best_value", "polya_ratio", "r_in_sqrt_lambda", "component_count"],
                 [(r.lam, ";".join(repr(float(x)) for x in np.atleast_1d(r.best_param)), r.best_value,
                   r.polya_ratio, r.r_in_sqrt_lambda, r.component_count) for r in results])
    body = envelope(cfg, {"summary": summary, "results": [r.as_dict() for r in results]})
    out = cfg.str("out")
    if out and out.endswith(".json"):
        emit(dumps(body), out)
    elif out:
        emit(table, out)
        emit(dumps(body), out.rsplit(".", 1)[0] + ".json")
    else:
        sys.stdout.write(table)
    return 0


def cmd_report(cfg: Config) -> int:
    paths = cfg.raw("inputs") or []
    if not paths:
        raise UsageError("report needs at least one JSON report")
    rows, ok = [], True
    for p in paths:
        try:
            with open(p) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read report {p!r}: {exc}") from None
        if "schema_version" not in doc:
            raise UsageError(f"{p!r} is not a speclab report")
        for r in doc.get("reports", []):
            rows.append((p, r["suite"], r["samples"], r["violations"], r["worst_margin"], r["passed"]))
            ok &= bool(r["passed"])
    emit(_csv(["file", "suite", "samples", "violations", "worst_margin", "passed"], rows), cfg.str("out"))
    return 0 if ok else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="speclab", description="Spectral inequality laboratory.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--manifest", help="key = value file; flags win")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--threads", type=int, help="worker threads (default 1)")
        sp.add_argument("--seed", help="64-bit unsigned seed")
        sp.add_argument("--domain", help="domain tag, e.g. box:1,2 or product[disk:1|interval:2]")
        sp.add_argument("--bc", help="D, N, ends:D,N or mixed[X|Y]")
        sp.add_argument("--gamma", help="Riesz order")
        sp.add_argument("--lambda-min", dest="lambda_min")
        sp.add_argument("--lambda-max", dest="lambda_max")
        sp.add_argument("--points-per-decade", dest="points_per_decade")

    sp = sub.add_parser("spectrum", help="eigenvalues below --lambda-max as CSV")
    common(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("riesz", help="Riesz means and Polya ratios")
    common(sp)
    sp.add_argument("--lambda", dest="lambda", help="comma-separated spectral parameters")
    sp.set_defaults(func=cmd_riesz)

    sp = sub.add_parser("verify", help="run inequality suites")
    common(sp)
    sp.add_argument("--suite", help="comma-separated: " + ", ".join(SUITES))
    sp.add_argument("--family", help="domain family, e.g. boxes2, boxes3, disks, balls, cylinders, unions")
    sp.add_argument("--n", help="family size")
    sp.add_argument("--points", help="lambda points per domain")
    sp.add_argument("--samples", help="random samples (laptev)")
    sp.add_argument("--gamma-prime", dest="gamma_prime")
    sp.add_argument("--c")
    sp.add_argument("--gamma0")
    sp.add_argument("--gamma1")
    sp.add_argument("--lambda0")
    sp.add_argument("--lambda1")
    sp.add_argument("--lambda-star", dest="lambda_star")
    sp.add_argument("--ell")
    sp.add_argument("--slices")
    sp.add_argument("--w")
    sp.add_argument("--inject-violation", dest="inject_violation", action="store_const", const=True,
                    help="test hook: flip one comparison")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("collapse", help="collapse limit along a product family")
    common(sp)
    sp.add_argument("--scale", help="cross-section scale s")
    sp.add_argument("--ell", help="axis length")
    sp.add_argument("--lambda", dest="lambda", help="comma-separated schedule")
    sp.set_defaults(func=cmd_collapse)

    sp = sub.add_parser("shapeopt", help="family-restricted shape optimisation")
    common(sp)
    sp.add_argument("--family", help="rect2, box3, cylinder or k_squares")
    sp.add_argument("--lambda", dest="lambda", help="comma-separated spectral parameters")
    sp.set_defaults(func=cmd_shapeopt)

    sp = sub.add_parser("report", help="summarise JSON reports")
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("--out")
    sp.add_argument("--manifest")
    sp.set_defaults(func=cmd_report)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = Config(args)
        return args.func(cfg)
    except ManifestError as exc:
        sys.stderr.write(f"speclab: manifest error: {exc}\n")
    except BudgetExceeded as exc:
        sys.stderr.write(f"speclab: eigenvalue budget exceeded: {exc}\n")
    except ex.HypothesisError as exc:
        sys.stderr.write(f"speclab: collapse hypothesis monitor: {exc}\n")
    except UsageError as exc:
        sys.stderr.write(f"speclab: usage error: {exc}\n")
    except ValueError as exc:
        msg = str(exc)
        kind = "unknown domain tag" if "domain" in msg or "tag" in msg else "invalid value"
        sys.stderr.write(f"speclab: {kind}: {msg}\n")
    return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
