"""Command-line interface: config handling, subcommands, report output.

Subcommands: estimate, certify, extend, taylor, scan-boundary, chain,
grassmann, verify, example. Configuration is a JSON file validated against
a strict schema (unknown keys rejected); reports are JSON with every
constant wrapped as {value, logValue, formulaId, inputs} and floats
rendered with 17 significant digits. Exit codes: 0 success, 1 validation
error, 2 verification failure, 3 numeric error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from importlib import resources

import jsonschema
import numpy as np

from . import certificates as cert
from . import operator as top
from . import verification as ver
from .certificates import (ConstantValidationError, GapNotSimpleError,
                           IsolatingCircleError, LogValue)
from .geometry import InvalidMatrixError, MatrixTuple
from .oracles import (CocycleSpec, NumericOverflowError,
                      estimate_markov_exponent, estimate_spectrum,
                      estimate_top_exponent, lyapunov_gap)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFICATION = 2
EXIT_NUMERIC = 3

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["dimension", "matrices", "theta"],
    "oneOf": [{"required": ["weights"]}, {"required": ["transition"]}],
    "properties": {
        "dimension": {"type": "integer", "minimum": 2},
        "matrices": {
            "type": "array", "minItems": 1,
            "items": {"type": "array",
                      "items": {"type": "array",
                                "items": {"type": "number"}}},
        },
        "weights": {"type": "array", "items": {"type": "number"}},
        "transition": {"type": "array",
                       "items": {"type": "array",
                                 "items": {"type": "number"}}},
        "theta": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "gap": {"type": ["number", "null"]},
        "mc": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "steps": {"type": "integer", "minimum": 1},
                "trials": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
                "burnin": {"type": "integer", "minimum": 0},
            },
        },
        "grid": {
            "type": "object", "additionalProperties": False,
            "properties": {"m": {"type": "integer", "minimum": 8}},
        },
        "contour": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "radius": {"type": ["number", "null"]},
                "nodes": {"type": "integer", "minimum": 4},
                "order": {"type": "integer", "minimum": 1},
                "direction": {"type": ["array", "null"],
                              "items": {"type": "number"}},
            },
        },
        "boundary": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "index": {"type": "integer", "minimum": 0},
                "steps": {"type": "integer", "minimum": 2},
                "tMax": {"type": "number", "exclusiveMinimum": 0},
                "cTau": {"type": ["number", "null"]},
                "gammaTau": {"type": ["number", "null"]},
                "gapProxy": {"enum": ["measured", "mc"]},
            },
        },
        "grassmann": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "levels": {"type": "array",
                           "items": {"type": "integer", "minimum": 1}},
                "gaps": {"type": "object",
                         "additionalProperties": {"type": "number"}},
            },
        },
        "flags": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "rigorousK": {"type": "boolean"},
                "radiusConvention": {"enum": ["example", "theoremB-proof"]},
                "chainExponent": {"type": "number", "exclusiveMinimum": 0,
                                  "maximum": 1},
                "tau0Variant": {"enum": ["optimistic", "pessimistic"]},
                "rhoA": {"type": "number", "minimum": 0},
            },
        },
    },
}

MC_DEFAULTS = {"steps": 20_000, "trials": 12, "seed": 0, "burnin": 1000}
GRID_DEFAULT = 2000
CONTOUR_DEFAULTS = {"radius": None, "nodes": 32, "order": 6, "direction": None}
BOUNDARY_DEFAULTS = {"index": 0, "steps": 6, "tMax": None, "cTau": None,
                     "gammaTau": None, "gapProxy": "measured"}
FLAG_DEFAULTS = {"rigorousK": False, "radiusConvention": "example",
                 "chainExponent": 1.0, "tau0Variant": "pessimistic",
                 "rhoA": 0.0}


class ConfigError(ValueError):
    """The configuration file failed validation."""


def load_config(path: str | None) -> dict:
    """Read and schema-validate a config; None loads the packaged default."""
    if path is None:
        text = resources.files("lyocert").joinpath(
            "data/reference_config.json").read_text()
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(
            f"config invalid at {exc.json_path}: {exc.message}") from exc
    d = raw["dimension"]
    for i, m in enumerate(raw["matrices"]):
        arr = np.asarray(m, dtype=float)
        if arr.shape != (d, d):
            raise ConfigError(
                f"config invalid at $.matrices[{i}]: expected a {d}x{d} "
                f"matrix, got shape {arr.shape}")
    cfg = dict(raw)
    cfg["mc"] = {**MC_DEFAULTS, **raw.get("mc", {})}
    cfg["grid"] = {"m": GRID_DEFAULT, **raw.get("grid", {})}
    cfg["contour"] = {**CONTOUR_DEFAULTS, **raw.get("contour", {})}
    cfg["boundary"] = {**BOUNDARY_DEFAULTS, **raw.get("boundary", {})}
    cfg["flags"] = {**FLAG_DEFAULTS, **raw.get("flags", {})}
    cfg.setdefault("grassmann", {"levels": [], "gaps": {}})
    cfg["grassmann"].setdefault("levels", [])
    cfg["grassmann"].setdefault("gaps", {})
    cfg.setdefault("gap", None)
    return cfg


def cocycle_from_config(cfg: dict) -> CocycleSpec:
    tuple_ = MatrixTuple.from_matrices(cfg["matrices"])
    if tuple_.d != cfg["dimension"]:
        raise ConfigError("matrix shape disagrees with declared dimension")
    if "weights" in cfg:
        return CocycleSpec.iid(tuple_, cfg["weights"])
    return CocycleSpec.markov(tuple_, cfg["transition"])


def resolve_gap(cfg: dict, spec: CocycleSpec) -> tuple[float, dict]:
    """Config gap override or a seeded Monte Carlo estimate."""
    if cfg["gap"] is not None:
        return float(cfg["gap"]), {"source": "config-override"}
    mc = cfg["mc"]
    gap, se = lyapunov_gap(spec, steps=mc["steps"], trials=mc["trials"],
                           seed=mc["seed"], burnin=mc["burnin"])
    return gap, {"source": "monte-carlo", "stderr": se, "seed": mc["seed"]}


# ---------------------------------------------------------------------------
# Report serialization.

def leaf(value, formula_id: str, inputs: dict | None = None) -> dict:
    """Wrap a numeric constant with its formula tag and provenance."""
    out = {"formulaId": formula_id}
    if isinstance(value, LogValue):
        out["value"] = value.value
        out["logValue"] = value.log
    else:
        out["value"] = value
        if isinstance(value, (int, float)) and not isinstance(value, bool) \
                and value > 0 and math.isfinite(value):
            out["logValue"] = math.log(value)
    if inputs:
        out["inputs"] = inputs
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return '"inf"' if value > 0 else '"-inf"'
        if math.isnan(value):
            return '"nan"'
        return format(value, ".17g")
    if isinstance(value, complex):
        return (f'{{"re": {_fmt(value.real)}, "im": {_fmt(value.imag)}}}')
    return json.dumps(value)


def serialize_report(report, indent: int = 0) -> str:
    """Deterministic JSON with sorted keys and 17-significant-digit floats."""
    pad = " " * indent
    child = " " * (indent + 2)
    if isinstance(report, dict):
        if not report:
            return "{}"
        items = [f'{child}{json.dumps(str(k))}: '
                 f'{serialize_report(report[k], indent + 2)}'
                 for k in sorted(report, key=str)]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(report, (list, tuple)):
        if not report:
            return "[]"
        items = [f"{child}{serialize_report(v, indent + 2)}" for v in report]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(report, (np.floating,)):
        return _fmt(float(report))
    if isinstance(report, (np.integer,)):
        return _fmt(int(report))
    if isinstance(report, np.ndarray):
        return serialize_report(report.tolist(), indent)
    return _fmt(report)


def _write_out(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


# ---------------------------------------------------------------------------
# Report builders.

def certificate_to_report(rep: cert.CertificateReport) -> dict:
    """CertificateReport -> JSON structure with formula-tagged leaves."""
    lad = rep.ladder
    inputs = {"theta": lad.theta, "gap": lad.gap, "ecc": lad.ecc}
    ids = cert.FORMULA_IDS
    out = {
        "ladder": {
            "n0": leaf(lad.n0, ids["n0"], inputs),
            "tau0": leaf(lad.tau0, ids["tau0"],
                         {**inputs, "variant": lad.tau0_variant,
                          "optimistic": lad.tau0_optimistic,
                          "pessimistic": lad.tau0_pessimistic}),
            "C2": leaf(lad.C2, "holder-growth-constant", inputs),
            "NTheta": leaf(lad.N_theta, ids["NTheta"], inputs),
            "tauStar": leaf(lad.tau_star, ids["tauStar"], inputs),
            "rhoStar": leaf(lad.rho_star, ids["rhoStar"], inputs),
            "RNormBound": leaf(lad.R_norm_bound, "iterated-operator-norm",
                               inputs),
        },
        "KStar": leaf(rep.K_star, ids["KStar"], inputs),
        "KStarSp": leaf(rep.K_star_sp, ids["KStarSp"], inputs),
        "rigorous": rep.rigorous,
        "rStar": leaf(rep.r_star, ids["rStar"], inputs),
        "rExtension": leaf(rep.r_extension, "extension-radius-half", inputs),
        "MStar": leaf(rep.M_star, ids["MStar"], inputs),
        "cauchyFirst": leaf(rep.cauchy_first, ids["cauchy"],
                            {"order": 1, "convention": rep.radius_convention}),
        "cauchySecond": leaf(rep.cauchy_second, ids["cauchy"],
                             {"order": 2, "convention": rep.radius_convention}),
        "radiusConvention": rep.radius_convention,
        "joint": {k: leaf(v, ids["joint"], inputs)
                  for k, v in rep.joint.items()},
        "inputProvenance": rep.input_provenance,
    }
    if rep.chain is not None:
        out["chain"] = {k: leaf(v, ids["chain"], inputs)
                        for k, v in rep.chain.items()}
    if rep.boundary is not None:
        out["boundary"] = {k: leaf(v, ids["boundary"], inputs)
                           for k, v in rep.boundary.items()}
    if rep.grassmann:
        out["grassmann"] = {
            str(k): {kk: leaf(vv, ids["grassmann"], {"k": k})
                     for kk, vv in rec.items()}
            for k, rec in rep.grassmann.items()}
    return out


def build_certificate(cfg: dict, spec: CocycleSpec,
                      theta: float) -> tuple[cert.CertificateReport, dict]:
    gap, gap_prov = resolve_gap(cfg, spec)
    flags = cfg["flags"]
    chain_gap = spec.chain_gap if spec.kind == "markov" else None
    rep = cert.certify(
        spec.tuple, spec.weights if spec.kind == "iid"
        else np.full(spec.tuple.N, 1.0 / spec.tuple.N),
        theta, gap,
        variant=flags["tau0Variant"], rigorous=flags["rigorousK"],
        radius_convention=flags["radiusConvention"], rho_A=flags["rhoA"],
        chain_gap=chain_gap, c_exponent=flags["chainExponent"],
        c_tau=cfg["boundary"]["cTau"], gamma_tau=cfg["boundary"]["gammaTau"],
        provenance={"gap": gap_prov})
    return rep, gap_prov


# ---------------------------------------------------------------------------
# Subcommand handlers. Each returns (exit_code, report_dict, csv_rows).

def cmd_estimate(cfg, args):
    spec = cocycle_from_config(cfg)
    mc = cfg["mc"]
    kw = dict(steps=mc["steps"], trials=mc["trials"], seed=mc["seed"],
              burnin=mc["burnin"])
    report = {"mc": mc, "kind": spec.kind}
    if spec.kind == "iid":
        lam, se = estimate_top_exponent(spec, **kw)
        spectrum = estimate_spectrum(spec, **kw)
        gap, gse = lyapunov_gap(spec, **kw)
        report["topExponent"] = leaf(lam, "qr-cocycle-mean",
                                     {"stderr": se, **mc})
        report["spectrum"] = [
            leaf(float(x), "qr-cocycle-spectrum", {"stderr": float(s)})
            for x, s in zip(spectrum.exponents, spectrum.standard_errors)]
        report["gap"] = leaf(gap, "top-gap-estimate", {"stderr": gse})
    else:
        lam, se = estimate_markov_exponent(spec, **kw)
        report["topExponent"] = leaf(lam, "chain-qr-cocycle-mean",
                                     {"stderr": se, **mc})
        report["chainGap"] = leaf(spec.chain_gap, "transition-spectral-gap")
    return EXIT_OK, report, None


def cmd_certify(cfg, args):
    spec = cocycle_from_config(cfg)
    rep, _ = build_certificate(cfg, spec, cfg["theta"])
    return EXIT_OK, certificate_to_report(rep), None


def cmd_extend(cfg, args):
    spec = cocycle_from_config(cfg)
    if spec.kind != "iid":
        raise ConfigError("extend requires iid weights")
    if args.z is None:
        raise ConfigError("extend requires --z as JSON [[re, im], ...]")
    zs = json.loads(args.z)
    z = np.array([complex(r, i) for r, i in zs])
    grid = top.build_grid(cfg["grid"]["m"])
    value = top.analytic_extension_value(spec.tuple, z, grid)
    return EXIT_OK, {
        "z": [[float(c.real), float(c.imag)] for c in z],
        "value": leaf(value, "stationary-functional-extension",
                      {"gridM": grid.m}),
        "gridM": grid.m,
    }, None


def cmd_taylor(cfg, args):
    spec = cocycle_from_config(cfg)
    if spec.kind != "iid":
        raise ConfigError("taylor requires iid weights")
    rep, _ = build_certificate(cfg, spec, cfg["theta"])
    ct = cfg["contour"]
    N = spec.tuple.N
    direction = ct["direction"]
    if direction is None:
        direction = np.zeros(N)
        direction[0], direction[1] = 1.0, -1.0
    radius = ct["radius"] if ct["radius"] is not None else rep.r_extension
    grid = top.build_grid(cfg["grid"]["m"])
    coeffs = top.taylor_coefficients(spec.tuple, spec.weights, direction,
                                     ct["order"], radius, ct["nodes"], grid)
    sharp = (top.estimate_sharp_radius(coeffs) if len(coeffs) >= 8
             else {"radius": None, "indeterminate": True})
    report = {
        "contour": {"radius": radius, "nodes": ct["nodes"],
                    "order": ct["order"],
                    "direction": np.asarray(direction).tolist()},
        "coefficients": [leaf(c, "contour-quadrature-coefficient",
                              {"order": j}) for j, c in enumerate(coeffs)],
        "sharpRadius": leaf(sharp["radius"], "cauchy-hadamard-tail",
                            {"indeterminate": sharp["indeterminate"],
                             "caveat": "finite-order surrogate"}),
        "certificateRadius": leaf(rep.r_star, cert.FORMULA_IDS["rStar"]),
    }
    return EXIT_OK, report, None


def cmd_scan_boundary(cfg, args):
    spec = cocycle_from_config(cfg)
    if spec.kind != "iid":
        raise ConfigError("scan-boundary requires iid weights")
    b = cfg["boundary"]
    p0 = np.asarray(spec.weights)
    t_max = b["tMax"] if b["tMax"] is not None else 0.9 * p0[b["index"]]
    out = ver.boundary_scan(
        spec.tuple, cfg["theta"], index=b["index"], steps=b["steps"],
        t_max=t_max, grid_m=min(cfg["grid"]["m"], 600),
        gap_proxy=b["gapProxy"], mc_steps=cfg["mc"]["steps"],
        mc_trials=cfg["mc"]["trials"], seed=cfg["mc"]["seed"], p0=p0)
    csv_rows = [("t", "p_min", "gap", "r_star", "lower_bound")]
    for r in out["rows"]:
        log_lb = r.get("log_lower_bound")
        lb = 0.0 if log_lb is None else (
            math.exp(log_lb) if log_lb > -700 else 0.0)
        csv_rows.append((r["t"], r["p_min"], r["gap"], r["r_star"], lb))
    return EXIT_OK, out, csv_rows


def cmd_chain(cfg, args):
    spec = cocycle_from_config(cfg)
    if spec.kind != "markov":
        raise ConfigError("chain requires a transition matrix in the config")
    rep, _ = build_certificate(cfg, spec, cfg["theta"])
    report = certificate_to_report(rep)
    mc = cfg["mc"]
    lam, se = estimate_markov_exponent(spec, steps=mc["steps"],
                                       trials=mc["trials"], seed=mc["seed"],
                                       burnin=mc["burnin"])
    report["chainTopExponent"] = leaf(lam, "chain-qr-cocycle-mean",
                                      {"stderr": se})
    if spec.tuple.d == 2:
        grid = top.build_grid(min(cfg["grid"]["m"], 600))
        val = top.chain_extension_value(spec.transition, spec.tuple, grid)
        report["chainOperatorValue"] = leaf(val, "chain-stationary-functional",
                                            {"gridM": grid.m})
    return EXIT_OK, report, None


def cmd_grassmann(cfg, args):
    spec = cocycle_from_config(cfg)
    if spec.kind != "iid":
        raise ConfigError("grassmann requires iid weights")
    levels = sorted(cfg["grassmann"]["levels"]) or [1]
    gaps = {int(k): float(v) for k, v in cfg["grassmann"]["gaps"].items()}
    mc = cfg["mc"]
    spectrum = None
    report = {"levels": {}}
    r_prev = None
    for k in levels:
        if k not in gaps:
            if spectrum is None:
                spectrum = estimate_spectrum(spec, steps=mc["steps"],
                                             trials=mc["trials"],
                                             seed=mc["seed"],
                                             burnin=mc["burnin"])
            gaps[k] = float(spectrum.exponents[k - 1]
                            - spectrum.exponents[k])
        rec = cert.grassmann_certificate(spec.tuple, cfg["theta"], k,
                                         gaps[k], r_H_previous=r_prev)
        r_prev = rec["r_H"]
        report["levels"][str(k)] = {
            kk: leaf(vv, cert.FORMULA_IDS["grassmann"], {"k": k})
            for kk, vv in rec.items()}
    return EXIT_OK, report, None


def cmd_example(cfg, args):
    report = ver.reproduce_reference_example()
    code = EXIT_OK if report.passed else EXIT_VERIFICATION
    tuple_ = ver.reference_tuple()
    rep = cert.certify(tuple_, ver.REFERENCE_P, ver.REFERENCE_THETA,
                       ver.REFERENCE_GAP)
    out = {"checks": report.to_dict(),
           "certificate": certificate_to_report(rep)}
    return code, out, None


def cmd_verify(cfg, args):
    spec = cocycle_from_config(cfg)
    samples = 10_000 if args.fast else 100_000
    grid_m = 200 if args.fast else min(cfg["grid"]["m"], 400)
    report = ver.VerificationReport()
    report.extend(ver.reproduce_reference_example())
    report.extend(ver.lemma_sampling_suite(samples=samples,
                                           seed=cfg["mc"]["seed"]))
    report.extend(ver.exterior_norm_identity_check(
        samples=max(samples // 10, 1000), seed=cfg["mc"]["seed"] + 1))
    report.extend(ver.resolvent_identity_check(seed=cfg["mc"]["seed"] + 2))
    report.extend(ver.holder_operator_norm_check(spec.tuple, cfg["theta"],
                                                 grid_m=min(grid_m, 200)))
    if spec.tuple.d == 2 and spec.kind == "iid":
        gap, _ = resolve_gap(cfg, spec)
        report.extend(ver.check_cauchy_dominance(
            spec.tuple, spec.weights, cfg["theta"], gap, grid_m=grid_m))
        report.extend(ver.markov_iid_reduction_check(
            spec.tuple, spec.weights, grid_m=grid_m,
            mc_steps=cfg["mc"]["steps"], mc_trials=cfg["mc"]["trials"],
            seed=cfg["mc"]["seed"] + 3))
    code = EXIT_OK if report.passed else EXIT_VERIFICATION
    return code, report.to_dict(), None


COMMANDS = {
    "estimate": cmd_estimate,
    "certify": cmd_certify,
    "extend": cmd_extend,
    "taylor": cmd_taylor,
    "scan-boundary": cmd_scan_boundary,
    "chain": cmd_chain,
    "grassmann": cmd_grassmann,
    "verify": cmd_verify,
    "example": cmd_example,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lyocert",
        description="Explicit analyticity certificates for Lyapunov "
                    "exponents of random matrix products.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="JSON config path (default: packaged reference "
                            "configuration)")
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--grid-m", type=int, default=None)
        p.add_argument("--out", default=None, help="report path (default "
                                                   "stdout)")
        p.add_argument("--csv", default=None, help="CSV table path")
        if name == "extend":
            p.add_argument("--z", default=None,
                           help="complex weights as JSON [[re, im], ...]")
        if name == "verify":
            p.add_argument("--fast", action="store_true",
                           help="reduced sample counts")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.theta is not None:
            if not 0.0 < args.theta <= 1.0:
                raise ConfigError("--theta must lie in (0, 1]")
            cfg["theta"] = args.theta
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be >= 0")
            cfg["mc"]["seed"] = args.seed
        if args.grid_m is not None:
            if args.grid_m < 8:
                raise ConfigError("--grid-m must be >= 8")
            cfg["grid"]["m"] = args.grid_m
        code, report, csv_rows = COMMANDS[args.command](cfg, args)
    except (ConfigError, GapNotSimpleError, InvalidMatrixError,
            jsonschema.ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (top.EigenvalueCollisionError, top.ContourTooLargeError,
            top.ResolventSolveError, NumericOverflowError,
            IsolatingCircleError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ConstantValidationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    _write_out(serialize_report(report), args.out)
    if args.csv and csv_rows:
        with open(args.csv, "w", newline="") as fh:
            csv.writer(fh).writerows(csv_rows)
    return code


if __name__ == "__main__":
    sys.exit(main())
