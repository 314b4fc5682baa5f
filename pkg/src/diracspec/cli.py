"""Command-line front end.

Exit codes
----------
0  success (verification passed, spectrum finite or empty)
2  malformed command line or config
3  boundary matrix of rank < 2
4  numerical failure (integrator tolerance, zero on every retried contour)
5  spectrum verdict IDENTICALLY_ZERO
6  verification ran and failed
7  a hypothesis of the requested verification does not hold
8  symbolic identity failed
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import jsonschema

from . import symbolic
from .boundary import PAIRS, BoundaryMatrix, classify
from .determinant import characteristic_determinant_batch
from .errors import (
    ConfigError,
    HypothesisViolated,
    PotentialError,
    RankDeficient,
    ToleranceNotMet,
    ZeroOnContour,
)
from .integrator import DEFAULT_CONFIG, IntegratorConfig
from .potential import PotentialSpec
from .spectrum import (
    DEFAULT_BOX,
    LambdaBox,
    Verdict,
    find_eigenvalues,
    verify_relations13,
    verify_remark2,
    verify_theorem1,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RANK = 3
EXIT_NUMERIC = 4
EXIT_IDENTICALLY_ZERO = 5
EXIT_FAIL = 6
EXIT_HYPOTHESIS = 7
EXIT_PROOF = 8

CONTOUR_RETRIES = 5
CONTOUR_DILATION = 0.01

_NUMBER = {"type": "number"}
_COMPLEX = {"oneOf": [_NUMBER, {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}]}
_POINT = {"oneOf": [_NUMBER, {"type": "string"}]}
_TERM = {
    "type": "object",
    "required": ["interval"],
    "additionalProperties": False,
    "properties": {
        "interval": {"type": "array", "items": _POINT, "minItems": 2, "maxItems": 2},
        "poly": {"type": "array", "items": _COMPLEX},
        "trig": {"oneOf": [
            {"type": "null"},
            {"type": "object", "required": ["kind", "k"], "additionalProperties": False,
             "properties": {"kind": {"enum": ["cos", "sin"]}, "k": {"type": "integer"}}},
        ]},
        "reflected": {"type": "boolean"},
    },
}
CONFIG_SCHEMA = {
    "type": "object",
    "required": ["boundary"],
    "additionalProperties": False,
    "properties": {
        "boundary": {"type": "array", "minItems": 2, "maxItems": 2,
                     "items": {"type": "array", "items": _COMPLEX, "minItems": 4, "maxItems": 4}},
        "potential": {"type": "object", "additionalProperties": False,
                      "properties": {"p": {"type": "array", "items": _TERM},
                                     "q": {"type": "array", "items": _TERM}}},
        "box": {"type": "object", "required": ["re_lo", "re_hi", "im_lo", "im_hi"],
                "additionalProperties": False,
                "properties": {k: _NUMBER for k in ("re_lo", "re_hi", "im_lo", "im_hi")}},
        "tolerances": {"type": "object", "additionalProperties": False,
                       "properties": {
                           "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                           "abs_tol": {"type": "number", "exclusiveMinimum": 0},
                           "max_step": {"type": "number", "exclusiveMinimum": 0},
                           "wronskian_tol": {"type": "number", "exclusiveMinimum": 0},
                           "max_steps": {"type": "integer", "minimum": 1},
                           "precision": {"enum": ["auto", "double", "multi"]},
                       }},
        "grid_n": {"type": "integer", "minimum": 1},
    },
}


@dataclass(frozen=True)
class ProblemConfig:
    boundary: BoundaryMatrix
    potential: PotentialSpec
    box: LambdaBox
    tolerances: IntegratorConfig
    grid_n: int = 10


def _complex(v) -> complex:
    return complex(v[0], v[1]) if isinstance(v, list) else complex(v)


def _field_path(err: jsonschema.ValidationError) -> str:
    path = "$"
    for part in err.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def parse_config(data: dict) -> ProblemConfig:
    """Validate a decoded config and build the module-level objects.

    Raises
    ------
    ConfigError
        On schema violations or malformed potential/box values.
    """
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"{_field_path(exc)}: {exc.message}") from None
    A = BoundaryMatrix.from_array([[_complex(v) for v in row] for row in data["boundary"]])
    try:
        V = PotentialSpec.from_json(data.get("potential", {}))
    except PotentialError as exc:
        raise ConfigError(f"$.potential: {exc}") from None
    try:
        box = LambdaBox(**data["box"]) if "box" in data else DEFAULT_BOX
    except ValueError as exc:
        raise ConfigError(f"$.box: {exc}") from None
    tol = DEFAULT_CONFIG.with_overrides(**data.get("tolerances", {}))
    return ProblemConfig(A, V, box, tol, data.get("grid_n", 10))


def load_config(path: str) -> ProblemConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_config(data)


def _cnum(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


# --------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    cls = classify(cfg.boundary)
    m = cls.minors
    doc = {
        "minors": {f"J{j}{k}": _cnum(m.get(j, k)) for j, k in PAIRS},
        "J0": _cnum(m.J0), "J1": _cnum(m.J1), "J2": _cnum(m.J2),
        "kind": cls.kind.name,
        "theorem1_applicable": cls.theorem1_applicable,
    }
    _emit(_dump(doc), args.out)
    return EXIT_OK


def _sample_rows(cfg: ProblemConfig) -> tuple[list[tuple[complex, complex]], bool]:
    lams = cfg.box.grid(cfg.grid_n)
    try:
        vals = list(characteristic_determinant_batch(cfg.boundary, cfg.potential, lams, cfg.tolerances))
        return list(zip(lams, vals)), True
    except ToleranceNotMet:
        pass
    rows, ok = [], True
    for lam in lams:
        try:
            d = complex(characteristic_determinant_batch(cfg.boundary, cfg.potential, [lam],
                                                         cfg.tolerances)[0])
        except ToleranceNotMet:
            d, ok = complex(math.nan, math.nan), False
        rows.append((lam, d))
    return rows, ok


def cmd_det_sample(args) -> int:
    cfg = load_config(args.config)
    rows, ok = _sample_rows(cfg)
    if args.json:
        text = _dump([{"lambda": _cnum(l), "delta": _cnum(d)} for l, d in rows])
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re_lambda", "im_lambda", "re_delta", "im_delta"])
        for l, d in rows:
            w.writerow([repr(float(x)) for x in (l.real, l.imag, d.real, d.imag)])
        text = buf.getvalue()
    _emit(text, args.out)
    if not ok:
        print("error: integrator failed at one or more grid points (NaN rows)", file=sys.stderr)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_spectrum(args) -> int:
    cfg = load_config(args.config)
    box = cfg.box
    for attempt in range(CONTOUR_RETRIES + 1):
        try:
            rep = find_eigenvalues(cfg.boundary, cfg.potential, box, cfg.tolerances)
            break
        except ZeroOnContour as exc:
            if attempt == CONTOUR_RETRIES:
                raise
            print(f"warning: {exc}; dilating box by 1%", file=sys.stderr)
            box = box.dilate(CONTOUR_DILATION)
    doc = rep.to_json()
    doc["box"] = {"re_lo": box.re_lo, "re_hi": box.re_hi, "im_lo": box.im_lo, "im_hi": box.im_hi}
    _emit(_dump(doc), args.out)
    return EXIT_IDENTICALLY_ZERO if rep.verdict is Verdict.IDENTICALLY_ZERO else EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    try:
        if args.what == "theorem1":
            rep = verify_theorem1(cfg.boundary, cfg.potential, cfg.grid_n, cfg.box, cfg.tolerances)
        elif args.what == "relations13":
            rep = verify_relations13(cfg.potential, cfg.box.grid(cfg.grid_n), cfg.tolerances)
        else:
            rep = verify_remark2(cfg.potential, cfg.box.grid(cfg.grid_n), cfg.tolerances)
    except HypothesisViolated as exc:
        doc = {"check": args.what, "pass": False, "hypothesis_violated": exc.hypothesis,
               "detail": exc.detail}
        _emit(_dump(doc), args.out)
        return EXIT_HYPOTHESIS
    _emit(_dump(rep.to_json()), args.out)
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_prove(args) -> int:
    res = symbolic.verify_theorem1_identity(use_reflection=not args.skip_reflection,
                                            use_wronskian=not args.skip_wronskian)
    doc = {
        "theorem1_identity": "PASS" if res.holds else "FAIL",
        "expanded_terms": len(res.expanded),
        "normal_form": str(res.normal_form),
        "target": str(res.target),
        "residual": str(res.residual),
    }
    ok = res.holds
    if args.emit_delta0:
        form = symbolic.derive_unperturbed_form()
        doc["delta0"] = {"constant": str(form.constant), "cos": str(form.cos_coeff),
                         "sin": str(form.sin_coeff), "remainder": str(form.remainder),
                         "matches_minors": form.matches_minors()}
        ok = ok and form.matches_minors()
    if args.json:
        text = _dump(doc)
    else:
        lines = [f"expanded determinant: {doc['expanded_terms']} monomials"]
        if res.holds:
            lines.append("theorem1 identity: PASS, normal form J12+J34")
        else:
            lines.append("theorem1 identity: FAIL")
        lines.append(f"normal form: {doc['normal_form']}")
        lines.append(f"residual: {doc['residual']}")
        if args.emit_delta0:
            d0 = doc["delta0"]
            lines.append("delta0 = C + K cos(lambda pi) + S sin(lambda pi)")
            lines.append(f"  C = {d0['constant']}")
            lines.append(f"  K = {d0['cos']}")
            lines.append(f"  S = {d0['sin']}")
            lines.append("delta0 coefficients (J0, J1, -J2): "
                         + ("PASS" if d0["matches_minors"] else "FAIL"))
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_PROOF


# --------------------------------------------------------------------------
# argument parsing


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--config", metavar="PATH", help="problem description (JSON)",
                        **({"default": None} | kw))
    parser.add_argument("--out", metavar="PATH", help="write output here instead of stdout",
                        **({"default": None} | kw))
    parser.add_argument("--json", action="store_true", help="machine-readable output",
                        **({"default": False} | kw))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diracspec",
        description="Characteristic determinant and spectrum of a 2x2 Dirac system on [0, pi].",
        epilog=__doc__.split("Exit codes", 1)[1].replace("----------", "exit codes:", 1),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    sub.add_parser("classify", parents=[common], help="minors and degeneracy class")
    sub.add_parser("det-sample", parents=[common], help="CSV grid of Delta over the box")
    sub.add_parser("spectrum", parents=[common], help="eigenvalues inside the box")
    p = sub.add_parser("verify", parents=[common], help="numeric checks")
    p.add_argument("--what", choices=["theorem1", "relations13", "remark2"], default="theorem1")
    p = sub.add_parser("prove", parents=[common], help="replay the symbolic identity")
    p.add_argument("--skip-wronskian", action="store_true")
    p.add_argument("--skip-reflection", action="store_true")
    p.add_argument("--emit-delta0", action="store_true")
    return parser


COMMANDS = {
    "classify": cmd_classify,
    "det-sample": cmd_det_sample,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
    "prove": cmd_prove,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "prove" and not args.config:
        parser.error(f"{args.command} requires --config PATH")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RankDeficient as exc:
        print(f"rank deficient: {exc}", file=sys.stderr)
        return EXIT_RANK
    except (ToleranceNotMet, ZeroOnContour) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
