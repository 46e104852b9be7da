"""Command-line front end: one subcommand per module, JSON in and out.

Every rational is written as a ``"p/q"`` string and documents are dumped
with sorted keys, so identical input and seed give identical bytes.
Exit codes: 0 success, 2 validation error, 3 cap exceeded, 4 invariant
violation.  Each flag can also be set through ``BVGRAPH_<FLAG>``.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

from . import bv_calculus as bv
from . import frobenius_cocycle as fc
from . import graph_complex as gc
from . import kontsevich_map as km
from . import wick_engine as we
from .errors import BVGraphError, CapExceededError, InvariantViolation, ValidationError
from .graded_poly import (
    Generator,
    GradedPoly,
    format_rational,
    from_json,
    from_text,
    parse_rational,
    to_json,
)

ENV_PREFIX = "BVGRAPH_"
FROBENIUS_ACTIONS = ("validate", "propagator", "evaluate", "cocycle-check", "partition")


# serialization

def encode(value):
    """Turn results into plain JSON values (rationals become "p/q")."""
    if isinstance(value, (bool, int, str)) or value is None:
        return value  # plain ints are counts; rationals travel as Fraction
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, GradedPoly):
        if not value.generators():
            return format_rational(value.constant_term())
        return {"text": value.to_text(), "poly": to_json(value)}
    if isinstance(value, gc.GraphChain):
        return value.to_json()
    if isinstance(value, gc.LabelledGraph):
        return value.to_json()
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    raise TypeError(f"cannot encode {type(value).__name__}")


def dump(doc, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(doc, sort_keys=True, indent=2)
    return "\n".join(_text_lines(doc, ""))


def _scalar(v) -> bool:
    return not isinstance(v, (dict, list))


def _flat(v) -> bool:
    """Short lists of scalars (or of scalar pairs, like edge lists) render on one line."""
    return isinstance(v, list) and len(v) <= 12 and all(
        _scalar(x) or (isinstance(x, list) and all(map(_scalar, x))) for x in v)


def _text_lines(doc, prefix: str):
    if isinstance(doc, dict):
        for k in sorted(doc):
            v = doc[k]
            if isinstance(v, dict) and set(v) == {"text", "poly"}:
                yield f"{prefix}{k}: {v['text']}"
            elif isinstance(v, (dict, list)) and v and not _flat(v):
                yield f"{prefix}{k}:"
                yield from _text_lines(v, prefix + "  ")
            else:
                yield f"{prefix}{k}: {json.dumps(v, sort_keys=True)}"
    elif isinstance(doc, list):
        for item in doc:
            if isinstance(item, (dict, list)):
                yield f"{prefix}-"
                yield from _text_lines(item, prefix + "  ")
            else:
                yield f"{prefix}- {json.dumps(item)}"
    else:
        yield f"{prefix}{json.dumps(doc)}"


# input helpers

def _load(args):
    if args.json is not None:
        text = args.json
    elif args.input is None:
        return None
    elif args.input == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(args.input).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read input: {exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"input is not valid JSON: {exc}") from None


def _require(doc, kind: str):
    if doc is None:
        raise ValidationError(f"{kind} needs an input document (--input or --json)")
    if not isinstance(doc, dict):
        raise ValidationError(f"{kind} input must be a JSON object")
    return doc


def _poly(spec, registry) -> GradedPoly:
    if isinstance(spec, str):
        return from_text(spec, registry)
    if isinstance(spec, dict):
        return from_json(spec, registry)
    if isinstance(spec, (int, Fraction)) and not isinstance(spec, bool):
        return GradedPoly.const(spec)
    raise ValidationError(f"cannot read polynomial from {spec!r}")


def _rational(v) -> Fraction:
    return parse_rational(v if isinstance(v, (str, int)) else str(v))


def _matrix(M, name: str):
    if not isinstance(M, list) or not all(isinstance(r, list) for r in M):
        raise ValidationError(f"{name} must be a list of rows")
    return [[_rational(v) for v in row] for row in M]


def _chain(doc) -> gc.GraphChain:
    if isinstance(doc, dict) and "graph" in doc and "coeff" not in doc:
        return gc.GraphChain.of(gc.LabelledGraph.from_json(doc["graph"]))
    if isinstance(doc, dict) and "chain" in doc:
        doc = doc["chain"]
    return gc.GraphChain.from_json(doc)


def _check_vertices(chain: gc.GraphChain, cap: int):
    for cls, _ in chain.items():
        if cls.n > cap:
            raise CapExceededError(f"graph with {cls.n} vertices exceeds --max-vertices {cap}")


# subcommands

def cmd_wick(doc, args):
    doc = _require(doc, "wick")
    dim = doc.get("dim", 1)
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ValidationError("dim must be a positive integer")
    coords = [Generator(f"x{i}", 0) for i in range(1, dim + 1)]
    registry = {g.name: g for g in coords}
    if not isinstance(doc.get("vertices"), list) or not doc["vertices"]:
        raise ValidationError("wick needs a non-empty 'vertices' list")
    verts = []
    for v in doc["vertices"]:
        if isinstance(v, int) and not isinstance(v, bool):
            if dim != 1:
                raise ValidationError("integer vertex shorthand x^k/k! needs dim = 1")
            if v < 1:
                raise ValidationError("vertex valence must be positive")
            verts.append(GradedPoly.gen(coords[0], v) / _factorial(v))
        else:
            verts.append(_poly(v, registry))
    Q = _matrix(doc["Q"], "Q") if "Q" in doc else [[Fraction(int(i == j)) for j in range(dim)] for i in range(dim)]
    alpha = doc.get("alpha", "symbolic")
    if alpha == "symbolic":
        alpha = GradedPoly.gen(Generator("alpha_inv", 0))
    else:
        alpha = _rational(alpha)
        if alpha <= 0:
            raise ValidationError("alpha must be positive")
    if not bv.leading_minors_positive(Q):
        raise ValidationError("Q must be positive definite")
    kernel = we.QuadraticKernel.from_quadratic_form(coords, Q, alpha)
    groups = doc.get("identical_groups")
    if groups is None:
        order: dict = {}
        for k, p in enumerate(verts):
            order.setdefault(p, []).append(k)
        groups = list(order.values())
    method = doc.get("method", "matchings")
    value = we.correlator(verts, kernel, groups, max_legs=args.max_legs, method=method)
    diagrams = we.diagram_expansion(verts, kernel, groups, max_legs=args.max_legs)
    resummed = we.resum(diagrams, verts, groups)
    if _as_poly(resummed) != _as_poly(value):
        raise InvariantViolation("diagram expansion does not re-sum to the correlator")
    return {
        "correlator": _rat(value),
        "identical_groups": groups,
        "diagrams": [
            {
                "graph": d.graph,
                "colors": list(d.colors),
                "multiplicity": d.multiplicity,
                "weight": _rat(d.weight),
                "inverse_aut": d.inverse_aut,
                "aut": d.aut,
                "symmetry": dict(zip("PVL", d.symmetry)),
            }
            for d in diagrams
        ],
    }


def _rat(v):
    return v if isinstance(v, GradedPoly) else Fraction(v)


def _as_poly(v) -> GradedPoly:
    return v if isinstance(v, GradedPoly) else GradedPoly.const(v)


def _factorial(k: int) -> int:
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


def cmd_bv_check(doc, args):
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ValidationError("bv-check input must be a JSON object")
    cases = int(doc.get("cases", 25))
    max_n = int(doc.get("max_n", 3))
    if cases < 1 or not 1 <= max_n <= 4:
        raise ValidationError("need cases >= 1 and 1 <= max_n <= 4")
    out: dict = {}
    if "form" in doc:
        n = int(doc.get("n", 1))
        sp = bv.BVSpace(n, _poly(doc.get("sigma", 0), {g.name: g for g in _x_gens(n)}))
        f = sp.form(_poly(doc["form"], sp.registry))
        Ff = bv.odd_fourier(f)
        out["form"] = {
            "fourier": Ff.poly,
            "fourier_rho_power": Ff.rho_power,
            "de_rham": bv.de_rham(f).poly,
            "laplacian_of_fourier": bv.odd_laplacian(Ff).poly,
            "intertwines": bv.d_delta_intertwine_check(f),
        }
    results = bv.check_identities(random.Random(args.seed), cases, max_n=max_n,
                                  names=doc.get("identities"))
    out["identities"] = {k: {"cases": v["cases"], "failures": [str(s) for s in v["failures"]]}
                         for k, v in results.items()}
    out["ok"] = all(not v["failures"] for v in results.values())
    return out


def _x_gens(n: int):
    return [Generator(f"x{i}", 0) for i in range(1, n + 1)]


def cmd_graph_diff(doc, args):
    if doc is None:
        raise ValidationError("graph-diff needs a chain document")
    chain = _chain(doc)
    _check_vertices(chain, args.max_vertices)
    d = gc.boundary(chain)
    agrees = True
    for l in sorted(chain.degrees()):
        part = gc.GraphChain({cls: c for cls, c in chain.items() if cls.n == l})
        if l < 2:
            continue
        lhs = gc.boundary_operator_poly(gc.to_polynomial(part, l), N=l, l=l)
        agrees = agrees and lhs == gc.to_polynomial(gc.boundary(part), l)
    dd = gc.boundary(d)
    if dd:
        raise InvariantViolation("boundary squared is nonzero")
    return {"chain": chain, "boundary": d, "operator_form_agrees": agrees}


def _symplectic(doc) -> km.SymplecticData:
    eta = _matrix(doc["eta"], "eta") if "eta" in doc else None
    if "omega" in doc:
        return km.SymplecticData(_matrix(doc["omega"], "omega"), eta)
    n = doc.get("n", 1)
    if isinstance(n, bool) or not isinstance(n, int) or n < 0:
        raise ValidationError("n must be a non-negative integer")
    if n == 0:
        if eta is None:
            raise ValidationError("an odd-only space needs eta")
        return km.SymplecticData.odd_only(eta)
    return km.SymplecticData.standard(n, eta)


def cmd_kontsevich(doc, args):
    doc = _require(doc, "kontsevich")
    if "lie_cycle" in doc:
        spec = doc["lie_cycle"]
        structure = spec.get("structure", "su2")
        if structure == "su2":
            structure = km.su2_structure()
            eta = spec.get("eta", [[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        else:
            eta = spec["eta"]
        k = int(spec.get("k", 2))
        if k > args.max_vertices:
            raise CapExceededError(f"k = {k} exceeds --max-vertices {args.max_vertices}")
        cycle = km.lie_algebra_cycle(structure, _matrix(eta, "eta"), k)
        return {"cycle": cycle, "is_cycle": fc.is_cycle(cycle)}
    data = _symplectic(doc)
    gens = [_poly(g, data.registry) for g in doc.get("generators") or []]
    if not gens:
        raise ValidationError("kontsevich needs a non-empty 'generators' list")
    if len(gens) > args.max_vertices:
        raise CapExceededError(f"{len(gens)} generators exceed --max-vertices {args.max_vertices}")
    legs = sum(max(f.orders(), default=0) for f in gens)
    if legs > 2 * args.max_legs:
        raise CapExceededError(f"{legs} legs exceed the cap derived from --max-legs")
    chain = km.CEChain(data, tuple(gens))
    res = km.homomorphism_check(chain)
    out = {
        "graphs": gc.from_polynomial(km.evaluate_chain(chain)),
        "lhs": res.lhs,
        "rhs": res.rhs,
        "equal": res.equal,
        "notes": list(res.notes),
    }
    if not res.equal:
        raise InvariantViolation("homomorphism check failed", out)
    return out


def _algebra(doc):
    spec = doc.get("algebra", "su2")
    if spec == "su2":
        return fc.build_su2()
    return fc.DGFrobeniusAlgebra.from_json(spec)


def cmd_frobenius(doc, args):
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ValidationError("frobenius input must be a JSON object")
    action = args.action or doc.get("action", "validate")
    if action not in FROBENIUS_ACTIONS:
        raise ValidationError(f"unknown frobenius action {action!r}")
    a = _algebra(doc)
    report = fc.validate(a)
    if action == "validate":
        return {"algebra": a.to_json(), "report": report.to_json(), "ok": report.ok}
    if not report.ok:
        raise ValidationError("algebra fails validation: " + ", ".join(
            name for name, ok in report.checks.items() if not ok))
    metric = _matrix(doc["metric"], "metric") if "metric" in doc else None
    prop = fc.hodge_propagator(a, metric)
    if action == "propagator":
        defect = fc.propagator_identity_defect(a, prop)
        return {"K": prop.K, "identity_defect_zero": not any(any(r) for r in defect),
                "symmetric": not fc.symmetry_defect(a, prop.K)}
    if action == "evaluate":
        chain = _chain(doc)
        _check_vertices(chain, args.max_vertices)
        return {"values": [{"graph": cls.canonical, "coeff": c, "value": fc.evaluate_cochain(prop, a, cls)}
                           for cls, c in chain.items()],
                "total": fc.evaluate_chain_cochain(prop, a, chain)}
    if action == "cocycle-check":
        n = int(doc.get("max_vertices", min(4, args.max_vertices)))
        if n > args.max_vertices:
            raise CapExceededError(f"max_vertices {n} exceeds --max-vertices {args.max_vertices}")
        rep = fc.cocycle_check(prop, a, n, min_valence=int(doc.get("min_valence", 0)))
        return rep.to_json()
    # partition
    if "cycle" in doc:
        cycle = _chain(doc["cycle"])
    else:
        k = int(doc.get("k", 2))
        cycle = km.lie_algebra_cycle(km.su2_structure(), [[1, 0, 0], [0, 1, 0], [0, 0, 1]], k)
    _check_vertices(cycle, args.max_vertices)
    return {"cycle": cycle, "Z": fc.partition_function(a, prop, cycle)}


def cmd_selftest(doc, args):
    root = Path(__file__).resolve().parents[2]
    suite = root / "tests" / "test_acceptance.py"
    if not suite.exists():
        raise ValidationError(f"acceptance suite not found at {suite}")
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-s", str(suite)],
                          cwd=root, capture_output=True, text=True)
    lines = [ln for ln in proc.stdout.splitlines() if ln.startswith(("PASS", "FAIL"))]
    out = {"criteria": lines, "exit_status": proc.returncode, "ok": proc.returncode == 0}
    if proc.returncode:
        raise InvariantViolation("acceptance suite reported failures", out)
    return out


COMMANDS = {
    "wick": cmd_wick,
    "bv-check": cmd_bv_check,
    "graph-diff": cmd_graph_diff,
    "kontsevich": cmd_kontsevich,
    "frobenius": cmd_frobenius,
    "selftest": cmd_selftest,
}


def _env(name: str, default, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    if raw is None:
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ValidationError(f"bad value {raw!r} for {ENV_PREFIX}{name}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", default=_env("INPUT", None), help="JSON file, or '-' for stdin")
    common.add_argument("--json", default=None, help="inline JSON document")
    common.add_argument("--format", choices=("json", "text"), default=_env("FORMAT", "json"))
    common.add_argument("--max-legs", type=int, default=_env("MAX_LEGS", we.DEFAULT_MAX_LEGS, int))
    common.add_argument("--max-vertices", type=int, default=_env("MAX_VERTICES", gc.DEFAULT_MAX_VERTICES, int))
    common.add_argument("--seed", type=int, default=_env("SEED", 0, int))
    parser = argparse.ArgumentParser(prog="bvgraph", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "frobenius":
            p.add_argument("action", nargs="?", choices=FROBENIUS_ACTIONS)
    return parser


def run(argv=None) -> tuple[int, str]:
    """Parse ``argv``, run the subcommand and return (exit status, output text)."""
    try:
        parser = build_parser()
    except ValidationError as exc:
        return exc.exit_code, dump(_error_doc(exc), "json")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (2 if exc.code else 0), ""
    if args.max_legs < 1 or args.max_vertices < 1:
        return 2, dump(_error_doc(ValidationError("caps must be positive")), args.format)
    try:
        result = COMMANDS[args.command](_load(args), args)
        return 0, dump(encode(result), args.format)
    except BVGraphError as exc:
        return exc.exit_code, dump(_error_doc(exc), args.format)
    except RecursionError:
        exc = CapExceededError("input too large (recursion limit)")
        return exc.exit_code, dump(_error_doc(exc), args.format)


def _error_doc(exc: BVGraphError) -> dict:
    doc = {"error": {"code": exc.exit_code, "type": type(exc).__name__, "message": str(exc.args[0])}}
    if len(exc.args) > 1:
        doc["result"] = encode(exc.args[1])
    return doc


def main(argv=None) -> int:
    status, text = run(argv)
    if text:
        print(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
