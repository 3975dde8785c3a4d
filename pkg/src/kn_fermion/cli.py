"""Command line entry point: ``kn-fermion <command> ...``.

Exit status is 0 when every check passes, 1 when a check fails and 2 for
unusable input.  Reports are JSON (floats with 17 significant digits) or a
flat CSV projection of their rows.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import re
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import affine_action as aa
from .curve_models import curve_from_dict, curve_to_dict, make_rational_curve
from .equivalence_lab import (
    FermionRepData,
    WedgeIsomorphism,
    check_intertwining,
    highest_monomial_image,
    highest_weight_eigenvalue,
    stabilizer_nullity,
)
from .errors import CheckFailure, ConfigError, KNError
from .framed_bundles import bundle_from_dict, random_framed_bundle
from .kn_scalar_basis import (
    band_width,
    cocycle_gamma,
    product_reach,
    sample_products,
    scalar_basis,
    verify_quasigrading,
)
from .kn_vector_basis import (
    ActionConstants,
    action_table,
    constants_from_dict,
    constants_to_dict,
    index_map,
    psi_diagnostics,
    vector_basis,
)
from .wedge_module import (
    act_banded,
    excitations,
    vacuum,
    vacuum_projection,
    vacuum_weight_formula,
    verify_commutators,
)

log = logging.getLogger("kn_fermion")

DEFAULT_TOL = 1e-7


# -- serialization --------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj) if obj.denominator != 1 else obj.numerator
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        c = complex(obj)
        return [c.real, c.imag]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def _dump(obj, indent=0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}  {json.dumps(k)}: {_dump(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + "  " + _dump(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, float):
        if math.isnan(obj) or math.isinf(obj):
            return json.dumps(str(obj))
        return "%.17g" % obj
    return json.dumps(obj)


def to_json(report: dict) -> str:
    return _dump(_plain(report)) + "\n"


def to_csv(report: dict) -> str:
    rows = _plain(report.get("rows", []))
    buf = io.StringIO()
    if not rows:
        return ""
    keys = []
    for r in rows:
        for k in r:
            if k not in keys:
                keys.append(k)
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("%.17g" % v if isinstance(v, float) else json.dumps(v) if isinstance(v, list) else v)
                    for k, v in r.items()})
    return buf.getvalue()


def emit(report: dict, path: str | None, fmt: str):
    text = to_csv(report) if fmt == "csv" else to_json(report)
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


# -- inputs ---------------------------------------------------------------------

def _load_json(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"no such file: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def load_curve(path: str | None):
    if path is None:
        return make_rational_curve()
    return curve_from_dict(_load_json(path))


def load_bundle(args, curve):
    if getattr(args, "bundle", None):
        doc = _load_json(args.bundle)
        if "points" not in doc and curve.genus > 0:
            return random_framed_bundle(curve, int(doc.get("rank", args.rank or 1)), int(doc.get("seed", 0)))
        if "points" not in doc:
            return random_framed_bundle(curve, int(doc.get("rank", 1)), int(doc.get("seed", 0)))
        return bundle_from_dict(doc, curve)
    return random_framed_bundle(curve, args.rank or 1, args.seed)


def parse_range(text: str) -> range:
    m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text or "")
    if not m:
        raise ConfigError(f"range must look like a..b, got {text!r}")
    a, b = int(m.group(1)), int(m.group(2))
    if b < a:
        raise ConfigError(f"empty range {text!r}")
    return range(a, b + 1)


def parse_rep(text: str):
    m = re.fullmatch(r"sl2:(\d+)", text or "")
    if not m or int(m.group(1)) < 1:
        raise ConfigError(f"representation must look like sl2:<dim>, got {text!r}")
    return aa.sl2_irrep(int(m.group(1)))


def parse_element(text: str):
    m = re.fullmatch(r"([efh])@(-?\d+)", text or "")
    if not m:
        raise ConfigError(f"element must look like h@m with a generator in e, f, h; got {text!r}")
    return m.group(1), int(m.group(2))


def parse_gamma(text: str):
    try:
        doc = json.loads(Path(text).read_text()) if Path(text).is_file() else json.loads(text)
        rows = [[_entry(v) for v in row] for row in doc]
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise ConfigError(f"gamma must be a JSON matrix: {exc}") from None
    exact = all(isinstance(v, Fraction) for r in rows for v in r)
    return np.array(rows, dtype=object if exact else complex)


def _entry(v):
    if isinstance(v, list):
        return complex(v[0], v[1])
    if isinstance(v, float) and not v.is_integer():
        return v
    return Fraction(v)


def tolerance(args) -> float:
    if args.tol is not None:
        tol = args.tol
    else:
        try:
            tol = float(os.environ.get("KN_FERMION_TOL", DEFAULT_TOL))
        except ValueError:
            raise ConfigError("KN_FERMION_TOL must be a number") from None
    if not tol > 0:
        raise ConfigError("tolerance must be positive")
    return tol


def _constants(args, curve, bundle):
    if getattr(args, "ctable", None):
        try:
            doc = _load_json(args.ctable)
            # a whole vector-basis report is accepted as well as its "constants" part
            table = constants_from_dict(doc.get("constants", doc) if isinstance(doc, dict) else doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed constants table: {exc}") from None
        if table.rank != bundle.rank:
            raise ConfigError(f"constants table has rank {table.rank}, bundle has {bundle.rank}")
        return table
    return vector_basis(curve, bundle)


def _check(name, passed, **data) -> dict:
    data.pop("ok", None)
    return {"check": name, "pass": bool(passed), **data}


def _finish(report: dict, args):
    fails = [r for r in report["rows"] if not r["pass"]]
    report["summary"] = {"checks": len(report["rows"]), "failed": len(fails)}
    report["status"] = "pass" if not fails else "fail"
    emit(report, args.emit, args.format)
    if fails:
        names = ", ".join(r.get("commutator", r["check"]) for r in fails[:5])
        raise CheckFailure(f"{len(fails)} check(s) failed: {names}")


def _header(command, args, curve=None, bundle=None) -> dict:
    h = {"command": command, "seed": args.seed}
    if curve is not None:
        h["curve"] = curve_to_dict(curve)
    if bundle is not None:
        h["bundle"] = {"rank": bundle.rank, "points": len(bundle.points), "seed": bundle.seed}
    return h


# -- commands ---------------------------------------------------------------------

def cmd_scalar_basis(args) -> None:
    curve = load_curve(args.curve)
    tol = tolerance(args)
    rng = parse_range(args.range)
    basis = scalar_basis(curve)
    report = _header("scalar-basis", args, curve)
    rows, expansions = [], {}
    for m in rng:
        el = basis[m]
        s = el.series("+", 4)
        lead = s.coefficient(m)
        expansions[str(m)] = {"plus": [s.coefficient(k) for k in range(m, m + 4)],
                              "eps_minus": el.eps_minus, "alpha_minus": el.alpha_minus}
        rows.append(_check(f"A_{m} leading coefficient", abs(complex(lead) - 1) <= tol, m=m,
                           observed=lead, expected=1))
    products = sample_products(curve, rng, rng)
    q = verify_quasigrading(products, tol)
    rows.append(_check("quasigrading", q.ok and q.upper_shift <= product_reach(curve.genus) and q.lower_shift == 0,
                       R=q.lower_shift, S=q.upper_shift))
    report["expansions"] = expansions
    report["structure_constants"] = {f"{m},{n}": {str(h): c for h, c in sorted(cs.items())}
                                     for (m, n), cs in sorted(products.items())}
    report["rows"] = rows
    _finish(report, args)


def cmd_vector_basis(args) -> None:
    curve = load_curve(args.curve)
    bundle = load_bundle(args, curve)
    tol = tolerance(args)
    rng = parse_range(args.range)
    vb = vector_basis(curve, bundle)
    report = _header("vector-basis", args, curve, bundle)
    rows, psis = [], {}
    for n in rng:
        psi = vb.psi(n)
        d = psi_diagnostics(psi, bundle)
        psis[str(n)] = {"xi_plus": psi.xi_plus(0), "xi_minus": psi.xi_minus(0), **d}
        ok = d["raw_nullity"] == bundle.rank and d["normalized_nullity"] == 0 and d["tyurin_defect"] <= tol
        rows.append(_check(f"psi_{n}", ok, n=n, raw_nullity=d["raw_nullity"],
                           tyurin_defect=d["tyurin_defect"]))
    table = action_table(curve, bundle, rng, rng, basis=vb)
    bad = table.band_violations(max(tol, 1e-8))
    rows.append(_check("band", not bad, violations=len(bad)))
    report["psi"] = psis
    report["constants"] = constants_to_dict(table)
    report["rows"] = rows
    _finish(report, args)


def _generator_pairs(ms):
    gens = ("e", "f", "h")
    return [((x, m), (y, n)) for x in gens for y in gens for m in ms for n in ms if (x, m) < (y, n)]


def cmd_action(args) -> None:
    curve = load_curve(args.curve)
    tau = parse_rep(args.rep)
    args.rank = args.rank or tau.dim
    bundle = load_bundle(args, curve)
    if tau.dim != bundle.rank:
        raise ConfigError(f"representation dimension {tau.dim} does not match bundle rank {bundle.rank}")
    tol = 0.0 if curve.genus == 0 else tolerance(args)
    x, m = parse_element(args.element)
    window = parse_range(args.window)
    C = _constants(args, curve, bundle)
    op = aa.tensor_action_operator(x, m, tau, C, curve.genus)
    rows_idx = range(window.start + min(op.lo, 0), window.stop + max(op.hi, 0))
    try:
        mat = op.materialize(rows_idx, window)
    except aa.WindowTooSmall as exc:
        raise ConfigError(str(exc)) from None
    report = _header("action", args, curve, bundle)
    report["element"] = args.element
    report["band"] = [op.lo, op.hi]
    report["rows_index"] = list(rows_idx)
    report["cols_index"] = list(window)
    report["matrix"] = mat
    gl = bundle.rank ** 2 * band_width(curve.genus, m)
    checks = [_check("band", True, lo=op.lo, hi=op.hi, certified_width=gl)]
    lo_n = min(aa.index_inverse(N, tau.dim)[0] for N in window)
    hi_n = max(aa.index_inverse(N, tau.dim)[0] for N in window)
    ms = sorted({0, m, -m} if m else {-1, 0, 1})
    cols = [N for N in window]
    for rec in aa.representation_defects(curve, tau, C, _generator_pairs(ms), cols, tol):
        checks.append(_check("representation", rec["ok"] or rec["columns"] == 0, **rec))
    report["n_span"] = [lo_n, hi_n]
    report["rows"] = checks
    _finish(report, args)


def cmd_wedge_commutators(args) -> None:
    rng = parse_range(args.range)
    rep = verify_commutators(rng.start, rng.stop - 1, args.charge)
    report = {"command": "wedge verify-commutators", **rep.as_dict()}
    report["rows"] = [_check("commutators", rep.ok, checked=rep.checked, failures=len(rep.failures))]
    for f in rep.failures[:20]:
        report["rows"].append(_check("commutator", False, commutator=f"[E{f[0]},{f[1]}, E{f[2]},{f[3]}]"))
    _finish(report, args)


def cmd_wedge_vacuum_weight(args) -> None:
    curve = load_curve(args.curve)
    bundle = load_bundle(args, curve)
    tol = tolerance(args)
    l = bundle.rank
    C = _constants(args, curve, bundle)
    op = aa.a_action_operator(args.m, C, l, curve.genus)
    wedge = vacuum_projection(op, args.M)
    formula = vacuum_weight_formula(C, args.m, args.M, l)
    dev = abs(complex(wedge) - complex(formula))
    report = _header("wedge vacuum-weight", args, curve, bundle)
    report.update({"m": args.m, "M": args.M, "wedge": wedge, "formula": formula})
    report["rows"] = [_check("vacuum weight", dev <= (0 if curve.genus == 0 else tol), deviation=dev)]
    _finish(report, args)


def cmd_equiv_check(args) -> None:
    curve = load_curve(args.curve)
    tau = parse_rep(args.rep)
    args.rank = args.rank or tau.dim
    bundle = load_bundle(args, curve)
    gamma = parse_gamma(args.gamma)
    if gamma.shape != (tau.dim, tau.dim):
        raise ConfigError(f"gamma must be {tau.dim}x{tau.dim}")
    tol = 0.0 if curve.genus == 0 else tolerance(args)
    rep1 = FermionRepData(curve, bundle, tau)
    rep2 = rep1.reframed(gamma)
    iso = WedgeIsomorphism("tilde_gamma", gamma)
    vecs = excitations(0, args.window)
    elements = [(x, m) for x in ("e", "f", "h") for m in range(-2, 3)]
    rep = check_intertwining(rep1, rep2, iso, elements, vecs, tol)
    report = _header("equiv check", args, curve, bundle)
    report["intertwining"] = rep.as_dict()
    report["rows"] = [_check("intertwining", rep.ok, max_deviation=rep.max_deviation, checked=rep.checked),
                      _check("schur", stabilizer_nullity(tau) == 1, nullity=stabilizer_nullity(tau))]
    _finish(report, args)


def cmd_full_suite(args) -> None:
    curve = load_curve(args.curve)
    bundle = load_bundle(args, curve)
    l = bundle.rank
    tau = aa.sl2_irrep(l)
    exact = curve.genus == 0
    tol = tolerance(args)
    t = 0.0 if exact else tol
    rows = []
    basis = scalar_basis(curve)
    for m in range(-4, 5):
        lead = basis[m].series("+", 1).coefficient(m)
        rows.append(_check(f"A_{m} leading coefficient", abs(complex(lead) - 1) <= t, observed=lead))
    q = verify_quasigrading(sample_products(curve, range(-3, 4), range(-3, 4)), 1e-8)
    rows.append(_check("quasigrading", q.ok and q.lower_shift == 0 and q.upper_shift <= product_reach(curve.genus),
                       R=q.lower_shift, S=q.upper_shift))
    if exact:
        alg = aa.sl2()
        x, y = alg.basis["e"], alg.basis["f"]
        bad = [(n, m) for n in range(-4, 5) for m in range(-4, 5)
               if cocycle_gamma(x, basis.function(n), y, basis.function(m), alg.form)
               != n * (n + m == 0) * alg.form(x, y)]
        rows.append(_check("cocycle closed form", not bad, mismatches=bad))
    vb = vector_basis(curve, bundle)
    for n in range(-3, 4):
        d = psi_diagnostics(vb.psi(n), bundle)
        rows.append(_check(f"psi_{n}", d["raw_nullity"] == l and d["normalized_nullity"] == 0
                           and d["tyurin_defect"] <= tol, raw_nullity=d["raw_nullity"]))
    C = _constants(args, curve, bundle)
    if isinstance(C, ActionConstants):
        bad = C.band_violations(1e-8)
    else:
        bad = action_table(curve, bundle, range(-2, 3), range(-2, 3), basis=vb).band_violations(1e-8)
    rows.append(_check("band", not bad, violations=len(bad)))
    cols = range(index_map(-1, l - 1, 1, l), index_map(2, 0, l, l) + 1)
    for rec in aa.representation_defects(curve, tau, C, _generator_pairs([-1, 0, 1]), cols, t):
        rows.append(_check("representation", rec["ok"], **rec))
    wc = verify_commutators(-3, 3, 0, fast=False)
    rows.append(_check("wedge commutators", wc.ok, checked=wc.checked))
    for m in range(-curve.genus - 1, 2):
        op = aa.a_action_operator(m, C, l, curve.genus)
        for M in (-3, -1, 2):
            a, b = vacuum_projection(op, M), vacuum_weight_formula(C, m, M, l)
            rows.append(_check("vacuum weight", abs(complex(a) - complex(b)) <= t, m=m, M=M, wedge=a, formula=b))
    rows.append(_check("schur", stabilizer_nullity(tau) == 1, nullity=stabilizer_nullity(tau)))
    rep = FermionRepData(curve, bundle, tau, C)
    if l > 1:
        M = index_map(0, 0, l, l)
        lam = highest_weight_eigenvalue(rep, "h", M)
        rows.append(_check("highest weight", lam == l - 1, observed=lam, expected=l - 1))
        for x in ("e", "f", "h"):
            dev = (act_banded(aa.g_action_operator(x, tau), vacuum(M)) - highest_monomial_image(rep, x, M)).norm()
            rows.append(_check(f"highest monomial {x}", dev <= t, deviation=dev))
        gamma = aa.exact_matrix([[2, 1], [1, 1]] if l == 2 else
                                [[int(i == j) + int(j == i + 1) for j in range(l)] for i in range(l)])
        if not exact:
            gamma = gamma.astype(complex)
        iso = WedgeIsomorphism("tilde_gamma", gamma)
        ir = check_intertwining(rep, rep.reframed(gamma), iso, [("e", 1), ("f", -1), ("h", 0)],
                                excitations(0, 8), t)
        rows.append(_check("intertwining", ir.ok, max_deviation=ir.max_deviation))
    report = _header("full-suite", args, curve, bundle)
    report["rows"] = rows
    _finish(report, args)


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--emit", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--tol", type=float, help="numeric tolerance (default: $KN_FERMION_TOL or 1e-7)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    geo = argparse.ArgumentParser(add_help=False)
    geo.add_argument("--curve", help="curve JSON file (default: the rational curve)")
    geo.add_argument("--bundle", help="bundle JSON file")
    geo.add_argument("--rank", type=int, help="rank of a random bundle when no file is given")
    geo.add_argument("--ctable", help="precomputed constants table (JSON)")

    p = argparse.ArgumentParser(prog="kn-fermion", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scalar-basis", parents=[common, geo], help="A_m expansions and products")
    s.add_argument("--range", required=True)
    s.set_defaults(func=cmd_scalar_basis)

    s = sub.add_parser("vector-basis", parents=[common, geo], help="Psi_n and the constants table")
    s.add_argument("--range", required=True)
    s.set_defaults(func=cmd_vector_basis)

    s = sub.add_parser("action", parents=[common, geo], help="materialized operator of x A_m")
    s.add_argument("--rep", required=True)
    s.add_argument("--element", required=True)
    s.add_argument("--window", required=True)
    s.set_defaults(func=cmd_action)

    w = sub.add_parser("wedge", help="semi-infinite wedge checks")
    wsub = w.add_subparsers(dest="wedge_command", required=True)
    s = wsub.add_parser("verify-commutators", parents=[common])
    s.add_argument("--range", default="-6..6")
    s.add_argument("--charge", type=int, default=0)
    s.set_defaults(func=cmd_wedge_commutators)
    s = wsub.add_parser("vacuum-weight", parents=[common, geo])
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--M", type=int, required=True)
    s.set_defaults(func=cmd_wedge_vacuum_weight)

    e = sub.add_parser("equiv", help="equivalence checks")
    esub = e.add_subparsers(dest="equiv_command", required=True)
    s = esub.add_parser("check", parents=[common, geo])
    s.add_argument("--gamma", required=True, help="JSON matrix or a file holding one")
    s.add_argument("--rep", required=True)
    s.add_argument("--window", type=int, default=40)
    s.set_defaults(func=cmd_equiv_check)

    s = sub.add_parser("full-suite", parents=[common, geo], help="run every check")
    s.set_defaults(func=cmd_full_suite)
    return p


_RANGE_ARG = re.compile(r"^-\d+\.\.-?\d+$")


def _preprocess(argv):
    """Glue ``--flag -6..6`` into ``--flag=-6..6`` so negative ranges are not read as options."""
    out = []
    for a in argv:
        if _RANGE_ARG.match(a) and out and out[-1].startswith("--") and "=" not in out[-1]:
            out[-1] = f"{out[-1]}={a}"
        else:
            out.append(a)
    return out


def main(argv=None) -> int:
    argv = _preprocess(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except CheckFailure as exc:
        print(f"kn-fermion: FAIL: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"kn-fermion: error: {exc}", file=sys.stderr)
        return 2
    except KNError as exc:
        print(f"kn-fermion: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
