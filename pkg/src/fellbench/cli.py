"""Command-line front end: validate, algebras, ap, absorb, gen.

Exit codes: 0 pass, 1 semantic failure, 2 input error. Reports go to
standard output as JSON; diagnostics to standard error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io as fio
from . import linalg as la
from .absorption import (NotASection, ap_check, ap_synthesize, carrier_representation,
                         validate_representation, verify_absorption, witness_from_groupoid_section)
from .bundle import check_commutation, from_isg_action, validate_bundle
from .envelope import default_seed, envelope, matrix_algebra_blocks
from .sections import (crossed_product, regular_representation, universal_quotient,
                       weak_containment_report)
from .presets import preset_bundle


class SemanticFailure(Exception):
    pass


def _tolerances(args) -> dict:
    return {"tol": args.tol}


def cmd_validate(args) -> int:
    data = fio.load_json(args.bundle)
    bundle = fio.bundle_from_dict(data, tol=args.tol)   # raises on axiom failure
    report_v = validate_bundle(bundle, args.tol)
    report_c = check_commutation(bundle, args.tol)
    verdict = "pass" if not report_c.failures else "fail"
    metrics = {
        "carrier_dim": bundle.carrier_dim,
        "fiber_dims": report_v.fiber_dims,
        "axiom_defect": report_v.max_defect(),
        "commutation_defect": report_c.max_defect(),
        "failures": [list(map(str, f)) for f in report_c.failures],
    }
    fio.print_report(fio.make_report("validate", {args.bundle: fio.digest(args.bundle)},
                                     verdict, metrics, default_seed(), _tolerances(args)))
    return 0 if verdict == "pass" else 1


def cmd_algebras(args) -> int:
    data = fio.load_json(args.bundle)
    bundle = fio.bundle_from_dict(data, tol=args.tol)
    rng = np.random.default_rng(default_seed())
    metrics: dict = {}
    verdict = "pass"
    if args.which in ("full", "both"):
        uq = universal_quotient(bundle, args.tol)
        env = envelope(uq.algebra, rng, args.tol)
        metrics["dim_qc"] = uq.dim
        metrics["dim_cstar_max"] = env.dim
        metrics["blocks_max"] = sorted(env.block_sizes)
    if args.which in ("reduced", "both"):
        cp = crossed_product(bundle, args.tol)
        rr = regular_representation(bundle, args.tol)
        metrics["dim_calg"] = cp.dim
        metrics["dim_cstar_red"] = rr.presentation.algebra_dim
        metrics["blocks_red"] = sorted(matrix_algebra_blocks(
            rr.presentation.algebra_basis, rng, args.tol))
        metrics["gram_lambda_min_ratio"] = cp.lambda_min_ratio
    if args.which == "both":
        wc = weak_containment_report(bundle, args.tol, rng)
        metrics["weak_containment"] = wc.holds
        metrics["canonical_map_invertible"] = wc.canonical_map_invertible
        if not wc.holds:
            verdict = "fail"
    fio.print_report(fio.make_report("algebras", {args.bundle: fio.digest(args.bundle)},
                                     verdict, metrics, default_seed(), _tolerances(args)))
    return 0 if verdict == "pass" else 1


def cmd_ap(args) -> int:
    data = fio.load_json(args.bundle)
    bundle = fio.bundle_from_dict(data, tol=args.tol)
    inputs = {args.bundle: fio.digest(args.bundle)}
    if args.witness:
        wdata = fio.load_json(args.witness)
        witness = fio.witness_from_dict(wdata, bundle.carrier_dim)
        inputs[args.witness] = fio.digest(args.witness)
    else:
        adata = fio.load_json(args.synth)
        action = fio.action_from_dict(adata, bundle.semigroup)
        inputs[args.synth] = fio.digest(args.synth)
        germ_bundle = from_isg_action(bundle.semigroup, action, tol=args.tol)
        if [germ_bundle.fiber_dim(s) for s in bundle.semigroup.elements()] != \
                [bundle.fiber_dim(s) for s in bundle.semigroup.elements()]:
            raise SemanticFailure("action does not present the given bundle")
        for s in bundle.semigroup.elements():
            if bundle.fiber_dim(s) and la.residual_outside_span(
                    germ_bundle.fibers[s], bundle.fiber_onb[s], args.tol) > 1e-7:
                raise SemanticFailure("action does not present the given bundle")
        witness = ap_synthesize(germ_bundle, args.tol)
    report = ap_check(bundle, witness, args.tol)
    passes = report.defect <= max(args.tol, 1e-8)
    metrics = {"bound": report.bound, "defect": report.defect,
               "sections": len(witness.sections)}
    fio.print_report(fio.make_report("ap", inputs, "pass" if passes else "fail",
                                     metrics, default_seed(), _tolerances(args)))
    return 0 if passes else 1


def cmd_absorb(args) -> int:
    data = fio.load_json(args.bundle)
    bundle = fio.bundle_from_dict(data, tol=args.tol)
    rdata = fio.load_json(args.rep)
    rep = fio.representation_from_dict(rdata, bundle)
    val = validate_representation(bundle, rep, args.tol)
    if not val.nondegenerate:
        raise SemanticFailure("representation is degenerate")
    rpt = verify_absorption(bundle, rep, args.tol)
    metrics = {"unitarity_defect": rpt.unitarity_defect,
               "intertwining_defect": rpt.intertwining_defect,
               "pi1_faithful": rpt.pi1_faithful}
    if rpt.pi1_faithful:
        metrics["generated_dim"] = rpt.generated_dim
        metrics["reduced_dim"] = rpt.reduced_dim
    verdict = "pass" if rpt.ok else "fail"
    fio.print_report(fio.make_report(
        "absorb", {args.bundle: fio.digest(args.bundle), args.rep: fio.digest(args.rep)},
        verdict, metrics, default_seed(), _tolerances(args)))
    return 0 if verdict == "pass" else 1


def cmd_gen(args) -> int:
    bundle = preset_bundle(args.preset, args.params)
    os.makedirs(args.out, exist_ok=True)
    base = os.path.join(args.out, bundle.name)
    paths = {}
    fio.dump_json(fio.bundle_to_dict(bundle), base + ".bundle.json")
    paths["bundle"] = base + ".bundle.json"
    if bundle.germ is not None:
        fio.dump_json(fio.action_to_dict(bundle.germ.action), base + ".action.json")
        paths["action"] = base + ".action.json"
        witness = ap_synthesize(bundle)
        fio.dump_json(fio.witness_to_dict(witness), base + ".witness.json")
        paths["witness"] = base + ".witness.json"
    rep = carrier_representation(bundle)
    fio.dump_json(fio.representation_to_dict(rep), base + ".rep.json")
    paths["rep"] = base + ".rep.json"
    check = validate_bundle(bundle, args.tol)
    metrics = {"name": bundle.name, "carrier_dim": bundle.carrier_dim,
               "semigroup_size": bundle.semigroup.size,
               "axiom_defect": check.max_defect(), "files": paths}
    fio.print_report(fio.make_report("gen", {}, "pass", metrics,
                                     args.seed if args.seed is not None else default_seed(),
                                     _tolerances(args)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fellbench",
                                description="finite Fell bundle workbench")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="validate a bundle file")
    v.add_argument("bundle")
    v.add_argument("--tol", type=float, default=1e-9)
    v.set_defaults(fn=cmd_validate)

    a = sub.add_parser("algebras", help="cross-sectional algebras and blocks")
    a.add_argument("bundle")
    a.add_argument("--which", choices=["full", "reduced", "both"], default="both")
    a.add_argument("--tol", type=float, default=1e-9)
    a.set_defaults(fn=cmd_algebras)

    ap = sub.add_parser("ap", help="approximation-property check/synthesis")
    ap.add_argument("bundle")
    group = ap.add_mutually_exclusive_group(required=True)
    group.add_argument("--witness")
    group.add_argument("--synth", metavar="ACTION")
    ap.add_argument("--tol", type=float, default=1e-9)
    ap.set_defaults(fn=cmd_ap)

    ab = sub.add_parser("absorb", help="verify the absorption principle")
    ab.add_argument("bundle")
    ab.add_argument("rep")
    ab.add_argument("--tol", type=float, default=1e-9)
    ab.set_defaults(fn=cmd_absorb)

    g = sub.add_parser("gen", help="generate preset bundle + companion files")
    g.add_argument("preset", choices=["trivial-group", "symmetric-inverse-monoid",
                                      "pair-groupoid", "semilattice-chain",
                                      "group-zero-line", "random"])
    g.add_argument("params", nargs="*")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=".")
    g.add_argument("--tol", type=float, default=1e-9)
    g.set_defaults(fn=cmd_gen)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is not None:
        os.environ["FB_SEED"] = str(args.seed)
    try:
        return args.fn(args)
    except fio.ParseError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (SemanticFailure, NotASection) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # bundle/rep axiom violations and numeric escapes
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
