"""Command-line surface: certify, verify, minimize, and bound evaluation.

Human-readable progress goes to stdout; every outcome (success or
failure) additionally emits one line of structured JSON on stderr so a
harness can consume results without parsing prose.  Certificate files
are written atomically and are byte-identical across reruns with the
same configuration and seed.

Exit codes: 0 exact certificate, 2 numeric certificate, 10 validation,
11 indefinite side condition, 12 nonpositive target, 13 search/budget
exhausted, 14 cap exceeded, 15 verification failure, 20 I/O or schema
trouble.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Any

from .certificate import (
    BoundInputs,
    TIER_EXACT,
    TIER_NUMERIC,
    base_cache_from_obj,
    base_cache_to_obj,
    certificate_from_obj,
    certificate_to_obj,
    theorem_bound,
    verify_certificate,
)
from .certified import certified_cylinder_min
from .errors import (
    BelowThresholdError,
    BudgetExhaustedError,
    CapExceededError,
    CylcertError,
    IdentityMismatchError,
    IndefiniteConditionError,
    NonpositiveWitnessError,
    NotNonnegativeError,
    ResolutionExhaustedError,
    RoundingFailedError,
    SchemaError,
    SearchExhaustedError,
    ShapeMismatchError,
    SosStalledError,
    ValidationError,
    VerificationError,
)
from .perturb import LAMBDA_CAP_DEFAULT
from .pipeline import RunConfig, certify_problem
from .problem import (
    BOX,
    CylinderProblem,
    problem_from_obj,
    rescale_to_simplex,
    validate_problem,
)
from .putinar_base import BUDGET_CAP
from .serialize import (
    atomic_write_text,
    canonical_dumps,
    frac_from_str,
    frac_to_str,
    load_json,
    parse_scaled_int,
    sha256_of_obj,
)

EXIT_EXACT = 0
EXIT_NUMERIC = 2
EXIT_VALIDATION = 10
EXIT_INDEFINITE = 11
EXIT_NONPOSITIVE = 12
EXIT_EXHAUSTED = 13
EXIT_CAP = 14
EXIT_VERIFY = 15
EXIT_IO = 20

_EXIT_FOR = {
    SchemaError: EXIT_IO,
    ShapeMismatchError: EXIT_IO,
    IndefiniteConditionError: EXIT_INDEFINITE,
    NonpositiveWitnessError: EXIT_NONPOSITIVE,
    NotNonnegativeError: EXIT_NONPOSITIVE,
    BelowThresholdError: EXIT_EXHAUSTED,
    ResolutionExhaustedError: EXIT_EXHAUSTED,
    SearchExhaustedError: EXIT_EXHAUSTED,
    BudgetExhaustedError: EXIT_EXHAUSTED,
    SosStalledError: EXIT_EXHAUSTED,
    RoundingFailedError: EXIT_EXHAUSTED,
    CapExceededError: EXIT_CAP,
    IdentityMismatchError: EXIT_VERIFY,
    VerificationError: EXIT_VERIFY,
    ValidationError: EXIT_VALIDATION,
}


def _exit_code_for(exc: CylcertError) -> int:
    for klass in type(exc).__mro__:
        if klass in _EXIT_FOR:
            return _EXIT_FOR[klass]
    return EXIT_VALIDATION


def _emit(obj: dict[str, Any]) -> None:
    """One structured line on the side channel."""
    print(json.dumps(obj, sort_keys=True, default=str), file=sys.stderr)


def _fail(exc: CylcertError) -> int:
    code = _exit_code_for(exc)
    print(f"error[{exc.code}]: {exc}")
    _emit({"error": exc.code, "message": str(exc), "payload": exc.payload})
    return code


def _load_problem(path: str) -> CylinderProblem:
    return problem_from_obj(load_json(path))


def _fraction_arg(text: str) -> Fraction:
    try:
        return frac_from_str(text)
    except (CylcertError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _scaled_int_arg(text: str) -> int:
    try:
        return parse_scaled_int(text)
    except (CylcertError, ValueError) as exc:
        raise argparse.ArgumentTypeError(
            f"not an integer (plain or base^exp): {text!r}"
        ) from exc


def _constraints_key(problem: CylinderProblem) -> str:
    """Cache key for facet witnesses: the solving-frame constraint list."""
    from .problem import problem_to_obj

    solving = problem
    if problem.frame == BOX:
        solving, _ = rescale_to_simplex(problem)
    obj = problem_to_obj(solving)
    return sha256_of_obj({"g": obj["g"], "n": obj["n"], "variant": obj["variant"]})


def cmd_certify(args: argparse.Namespace) -> int:
    try:
        problem = _load_problem(args.input)
    except CylcertError as exc:
        return _fail(exc)
    config = RunConfig(
        tier=args.tier,
        grid_depth=args.grid_depth,
        lambda_cap=args.lambda_cap,
        seed=args.seed,
        c=args.c,
        budget_cap=args.budget_cap,
        threads=args.threads,
    )

    cache_path = args.output + ".basecache.json"
    key = _constraints_key(problem)
    precomputed = None
    try:
        precomputed = base_cache_from_obj(load_json(cache_path), key, problem.shape)
    except (OSError, CylcertError, ValueError):
        precomputed = None

    try:
        result = certify_problem(problem, config, precomputed_base=precomputed)
    except CylcertError as exc:
        return _fail(exc)

    cert = result.certificate
    atomic_write_text(args.output, canonical_dumps(certificate_to_obj(cert)) + "\n")
    if result.base_cache:
        atomic_write_text(
            cache_path,
            canonical_dumps(base_cache_to_obj(key, result.base_cache)) + "\n",
        )
    if args.diagnostics:
        atomic_write_text(
            args.diagnostics,
            json.dumps(result.diagnostics, indent=2, sort_keys=True, default=str)
            + "\n",
        )

    meta = cert.meta
    print(f"certificate tier: {cert.tier}")
    print(
        f"lambda {frac_to_str(meta.lam)}  k {meta.k}  N {meta.polya_exponent}  "
        f"ell {meta.ell}  c9 {meta.c9}"
    )
    print(f"certified floor: {frac_to_str(meta.fstar_lb)}")
    print(f"wrote {args.output}")
    _emit(
        {
            "tier": cert.tier,
            "problem_hash": cert.problem_hash,
            "output": args.output,
            "lambda": frac_to_str(meta.lam),
            "k": meta.k,
            "N": meta.polya_exponent,
            "ell": meta.ell,
            "c9": meta.c9,
            "fstar_lb": frac_to_str(meta.fstar_lb),
        }
    )
    return EXIT_EXACT if cert.tier == TIER_EXACT else EXIT_NUMERIC


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        problem = _load_problem(args.problem)
        cert = certificate_from_obj(load_json(args.certificate), problem.shape)
    except CylcertError as exc:
        return _fail(exc)
    try:
        report = verify_certificate(problem, cert, require_tier=args.tier)
    except CylcertError as exc:
        return _fail(exc)
    print(f"certificate verifies at tier {report.tier}")
    _emit(report.to_obj())
    return EXIT_EXACT


def cmd_minimize(args: argparse.Namespace) -> int:
    if args.target != "f":
        print(f"error[VALIDATION]: unknown minimization target {args.target!r}")
        _emit({"error": "VALIDATION", "message": f"unknown target {args.target!r}"})
        return EXIT_VALIDATION
    try:
        problem = _load_problem(args.input)
        report = validate_problem(problem, seed=args.seed)
        solving = problem
        fallback = report.feasible.x if report.feasible else None
        if problem.frame == BOX:
            solving, record = rescale_to_simplex(problem)
            if fallback is not None:
                fallback = tuple(record.forward_coord(v) for v in fallback)
        found = certified_cylinder_min(
            solving, fallback_x=fallback, depth_cap=args.grid_depth
        )
    except CylcertError as exc:
        return _fail(exc)
    print(f"certified lower bound: {frac_to_str(found.lower_bound)}")
    print(f"  ~ {float(found.lower_bound):.6g} at grid depth {found.grid_depth}")
    _emit(found.to_obj())
    return EXIT_EXACT


def cmd_bound(args: argparse.Namespace) -> int:
    try:
        inputs = BoundInputs(
            c=args.c,
            d=args.d,
            m=args.m,
            r=args.r,
            n=args.n,
            f_norm=args.fnorm,
            fstar=args.fstar,
        )
        value = theorem_bound(args.theorem, inputs)
    except CylcertError as exc:
        return _fail(exc)
    print(f"degree bound ({args.theorem}): {frac_to_str(value)}")
    try:
        approx = f"{float(value):.6g}"
    except OverflowError:
        # Tower-style formulas overflow IEEE doubles long before the exact
        # rational becomes unwieldy; report the order of magnitude instead.
        log10 = (value.numerator.bit_length() - value.denominator.bit_length()) * 0.30103
        approx = f"10^{log10:.0f}"
    print(f"  ~ {approx}")
    _emit({"theorem": args.theorem, "bound": frac_to_str(value)})
    return EXIT_EXACT


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cylcert",
        description=(
            "Exact positivity certificates for polynomials on cylinders "
            "(a compact set times unbounded variables)."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cert = sub.add_parser("certify", help="produce a certificate for a problem file")
    cert.add_argument("--input", required=True, help="problem JSON file")
    cert.add_argument("--output", required=True, help="certificate JSON file to write")
    cert.add_argument(
        "--tier",
        choices=(TIER_EXACT, TIER_NUMERIC),
        default=TIER_EXACT,
        help="weakest acceptable certificate tier",
    )
    cert.add_argument("--grid-depth", type=int, default=24, help="grid refinement cap")
    cert.add_argument(
        "--lambda-cap",
        type=_scaled_int_arg,
        default=LAMBDA_CAP_DEFAULT,
        help="perturbation weight cap (accepts forms like 2^40)",
    )
    cert.add_argument("--seed", type=int, default=0, help="validation sampling seed")
    cert.add_argument(
        "--c", type=_fraction_arg, default=Fraction(1), help="bound-formula constant"
    )
    cert.add_argument(
        "--budget-cap", type=int, default=BUDGET_CAP, help="facet witness degree cap"
    )
    cert.add_argument("--threads", type=int, default=1, help="accepted; runs single-threaded")
    cert.add_argument("--diagnostics", help="write full stage evidence JSON here")
    cert.set_defaults(func=cmd_certify)

    ver = sub.add_parser("verify", help="check a certificate against a problem file")
    ver.add_argument("--problem", required=True, help="problem JSON file")
    ver.add_argument("--certificate", required=True, help="certificate JSON file")
    ver.add_argument(
        "--tier",
        choices=(TIER_EXACT, TIER_NUMERIC),
        default=TIER_EXACT,
        help="demanded tier",
    )
    ver.set_defaults(func=cmd_verify)

    mini = sub.add_parser("minimize", help="certified lower bound for the target")
    mini.add_argument("--input", required=True, help="problem JSON file")
    mini.add_argument("--target", default="f", help="what to minimize (only 'f')")
    mini.add_argument("--grid-depth", type=int, default=24, help="grid refinement cap")
    mini.add_argument("--seed", type=int, default=0, help="validation sampling seed")
    mini.set_defaults(func=cmd_minimize)

    bnd = sub.add_parser("bound", help="evaluate a sigma-degree bound formula")
    bnd.add_argument(
        "--theorem",
        required=True,
        choices=("1.1", "1.2", "1.3", "1.4", "1.5", "2.3"),
        help="which bound formula",
    )
    bnd.add_argument("--c", type=_fraction_arg, default=Fraction(1))
    bnd.add_argument("--d", type=int, required=True)
    bnd.add_argument("--m", type=int, default=2)
    bnd.add_argument("--r", type=int, default=1)
    bnd.add_argument("--n", type=int, required=True)
    bnd.add_argument("--fnorm", type=_fraction_arg, required=True)
    bnd.add_argument("--fstar", type=_fraction_arg, required=True)
    bnd.set_defaults(func=cmd_bound)
    return parser


def main(argv: list[str] | None = None) -> int:
    # The bound formulas yield exact rationals whose digit counts exceed
    # CPython's default int-to-str conversion limit.
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    # argparse exits 2 on usage errors, which this tool reserves for
    # numeric-tier success; remap those to the validation code.
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_EXACT if not exc.code else EXIT_VALIDATION
    try:
        return args.func(args)
    except OSError as exc:
        print(f"error[IO]: {exc}")
        _emit({"error": "IO", "message": str(exc)})
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
