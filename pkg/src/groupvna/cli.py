"""Command-line front door: parse group specs, dispatch verifiers, emit reports.

Exit codes: 0 pass/success, 1 verification failure, 2 usage error (including
malformed specs and commands inapplicable to the spec's family), 3
inconclusive.  Reports go to stdout (text or JSON with identical numeric
content); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import jsonutil
from .characters import character_table, class_data, validate_orthogonality
from .dichotomy import ClassifyOptions, classify, lemma10_sequence, replay_certificate
from .errors import (
    BudgetExceededError,
    ConsistencyError,
    DegenerateSpectrumError,
    DomainMismatchError,
    ParameterError,
    PreconditionError,
    RequiresFiniteError,
    SpecError,
    UnsupportedFamilyError,
)
from .fc_center import fc_filter
from .groups import (
    GroupHandle,
    Subgroup,
    construct_group,
    coordinate_subgroup,
    factor_subgroup,
    generate_closure,
)
from .vn_spectrum import (
    factor_spectrum,
    growth_search,
    icc_orthonormality_check,
    nonabelian_measure,
    product_projection_spectrum,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

_HEADER_NOTE = ("supported groups are families with decidable canonical forms; "
                "FC and abelian-by-finite hypotheses beyond these families must be "
                "declared in spec metadata")


def _parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as e:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from e


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupvna",
        description="Factor spectra of group von Neumann algebra pieces S(H), "
                    "quantitative lemma verifiers, and type-I dichotomy certificates.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="path to a group-spec JSON document")
        p.add_argument("--budget", type=int, default=10**6,
                       help="subgroup-closure element budget (default 10^6)")
        p.add_argument("--class-budget", type=int, default=10**4,
                       help="per-conjugacy-class orbit budget (default 10^4)")
        p.add_argument("--epsilon", type=_parse_fraction, default=Fraction(1, 20),
                       help="slack in the measure threshold 1/2 - epsilon (default 1/20)")
        p.add_argument("--k", type=int, default=2,
                       help="growth level (dimension threshold 2^(2^(k-1))) or pair count")
        p.add_argument("--seed", type=int, default=0, help="oracle RNG seed (default 0)")
        p.add_argument("--tolerance", type=float, default=1e-9,
                       help="float comparison tolerance (default 1e-9)")
        p.add_argument("--format", choices=("text", "json"), default="text")
        return p

    p = common(sub.add_parser("classify", help="end-to-end dichotomy certificate"))
    p.add_argument("--max-levels", type=int, default=8)
    p.add_argument("--stream-budget", type=int, default=50_000)

    common(sub.add_parser("spectrum", help="factor spectrum of S(H) for a finite group"))
    common(sub.add_parser("chartab", help="character table"))
    common(sub.add_parser("lemma6", help="non-abelian measure bound mu(B) >= 1/2"))

    p = common(sub.add_parser("lemma7", help="product projection spectrum verifier"))
    p.add_argument("--n0", type=int, default=2)
    p.add_argument("--n1", type=int, default=2)
    p.add_argument("--h0", help="JSON list of canonical forms generating H0 "
                               "(default: first factor of a product spec)")
    p.add_argument("--h1", help="JSON list of canonical forms generating H1")

    p = common(sub.add_parser("growth", help="dimension growth over a commuting tower"))
    p.add_argument("--levels", type=int, default=5, help="tower size cap (default 5)")

    p = common(sub.add_parser("lemma10", help="recursive commuting-subgroup witness"))
    p.add_argument("--stream-budget", type=int, default=50_000)

    p = common(sub.add_parser("fc", help="FC-center verdicts for enumerated elements"))
    p.add_argument("--count", type=int, default=10)

    p = common(sub.add_parser("icc-check", help="orthonormality of unitaries in an icc group"))
    p.add_argument("--count", type=int, default=25)

    return parser


# ---------------------------------------------------------------------------
# rendering


def _render_value(v, indent: str, lines: list[str], key: str = ""):
    label = f"{key}: " if key else ""
    if isinstance(v, dict):
        if set(v.keys()) == {"num", "den"}:
            lines.append(f"{indent}{label}{v['num']}/{v['den']}")
            return
        if key:
            lines.append(f"{indent}{key}:")
        for k in v:
            _render_value(v[k], indent + "  ", lines, k)
    elif isinstance(v, list):
        if not v:
            lines.append(f"{indent}{label}[]")
        elif all(not isinstance(x, (dict, list)) for x in v):
            lines.append(f"{indent}{label}{', '.join(str(x) for x in v)}")
        else:
            if key:
                lines.append(f"{indent}{key}:")
            for i, x in enumerate(v):
                _render_value(x, indent + "  ", lines, f"[{i}]")
    else:
        lines.append(f"{indent}{label}{v}")


def _emit(report: dict, fmt: str):
    if fmt == "json":
        print(jsonutil.canonical_dumps(report))
        return
    lines = [f"groupvna {report['command']} report"]
    lines.append(f"note: {_HEADER_NOTE}")
    for k in ("group", "spec_digest", "pass", "summary"):
        if k in report:
            lines.append(f"{k}: {report[k]}")
    _render_value(report.get("options", {}), "", lines, "options")
    _render_value(report.get("results", {}), "", lines, "results")
    if "wall_time_ms" in report:
        lines.append(f"wall_time_ms: {report['wall_time_ms']}")
    print("\n".join(lines))


def _report_skeleton(command: str, handle: GroupHandle, args, results: dict,
                     passed: bool, summary: str) -> dict:
    return {
        "command": command,
        "note": _HEADER_NOTE,
        "group": handle.describe(),
        "spec_digest": jsonutil.spec_digest(handle.spec),
        "options": {
            "budget": args.budget,
            "class_budget": args.class_budget,
            "epsilon": jsonutil.fraction_json(args.epsilon),
            "k": args.k,
            "seed": args.seed,
            "tolerance": args.tolerance,
        },
        "results": results,
        "pass": passed,
        "summary": summary,
    }


def _load_spec(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise SpecError(f"cannot read spec file {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise SpecError(f"spec file {path} is not valid JSON: {e}") from e


def _subgroup_from_arg(handle: GroupHandle, raw: str, budget: int) -> Subgroup:
    try:
        forms = json.loads(raw)
    except json.JSONDecodeError as e:
        raise SpecError(f"subgroup generators are not valid JSON: {e}") from e
    if not isinstance(forms, list) or not forms:
        raise SpecError("subgroup generators must be a nonempty JSON list of canonical forms")
    gens = [handle.element_from_json(f) for f in forms]
    return generate_closure(gens, budget)


# ---------------------------------------------------------------------------
# command implementations


def _cmd_classify(args, handle: GroupHandle):
    opts = ClassifyOptions(
        k=args.k, epsilon=args.epsilon, seed=args.seed,
        closure_budget=args.budget, class_budget=args.class_budget,
        stream_budget=args.stream_budget, max_levels=args.max_levels,
        tolerance=args.tolerance,
    )
    cert = classify(handle.spec, opts)
    replay = replay_certificate(cert.to_json())
    results = {"certificate": cert.to_json(), "replay": replay.to_json()}
    if cert.verdict == "inconclusive":
        return results, EXIT_INCONCLUSIVE, "inconclusive: " + "; ".join(cert.diagnostics[-1:])
    passed = replay.passed
    code = EXIT_PASS if passed else EXIT_FAIL
    return results, code, f"verdict {cert.verdict}; certificate replay {'passed' if passed else 'FAILED'}"


def _cmd_spectrum(args, handle: GroupHandle):
    spectrum = factor_spectrum(handle)
    return {"spectrum": spectrum.to_json()}, EXIT_PASS, (
        f"{len(spectrum.atoms)} atoms; measures sum to 1 exactly")


def _cmd_chartab(args, handle: GroupHandle):
    cd = class_data(handle)
    table = character_table(cd, tolerance=args.tolerance)
    report = validate_orthogonality(table, cd, args.tolerance)
    results = {
        "table": table.to_json(),
        "orthogonality": {
            "max_row_residual": report.max_row_residual,
            "max_col_residual": report.max_col_residual,
            "exact": report.exact,
        },
    }
    code = EXIT_PASS if report.passed else EXIT_FAIL
    return results, code, (
        f"{len(table.rows)} irreducible characters ({table.provenance}); "
        f"orthogonality residuals {report.max_row_residual:.3e}/{report.max_col_residual:.3e}")


def _cmd_lemma6(args, handle: GroupHandle):
    measure = nonabelian_measure(handle)
    abelian = measure == 0
    holds = abelian or measure >= Fraction(1, 2)
    results = {
        "nonabelian_measure": jsonutil.fraction_json(measure),
        "abelian": abelian,
        "bound_holds": holds,
    }
    code = EXIT_PASS if holds else EXIT_FAIL
    summary = ("group is abelian; bound vacuous" if abelian
               else f"measure {measure} {'>= 1/2' if holds else '< 1/2 (FAIL)'}")
    return results, code, summary


def _cmd_lemma7(args, handle: GroupHandle):
    if args.h0 is not None and args.h1 is not None:
        h0 = _subgroup_from_arg(handle, args.h0, args.budget)
        h1 = _subgroup_from_arg(handle, args.h1, args.budget)
    elif handle.family == "product" and len(handle.spec["factors"]) == 2:
        h0 = factor_subgroup(handle, 0, args.budget)
        h1 = factor_subgroup(handle, 1, args.budget)
    else:
        raise SpecError("lemma7 needs --h0/--h1 generator lists unless the spec is a "
                        "two-factor product")
    report = product_projection_spectrum(
        h0, h1, args.n0, args.n1, seed=args.seed,
        closure_budget=args.budget, tolerance=args.tolerance,
    )
    code = EXIT_PASS if report.passed else EXIT_FAIL
    dims = sorted({d for _, d, _ in report.supported_atoms})
    return {"lemma7": report.to_json()}, code, (
        f"supported atom dimensions {dims or '[]'} vs threshold {report.threshold}; "
        f"{'pass' if report.passed else 'FAIL'}")


def _cmd_growth(args, handle: GroupHandle):
    if handle.family == "restricted_sum":
        tower = [coordinate_subgroup(handle, i, args.budget) for i in range(args.levels)]
    elif handle.family == "product":
        tower = [factor_subgroup(handle, i, args.budget)
                 for i in range(min(args.levels, len(handle.spec["factors"])))]
    else:
        raise SpecError("growth needs a commuting tower; supported specs: "
                        "restricted_sum (coordinate subgroups) or product (factors)")
    result = growth_search(tower, k=args.k, epsilon=args.epsilon,
                           closure_budget=args.budget)
    results = {"growth": result.to_json()}
    if result.found:
        return results, EXIT_PASS, (
            f"N = {result.levels_required} reaches measure {result.achieved_measure} "
            f"> {result.measure_threshold} at dimension >= {result.dim_threshold}")
    return results, EXIT_INCONCLUSIVE, (
        f"no witness within cap {result.cap} (dimension >= {result.dim_threshold})")


def _cmd_lemma10(args, handle: GroupHandle):
    witness = lemma10_sequence(handle, args.k, stream_budget=args.stream_budget,
                               class_budget=args.class_budget)
    results = {"witness": witness.to_json()}
    if not witness.complete:
        return results, EXIT_INCONCLUSIVE, (
            f"only {len(witness.levels)} of {args.k} pairs found; " +
            "; ".join(witness.diagnostics))
    passed = witness.checks is not None and witness.checks.passed
    code = EXIT_PASS if passed else EXIT_FAIL
    return results, code, (
        f"{len(witness.levels)} pairs; invariant checks "
        f"{'passed' if passed else 'FAILED'}")


def _cmd_fc(args, handle: GroupHandle):
    verdicts = fc_filter(handle, args.count, budget=args.class_budget)
    results = {
        "verdicts": [
            {
                "element": v.element.to_json(),
                "describe": v.element.describe(),
                "verdict": v.kind,
                "class_size": v.class_size,
                "budget": v.budget,
            }
            for v in verdicts
        ],
        "fc_center_note": handle.metadata.fc_center_note,
    }
    n_fc = sum(1 for v in verdicts if v.is_fc)
    return results, EXIT_PASS, (
        f"{n_fc} of {len(verdicts)} tested elements have certified finite classes")


def _cmd_icc(args, handle: GroupHandle):
    report = icc_orthonormality_check(handle, args.count, class_budget=args.class_budget)
    code = EXIT_PASS if report.passed else EXIT_FAIL
    return {"icc": report.to_json()}, code, (
        f"Gram matrix of {report.sample_size} unitaries is "
        f"{'exactly the identity' if report.passed else 'NOT the identity'}")


_COMMANDS = {
    "classify": _cmd_classify,
    "spectrum": _cmd_spectrum,
    "chartab": _cmd_chartab,
    "lemma6": _cmd_lemma6,
    "lemma7": _cmd_lemma7,
    "growth": _cmd_growth,
    "lemma10": _cmd_lemma10,
    "fc": _cmd_fc,
    "icc-check": _cmd_icc,
}


def run(argv: list[str]) -> int:
    """Execute one command; report on stdout, diagnostics on stderr."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    started = time.monotonic()
    try:
        spec = _load_spec(args.spec)
        handle = construct_group(spec)
        results, code, summary = _COMMANDS[args.command](args, handle)
    except (SpecError, UnsupportedFamilyError, RequiresFiniteError, ParameterError,
            PreconditionError, DomainMismatchError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConsistencyError, DegenerateSpectrumError, BudgetExceededError) as e:
        print(f"verification failure: {e}", file=sys.stderr)
        return EXIT_FAIL
    report = _report_skeleton(args.command, handle, args, results,
                              code == EXIT_PASS, summary)
    report["wall_time_ms"] = round((time.monotonic() - started) * 1000.0, 3)
    _emit(report, args.format)
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
