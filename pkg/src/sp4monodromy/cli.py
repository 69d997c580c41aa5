import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple

from . import catalog, coset_enum, fpgroup, geometry_f2, modgroup
from .config import OUTPUT_FORMATS, STRATEGIES, Settings, load_settings
from .errors import (
    EXIT_BUDGET_EXCEEDED,
    EXIT_INVARIANT_VIOLATION,
    EXIT_OK,
    Sp4Error,
    UsageError,
)
from .linalg import ExactMatrix4, mod_reduce
from .utils import (
    format_payload,
    format_rows,
    load_json_argument,
    parse_pair,
    parse_range,
    report_results,
)


logger = logging.getLogger(__name__)

LONG_MODULI = (16, 25, 27)

# Batch runs report the most serious per-cell outcome.
_SEVERITY = (EXIT_OK, EXIT_BUDGET_EXCEEDED, EXIT_INVARIANT_VIOLATION)


def _worst(codes: Sequence[int]) -> int:
    return max(codes, key=_SEVERITY.index, default=EXIT_OK)


def _add_case_selector(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--aesz", type=int, help="Select a case by AESZ id")
    group.add_argument("--dk", help='Select a hypergeometric case by "d,k"')


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(
        prog="sp4monodromy",
        description="Monodromy groups of Calabi-Yau operators inside Sp4(Z)",
    )
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="Log progress (-vv for debug)"
    )
    parser.add_argument("--format", dest="output_format", choices=OUTPUT_FORMATS)
    parser.add_argument("--workers", type=int, help="Processes for batch commands")
    parser.add_argument(
        "--long",
        action="store_true",
        help="Allow long-running enumerations and large moduli",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    sub = subparsers.add_parser("catalog", help="List the operator catalog")
    sub.add_argument("--path", help="Catalog JSON file instead of the bundled one")

    sub = subparsers.add_parser("generators", help="Print generator matrices and words")
    _add_case_selector(sub)
    sub.add_argument("--no-extra", action="store_true", help="Omit conifold extra generators")

    sub = subparsers.add_parser("index", help="Index in Sp4(Z) by coset enumeration")
    _add_case_selector(sub)
    sub.add_argument("--all", action="store_true", help="Run every catalog case")
    sub.add_argument("--strategy", choices=STRATEGIES)
    sub.add_argument("--budget", type=int, help="Maximum number of defined cosets")
    sub.add_argument("--no-extra", action="store_true", help="Use only M and N")

    sub = subparsers.add_parser("modn", help="Index of the image in Sp4(Z/N)")
    _add_case_selector(sub)
    sub.add_argument("--n", type=int, help="Single modulus")
    sub.add_argument("--range", dest="moduli", help='Modulus range such as "2-9"')
    sub.add_argument("--method", choices=modgroup.METHODS, default="auto")
    sub.add_argument("--no-extra", action="store_true", help="Use only M and N")
    sub.add_argument("--check", action="store_true", help="Compare with the reference table")

    sub = subparsers.add_parser("geometry", help="Finite symplectic geometry mod 2")
    sub.add_argument(
        "--skip-enumeration",
        action="store_true",
        help="Use the known indices instead of enumerating cosets",
    )

    subparsers.add_parser("classify", help="Lambda classifier data for each case")

    sub = subparsers.add_parser("gamma", help="Congruence subgroup Gamma(d1, d2)")
    sub.add_argument("--d1", type=int, required=True)
    sub.add_argument("--d2", type=int, required=True)
    sub.add_argument("--matrix", help="Matrix literal (JSON or @file) to test for membership")

    sub = subparsers.add_parser("decompose", help="Write a matrix as a word in the generators")
    sub.add_argument("--matrix", required=True, help="Matrix literal (JSON or @file)")

    return parser.parse_args(argv)


def configure_logging(verbosity: int) -> None:
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def select_record(records, args, required: bool = True) -> Optional[catalog.OperatorRecord]:
    if args.aesz is not None:
        return catalog.find_record(records, aesz=args.aesz)
    if args.dk is not None:
        return catalog.find_record(records, dk=parse_pair(args.dk))
    if required:
        raise UsageError("select a case with --aesz or --dk")
    return None


def subgroup_words(
    record: catalog.OperatorRecord, include_extra: bool = True
) -> List[fpgroup.Word]:
    """g1, g2 and the decompositions of the extra generators."""
    words = list(fpgroup.monodromy_words(record.d, record.k))
    if include_extra:
        words.extend(fpgroup.decompose(m) for m in record.extra_generators)
    return words


def lower_bound_row(record: catalog.OperatorRecord, include_extra: bool, long_run: bool) -> dict:
    moduli = modgroup.prime_power_moduli(modgroup.FEASIBLE_MODULUS)
    if long_run:
        moduli = moduli + list(LONG_MODULI)
    bound, indices = modgroup.auto_lower_bound(record, moduli, include_extra)
    return {
        "lower_bound": bound,
        "lower_bound_moduli": " ".join(f"{n}:{i}" for n, i in indices.items()),
    }


def compute_index(
    record: catalog.OperatorRecord,
    settings: Settings,
    include_extra: bool = True,
    long_run: bool = False,
) -> Tuple[dict, int]:
    """One index row and its exit code."""
    budget = settings.effective_budget(long_run)
    row = {
        "case": record.case_name,
        "aesz": record.aesz,
        "extra": bool(include_extra and record.extra_generators),
    }
    expected = record.known_index
    if record.extra_generators and not row["extra"]:
        expected = record.companion_index

    if expected is not None and expected > budget and not long_run:
        row.update(
            {
                "outcome": coset_enum.BUDGET_EXCEEDED,
                "index": None,
                "expected": expected,
                "note": "expected index exceeds the budget; rerun with --long",
            }
        )
        row.update(lower_bound_row(record, include_extra, long_run))
        return row, EXIT_BUDGET_EXCEEDED

    if long_run and expected is not None:
        print(
            f"{record.case_name}: up to {budget} cosets, "
            f"about {coset_enum.estimate_memory_mb(budget):.0f} MB",
            file=sys.stderr,
        )
    result = coset_enum.enumerate_cosets(
        fpgroup.bundled_presentation(),
        subgroup_words(record, include_extra),
        budget,
        settings.strategy,
    )
    row.update({"outcome": result.outcome, "index": result.index, "expected": expected})
    if not result.completed:
        row.update(lower_bound_row(record, include_extra, long_run))
        return row, EXIT_BUDGET_EXCEEDED

    if expected is not None and not record.index_is_lower_bound and result.index != expected:
        logger.error("%s: index %d, expected %d", record.case_name, result.index, expected)
        return row, EXIT_INVARIANT_VIOLATION
    return row, EXIT_OK


def _index_task(task) -> Tuple[dict, int]:
    record, settings, include_extra, long_run = task
    try:
        return compute_index(record, settings, include_extra, long_run)
    except Sp4Error as exc:
        return {"case": record.case_name, "aesz": record.aesz, "outcome": str(exc)}, exc.exit_code


def cmd_catalog(args, settings: Settings) -> int:
    records = catalog.load_catalog(args.path) if args.path else list(catalog.bundled_catalog())
    rows = [
        {
            "aesz": r.aesz,
            "kind": r.kind,
            "d": r.d,
            "k": r.k,
            "c2H": r.c2h,
            "c3": r.c3,
            "label": r.label,
            "discriminant": r.discriminant,
            "status": r.status,
            "index": r.known_index,
            "lower_bound": r.index_is_lower_bound,
        }
        for r in records
    ]
    report_results(None, format_rows(rows, settings.output_format))
    if settings.output_format == "text":
        print(f"\norderings by (d,k), n1 and discriminant agree: {catalog.ordering_check(records)}")
    return EXIT_OK


def cmd_generators(args, settings: Settings) -> int:
    record = select_record(catalog.bundled_catalog(), args)
    g1, g2 = fpgroup.monodromy_words(record.d, record.k)
    m, n = record.generators(include_extra=False)
    rows = [
        {"name": "M", "matrix": m.to_literal(), "word": str(g2)},
        {"name": "N", "matrix": n.to_literal(), "word": str(g1)},
    ]
    if not args.no_extra:
        for i, extra in enumerate(record.extra_generators, start=1):
            word = str(fpgroup.decompose(extra))
            rows.append({"name": f"extra{i}", "matrix": extra.to_literal(), "word": word})
    report_results(record.case_name, format_rows(rows, settings.output_format))
    return EXIT_OK


def cmd_index(args, settings: Settings) -> int:
    records = catalog.bundled_catalog()
    include_extra = not args.no_extra
    if args.all:
        tasks = [(r, settings, include_extra, args.long) for r in records]
        if settings.workers > 1:
            with ProcessPoolExecutor(max_workers=settings.workers) as pool:
                results = list(pool.map(_index_task, tasks))
        else:
            results = [_index_task(task) for task in tasks]
        report_results(None, format_rows([row for row, _ in results], settings.output_format))
        return _worst([code for _, code in results])

    record = select_record(records, args)
    row, code = compute_index(record, settings, include_extra, args.long)
    if settings.output_format == "text" and not args.verbose and code == EXIT_OK:
        report_results(None, str(row["index"]))
    else:
        report_results(None, format_payload(row, settings.output_format))
    return code


def _check_cells(cells: Sequence[modgroup.ModIndexCell], records) -> List[dict]:
    reference = modgroup.load_reference_table()
    misprinted = {(p["N"], p["column"]) for p in modgroup.reference_misprints(reference)}
    by_case = {r.case_name: r for r in records}
    mismatches = []
    for cell in cells:
        record = by_case[cell.case]
        printed = modgroup.reference_index(record, cell.modulus)
        if printed is None or printed == cell.index:
            continue
        column = modgroup.reference_column(record)
        mismatches.append(
            {
                "N": cell.modulus,
                "case": cell.case,
                "computed": cell.index,
                "printed": printed,
                "misprint": (cell.modulus, column) in misprinted,
            }
        )
    return mismatches


def cmd_modn(args, settings: Settings) -> int:
    records = catalog.bundled_catalog()
    include_extra = not args.no_extra
    record = select_record(records, args, required=args.n is not None)

    if args.n is not None:
        cell = modgroup.mod_index_cell(record, args.n, include_extra, args.method, settings.bfs_cap)
        report_results(None, format_payload(cell.to_dict(), settings.output_format))
        return EXIT_OK

    moduli = parse_range(args.moduli or f"2-{modgroup.FEASIBLE_MODULUS}")
    if max(moduli) > modgroup.FEASIBLE_MODULUS and not args.long:
        raise UsageError(f"moduli above {modgroup.FEASIBLE_MODULUS} need --long")
    selected = [record] if record else catalog.hypergeometric_records(records)
    cells = modgroup.mod_table(
        selected, moduli, include_extra, settings.workers, args.method, settings.bfs_cap
    )
    if settings.output_format == "json":
        report_results(None, format_rows([c.to_dict() for c in cells], "json"))
    else:
        report_results(None, format_rows(modgroup.table_rows(cells), settings.output_format))

    if args.check:
        mismatches = _check_cells(cells, selected)
        if mismatches:
            report_results("Differences from the reference table", format_rows(mismatches, "text"))
        if any(not m["misprint"] for m in mismatches):
            return EXIT_INVARIANT_VIOLATION
    return EXIT_OK


def _geometry_rows() -> List[dict]:
    return [
        {"kind": kind, "label": obj.label, "objects": str(obj)}
        for kind in geometry_f2.KINDS
        for obj in geometry_f2.enumerate_objects(kind)
    ]


def cmd_geometry(args, settings: Settings) -> int:
    reports = []
    for case in geometry_f2.STABILIZER_CASES:
        known = None
        if args.skip_enumeration:
            known = catalog.find_record(catalog.bundled_catalog(), dk=case).known_index
        reports.append(geometry_f2.verify_stabilizer_index(case, enumeration_index=known))
    misprints = geometry_f2.syntheme_misprint_report()
    outer = geometry_f2.outer_automorphism_check()

    if settings.output_format == "json":
        payload = {
            "objects": _geometry_rows(),
            "stabilizers": [r.to_dict() for r in reports],
            "syntheme_permutations": misprints,
            "outer_automorphism": outer.passed,
        }
        report_results(None, format_payload(payload, "json"))
    else:
        fmt = settings.output_format
        report_results("Objects", format_rows(_geometry_rows(), fmt))
        report_results("Stabilizers", format_rows([r.to_dict() for r in reports], fmt))
        permutations = [
            {k: v for k, v in m.items() if k != "differences"} for m in misprints
        ]
        report_results("Syntheme permutations", format_rows(permutations, fmt))
        report_results("Outer automorphism", f"pentads and line pentads differ: {outer.passed}")

    if not all(r.passed for r in reports) or not outer.passed:
        return EXIT_INVARIANT_VIOLATION
    return EXIT_OK


def cmd_classify(args, settings: Settings) -> int:
    rows = catalog.plot_data(catalog.bundled_catalog())
    report_results(None, format_rows(rows, settings.output_format))
    return EXIT_OK


def cmd_gamma(args, settings: Settings) -> int:
    payload = {"d1": args.d1, "d2": args.d2, "index": catalog.gamma_index(args.d1, args.d2)}
    if args.matrix:
        m = ExactMatrix4.from_literal(load_json_argument(args.matrix))
        payload["member"] = catalog.gamma_membership(m, args.d1, args.d2)
    report_results(None, format_payload(payload, settings.output_format))
    return EXIT_OK


def cmd_decompose(args, settings: Settings) -> int:
    m = ExactMatrix4.from_literal(load_json_argument(args.matrix))
    word = fpgroup.decompose(m)
    payload = {
        "word": str(word) if word else "",
        "length": word.length,
        "verified": fpgroup.evaluate(word) == m,
        "mod2_pentads": geometry_f2.cycle_notation(geometry_f2.permutation_image(mod_reduce(m, 2))),
    }
    report_results(None, format_payload(payload, settings.output_format))
    return EXIT_OK


COMMANDS = {
    "catalog": cmd_catalog,
    "generators": cmd_generators,
    "index": cmd_index,
    "modn": cmd_modn,
    "geometry": cmd_geometry,
    "classify": cmd_classify,
    "gamma": cmd_gamma,
    "decompose": cmd_decompose,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the CLI."""
    args = parse_arguments(argv)
    configure_logging(args.verbose)

    try:
        settings = load_settings(
            args.config,
            output_format=args.output_format,
            workers=args.workers,
            strategy=getattr(args, "strategy", None),
            budget=getattr(args, "budget", None),
        )
        return COMMANDS[args.command](args, settings)
    except Sp4Error as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
