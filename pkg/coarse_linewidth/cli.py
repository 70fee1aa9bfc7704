"""
The ``cwl`` command.

Exit codes: 0 for a certificate or a passed check, 3 for a witness, 2 for a failed check
or a search that found nothing, 1 for errors.
"""

import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional

from coarse_linewidth import core
from coarse_linewidth.config import Settings, get_settings
from coarse_linewidth.domain.decomposition import exact_pathwidth
from coarse_linewidth.domain.graph import Graph
from coarse_linewidth.domain.metric import TieBreakerSpec
from coarse_linewidth.domain.minors import find_superfat_model
from coarse_linewidth.domain.schedule import Schedule, make_schedule
from coarse_linewidth.domain.verdict import Verdict
from coarse_linewidth.exceptions import CoarseWidthError, GraphFormatError
from coarse_linewidth.infrastructure import codec
from coarse_linewidth.infrastructure.corpus import FAMILIES, CorpusSpec, generate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2
EXIT_WITNESS = 3

GEN_PARAMS = ("n", "seed", "arms", "arm_len", "ell", "stretch", "rows", "cols")


def _settings(args: argparse.Namespace) -> Settings:
    return get_settings().with_overrides(
        search_budget=getattr(args, "budget", None), timeout=getattr(args, "timeout", None)
    )


def _read_graph(path: str) -> Graph:
    return codec.graph_from_dict(codec.read_document(path))


def _schedule(args: argparse.Namespace) -> Schedule:
    if args.schedule.startswith("@"):
        schedule = codec.schedule_from_dict(codec.read_document(args.schedule[1:]))
        for name in ("c", "ell"):
            flag = getattr(args, name)
            if flag is not None and flag != getattr(schedule, name):
                raise GraphFormatError(
                    f"--{name} {flag} disagrees with the schedule file ({getattr(schedule, name)})"
                )
        return schedule
    c = 2 if args.c is None else args.c
    ell = 1 if args.ell is None else args.ell
    return make_schedule(c, ell, args.schedule)


def _report(verdict: Verdict, output: Optional[str]) -> int:
    if output is not None:
        codec.write_document({"ok": verdict.ok, "reason": verdict.reason}, output)
    if not verdict:
        print(f"FAIL {verdict.reason}", file=sys.stderr)
        return EXIT_NEGATIVE
    print("PASS", file=sys.stderr)
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    params = {name: getattr(args, name) for name in GEN_PARAMS if getattr(args, name) is not None}
    graph = generate(CorpusSpec(args.family, params))
    codec.write_document(codec.graph_to_dict(graph), args.output)
    return EXIT_OK


def cmd_pipeline(args: argparse.Namespace) -> int:
    graph = _read_graph(args.graph)
    schedule = _schedule(args)
    tiebreak = TieBreakerSpec.parse(args.tiebreak)
    outcome = core.decide(
        graph, schedule, tiebreak, timeout=args.timeout, settings=_settings(args)
    )
    if not args.audit:
        outcome = replace(outcome, audit=())
    codec.write_document(codec.outcome_to_dict(outcome), args.output)
    logger.info(f"Pipeline finished with a {outcome.kind}")
    return EXIT_WITNESS if outcome.is_witness else EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    graph = _read_graph(args.graph)
    document = codec.read_document(args.payload)
    target = _read_graph(args.target) if args.target is not None else None
    verdict = core.verify_payload(
        graph, args.kind, document, ell=args.ell, a=args.a, b=args.b, target=target
    )
    return _report(verdict, args.output)


def cmd_pathwidth(args: argparse.Namespace) -> int:
    graph = _read_graph(args.graph)
    width, decomposition = exact_pathwidth(graph, _settings(args))
    document = codec.decomposition_to_dict(decomposition)
    document["width"] = width
    codec.write_document(document, args.output)
    print(f"path-width {width}", file=sys.stderr)
    return EXIT_OK


def cmd_fatminor(args: argparse.Namespace) -> int:
    graph = _read_graph(args.graph)
    if args.mode == "verify":
        if args.payload is None:
            raise GraphFormatError("fatminor verify needs --payload")
        document = dict(codec.read_document(args.payload))
        if args.c is not None:
            document["c"] = args.c
        verdict = core.verify_payload(graph, "witness", document, ell=args.ell)
        return _report(verdict, args.output)

    c = 2 if args.c is None else args.c
    ell = 1 if args.ell is None else args.ell
    result = find_superfat_model(graph, ell, c, settings=_settings(args))
    if result.model is None:
        note = "search exhausted its budget" if result.exhausted else "search is incomplete"
        if result.status == "absent":
            note = "no vertex of degree three"
        print(
            f"none found: {result.status} after {result.explored} steps ({note})",
            file=sys.stderr,
        )
        return EXIT_NEGATIVE
    codec.write_document(codec.witness_to_dict(result.model), args.output)
    return EXIT_OK


def _add_schedule_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--c", type=int, help="Fatness parameter (default 2)")
    parser.add_argument("--ell", type=int, help="Depth of the pattern tree (default 1)")
    parser.add_argument(
        "--schedule",
        default="paper",
        help="'paper', 'minimal' or '@file' with a schedule document",
    )
    parser.add_argument("--tiebreak", default="lex", help="'lex' or 'seed:<n>'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cwl", description="Coarse line-width certificates and superfat minor witnesses"
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="Generate a corpus graph")
    gen.add_argument("family", choices=FAMILIES)
    gen.add_argument("--n", type=int)
    gen.add_argument("--seed", type=int)
    gen.add_argument("--arms", type=int)
    gen.add_argument("--arm-len", dest="arm_len", type=int)
    gen.add_argument("--ell", type=int)
    gen.add_argument("--stretch", type=int)
    gen.add_argument("--rows", type=int)
    gen.add_argument("--cols", type=int)
    gen.add_argument("-o", "--output", help="Output file (default stdout)")
    gen.set_defaults(handler=cmd_gen)

    pipeline = commands.add_parser("pipeline", help="Decide a graph")
    pipeline.add_argument("graph", help="Graph document, '-' for stdin")
    _add_schedule_flags(pipeline)
    pipeline.add_argument("--audit", action="store_true", help="Keep the audit log")
    pipeline.add_argument("--budget", type=int, help="Search budget (default CWL_BUDGET)")
    pipeline.add_argument("--timeout", type=float, help="Seconds before giving up")
    pipeline.add_argument("-o", "--output", help="Output file (default stdout)")
    pipeline.set_defaults(handler=cmd_pipeline)

    verify = commands.add_parser("verify", help="Verify a payload against a graph")
    verify.add_argument("kind", choices=core.PAYLOAD_KINDS)
    verify.add_argument("graph", help="Graph document")
    verify.add_argument("payload", help="Payload document, '-' for stdin")
    verify.add_argument("--ell", type=int, help="Pattern depth for witnesses")
    verify.add_argument("--a", type=int, help="Center count for certificates")
    verify.add_argument("--b", type=int, help="Radius for certificates")
    verify.add_argument("--target", help="Coarse graph document for qi payloads")
    verify.add_argument("-o", "--output", help="Write the verdict document here")
    verify.set_defaults(handler=cmd_verify)

    pathwidth = commands.add_parser("pathwidth", help="Exact path-width of a small graph")
    pathwidth.add_argument("graph", help="Graph document, '-' for stdin")
    pathwidth.add_argument("-o", "--output", help="Output file (default stdout)")
    pathwidth.set_defaults(handler=cmd_pathwidth)

    fatminor = commands.add_parser("fatminor", help="Find or verify a superfat H_ell model")
    fatminor.add_argument("mode", choices=("find", "verify"))
    fatminor.add_argument("graph", help="Graph document, '-' for stdin")
    fatminor.add_argument("--ell", type=int, help="Depth of the pattern tree (default 1)")
    fatminor.add_argument("--c", type=int, help="Fatness parameter (default 2)")
    fatminor.add_argument("--payload", help="Witness document to verify")
    fatminor.add_argument("--budget", type=int, help="Search budget (default CWL_BUDGET)")
    fatminor.add_argument("-o", "--output", help="Output file (default stdout)")
    fatminor.set_defaults(handler=cmd_fatminor)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except (CoarseWidthError, OSError, TimeoutError) as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        core.shutdown()


if __name__ == "__main__":
    sys.exit(main())
