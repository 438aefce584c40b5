"""Command-line entry point: ``scrs build-kb | analyze | sweep | report``.

Exit codes: 0 success, 1 pipeline or backend failure, 2 missing or unusable
input, 3 analysis finished and found at least one violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from scrs.config import RunConfig
from scrs.engine.sweep import SweepGrid, load_fixture_set, sensitivity_sweep
from scrs.errors import (
    BackendUnavailable,
    EmptyFixtureSet,
    EmptyKb,
    FixtureMiss,
    IoFailure,
    NoSources,
    RateLimited,
    SchemaMismatch,
    ScrsError,
    SingleRecord,
)
from scrs.features.bundle import extract_features
from scrs.io import atomic_write_text, dump_json
from scrs.kb.agent import build_records
from scrs.kb.records import load_kb, store_kb
from scrs.kb.sources import SkippedSource, ingest_sources
from scrs.llm import make_backend
from scrs.pipeline import analyze_all, build_report, render_text
from scrs.retrieval import resolve_weights

logger = logging.getLogger("scrs")

EXIT_OK, EXIT_FAILURE, EXIT_INPUT, EXIT_VIOLATIONS = 0, 1, 2, 3
BACKEND_ERRORS = (BackendUnavailable, FixtureMiss, RateLimited)


def _add_backend_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON run configuration; flags override its keys")
    p.add_argument("--backend", choices=("replay", "http"))
    p.add_argument("--fixtures", dest="fixture_path", help="replay fixture store (JSON)")
    p.add_argument("--no-strict", dest="strict_replay", action="store_false", default=None,
                   help="return an empty response instead of failing on replay misses")
    p.add_argument("--base-url")
    p.add_argument("--model")
    p.add_argument("--compiler", dest="compiler_path", help="solc or solcjs executable")
    p.add_argument("--max-concurrent-requests", type=int)
    p.add_argument("--workers", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scrs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-kb", help="analyse component sources into a knowledge base")
    p.add_argument("--sources", required=True, help="directory of .sol files")
    p.add_argument("--out", required=True, help="knowledge base file (JSON lines)")
    _add_backend_flags(p)

    p = sub.add_parser("analyze", help="inspect contracts for component misuse")
    p.add_argument("--contract", action="append", required=True, help="contract .sol or AST .json (repeatable)")
    p.add_argument("--kb", dest="kb_path", required=True)
    p.add_argument("--out", dest="output_path", help="report file; stdout when omitted")
    p.add_argument("--weights", dest="weights_mode", help="infer | default | file:PATH")
    p.add_argument("--tau-o", type=float)
    p.add_argument("--tau-t", type=float)
    p.add_argument("--tau-l", type=float)
    _add_backend_flags(p)

    p = sub.add_parser("sweep", help="sensitivity of the checker to weights and thresholds")
    p.add_argument("--fixtures", required=True, help="directory of labeled score sets")
    p.add_argument("--out", help="sweep report (JSON); stdout when omitted")
    p.add_argument("--table", help="also write the plain-text table here")
    p.add_argument("--config")
    p.add_argument("--weight-span", type=float, default=0.05)
    p.add_argument("--weight-step", type=float, default=0.01)
    p.add_argument("--tau-span", type=float, default=0.05)
    p.add_argument("--tau-step", type=float, default=0.01)

    p = sub.add_parser("report", help="render an analysis report")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--format", choices=("json", "text"), default="text")
    return parser


def _config(args, extra: dict | None = None) -> RunConfig:
    base = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    keys = ("backend", "fixture_path", "strict_replay", "base_url", "model", "compiler_path",
            "max_concurrent_requests", "workers", "kb_path", "output_path", "weights_mode")
    overrides = {k: getattr(args, k, None) for k in keys}
    overrides.update(extra or {})
    cfg = base.merged(overrides)
    cfg.validate()
    return cfg


def cmd_build_kb(args) -> int:
    try:
        cfg = _config(args)
        skipped: list[SkippedSource] = []
        units = ingest_sources(args.sources, cfg.compiler_path, skipped)
    except (NoSources, ValueError, ScrsError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    for s in skipped:
        print(f"skip {s.path}: {s.reason}", file=sys.stderr)
    try:
        backend = make_backend(cfg.backend_config())
    except (IoFailure, SchemaMismatch) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    try:
        records = build_records(units, backend, cfg.workers)
    except BACKEND_ERRORS as exc:
        logger.error("backend failure: %s", exc)
        return EXIT_FAILURE
    except ScrsError as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE
    for u in units:
        n = sum(1 for r in records if r.provenance == u.id)
        print(f"ok   {u.id}: {n} records", file=sys.stderr)
    if not records:
        logger.error("no records produced")
        return EXIT_FAILURE
    try:
        store_kb(records, args.out)
    except IoFailure as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE
    print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_analyze(args) -> int:
    checker = {"tau_o": args.tau_o, "tau_t": args.tau_t, "tau_l": args.tau_l}
    try:
        cfg = _config(args, {"checker": checker})
    except (ValueError, ScrsError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    kb_path = Path(cfg.kb_path)
    if not kb_path.is_file():
        logger.error("knowledge base %s not found", kb_path)
        return EXIT_INPUT
    try:
        kb = load_kb(kb_path)
        if not len(kb):
            raise EmptyKb(f"knowledge base {kb_path} is empty")
        weights = resolve_weights(cfg.weights_mode, kb, kb_path)
    except (SchemaMismatch, IoFailure, EmptyKb, SingleRecord) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    missing = [c for c in args.contract if not Path(c).is_file()]
    if missing:
        logger.error("contract file not found: %s", ", ".join(missing))
        return EXIT_INPUT
    try:
        backend = make_backend(cfg.backend_config())
    except (IoFailure, SchemaMismatch) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    try:
        features = [extract_features(c, cfg.compiler_path) for c in args.contract]
        results = analyze_all(features, kb, weights, cfg.checker, backend, cfg.workers)
    except BACKEND_ERRORS as exc:
        logger.error("backend failure: %s", exc)
        return EXIT_FAILURE
    except (ScrsError, OSError) as exc:
        logger.error("analysis failed: %s", exc)
        return EXIT_FAILURE

    snap_name = None
    if cfg.output_path:
        out = Path(cfg.output_path)
        snap_path = out.with_name(out.stem + ".snapshots.jsonl")
        snap_name = snap_path.name
    report = build_report(results, weights, cfg.checker, snap_name)
    text = dump_json(report)
    try:
        if cfg.output_path:
            atomic_write_text(snap_path, "".join(r.repository.to_jsonl() for r in results))
            atomic_write_text(cfg.output_path, text)
        else:
            sys.stdout.write(text)
    except IoFailure as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE
    s = report["summary"]
    print(f"{s['violations']} violations in {s['candidates']} candidates", file=sys.stderr)
    return EXIT_VIOLATIONS if s["violations"] else EXIT_OK


def cmd_sweep(args) -> int:
    try:
        params = RunConfig.load(args.config).checker if args.config else RunConfig().checker
        fixtures = load_fixture_set(args.fixtures)
        grid = SweepGrid(args.weight_span, args.weight_step, args.tau_span, args.tau_step)
        report = sensitivity_sweep(params, fixtures, grid)
    except (EmptyFixtureSet, SchemaMismatch, IoFailure, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    text = dump_json(report.to_dict())
    table = report.to_text()
    try:
        if args.out:
            atomic_write_text(args.out, text)
        else:
            sys.stdout.write(text)
        if args.table:
            atomic_write_text(args.table, table)
        elif args.out:
            sys.stdout.write(table)
    except IoFailure as exc:
        logger.error("%s", exc)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = json.loads(Path(args.input).read_text(encoding="utf-8"))
        if not isinstance(report, dict) or "schema_version" not in report:
            raise ValueError("not an analysis report")
    except (OSError, ValueError) as exc:
        logger.error("cannot read report %s: %s", args.input, exc)
        return EXIT_INPUT
    sys.stdout.write(dump_json(report) if args.format == "json" else render_text(report))
    return EXIT_OK


COMMANDS = {"build-kb": cmd_build_kb, "analyze": cmd_analyze, "sweep": cmd_sweep, "report": cmd_report}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
