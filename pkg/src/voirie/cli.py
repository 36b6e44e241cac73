"""Command-line entry point.

    voirie footprint centerline|cadastre|combine|compare ...
    voirie lexicon validate|resolve ...
    voirie sections build ...
    voirie registry append|state|coverage ...
    voirie report area|cost|gap-cost|priority ...
    voirie export ...

Data goes to stdout (or ``-o`` files), diagnostics to stderr. Exit codes:
0 success, 1 domain error, 2 usage error. Nothing reads the wall clock
when ``--now`` is given.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from voirie import constants as C
from voirie import lexicon as lx
from voirie.errors import VoirieError
from voirie.footprint import (
    build_cadastral_footprint,
    build_centerline_footprint,
    combine_footprints,
    compare_footprints,
)
from voirie.ingestion import load_axes, load_boundary, load_parcels, load_width_rules
from voirie.registry import (
    DEFAULT_STEP,
    EventLog,
    Registry,
    build_sections,
    coverage_report,
    format_ts,
    parse_ts,
)
from voirie.reporting import (
    BASES,
    CostModel,
    area_report,
    cost_envelope,
    export_features,
    format_area_report,
    gap_cost,
    load_cost_model,
    load_footprints,
    maintenance_priority,
)

logger = logging.getLogger("voirie")


class UsageError(Exception):
    pass


@dataclass
class CommandResult:
    exit_code: int
    stdout: str = ""
    warnings: list[str] = field(default_factory=list)
    stderr: str = ""

    def json(self):
        return json.loads(self.stdout)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _Capture(logging.Handler):
    def __init__(self):
        super().__init__(logging.WARNING)
        self.messages: list[str] = []

    def emit(self, record):
        self.messages.append(record.getMessage())


# --- output helpers -------------------------------------------------------------


def _emit(payload, fmt: str, text: Optional[str] = None) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    if text is not None:
        return text.rstrip("\n") + "\n"
    return _as_text(payload) + "\n"


def _as_text(payload, indent: int = 0) -> str:
    pad = " " * indent
    if isinstance(payload, dict):
        lines = []
        for k, v in payload.items():
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}{k}:")
                lines.append(_as_text(v, indent + 2))
            else:
                lines.append(f"{pad}{k}: {v}")
        return "\n".join(lines)
    if isinstance(payload, list):
        return "\n".join(
            _as_text(v, indent) if isinstance(v, (dict, list)) else f"{pad}- {v}" for v in payload
        )
    return f"{pad}{payload}"


def _footprint_summary(fp) -> dict:
    return {
        "label": fp.label,
        "provenance": fp.provenance,
        "area_m2": fp.area,
        "area_km2": fp.area / C.M2_PER_KM2,
        "params_hash": fp.params_hash,
    }


def _now(args) -> datetime:
    if args.now is not None:
        return parse_ts(args.now)
    return datetime.now(timezone.utc)


def _registry(args) -> Registry:
    sections = build_sections(load_axes(args.axes), args.step)
    return Registry(sections, EventLog(args.log))


# --- commands -------------------------------------------------------------------


def cmd_footprint(args) -> str:
    boundary = load_boundary(args.boundary)
    if args.action == "centerline":
        fp = build_centerline_footprint(load_axes(args.axes), load_width_rules(args.widths), boundary)
        if args.output:
            export_features([fp], args.output)
        return _emit(_footprint_summary(fp), args.format)
    if args.action == "cadastre":
        fp = build_cadastral_footprint(load_parcels(args.parcels), boundary)
        if args.output:
            export_features([fp], args.output)
        return _emit(_footprint_summary(fp), args.format)
    a = build_centerline_footprint(load_axes(args.axes), load_width_rules(args.widths), boundary)
    b = build_cadastral_footprint(load_parcels(args.parcels), boundary)
    if args.action == "combine":
        combo = combine_footprints(a, b)
        if args.output:
            export_features(list(combo), args.output)
        return _emit({fp.label: _footprint_summary(fp) for fp in combo}, args.format)
    metrics = compare_footprints(a, b)
    return _emit(metrics.to_dict(), args.format)


def cmd_lexicon(args) -> str:
    if args.action == "validate":
        lex = lx.load_lexicon(args.path or lx.seed_path())
        spaces = sum(1 for n in lex.nodes.values() if n.kind == "space")
        return _emit({"valid": True, "version": lex.version, "nodes": len(lex),
                      "spaces": spaces, "objects": len(lex) - spaces}, args.format)
    lex = lx.load_lexicon(args.lexicon or lx.seed_path())
    out = lx.resolve_term(lex, args.word, sense=args.sense)
    if isinstance(out, lx.AmbiguityReport):
        payload = out.to_dict()
    else:
        payload = {"word": args.word, "ambiguous": False, "term": out, "ancestry": lx.ancestry(lex, out)}
    return _emit(payload, args.format)


def cmd_sections(args) -> str:
    axes = load_axes(args.axes)
    sections = build_sections(axes, args.step)
    if args.output:
        export_features(sections, args.output)
    per_axis: dict[str, int] = {}
    for s in sections:
        per_axis[s.axis_id] = per_axis.get(s.axis_id, 0) + 1
    return _emit({"sections": len(sections), "step": args.step, "per_axis": per_axis}, args.format)


def _read_event(arg: str) -> dict:
    path = Path(arg)
    text = path.read_text(encoding="utf-8") if path.exists() else arg
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--event is neither a JSON file nor JSON text ({exc})") from exc


def _state_dict(state) -> dict:
    return {
        "structure": state.structure.to_dict() if state.structure else None,
        "open_degradations": [dict(e.payload.to_dict(), event_id=e.event_id) for e in state.open_degradations],
    }


def cmd_registry(args) -> str:
    reg = _registry(args)
    now = _now(args)
    if args.action == "append":
        doc = _read_event(args.event)
        docs = doc if isinstance(doc, list) else [doc]
        ids = [reg.record_dict(d, now) for d in docs]
        return _emit({"event_ids": ids, "recorded_at": format_ts(now)}, args.format)
    if args.action == "state":
        state = reg.state_at(args.section, now)
        return _emit(dict(_state_dict(state), section_id=args.section, at=format_ts(now)), args.format)
    rep = coverage_report(list(reg.sections.values()), reg.events(), now, args.window_days)
    return _emit(dict(rep.to_dict(), at=format_ts(now)), args.format)


def cmd_report(args) -> str:
    model = load_cost_model(args.cost_model) if getattr(args, "cost_model", None) else CostModel()
    if args.action == "area":
        sets = [fp for path in args.footprints for fp in load_footprints(path)]
        rep = area_report(sets, paris_reference=args.paris)
        return _emit(rep.to_dict(), args.format, format_area_report(rep))
    if args.action == "cost":
        return _emit(dict(cost_envelope(args.area_m2, model, args.basis).to_dict(), area_m2=args.area_m2),
                     args.format)
    if args.action == "gap-cost":
        delta = args.delta_m2 if args.delta_m2 is not None else args.delta_km2 * C.M2_PER_KM2
        return _emit(dict(gap_cost(delta, model).to_dict(), delta_m2=delta), args.format)
    reg = _registry(args)
    now = _now(args)
    ranked = maintenance_priority(reg.events(), list(reg.sections.values()), now)
    return _emit({"at": format_ts(now), "priorities": [{"section_id": p.section_id, "score": p.score} for p in ranked]},
                 args.format)


def cmd_export(args) -> str:
    if args.sections:
        if not args.axes:
            raise UsageError("export --sections needs --axes")
        items = build_sections(load_axes(args.axes), args.step)
    elif args.axes:
        items = load_axes(args.axes)
    elif args.parcels:
        items = load_parcels(args.parcels)
    else:
        items = [load_boundary(args.boundary)]
    export_features(items, args.output)
    return _emit({"features": len(items), "output": str(args.output)}, args.format)


# --- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="json")

    parser = _Parser(prog="voirie", description="Road footprints and pavement registry.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fp = sub.add_parser("footprint", help="build or compare road footprints")
    fp_sub = fp.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("centerline", "cadastre", "combine", "compare"):
        p = fp_sub.add_parser(name, parents=[common])
        p.add_argument("--boundary", required=True)
        if name != "cadastre":
            p.add_argument("--axes", required=True)
            p.add_argument("--widths", required=True)
        if name != "centerline":
            p.add_argument("--parcels", required=True)
        if name != "compare":
            p.add_argument("-o", "--output")
    fp.set_defaults(func=cmd_footprint)

    lex = sub.add_parser("lexicon", help="validate a lexicon or resolve a word")
    lex_sub = lex.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = lex_sub.add_parser("validate", parents=[common])
    p.add_argument("path", nargs="?", help="lexicon JSON file (default: shipped seed)")
    p = lex_sub.add_parser("resolve", parents=[common])
    p.add_argument("word")
    p.add_argument("--lexicon")
    p.add_argument("--sense", help="pick one sense of an ambiguous word")
    lex.set_defaults(func=cmd_lexicon)

    sec = sub.add_parser("sections", help="cut axes into survey sections")
    sec_sub = sec.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = sec_sub.add_parser("build", parents=[common])
    p.add_argument("--axes", required=True)
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    p.add_argument("-o", "--output")
    sec.set_defaults(func=cmd_sections)

    reg = sub.add_parser("registry", help="append to or query the event log")
    reg_sub = reg.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name in ("append", "state", "coverage"):
        p = reg_sub.add_parser(name, parents=[common])
        p.add_argument("--log", required=True)
        p.add_argument("--axes", required=True)
        p.add_argument("--step", type=float, default=DEFAULT_STEP)
        p.add_argument("--now")
    reg_sub.choices["append"].add_argument("--event", required=True,
                                           help="JSON file or text: {type, payload} or a list of them")
    reg_sub.choices["state"].add_argument("--section", required=True)
    reg_sub.choices["coverage"].add_argument("--window-days", type=float, default=365.0)
    reg.set_defaults(func=cmd_registry)

    rep = sub.add_parser("report", help="areas, costs and priorities")
    rep_sub = rep.add_subparsers(dest="action", required=True, parser_class=_Parser)
    p = rep_sub.add_parser("area", parents=[common])
    p.add_argument("footprints", nargs="+", help="footprint GeoJSON files written by this tool")
    p.add_argument("--paris", action="store_true", help="annotate with the Paris reference areas")
    p = rep_sub.add_parser("cost", parents=[common])
    p.add_argument("--area-m2", type=float, required=True)
    p.add_argument("--basis", choices=BASES, default="full")
    p.add_argument("--cost-model")
    p = rep_sub.add_parser("gap-cost", parents=[common])
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--delta-km2", type=float)
    grp.add_argument("--delta-m2", type=float)
    p.add_argument("--cost-model")
    p = rep_sub.add_parser("priority", parents=[common])
    p.add_argument("--log", required=True)
    p.add_argument("--axes", required=True)
    p.add_argument("--step", type=float, default=DEFAULT_STEP)
    p.add_argument("--now")
    rep.set_defaults(func=cmd_report)

    exp = sub.add_parser("export", parents=[common], help="write inputs or sections as GeoJSON")
    src = exp.add_mutually_exclusive_group(required=True)
    src.add_argument("--axes")
    src.add_argument("--parcels")
    src.add_argument("--boundary")
    exp.add_argument("--sections", action="store_true", help="export the sections of --axes")
    exp.add_argument("--step", type=float, default=DEFAULT_STEP)
    exp.add_argument("-o", "--output", required=True)
    exp.set_defaults(func=cmd_export)
    return parser


def run(argv: Sequence[str]) -> CommandResult:
    """Execute one command in-process and capture its outputs."""
    capture = _Capture()
    logger.addHandler(capture)
    out = io.StringIO()
    try:
        with contextlib.redirect_stdout(out):
            try:
                args = build_parser().parse_args(list(argv))
            except SystemExit as exc:  # --help
                return CommandResult(int(exc.code or 0), out.getvalue(), capture.messages)
        stdout = args.func(args)
        return CommandResult(0, stdout, capture.messages)
    except UsageError as exc:
        return CommandResult(2, "", capture.messages, str(exc))
    except (VoirieError, OSError) as exc:
        return CommandResult(1, "", capture.messages, f"error: {exc}")
    finally:
        logger.removeHandler(capture)


def main(argv: Optional[Sequence[str]] = None) -> int:
    result = run(sys.argv[1:] if argv is None else argv)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if result.stderr:
        print(result.stderr, file=sys.stderr)
    sys.stdout.write(result.stdout)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
