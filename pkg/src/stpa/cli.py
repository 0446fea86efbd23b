"""``stpa`` command line: thin shell over the library operations.

Exit status: 0 success, 1 validation errors (or warnings with ``--strict``),
2 unreadable or unparseable input, 3 usage error.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

from stpa.dsl import ParseError, parse
from stpa.engine import (
    AsilDomainError,
    Severity,
    compute_asil,
    enumerate_candidates,
    step2_prompts,
    trace,
    validate,
)
from stpa.model import NotFoundError, Rating, SafetyModel
from stpa.reports import build_bundle, emit_csv_matrix, emit_json, emit_markdown

OK, INVALID, PARSE_FAILURE, USAGE = 0, 1, 2, 3

REPORT_FILES = {"md": "report.md", "json": "report.json", "csv": "matrix.csv"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


class _Style:
    def __init__(self, enabled: bool) -> None:
        self.enabled = enabled

    def paint(self, text: str, code: str) -> str:
        return f"\033[{code}m{text}\033[0m" if self.enabled else text

    def error(self, text: str) -> str:
        return self.paint(text, "31")

    def warning(self, text: str) -> str:
        return self.paint(text, "33")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--no-color", action="store_true", default=argparse.SUPPRESS,
                        help="disable colored diagnostics")

    parser = _Parser(prog="stpa", description="STPA safety analysis over .stpa models",
                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="parse and validate a model")
    p.add_argument("file")
    p.add_argument("--strict", action="store_true", help="treat warnings as errors")

    p = sub.add_parser("candidates", parents=[common], help="list UCA candidates")
    p.add_argument("file")
    p.add_argument("--csv", action="store_true", help="print the UCA matrix as CSV")

    p = sub.add_parser("asil", parents=[common], help="compute ASILs")
    p.add_argument("file", nargs="?")
    p.add_argument("--rate", nargs=3, metavar=("S", "E", "C"),
                   help="rate a single triple, e.g. --rate S3 E4 C3")

    p = sub.add_parser("trace", parents=[common], help="traceability around one entity")
    p.add_argument("file")
    p.add_argument("--id", required=True, dest="ident")

    p = sub.add_parser("step2", parents=[common], help="causal-analysis prompts for a UCA")
    p.add_argument("file")
    p.add_argument("--uca", required=True)

    p = sub.add_parser("report", parents=[common], help="emit work products")
    p.add_argument("file")
    p.add_argument("--format", required=True, choices=sorted(REPORT_FILES))
    p.add_argument("--out", metavar="DIR", help="write into DIR instead of standard output")
    return parser


def _load(path: str, err: TextIO, style: _Style) -> Optional[SafetyModel]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        reason = exc.strerror if isinstance(exc, OSError) and exc.strerror else str(exc)
        print(f"stpa: cannot read {path}: {reason}", file=err)
        return None
    try:
        return parse(text, file=path)
    except ParseError as exc:
        for diag in exc.diagnostics:
            print(f"{diag.span}: {style.error('error')}: {diag.message}", file=err)
        print(f"{len(exc.diagnostics)} parse errors", file=err)
        return None


def _parse_rating(parts: Sequence[str]) -> Rating:
    values = []
    for letter, part in zip("SEC", parts):
        m = re.fullmatch(rf"{letter}(\d+)", part.strip().upper())
        if m is None:
            raise UsageError(f"expected {letter}<digit>, got {part!r}")
        values.append(int(m.group(1)))
    return Rating(*values)


def _cmd_check(args, model: SafetyModel, out: TextIO, err: TextIO, style: _Style) -> int:
    findings = validate(model)
    for f in findings:
        label = style.error if f.severity is Severity.ERROR else style.warning
        where = f"{f.span}: " if f.span else ""
        print(f"{where}{label(f.severity.value)} {f.code} [{f.subject}]: {f.message}", file=err)
    errors = sum(f.severity is Severity.ERROR for f in findings)
    warnings = len(findings) - errors
    print(f"{errors} errors, {warnings} warnings", file=err)
    if errors or (args.strict and warnings):
        return INVALID
    return OK


def _cmd_candidates(args, model: SafetyModel, out: TextIO, err: TextIO, style: _Style) -> int:
    if args.csv:
        out.write(emit_csv_matrix(build_bundle(model)))
        return OK
    for cand in enumerate_candidates(model):
        ucas = f"\t{','.join(cand.uca_ids)}" if cand.uca_ids else ""
        print(f"{cand.action}\t{cand.category.value}\t{cand.status.value}{ucas}", file=out)
    return OK


def _cmd_asil_file(model: SafetyModel, out: TextIO, err: TextIO) -> int:
    status = OK
    for uca in model.ucas:
        if uca.rating is None:
            print(f"{uca.id}\tunrated\t-", file=out)
            continue
        try:
            level = compute_asil(uca.rating).value
        except AsilDomainError as exc:
            print(f"stpa: {uca.id}: {exc}", file=err)
            level, status = "invalid", INVALID
        print(f"{uca.id}\t{uca.rating}\t{level}", file=out)
    return status


def _cmd_trace(args, model: SafetyModel, out: TextIO, err: TextIO, style: _Style) -> int:
    try:
        out.write(trace(model, args.ident).render())
    except NotFoundError as exc:
        print(f"stpa: {exc}", file=err)
        return USAGE
    return OK


def _cmd_step2(args, model: SafetyModel, out: TextIO, err: TextIO, style: _Style) -> int:
    try:
        prompts = step2_prompts(model, args.uca)
    except NotFoundError as exc:
        print(f"stpa: {exc}", file=err)
        return USAGE
    for prompt in prompts:
        print(f"[{prompt.element.value}] {prompt.question}", file=out)
        answered = ", ".join(prompt.answered_by) if prompt.answered_by else "(none yet)"
        print(f"  answered by: {answered}", file=out)
    return OK


_EMITTERS = {"md": emit_markdown, "json": emit_json, "csv": emit_csv_matrix}


def _cmd_report(args, model: SafetyModel, out: TextIO, err: TextIO, style: _Style) -> int:
    text = _EMITTERS[args.format](build_bundle(model))
    if args.out is None:
        out.write(text)
        return OK
    target = Path(args.out) / REPORT_FILES[args.format]
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"stpa: cannot write {target}: {exc.strerror or exc}", file=err)
        return PARSE_FAILURE
    print(f"wrote {target}", file=err)
    return OK


_COMMANDS = {
    "check": _cmd_check,
    "candidates": _cmd_candidates,
    "trace": _cmd_trace,
    "step2": _cmd_step2,
    "report": _cmd_report,
}


def run(argv: Sequence[str], out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(list(argv))
    except UsageError as exc:
        print(exc, file=err)
        return USAGE
    except SystemExit as exc:  # --help
        return OK if not exc.code else USAGE

    no_color = getattr(args, "no_color", False) or os.environ.get("STPA_NO_COLOR") == "1"
    style = _Style(not no_color and err.isatty())

    if args.command == "asil":
        if (args.rate is None) == (args.file is None):
            print("stpa asil: give either --rate S E C or a model file", file=err)
            return USAGE
        if args.rate is not None:
            try:
                print(compute_asil(_parse_rating(args.rate)).value, file=out)
            except (UsageError, AsilDomainError) as exc:
                print(f"stpa asil: {exc}", file=err)
                return USAGE
            return OK
        model = _load(args.file, err, style)
        return PARSE_FAILURE if model is None else _cmd_asil_file(model, out, err)

    model = _load(args.file, err, style)
    if model is None:
        return PARSE_FAILURE
    return _COMMANDS[args.command](args, model, out, err, style)


def main(argv: Sequence[str] | None = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
