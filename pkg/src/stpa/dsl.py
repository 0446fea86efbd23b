"""Reader and writer for the textual ``.stpa`` safety-model format.

The grammar is line-insensitive; a declaration starts at one of the
top-level keywords and runs until the next one. ``//`` starts a comment.
Strings are double-quoted and understand ``\\"``, ``\\\\``, ``\\n``, ``\\r``
and ``\\t``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Optional

from stpa.model import (
    ID_PATTERNS,
    Accident,
    Asil,
    CausalFactor,
    CausalScenario,
    Component,
    ComponentKind,
    ControlAction,
    Element,
    FeedbackSignal,
    Hazard,
    Qualifier,
    QUALIFIERS_BY_CLASS,
    Rating,
    SafeAssessment,
    SafetyConstraint,
    SafetyModel,
    SourceSpan,
    UcaCategory,
    UcaClass,
    UnsafeControlAction,
)

TOP_LEVEL = (
    "accident",
    "hazard",
    "constraint",
    "component",
    "action",
    "feedback",
    "uca",
    "safe",
    "cause",
    "scenario",
)
KEYWORDS = frozenset(
    TOP_LEVEL
    + (
        "model",
        "from",
        "asil",
        "kind",
        "on",
        "category",
        "qualifier",
        "context",
        "hazards",
        "rating",
        "justification",
        "element",
        "requires",
    )
)

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_ESCAPES = {'"': '"', "\\": "\\", "n": "\n", "r": "\r", "t": "\t"}


@dataclass(frozen=True, slots=True)
class ParseDiagnostic:
    span: SourceSpan
    message: str
    expected: Optional[tuple[str, ...]] = None

    def __str__(self) -> str:
        return f"{self.span}: error: {self.message}"


class ParseError(Exception):
    """Raised by :func:`parse` with every diagnostic found in the source."""

    def __init__(self, diagnostics: list[ParseDiagnostic]) -> None:
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # "keyword", "ident", "string", "->", ",", "eof"
    text: str
    span: SourceSpan
    value: str = ""

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        if self.kind == "string":
            return "string"
        return repr(self.text)


def tokenize(source: str, file: str = "<input>") -> tuple[list[Token], list[ParseDiagnostic]]:
    tokens: list[Token] = []
    errors: list[ParseDiagnostic] = []
    i, line, col = 0, 1, 1
    n = len(source)

    def span(length: int, at_line: int = 0, at_col: int = 0) -> SourceSpan:
        return SourceSpan(file, at_line or line, at_col or col, length)

    while i < n:
        ch = source[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
        elif ch in " \t\r":
            i, col = i + 1, col + 1
        elif source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
        elif source.startswith("->", i):
            tokens.append(Token("->", "->", span(2)))
            i, col = i + 2, col + 2
        elif ch == ",":
            tokens.append(Token(",", ",", span(1)))
            i, col = i + 1, col + 1
        elif ch == '"':
            start, start_col = i, col
            chars: list[str] = []
            i, col = i + 1, col + 1
            closed = False
            while i < n and source[i] != "\n":
                c = source[i]
                if c == '"':
                    i, col, closed = i + 1, col + 1, True
                    break
                if c == "\\":
                    esc = source[i + 1] if i + 1 < n else ""
                    if esc not in _ESCAPES:
                        errors.append(
                            ParseDiagnostic(span(2 if esc else 1), f"invalid escape sequence '\\{esc}'")
                        )
                        i, col = i + (2 if esc and esc != "\n" else 1), col + 2
                        continue
                    chars.append(_ESCAPES[esc])
                    i, col = i + 2, col + 2
                    continue
                chars.append(c)
                i, col = i + 1, col + 1
            if not closed:
                errors.append(
                    ParseDiagnostic(span(i - start, line, start_col), "unterminated string")
                )
            tokens.append(
                Token("string", source[start:i], span(i - start, line, start_col), "".join(chars))
            )
        elif m := _IDENT.match(source, i):
            text = m.group()
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, span(len(text)), text))
            i, col = m.end(), col + len(text)
        else:
            errors.append(ParseDiagnostic(span(1), f"unexpected character {ch!r}"))
            i, col = i + 1, col + 1
    tokens.append(Token("eof", "", span(0)))
    return tokens, errors


class _Syntax(Exception):
    def __init__(self, diagnostic: ParseDiagnostic) -> None:
        self.diagnostic = diagnostic


class _Parser:
    def __init__(self, tokens: list[Token], file: str) -> None:
        self.tokens = tokens
        self.pos = 0
        self.file = file
        self.diagnostics: list[ParseDiagnostic] = []
        self.items: dict[str, list] = {name: [] for name in TOP_LEVEL}
        self.declared: dict[str, SourceSpan] = {}

    # -- token helpers -------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def fail(self, expected: tuple[str, ...], at: Optional[Token] = None, message: str = "") -> None:
        tok = at or self.tok
        if not message:
            message = f"expected {' or '.join(expected)}, found {self.tok.describe()}"
        raise _Syntax(ParseDiagnostic(tok.span, message, expected))

    def keyword(self, word: str) -> Token:
        if self.tok.kind == "keyword" and self.tok.text == word:
            return self.advance()
        self.fail((repr(word),))

    def ident(self, after: Optional[Token] = None) -> Token:
        if self.tok.kind == "ident":
            return self.advance()
        if after is not None:
            self.fail(("identifier",), at=after,
                      message=f"expected identifier after {after.text!r}, found {self.tok.describe()}")
        self.fail(("identifier",))

    def string(self) -> Token:
        if self.tok.kind == "string":
            return self.advance()
        self.fail(("string",))

    def choice(self, what: str, convert: Callable[[str], object], options: list[str]):
        tok = self.tok
        if tok.kind == "ident" and tok.text in options:
            self.advance()
            return convert(tok.text)
        self.fail(tuple(repr(o) for o in options), message=(
            f"expected {what} ({', '.join(options)}), found {tok.describe()}"
        ))

    def at_keyword(self, word: str) -> bool:
        return self.tok.kind == "keyword" and self.tok.text == word

    def id_list(self, lead: Token) -> tuple[str, ...]:
        ids = [self.ident(after=lead).text]
        while self.tok.kind == ",":
            comma = self.advance()
            ids.append(self.ident(after=comma).text)
        return tuple(ids)

    def new_id(self, kind: Optional[str]) -> Token:
        tok = self.ident()
        pattern = ID_PATTERNS.get(kind) if kind else None
        if pattern is not None and not pattern.fullmatch(tok.text):
            raise _Syntax(ParseDiagnostic(
                tok.span, f"{kind} id {tok.text!r} must match {pattern.pattern}", None
            ))
        return tok

    def declare(self, tok: Token) -> None:
        if tok.text in self.declared:
            first = self.declared[tok.text]
            self.diagnostics.append(ParseDiagnostic(
                tok.span, f"duplicate id {tok.text!r} (first declared at {first.line}:{first.column})"
            ))
        else:
            self.declared[tok.text] = tok.span

    def decl_span(self, start: Token) -> SourceSpan:
        prev = self.tokens[self.pos - 1]
        if prev.span.line == start.span.line:
            length = prev.span.column + prev.span.length - start.span.column
        else:
            length = start.span.length
        return SourceSpan(self.file, start.span.line, start.span.column, length)

    # -- grammar -------------------------------------------------------

    def parse(self) -> Optional[str]:
        name = None
        try:
            self.keyword("model")
            name = self.string().value
        except _Syntax as exc:
            self.diagnostics.append(exc.diagnostic)
            self.recover()
        while self.tok.kind != "eof":
            tok = self.tok
            try:
                if tok.kind == "keyword" and tok.text in TOP_LEVEL:
                    start = self.advance()
                    getattr(self, f"p_{tok.text}")(start)
                else:
                    self.fail(tuple(repr(k) for k in TOP_LEVEL),
                              message=f"expected a declaration, found {tok.describe()}")
            except _Syntax as exc:
                self.diagnostics.append(exc.diagnostic)
                self.recover()
        return name

    def recover(self) -> None:
        while self.tok.kind != "eof" and not (
            self.tok.kind == "keyword" and self.tok.text in TOP_LEVEL
        ):
            self.advance()

    def p_accident(self, start: Token) -> None:
        ident = self.new_id("accident")
        text = self.string().value
        self.declare(ident)
        self.items["accident"].append(Accident(ident.text, text, self.decl_span(start)))

    def p_hazard(self, start: Token) -> None:
        ident = self.new_id("hazard")
        text = self.string().value
        refs: tuple[str, ...] = ()
        if self.tok.kind == "->":
            refs = self.id_list(self.advance())
        self.declare(ident)
        self.items["hazard"].append(Hazard(ident.text, text, refs, self.decl_span(start)))

    def p_constraint(self, start: Token) -> None:
        ident = self.new_id("constraint")
        self.keyword("from")
        source = self.ident().text
        text = self.string().value
        asil = None
        if self.at_keyword("asil"):
            self.advance()
            asil = self.choice("ASIL", Asil, [a.value for a in Asil])
        self.declare(ident)
        self.items["constraint"].append(
            SafetyConstraint(ident.text, source, text, asil, self.decl_span(start))
        )

    def p_component(self, start: Token) -> None:
        ident = self.new_id(None)
        self.keyword("kind")
        kind = self.choice("component kind", ComponentKind, [k.value for k in ComponentKind])
        label = self.string().value
        self.declare(ident)
        self.items["component"].append(Component(ident.text, kind, label, self.decl_span(start)))

    def _edge(self, start: Token, kind: str, cls: type) -> None:
        ident = self.new_id(kind)
        source = self.ident().text
        if self.tok.kind != "->":
            self.fail(("'->'",))
        arrow = self.advance()
        target = self.ident(after=arrow).text
        label = self.string().value
        self.declare(ident)
        self.items[kind].append(cls(ident.text, source, target, label, self.decl_span(start)))

    def p_action(self, start: Token) -> None:
        self._edge(start, "action", ControlAction)

    def p_feedback(self, start: Token) -> None:
        self._edge(start, "feedback", FeedbackSignal)

    def category(self) -> UcaCategory:
        self.keyword("category")
        cls = self.choice("category", UcaClass, [c.value for c in UcaClass])
        qualifier = None
        if self.at_keyword("qualifier"):
            self.advance()
            tok = self.tok
            qualifier = self.choice("qualifier", Qualifier, [q.value for q in Qualifier])
            if qualifier not in QUALIFIERS_BY_CLASS[cls]:
                allowed = sorted(q.value for q in QUALIFIERS_BY_CLASS[cls])
                raise _Syntax(ParseDiagnostic(
                    tok.span,
                    f"qualifier {qualifier.value!r} not allowed for category {cls.value!r}",
                    tuple(repr(a) for a in allowed) or None,
                ))
        return UcaCategory(cls, qualifier)

    def rating(self) -> Rating:
        values = []
        for letter in "SEC":
            tok = self.tok
            m = re.fullmatch(rf"{letter}(\d+)", tok.text) if tok.kind == "ident" else None
            if m is None:
                self.fail((f"{letter}<digit>",))
            self.advance()
            values.append(int(m.group(1)))
        return Rating(*values)

    def p_uca(self, start: Token) -> None:
        ident = self.new_id("uca")
        self.keyword("on")
        action = self.ident().text
        category = self.category()
        self.keyword("context")
        context = self.string().value
        hazards: tuple[str, ...] = ()
        if self.at_keyword("hazards"):
            hazards = self.id_list(self.advance())
        rating = None
        if self.at_keyword("rating"):
            self.advance()
            rating = self.rating()
        self.declare(ident)
        self.items["uca"].append(UnsafeControlAction(
            ident.text, action, category, context, hazards, rating, self.decl_span(start)
        ))

    def p_safe(self, start: Token) -> None:
        action = self.ident().text
        category = self.category()
        self.keyword("justification")
        text = self.string().value
        self.items["safe"].append(SafeAssessment(action, category, text, self.decl_span(start)))

    def p_cause(self, start: Token) -> None:
        ident = self.new_id("cause")
        self.keyword("on")
        uca = self.ident().text
        self.keyword("element")
        element = self.choice("element", Element, [e.value for e in Element])
        text = self.string().value
        self.declare(ident)
        self.items["cause"].append(CausalFactor(ident.text, uca, element, text, self.decl_span(start)))

    def p_scenario(self, start: Token) -> None:
        ident = self.new_id("scenario")
        self.keyword("on")
        uca = self.ident().text
        factors = self.id_list(self.keyword("requires"))
        text = self.string().value
        self.declare(ident)
        self.items["scenario"].append(
            CausalScenario(ident.text, uca, factors, text, self.decl_span(start))
        )


def parse(source: str, file: str = "<input>") -> SafetyModel:
    """Parse ``.stpa`` text into a :class:`SafetyModel`.

    Raises :class:`ParseError` carrying every lexical, syntactic and
    duplicate-id diagnostic, ordered by position. References between
    entities are not resolved here; that is the validator's job.
    """
    tokens, lex_errors = tokenize(source, file)
    parser = _Parser(tokens, file)
    name = parser.parse()
    diagnostics = lex_errors + parser.diagnostics
    if diagnostics:
        diagnostics.sort(key=lambda d: (d.span.line, d.span.column))
        raise ParseError(diagnostics)
    items = parser.items
    return SafetyModel(
        name=name or "",
        accidents=tuple(items["accident"]),
        hazards=tuple(items["hazard"]),
        constraints=tuple(items["constraint"]),
        components=tuple(items["component"]),
        actions=tuple(items["action"]),
        feedbacks=tuple(items["feedback"]),
        ucas=tuple(items["uca"]),
        safe_assessments=tuple(items["safe"]),
        causal_factors=tuple(items["cause"]),
        scenarios=tuple(items["scenario"]),
    )


def quote(text: str) -> str:
    out = ['"']
    for ch in text:
        if ch in '"\\':
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _category(cat: UcaCategory) -> str:
    text = f"category {cat.cls.value}"
    if cat.qualifier is not None:
        text += f" qualifier {cat.qualifier.value}"
    return text


def print_model(model: SafetyModel) -> str:
    """Render ``model`` in canonical form.

    Declarations are grouped by kind in a fixed order, one blank line
    between groups; UCAs continue on indented lines.
    """
    groups: list[list[str]] = [
        [f"accident {a.id} {quote(a.description)}" for a in model.accidents],
        [
            f"hazard {h.id} {quote(h.description)}"
            + (f" -> {', '.join(h.accident_refs)}" if h.accident_refs else "")
            for h in model.hazards
        ],
        [
            f"constraint {c.id} from {c.source} {quote(c.text)}"
            + (f" asil {c.asil.value}" if c.asil is not None else "")
            for c in model.constraints
        ],
        [f"component {c.id} kind {c.kind.value} {quote(c.label)}" for c in model.components],
        [f"action {a.id} {a.source} -> {a.target} {quote(a.label)}" for a in model.actions],
        [f"feedback {f.id} {f.source} -> {f.target} {quote(f.label)}" for f in model.feedbacks],
        [_print_uca(u) for u in model.ucas],
        [
            f"safe {s.action} {_category(s.category)}\n  justification {quote(s.justification)}"
            for s in model.safe_assessments
        ],
        [
            f"cause {c.id} on {c.uca} element {c.element.value} {quote(c.description)}"
            for c in model.causal_factors
        ],
        [
            f"scenario {s.id} on {s.uca} requires {', '.join(s.factors)}\n  {quote(s.description)}"
            for s in model.scenarios
        ],
    ]
    out = [f"model {quote(model.name)}\n"]
    for lines in groups:
        if lines:
            out.append("\n")
            out.extend(line + "\n" for line in lines)
    return "".join(out)


def _print_uca(uca: UnsafeControlAction) -> str:
    lines = [
        f"uca {uca.id} on {uca.action} {_category(uca.category)}",
        f"  context {quote(uca.context)}",
    ]
    if uca.hazard_refs:
        lines.append(f"  hazards {', '.join(uca.hazard_refs)}")
    if uca.rating is not None:
        lines.append(f"  rating {uca.rating}")
    return "\n".join(lines)
