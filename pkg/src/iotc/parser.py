"""Recursive-descent parsers for the four specification languages.

The grammar is keyword-introduced and brace-delimited; all keywords are
contextual (see docs/grammar.md for the committed EBNF). Each ``parse_*``
function either returns a fully populated section with a span table, or
one or more error diagnostics -- never both. Parsers recover at
declaration boundaries so several errors can be reported in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import model
from .diagnostics import Diagnostic, Severity, Span
from .lexer import EOF, IDENT, NUMBER, OP, PUNCT, STRING, LexError, Token, tokenize
from .model import (
    Action,
    ArchSection,
    Command,
    Condition,
    Consume,
    DeploySection,
    DeviceDecl,
    EventDrivenSensorDecl,
    Field,
    Generate,
    InteractionDecl,
    InvariantViolation,
    PeriodicSensorDecl,
    Request,
    RequestBasedSensorDecl,
    ServiceDecl,
    SpanTable,
    StorageDecl,
    StructDecl,
    TagDecl,
    UiCommand,
    UiRequest,
    UiSection,
    VocabSection,
)

VOCAB_SECTIONS = ("structs", "sensors", "tags", "actuators", "storages")
SENSOR_SUBSECTIONS = ("periodicSensors", "eventDrivenSensors", "requestBasedSensors")
TIME_UNITS = {
    "s": 1,
    "sec": 1,
    "second": 1,
    "seconds": 1,
    "min": 60,
    "minute": 60,
    "minutes": 60,
    "h": 3600,
    "hour": 3600,
    "hours": 3600,
}


@dataclass(frozen=True)
class ParseResult:
    """Outcome of parsing one source file: a section or error diagnostics."""

    section: object | None
    spans: SpanTable
    diagnostics: tuple[Diagnostic, ...] = ()

    @property
    def ok(self) -> bool:
        return self.section is not None


class _ParseError(Exception):
    def __init__(self, diagnostic: Diagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


class _Parser:
    """Token cursor with the error plumbing shared by all four languages."""

    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: list[Diagnostic] = []
        self.spans = SpanTable()

    # -- cursor primitives -------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.peek().kind == EOF

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == IDENT and tok.text == word

    def at_punct(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind == PUNCT and tok.text == text

    def at_section_header(self) -> bool:
        return self.peek().kind == IDENT and self.peek(1).kind == PUNCT and self.peek(1).text == ":"

    def error(self, message: str, span: Span | None = None, code: str = "SyntaxError") -> _ParseError:
        return _ParseError(Diagnostic(Severity.ERROR, code, message, span or self.peek().span))

    def expect_ident(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind != IDENT:
            raise self.error(f"expected {what}, found {tok.text!r}" if tok.text else f"expected {what}, found end of file")
        return self.advance()

    def expect_word(self, word: str) -> Token:
        tok = self.peek()
        if not self.at_word(word):
            found = tok.text if tok.text else "end of file"
            raise self.error(f"expected '{word}', found {found!r}")
        return self.advance()

    def expect_punct(self, text: str) -> Token:
        tok = self.peek()
        if not self.at_punct(text):
            found = tok.text if tok.text else "end of file"
            raise self.error(f"expected '{text}', found {found!r}")
        return self.advance()

    # -- shared grammar fragments -------------------------------------------

    def parse_type(self) -> str:
        tok = self.expect_ident("a type (double, long, or String)")
        if tok.text not in model.PRIMITIVE_TYPES:
            raise self.error(
                f"unknown type '{tok.text}' (expected double, long, or String)", tok.span
            )
        return tok.text

    def parse_typed_param(self) -> Field:
        name = self.expect_ident("a parameter name")
        self.expect_punct(":")
        return Field(name.text, self.parse_type())

    def parse_generate(self, key_prefix: tuple) -> Generate:
        """`generate <measurement>: <Struct>`; the leading word is consumed by the caller."""
        measurement = self.expect_ident("a measurement name")
        self.expect_punct(":")
        struct = self.expect_ident("a struct name")
        self.spans.add(key_prefix + ("generate",), measurement.span)
        self.spans.add(key_prefix + ("generate-struct",), struct.span)
        return Generate(measurement.text, struct.text)

    def parse_duration_s(self) -> int:
        tok = self.peek()
        if tok.kind != NUMBER or "." in tok.text or tok.text.startswith("-"):
            raise self.error("expected a positive whole number of time units")
        self.advance()
        value = int(tok.text)
        if self.peek().kind == IDENT and self.peek().text in TIME_UNITS:
            value *= TIME_UNITS[self.advance().text]
        return value

    def parse_binding(self) -> str | int | float:
        tok = self.peek()
        if tok.kind in (NUMBER, STRING):
            return self.advance().value
        return self.expect_ident("an argument (field name or literal)").text

    def parse_arg_list(self) -> tuple:
        """Optional parenthesized bindings; absent parens mean no arguments."""
        if not self.at_punct("("):
            return ()
        self.expect_punct("(")
        args: list = []
        while not self.at_punct(")"):
            args.append(self.parse_binding())
            if not self.at_punct(","):
                break
            self.expect_punct(",")
        self.expect_punct(")")
        return tuple(args)

    # -- declaration scaffolding ---------------------------------------------

    def skip_block(self) -> None:
        """Recover from an error by skipping to the end of the current decl."""
        depth = 0
        while not self.at_end():
            if self.at_punct("{"):
                depth += 1
            elif self.at_punct("}"):
                if depth <= 1:
                    self.advance()
                    return
                depth -= 1
            elif depth == 0 and self.at_section_header():
                return
            self.advance()

    def open_decl(self, what: str) -> Token:
        name = self.expect_ident(f"a {what} name")
        self.expect_punct("{")
        return name

    def check_duplicate(self, name: Token, seen: dict[str, Span], what: str) -> None:
        if name.text in seen:
            prev = seen[name.text]
            raise _ParseError(
                Diagnostic(
                    Severity.ERROR,
                    "DuplicateName",
                    f"{what} '{name.text}' is already declared at line {prev.line}",
                    name.span,
                )
            )
        seen[name.text] = name.span

    def build(self, factory, name: Token, **kwargs):
        """Construct a model object, converting invariant failures to diagnostics."""
        try:
            return factory(name=name.text, **kwargs)
        except InvariantViolation as exc:
            raise _ParseError(
                Diagnostic(Severity.ERROR, "InvalidDecl", str(exc), name.span)
            ) from exc

    def require_clause(self, present: bool, name: Token, clause: str, what: str) -> None:
        if not present:
            raise _ParseError(
                Diagnostic(
                    Severity.ERROR,
                    "SyntaxError",
                    f"{what} '{name.text}' is missing its '{clause}' clause",
                    name.span,
                )
            )

    def reject_repeat(self, value, name_or_tok: Token, clause: str) -> None:
        if value is not None:
            raise self.error(f"'{clause}' appears more than once", name_or_tok.span)


# ---------------------------------------------------------------------------
# vocab


def _parse_struct(p: _Parser, seen: dict[str, Span]) -> StructDecl:
    name = p.open_decl("struct")
    p.check_duplicate(name, seen, "struct")
    fields: list[Field] = []
    while not p.at_punct("}"):
        fname = p.expect_ident("a field name")
        p.expect_punct(":")
        ftype = p.parse_type()
        if any(f.name == fname.text for f in fields):
            raise _ParseError(
                Diagnostic(Severity.ERROR, "DuplicateName", f"duplicate field '{fname.text}'", fname.span)
            )
        fields.append(Field(fname.text, ftype))
    p.expect_punct("}")
    p.spans.add(("struct", name.text), name.span)
    return p.build(StructDecl, name, fields=tuple(fields))


def _parse_periodic(p: _Parser, seen: dict[str, Span]) -> PeriodicSensorDecl:
    name = p.open_decl("sensor")
    p.check_duplicate(name, seen, "sensor")
    generates = None
    period = duration = None
    while not p.at_punct("}"):
        word = p.expect_ident("'generate' or 'sample'")
        if word.text == "generate":
            p.reject_repeat(generates, word, "generate")
            generates = p.parse_generate(("sensor", name.text))
        elif word.text == "sample":
            p.reject_repeat(period, word, "sample period")
            p.expect_word("period")
            period = p.parse_duration_s()
            p.expect_word("for")
            duration = p.parse_duration_s()
        else:
            raise p.error(f"unknown clause '{word.text}' in a periodic sensor", word.span)
    p.expect_punct("}")
    p.require_clause(generates is not None, name, "generate", "periodic sensor")
    p.require_clause(period is not None, name, "sample period", "periodic sensor")
    p.spans.add(("sensor", name.text), name.span)
    return p.build(
        PeriodicSensorDecl, name, generates=generates, sample_period_s=period, duration_s=duration
    )


def _parse_event(p: _Parser, seen: dict[str, Span]) -> EventDrivenSensorDecl:
    name = p.open_decl("sensor")
    p.check_duplicate(name, seen, "sensor")
    generates = None
    condition = None
    while not p.at_punct("}"):
        word = p.expect_ident("'generate' or 'onCondition'")
        if word.text == "generate":
            p.reject_repeat(generates, word, "generate")
            generates = p.parse_generate(("sensor", name.text))
        elif word.text == "onCondition":
            p.reject_repeat(condition, word, "onCondition")
            field_tok = p.expect_ident("a field name")
            op_tok = p.peek()
            if op_tok.kind != OP:
                raise p.error("expected a comparison operator (<, <=, >, >=, ==)")
            p.advance()
            lit = p.peek()
            if lit.kind != NUMBER:
                raise p.error("expected a numeric literal in the condition")
            p.advance()
            p.spans.add(("sensor", name.text, "condition"), field_tok.span)
            condition = Condition(field_tok.text, op_tok.text, lit.value)
        else:
            raise p.error(f"unknown clause '{word.text}' in an event-driven sensor", word.span)
    p.expect_punct("}")
    p.require_clause(generates is not None, name, "generate", "event-driven sensor")
    p.require_clause(condition is not None, name, "onCondition", "event-driven sensor")
    p.spans.add(("sensor", name.text), name.span)
    return p.build(EventDrivenSensorDecl, name, generates=generates, condition=condition)


def _parse_request_sensor(p: _Parser, seen: dict[str, Span]) -> RequestBasedSensorDecl:
    name = p.open_decl("sensor")
    p.check_duplicate(name, seen, "sensor")
    generates = None
    access = None
    while not p.at_punct("}"):
        word = p.expect_ident("'generate' or 'accessed-by'")
        if word.text == "generate":
            p.reject_repeat(generates, word, "generate")
            generates = p.parse_generate(("sensor", name.text))
        elif word.text == "accessed-by":
            p.reject_repeat(access, word, "accessed-by")
            access = p.parse_typed_param()
            p.spans.add(("sensor", name.text, "accessed-by"), word.span)
        else:
            raise p.error(f"unknown clause '{word.text}' in a request-based sensor", word.span)
    p.expect_punct("}")
    p.require_clause(generates is not None, name, "generate", "request-based sensor")
    p.require_clause(access is not None, name, "accessed-by", "request-based sensor")
    p.spans.add(("sensor", name.text), name.span)
    return p.build(RequestBasedSensorDecl, name, generates=generates, access_param=access)


def _parse_tag(p: _Parser, seen: dict[str, Span]) -> TagDecl:
    name = p.open_decl("tag")
    p.check_duplicate(name, seen, "tag")
    generates = None
    while not p.at_punct("}"):
        word = p.expect_word("generate")
        p.reject_repeat(generates, word, "generate")
        generates = p.parse_generate(("tag", name.text))
    p.expect_punct("}")
    p.require_clause(generates is not None, name, "generate", "tag")
    p.spans.add(("tag", name.text), name.span)
    return p.build(TagDecl, name, generates=generates)


def _parse_action(p: _Parser) -> Action:
    name = p.expect_ident("an action name")
    p.expect_punct("(")
    params: list[Field] = []
    while not p.at_punct(")"):
        params.append(p.parse_typed_param())
        if not p.at_punct(","):
            break
        p.expect_punct(",")
    p.expect_punct(")")
    return Action(name.text, tuple(params))


def _parse_actuator(p: _Parser, seen: dict[str, Span]) -> model.ActuatorDecl:
    name = p.open_decl("actuator")
    p.check_duplicate(name, seen, "actuator")
    actions: list[Action] = []
    while not p.at_punct("}"):
        p.expect_word("action")
        actions.append(_parse_action(p))
    p.expect_punct("}")
    p.spans.add(("actuator", name.text), name.span)
    return p.build(model.ActuatorDecl, name, actions=tuple(actions))


def _parse_storage(p: _Parser, seen: dict[str, Span]) -> StorageDecl:
    name = p.open_decl("storage")
    p.check_duplicate(name, seen, "storage")
    generates = None
    access = None
    insert = None
    while not p.at_punct("}"):
        word = p.expect_ident("'generate', 'accessed-by', or 'action'")
        if word.text == "generate":
            p.reject_repeat(generates, word, "generate")
            generates = p.parse_generate(("storage", name.text))
        elif word.text == "accessed-by":
            p.reject_repeat(access, word, "accessed-by")
            access = p.parse_typed_param()
            p.spans.add(("storage", name.text, "accessed-by"), word.span)
        elif word.text == "action":
            p.reject_repeat(insert, word, "action")
            insert = _parse_action(p)
        else:
            raise p.error(f"unknown clause '{word.text}' in a storage", word.span)
    p.expect_punct("}")
    p.require_clause(generates is not None, name, "generate", "storage")
    p.require_clause(access is not None, name, "accessed-by", "storage")
    p.require_clause(insert is not None, name, "action", "storage")
    p.spans.add(("storage", name.text), name.span)
    return p.build(StorageDecl, name, generates=generates, accessed_by=access, insert_action=insert)


def parse_vocab(source: str, filename: str = "vocab.spec") -> ParseResult:
    """Parse a domain specification: structs plus the resource sections."""
    p, err = _start(source, filename)
    if err is not None:
        return err

    structs: list[StructDecl] = []
    periodic: list[PeriodicSensorDecl] = []
    event: list[EventDrivenSensorDecl] = []
    request: list[RequestBasedSensorDecl] = []
    tags: list[TagDecl] = []
    actuators: list[model.ActuatorDecl] = []
    storages: list[StorageDecl] = []
    seen: dict[str, dict[str, Span]] = {k: {} for k in ("struct", "sensor", "tag", "actuator", "storage")}

    def decl_loop(parse_one, *args) -> None:
        while p.peek().kind == IDENT and not p.at_section_header():
            try:
                parse_one(p, *args)
            except _ParseError as exc:
                p.diagnostics.append(exc.diagnostic)
                p.skip_block()

    while not p.at_end():
        try:
            header = p.expect_ident("a section keyword")
            p.expect_punct(":")
        except _ParseError as exc:
            p.diagnostics.append(exc.diagnostic)
            break
        if header.text == "structs":
            decl_loop(lambda p, s=seen: structs.append(_parse_struct(p, s["struct"])))
        elif header.text == "sensors":
            while p.at_section_header() and p.peek().text in SENSOR_SUBSECTIONS:
                sub = p.advance()
                p.expect_punct(":")
                if sub.text == "periodicSensors":
                    decl_loop(lambda p, s=seen: periodic.append(_parse_periodic(p, s["sensor"])))
                elif sub.text == "eventDrivenSensors":
                    decl_loop(lambda p, s=seen: event.append(_parse_event(p, s["sensor"])))
                else:
                    decl_loop(lambda p, s=seen: request.append(_parse_request_sensor(p, s["sensor"])))
        elif header.text == "tags":
            decl_loop(lambda p, s=seen: tags.append(_parse_tag(p, s["tag"])))
        elif header.text == "actuators":
            decl_loop(lambda p, s=seen: actuators.append(_parse_actuator(p, s["actuator"])))
        elif header.text == "storages":
            decl_loop(lambda p, s=seen: storages.append(_parse_storage(p, s["storage"])))
        else:
            p.diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    "SyntaxError",
                    f"unknown section '{header.text}' (expected one of {', '.join(VOCAB_SECTIONS)})",
                    header.span,
                )
            )
            p.skip_block()

    if not p.diagnostics and not (periodic or event or request or tags or actuators or storages):
        p.diagnostics.append(
            Diagnostic(
                Severity.ERROR,
                "EmptyVocab",
                "at least one resource section (sensors, tags, actuators, storages) is required",
                Span(filename, 1, 1, 1),
            )
        )
    return _finish(
        p,
        VocabSection(
            structs=tuple(structs),
            periodic_sensors=tuple(periodic),
            event_sensors=tuple(event),
            request_sensors=tuple(request),
            tags=tuple(tags),
            actuators=tuple(actuators),
            storages=tuple(storages),
        ),
    )


# ---------------------------------------------------------------------------
# arch


def _parse_service(p: _Parser, seen: dict[str, Span]) -> ServiceDecl:
    kind = p.advance()  # Common | Custom, checked by the caller
    name = p.open_decl("service")
    p.check_duplicate(name, seen, "service")
    consumes: list[Consume] = []
    requests: list[Request] = []
    commands: list[Command] = []
    generates = None
    compute_op = None
    while not p.at_punct("}"):
        word = p.expect_ident("'consume', 'request', 'command', 'generate', or 'COMPUTE'")
        if word.text == "consume":
            m = p.expect_ident("a measurement name")
            window = 1
            if p.at_word("window"):
                p.advance()
                w = p.peek()
                if w.kind != NUMBER or "." in w.text:
                    raise p.error("expected a whole-number window size")
                p.advance()
                window = int(w.text)
            p.spans.add(("service", name.text, "consume", m.text), m.span)
            try:
                consumes.append(Consume(m.text, window))
            except InvariantViolation as exc:
                raise _ParseError(Diagnostic(Severity.ERROR, "InvalidDecl", str(exc), m.span)) from exc
        elif word.text == "request":
            target = p.expect_ident("a storage or request-based sensor name")
            p.expect_punct("(")
            binding = p.parse_binding()
            p.expect_punct(")")
            p.spans.add(("service", name.text, "request", target.text), target.span)
            requests.append(Request(target.text, binding))
        elif word.text == "command":
            action = p.expect_ident("an action name")
            args = p.parse_arg_list()
            p.expect_word("to")
            target = p.expect_ident("an actuator name")
            p.spans.add(("service", name.text, "command", target.text, action.text), target.span)
            commands.append(Command(target.text, action.text, args))
        elif word.text == "generate":
            p.reject_repeat(generates, word, "generate")
            generates = p.parse_generate(("service", name.text))
        elif word.text == "COMPUTE":
            p.reject_repeat(compute_op, word, "COMPUTE")
            op = p.expect_ident("a compute operation")
            if op.text not in model.COMPUTE_OPS:
                raise p.error(
                    f"unknown compute operation '{op.text}' (expected one of {', '.join(model.COMPUTE_OPS)})",
                    op.span,
                )
            compute_op = op.text
        else:
            raise p.error(f"unknown clause '{word.text}' in a service", word.span)
    p.expect_punct("}")
    p.spans.add(("service", name.text), name.span)
    return p.build(
        ServiceDecl,
        name,
        kind=kind.text,
        consumes=tuple(consumes),
        generates=generates,
        requests=tuple(requests),
        commands=tuple(commands),
        compute_op=compute_op,
    )


def parse_arch(source: str, filename: str = "arch.spec") -> ParseResult:
    """Parse an architecture specification: the computational services."""
    p, err = _start(source, filename)
    if err is not None:
        return err

    services: list[ServiceDecl] = []
    seen: dict[str, Span] = {}
    while not p.at_end():
        try:
            header = p.expect_ident("'computationalServices'")
            p.expect_punct(":")
            if header.text != "computationalServices":
                raise p.error(f"unknown section '{header.text}' (expected 'computationalServices')", header.span)
        except _ParseError as exc:
            p.diagnostics.append(exc.diagnostic)
            break
        while p.peek().kind == IDENT and not p.at_section_header():
            tok = p.peek()
            if tok.text not in ("Common", "Custom"):
                p.diagnostics.append(
                    Diagnostic(
                        Severity.ERROR,
                        "SyntaxError",
                        f"expected 'Common' or 'Custom', found {tok.text!r}",
                        tok.span,
                    )
                )
                p.skip_block()
                continue
            try:
                services.append(_parse_service(p, seen))
            except _ParseError as exc:
                p.diagnostics.append(exc.diagnostic)
                p.skip_block()
    return _finish(p, ArchSection(services=tuple(services)))


# ---------------------------------------------------------------------------
# user interaction


def _parse_interaction(p: _Parser, seen: dict[str, Span]) -> InteractionDecl:
    name = p.open_decl("interactor")
    p.check_duplicate(name, seen, "interactor")
    commands: list[UiCommand] = []
    notifies: list[Generate] = []
    requests: list[UiRequest] = []
    while not p.at_punct("}"):
        word = p.expect_ident("'command', 'notify', or 'request'")
        if word.text == "command":
            action = p.expect_ident("an action name")
            args = p.parse_arg_list()
            p.expect_word("to")
            target = p.expect_ident("a target component")
            p.spans.add(("interaction", name.text, "command", target.text, action.text), target.span)
            commands.append(UiCommand(action.text, args, target.text))
        elif word.text == "notify":
            m = p.expect_ident("a measurement name")
            p.expect_word("from")
            struct = p.expect_ident("a struct name")
            p.spans.add(("interaction", name.text, "notify", m.text), m.span)
            p.spans.add(("interaction", name.text, "notify-struct", m.text), struct.span)
            notifies.append(Generate(m.text, struct.text))
        elif word.text == "request":
            target = p.expect_ident("a storage or request-based sensor name")
            p.expect_punct("(")
            param = p.parse_typed_param()
            p.expect_punct(")")
            p.spans.add(("interaction", name.text, "request", target.text), target.span)
            requests.append(UiRequest(target.text, param))
        else:
            raise p.error(f"unknown clause '{word.text}' in an interactor", word.span)
    p.expect_punct("}")
    p.spans.add(("interaction", name.text), name.span)
    return p.build(
        InteractionDecl,
        name,
        commands=tuple(commands),
        notifies=tuple(notifies),
        requests=tuple(requests),
    )


def parse_ui(source: str, filename: str = "ui.spec") -> ParseResult:
    """Parse a user-interaction specification.

    Both the ``structs`` and ``userInteractions`` sections are optional (an
    application may have no human-facing components at all), but a
    ``userInteractions`` block that is present and empty is an error.
    """
    p, err = _start(source, filename)
    if err is not None:
        return err

    structs: list[StructDecl] = []
    interactions: list[InteractionDecl] = []
    seen_structs: dict[str, Span] = {}
    seen_ui: dict[str, Span] = {}
    while not p.at_end():
        try:
            header = p.expect_ident("'structs' or 'userInteractions'")
            p.expect_punct(":")
        except _ParseError as exc:
            p.diagnostics.append(exc.diagnostic)
            break
        if header.text == "structs":
            while p.peek().kind == IDENT and not p.at_section_header():
                try:
                    structs.append(_parse_struct(p, seen_structs))
                except _ParseError as exc:
                    p.diagnostics.append(exc.diagnostic)
                    p.skip_block()
        elif header.text == "userInteractions":
            count_before = len(interactions)
            while p.peek().kind == IDENT and not p.at_section_header():
                try:
                    interactions.append(_parse_interaction(p, seen_ui))
                except _ParseError as exc:
                    p.diagnostics.append(exc.diagnostic)
                    p.skip_block()
            if len(interactions) == count_before and not p.diagnostics:
                p.diagnostics.append(
                    Diagnostic(
                        Severity.ERROR,
                        "EmptyInteractions",
                        "a userInteractions block must declare at least one interactor",
                        header.span,
                    )
                )
        else:
            p.diagnostics.append(
                Diagnostic(
                    Severity.ERROR,
                    "SyntaxError",
                    f"unknown section '{header.text}' (expected 'structs' or 'userInteractions')",
                    header.span,
                )
            )
            p.skip_block()
    return _finish(p, UiSection(structs=tuple(structs), interactions=tuple(interactions)))


# ---------------------------------------------------------------------------
# deploy


def _parse_device(p: _Parser, seen: dict[str, Span]) -> DeviceDecl:
    name = p.open_decl("device")
    p.check_duplicate(name, seen, "device")
    location = platform = protocol = database = None
    resources: list[str] = []
    saw_resources = False
    while not p.at_punct("}"):
        word = p.expect_ident("'location', 'resources', 'platform', 'protocol', or 'database'")
        if word.text == "location":
            p.reject_repeat(location, word, "location")
            tok = p.peek()
            if tok.kind not in (IDENT, STRING):
                raise p.error("expected a location label")
            p.advance()
            location = str(tok.value)
            p.spans.add(("device", name.text, "location"), tok.span)
        elif word.text == "resources":
            if saw_resources:
                raise p.error("'resources' appears more than once", word.span)
            saw_resources = True
            while True:
                res = p.expect_ident("a resource name")
                p.spans.add(("device", name.text, "resource", res.text), res.span)
                resources.append(res.text)
                if not p.at_punct(","):
                    break
                p.expect_punct(",")
        elif word.text in ("platform", "protocol", "database"):
            current = {"platform": platform, "protocol": protocol, "database": database}[word.text]
            p.reject_repeat(current, word, word.text)
            label = p.expect_ident(f"a {word.text} label")
            p.spans.add(("device", name.text, word.text), label.span)
            if word.text == "platform":
                platform = label.text
            elif word.text == "protocol":
                protocol = label.text
            else:
                database = label.text
        else:
            raise p.error(f"unknown clause '{word.text}' in a device", word.span)
    p.expect_punct("}")
    p.require_clause(location is not None, name, "location", "device")
    p.require_clause(platform is not None, name, "platform", "device")
    p.require_clause(protocol is not None, name, "protocol", "device")
    p.spans.add(("device", name.text), name.span)
    return p.build(
        DeviceDecl,
        name,
        location=location,
        resources=tuple(resources),
        platform=platform,
        protocol=protocol,
        database=database,
    )


def parse_deploy(source: str, filename: str = "deploy.spec") -> ParseResult:
    """Parse a deployment specification: the device inventory."""
    p, err = _start(source, filename)
    if err is not None:
        return err

    devices: list[DeviceDecl] = []
    seen: dict[str, Span] = {}
    while not p.at_end():
        try:
            header = p.expect_ident("'devices'")
            p.expect_punct(":")
            if header.text != "devices":
                raise p.error(f"unknown section '{header.text}' (expected 'devices')", header.span)
        except _ParseError as exc:
            p.diagnostics.append(exc.diagnostic)
            break
        while p.peek().kind == IDENT and not p.at_section_header():
            try:
                devices.append(_parse_device(p, seen))
            except _ParseError as exc:
                p.diagnostics.append(exc.diagnostic)
                p.skip_block()
    return _finish(p, DeploySection(devices=tuple(devices)))


# ---------------------------------------------------------------------------
# shared entry/exit


def _start(source: str, filename: str) -> tuple:
    try:
        tokens = tokenize(source, filename)
    except LexError as exc:
        return None, ParseResult(None, SpanTable(), (exc.diagnostic,))
    return _Parser(tokens), None


def _finish(p: _Parser, section) -> ParseResult:
    if p.diagnostics:
        return ParseResult(None, SpanTable(), tuple(p.diagnostics))
    return ParseResult(section, p.spans, ())
