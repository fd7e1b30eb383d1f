"""Cross-specification validation and the application dataflow graph.

`validate` resolves every reference between the four sections (consume to
generate, command to action, request to accessed-by key, device resource to
component) and builds the routing indices the mapper, linker, and simulator
rely on. A :class:`ValidatedProgram` is only produced when no errors were
found; warnings ride along with it.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import model as m
from .diagnostics import Diagnostic, Severity, Span, error, has_errors, warning
from .model import ProgramModel, ServiceDecl, StructDecl

_FALLBACK = Span("<program>", 1, 1, 1)

# component kind -> span-table category used by the parsers
_SPAN_CATEGORY = {
    m.KIND_PERIODIC: "sensor",
    m.KIND_EVENT: "sensor",
    m.KIND_REQUEST: "sensor",
    m.KIND_TAG: "tag",
    m.KIND_ACTUATOR: "actuator",
    m.KIND_STORAGE: "storage",
    m.KIND_COMMON: "service",
    m.KIND_CUSTOM: "service",
    m.KIND_INTERACTION: "interaction",
}

# Measurement topics are produced by these component categories; storages and
# request-based sensors answer requests instead of publishing.
_PUBLISHING_KINDS = (m.KIND_PERIODIC, m.KIND_EVENT, m.KIND_TAG, m.KIND_COMMON, m.KIND_CUSTOM)


@dataclass(frozen=True)
class TopicEntry:
    struct: str
    producers: tuple[str, ...]
    consumers: tuple[str, ...]  # services consuming plus interactors notified


@dataclass(frozen=True)
class ValidatedProgram:
    model: ProgramModel
    kinds: dict[str, str]
    topic_index: dict[str, TopicEntry]
    command_index: dict[tuple[str, str], tuple[str, ...]]
    request_index: dict[str, tuple[str, ...]]
    placements: dict[str, tuple[str, ...]]  # component -> hosting devices (fixed only)

    def services(self) -> tuple[ServiceDecl, ...]:
        return self.model.arch.services

    def service(self, name: str) -> ServiceDecl | None:
        for svc in self.model.arch.services:
            if svc.name == name:
                return svc
        return None

    def struct(self, name: str) -> StructDecl | None:
        return self.model.structs().get(name)

    def devices(self) -> tuple[m.DeviceDecl, ...]:
        return self.model.deploy.devices

    def components(self) -> tuple[str, ...]:
        return tuple(sorted(self.kinds))


@dataclass
class Validation:
    """Outcome of `validate`: the program (on success) plus all diagnostics."""

    program: ValidatedProgram | None
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.program is not None


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    mode: str  # publish | request | command | notify
    label: str


@dataclass(frozen=True)
class DataflowGraph:
    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]

    def to_dot(self) -> str:
        lines = ["digraph dataflow {"]
        for node in self.nodes:
            lines.append(f'    "{node}";')
        for e in self.edges:
            lines.append(f'    "{e.source}" -> "{e.target}" [label="{e.mode}:{e.label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


class _Checker:
    def __init__(self, model: ProgramModel):
        self.model = model
        self.diagnostics: list[Diagnostic] = []
        self.kinds = m.component_kinds(model)
        self.structs = model.structs()

    def span(self, *key) -> Span:
        return self.model.spans.get(*key) or _FALLBACK

    def err(self, code: str, message: str, *key) -> None:
        self.diagnostics.append(error(code, message, self.span(*key)))

    def warn(self, code: str, message: str, *key) -> None:
        self.diagnostics.append(warning(code, message, self.span(*key)))


def validate(program: ProgramModel) -> Validation:
    """Check every cross-reference in the program and build the routing indices."""
    c = _Checker(program)
    _check_unique_names(c)
    _check_struct_refs(c)
    _check_conditions(c)
    topic_index = _build_topics(c)
    _check_commands(c)
    _check_requests(c)
    placements = _check_deployment(c)
    _check_cycles(c, topic_index)

    if has_errors(c.diagnostics):
        return Validation(None, tuple(c.diagnostics))

    command_index: dict[tuple[str, str], list[str]] = {}
    request_index: dict[str, list[str]] = {}
    for svc in program.arch.services:
        for cmd in svc.commands:
            command_index.setdefault((cmd.target, cmd.action), []).append(svc.name)
        for req in svc.requests:
            request_index.setdefault(req.target, []).append(svc.name)
    for ui in program.ui.interactions:
        for cmd in ui.commands:
            command_index.setdefault((cmd.target, cmd.action), []).append(ui.name)
        for req in ui.requests:
            request_index.setdefault(req.target, []).append(ui.name)

    vp = ValidatedProgram(
        model=program,
        kinds=dict(sorted(c.kinds.items())),
        topic_index={k: topic_index[k] for k in sorted(topic_index)},
        command_index={k: tuple(sorted(v)) for k, v in sorted(command_index.items())},
        request_index={k: tuple(sorted(v)) for k, v in sorted(request_index.items())},
        placements={k: tuple(sorted(v)) for k, v in sorted(placements.items())},
    )
    return Validation(vp, tuple(c.diagnostics))


def _check_unique_names(c: _Checker) -> None:
    """Placeable components share one namespace: device `resources` entries
    and message routing could not distinguish duplicates across categories."""
    seen: dict[str, str] = {}
    order = (
        [("sensor", s.name) for s in c.model.vocab.sensors]
        + [("tag", t.name) for t in c.model.vocab.tags]
        + [("actuator", a.name) for a in c.model.vocab.actuators]
        + [("storage", s.name) for s in c.model.vocab.storages]
        + [("service", s.name) for s in c.model.arch.services]
        + [("interaction", u.name) for u in c.model.ui.interactions]
    )
    for category, name in order:
        if name in seen:
            c.err(
                "DuplicateName",
                f"'{name}' is declared as both a {seen[name]} and a {category}",
                category,
                name,
            )
        else:
            seen[name] = category
    struct_seen: set[str] = set()
    for s in c.model.vocab.structs + c.model.ui.structs:
        if s.name in struct_seen:
            c.err("DuplicateName", f"struct '{s.name}' is declared twice", "struct", s.name)
        struct_seen.add(s.name)


def _check_struct_refs(c: _Checker) -> None:
    def check(generates, category: str, owner: str) -> None:
        if generates and generates.struct not in c.structs:
            c.err(
                "UnknownStruct",
                f"struct '{generates.struct}' is not declared",
                category,
                owner,
                "generate-struct",
            )

    for s in c.model.vocab.sensors:
        check(s.generates, "sensor", s.name)
    for t in c.model.vocab.tags:
        check(t.generates, "tag", t.name)
    for st in c.model.vocab.storages:
        check(st.generates, "storage", st.name)
    for svc in c.model.arch.services:
        check(svc.generates, "service", svc.name)
    for ui in c.model.ui.interactions:
        for n in ui.notifies:
            if n.struct not in c.structs:
                c.diagnostics.append(
                    error(
                        "UnknownStruct",
                        f"struct '{n.struct}' is not declared",
                        c.span("interaction", ui.name, "notify-struct", n.measurement),
                    )
                )


def _check_conditions(c: _Checker) -> None:
    for s in c.model.vocab.event_sensors:
        struct = c.structs.get(s.generates.struct)
        if struct is None:
            continue  # reported by _check_struct_refs
        ftype = struct.field_type(s.condition.field)
        if ftype is None:
            c.err(
                "UnknownField",
                f"condition field '{s.condition.field}' is not a field of {struct.name}",
                "sensor",
                s.name,
                "condition",
            )
        elif ftype not in m.NUMERIC_TYPES:
            c.err(
                "TypeMismatch",
                f"condition field '{s.condition.field}' must be numeric, not {ftype}",
                "sensor",
                s.name,
                "condition",
            )


def _publishers(c: _Checker) -> dict[str, list[tuple[str, str]]]:
    """topic -> [(producer, struct)] for the pub/sub (push) measurements."""
    topics: dict[str, list[tuple[str, str]]] = {}
    for s in c.model.vocab.periodic_sensors + c.model.vocab.event_sensors:
        topics.setdefault(s.generates.measurement, []).append((s.name, s.generates.struct))
    for t in c.model.vocab.tags:
        topics.setdefault(t.generates.measurement, []).append((t.name, t.generates.struct))
    for svc in c.model.arch.services:
        if svc.generates:
            topics.setdefault(svc.generates.measurement, []).append((svc.name, svc.generates.struct))
    return topics


def _build_topics(c: _Checker) -> dict[str, TopicEntry]:
    published = _publishers(c)
    for topic, producers in published.items():
        if len(producers) > 1:
            names = ", ".join(sorted(p for p, _ in producers))
            first = producers[0][0]
            c.warn(
                "MultipleProducers",
                f"measurement '{topic}' is generated by several components: {names}",
                _SPAN_CATEGORY.get(c.kinds.get(first), "sensor"),
                first,
            )

    consumers: dict[str, list[str]] = {}
    for svc in c.model.arch.services:
        for consume in svc.consumes:
            if consume.measurement not in published:
                c.err(
                    "UnresolvedMeasurement",
                    f"consume '{consume.measurement}' does not match any generated measurement",
                    "service",
                    svc.name,
                    "consume",
                    consume.measurement,
                )
            else:
                consumers.setdefault(consume.measurement, []).append(svc.name)
    for ui in c.model.ui.interactions:
        for n in ui.notifies:
            if n.measurement not in published:
                c.diagnostics.append(
                    error(
                        "UnresolvedMeasurement",
                        f"notify '{n.measurement}' does not match any generated measurement",
                        c.span("interaction", ui.name, "notify", n.measurement),
                    )
                )
            else:
                declared = published[n.measurement][0][1]
                if n.struct != declared:
                    c.diagnostics.append(
                        error(
                            "TypeMismatch",
                            f"notify '{n.measurement}' carries {declared}, not {n.struct}",
                            c.span("interaction", ui.name, "notify-struct", n.measurement),
                        )
                    )
                consumers.setdefault(n.measurement, []).append(ui.name)

    for topic, producers in published.items():
        if topic not in consumers:
            for producer, _ in producers:
                c.warn(
                    "DeadOutput",
                    f"measurement '{topic}' generated by '{producer}' is never consumed",
                    _SPAN_CATEGORY.get(c.kinds.get(producer), "sensor"),
                    producer,
                    "generate",
                )

    return {
        topic: TopicEntry(
            struct=producers[0][1],
            producers=tuple(sorted(p for p, _ in producers)),
            consumers=tuple(sorted(consumers.get(topic, ()))),
        )
        for topic, producers in published.items()
    }


def _actuator_like(c: _Checker, name: str):
    """Actuators and storages both expose commandable actions."""
    for a in c.model.vocab.actuators:
        if a.name == name:
            return a
    for st in c.model.vocab.storages:
        if st.name == name:
            return st
    return None


def _check_command(c: _Checker, owner_cat: str, owner: str, target: str, action_name: str, argc: int) -> None:
    key = (owner_cat, owner, "command", target, action_name)
    decl = _actuator_like(c, target)
    if decl is None:
        if owner_cat == "interaction" and c.kinds.get(target) == m.KIND_CUSTOM:
            return  # user command handed to custom logic; no declared signature
        c.err("UnknownAction", f"'{target}' is not a declared actuator or storage", *key)
        return
    if isinstance(decl, m.ActuatorDecl):
        action = decl.action(action_name)
    else:
        action = decl.insert_action if decl.insert_action.name == action_name else None
    if action is None:
        c.err("UnknownAction", f"'{target}' has no action '{action_name}'", *key)
        return
    if len(action.params) != argc:
        c.err(
            "ArityMismatch",
            f"{target}.{action_name} takes {len(action.params)} argument(s), got {argc}",
            *key,
        )


def _check_commands(c: _Checker) -> None:
    for svc in c.model.arch.services:
        for cmd in svc.commands:
            _check_command(c, "service", svc.name, cmd.target, cmd.action, len(cmd.args))
    for ui in c.model.ui.interactions:
        for cmd in ui.commands:
            _check_command(c, "interaction", ui.name, cmd.target, cmd.action, len(cmd.params))


def _responders(c: _Checker) -> dict[str, m.Field]:
    """Request targets keyed by name -> their accessed-by parameter."""
    table: dict[str, m.Field] = {}
    for st in c.model.vocab.storages:
        table[st.name] = st.accessed_by
    for s in c.model.vocab.request_sensors:
        table[s.name] = s.access_param
    return table


def _binding_type(c: _Checker, svc: ServiceDecl, binding) -> str | None:
    """Static type of a request binding: a literal's own type, or the type of
    the named field looked up across the structs the service consumes."""
    if isinstance(binding, bool):
        return None
    if isinstance(binding, int):
        return "long"
    if isinstance(binding, float):
        return "double"
    for consume in svc.consumes:
        entry_struct = None
        for other in c.model.arch.services:
            if other.generates and other.generates.measurement == consume.measurement:
                entry_struct = other.generates.struct
        for s in c.model.vocab.sensors:
            if s.generates.measurement == consume.measurement:
                entry_struct = s.generates.struct
        for t in c.model.vocab.tags:
            if t.generates.measurement == consume.measurement:
                entry_struct = t.generates.struct
        struct = c.structs.get(entry_struct) if entry_struct else None
        if struct:
            ftype = struct.field_type(binding)
            if ftype:
                return ftype
    return None


def _check_requests(c: _Checker) -> None:
    responders = _responders(c)
    for svc in c.model.arch.services:
        for req in svc.requests:
            key = ("service", svc.name, "request", req.target)
            if req.target not in responders:
                c.err(
                    "UnknownRequestTarget",
                    f"'{req.target}' is not a declared storage or request-based sensor",
                    *key,
                )
                continue
            expected = responders[req.target].type
            actual = _binding_type(c, svc, req.binding)
            if actual is None and isinstance(req.binding, str):
                c.err(
                    "UnknownField",
                    f"request binding '{req.binding}' is not a field of any consumed measurement",
                    *key,
                )
            elif actual is not None and actual != expected:
                c.err(
                    "TypeMismatch",
                    f"request parameter is {actual} but '{req.target}' is accessed by {expected}",
                    *key,
                )
    for ui in c.model.ui.interactions:
        for req in ui.requests:
            key = ("interaction", ui.name, "request", req.target)
            if req.target not in responders:
                c.err(
                    "UnknownRequestTarget",
                    f"'{req.target}' is not a declared storage or request-based sensor",
                    *key,
                )
            elif req.param.type != responders[req.target].type:
                c.err(
                    "TypeMismatch",
                    f"request parameter is {req.param.type} but '{req.target}' is accessed by "
                    f"{responders[req.target].type}",
                    *key,
                )


def _check_deployment(c: _Checker) -> dict[str, list[str]]:
    placements: dict[str, list[str]] = {}
    storage_names = {st.name for st in c.model.vocab.storages}
    for dev in c.model.deploy.devices:
        hosts_storage = False
        for res in dev.resources:
            if res not in c.kinds:
                c.err(
                    "UnknownDeviceResource",
                    f"'{res}' is not a declared component",
                    "device",
                    dev.name,
                    "resource",
                    res,
                )
                continue
            placements.setdefault(res, []).append(dev.name)
            hosts_storage = hosts_storage or res in storage_names
        if dev.database and not hosts_storage:
            c.warn(
                "DatabaseUnused",
                f"device '{dev.name}' declares database {dev.database} but hosts no storage",
                "device",
                dev.name,
                "database",
            )
        if hosts_storage and not dev.database:
            c.warn(
                "MissingDatabase",
                f"device '{dev.name}' hosts a storage but declares no database",
                "device",
                dev.name,
            )
    for name, kind in c.kinds.items():
        if kind in m.FIXED_KINDS and name not in placements:
            c.err(
                "UnplacedResource",
                f"{kind} '{name}' is not placed on any device",
                _SPAN_CATEGORY.get(kind, "sensor"),
                name,
            )
    return placements


def _check_cycles(c: _Checker, topics: dict[str, TopicEntry]) -> None:
    """Warn on consume/generate cycles among services (feedback loops through
    the physical world are expected and must stay legal)."""
    out_edges: dict[str, set[str]] = {}
    for svc in c.model.arch.services:
        if not svc.generates:
            continue
        entry = topics.get(svc.generates.measurement)
        if entry:
            out_edges.setdefault(svc.name, set()).update(
                t for t in entry.consumers if c.kinds.get(t) in (m.KIND_COMMON, m.KIND_CUSTOM)
            )

    WHITE, GRAY, BLACK = 0, 1, 2
    color: dict[str, int] = {}
    reported: set[str] = set()

    def visit(node: str) -> None:
        color[node] = GRAY
        for nxt in sorted(out_edges.get(node, ())):
            state = color.get(nxt, WHITE)
            if state == GRAY and nxt not in reported:
                reported.add(nxt)
                c.warn(
                    "CycleWarning",
                    f"service '{nxt}' participates in a consume/generate cycle",
                    "service",
                    nxt,
                )
            elif state == WHITE:
                visit(nxt)
        color[node] = BLACK

    for name in sorted(out_edges):
        if color.get(name, WHITE) == WHITE:
            visit(name)


def dataflow_graph(vp: ValidatedProgram) -> DataflowGraph:
    """Component graph with one labeled edge per interaction, nodes sorted."""
    nodes = sorted(vp.kinds)
    edges: set[Edge] = set()
    interactions = {u.name for u in vp.model.ui.interactions}
    for topic, entry in vp.topic_index.items():
        for producer in entry.producers:
            for consumer in entry.consumers:
                mode = "notify" if consumer in interactions else "publish"
                edges.add(Edge(producer, consumer, mode, topic))
    for (target, action), issuers in vp.command_index.items():
        for issuer in issuers:
            edges.add(Edge(issuer, target, "command", action))
    for target, requesters in vp.request_index.items():
        for requester in requesters:
            edges.add(Edge(requester, target, "request", target))
    return DataflowGraph(
        nodes=tuple(nodes),
        edges=tuple(sorted(edges, key=lambda e: (e.source, e.target, e.mode, e.label))),
    )
