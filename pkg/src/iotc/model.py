"""Typed in-memory model of the four specification languages.

Everything here is immutable, hashable plain data. Constructors enforce the
structural invariants of each declaration and raise :class:`InvariantViolation`
naming the offending field; file-position information lives in a side table
(:class:`SpanTable`) so declarations stay comparable by value alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .diagnostics import Span

PRIMITIVE_TYPES = ("double", "long", "String")
NUMERIC_TYPES = ("double", "long")
COMPARATORS = ("<", "<=", ">", ">=", "==")
COMPUTE_OPS = (
    "AVG_BY_SAMPLE",
    "SUM_BY_SAMPLE",
    "COUNT_BY_SAMPLE",
    "MAX_BY_SAMPLE",
    "MIN_BY_SAMPLE",
)

DEFAULT_PLATFORMS = frozenset({"NodeJS", "Android", "JavaSE"})
DEFAULT_PROTOCOLS = frozenset({"MQTT", "HTTP", "WebSocket"})
DEFAULT_DATABASES = frozenset({"MySQL", "AzureDB", "MongoDB"})

# Devices on these platforms may receive randomly mapped services.
COMPUTE_CAPABLE_PLATFORMS = frozenset({"JavaSE", "NodeJS"})


class InvariantViolation(ValueError):
    """A declaration was constructed with an invalid field value."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name
        self.reason = message


def _require(condition: bool, field_name: str, message: str) -> None:
    if not condition:
        raise InvariantViolation(field_name, message)


def _unique(names: Iterable[str], field_name: str, what: str) -> None:
    seen = set()
    for name in names:
        _require(name not in seen, field_name, f"duplicate {what} '{name}'")
        seen.add(name)


@dataclass(frozen=True)
class Field:
    name: str
    type: str

    def __post_init__(self) -> None:
        _require(bool(self.name), "name", "field name must be non-empty")
        _require(
            self.type in PRIMITIVE_TYPES,
            "type",
            f"'{self.type}' is not one of {', '.join(PRIMITIVE_TYPES)}",
        )


@dataclass(frozen=True)
class StructDecl:
    name: str
    fields: tuple[Field, ...]

    def __post_init__(self) -> None:
        _require(len(self.fields) >= 1, "fields", "a struct needs at least one field")
        _unique((f.name for f in self.fields), "fields", "field")

    def field_type(self, field_name: str) -> str | None:
        for f in self.fields:
            if f.name == field_name:
                return f.type
        return None

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(f.name for f in self.fields)


@dataclass(frozen=True)
class Generate:
    """A produced measurement: topic name plus the struct carrying it."""

    measurement: str
    struct: str


@dataclass(frozen=True)
class PeriodicSensorDecl:
    name: str
    generates: Generate
    sample_period_s: int
    duration_s: int

    def __post_init__(self) -> None:
        _require(self.sample_period_s >= 1, "sample_period_s", "sample period must be >= 1 second")
        _require(
            self.duration_s >= self.sample_period_s,
            "duration_s",
            "duration must be >= the sample period",
        )


@dataclass(frozen=True)
class Condition:
    field: str
    comparator: str
    literal: float | int

    def __post_init__(self) -> None:
        _require(
            self.comparator in COMPARATORS,
            "comparator",
            f"'{self.comparator}' is not one of {', '.join(COMPARATORS)}",
        )


@dataclass(frozen=True)
class EventDrivenSensorDecl:
    name: str
    generates: Generate
    condition: Condition


@dataclass(frozen=True)
class RequestBasedSensorDecl:
    name: str
    generates: Generate
    access_param: Field


@dataclass(frozen=True)
class TagDecl:
    name: str
    generates: Generate


@dataclass(frozen=True)
class Action:
    name: str
    params: tuple[Field, ...] = ()


@dataclass(frozen=True)
class ActuatorDecl:
    name: str
    actions: tuple[Action, ...]

    def __post_init__(self) -> None:
        _require(len(self.actions) >= 1, "actions", "an actuator needs at least one action")
        _unique((a.name for a in self.actions), "actions", "action")

    def action(self, name: str) -> Action | None:
        for a in self.actions:
            if a.name == name:
                return a
        return None


@dataclass(frozen=True)
class StorageDecl:
    name: str
    generates: Generate
    accessed_by: Field
    insert_action: Action

    def __post_init__(self) -> None:
        _require(self.insert_action is not None, "insert_action", "storage needs an insert action")


@dataclass(frozen=True)
class Consume:
    measurement: str
    window: int = 1

    def __post_init__(self) -> None:
        _require(self.window >= 1, "window", "window size must be >= 1")


@dataclass(frozen=True)
class Request:
    """A pull edge: target storage / request-based sensor plus the parameter binding.

    The binding is either the name of a field available from the requester's
    inputs, or an inline literal.
    """

    target: str
    binding: str | int | float


@dataclass(frozen=True)
class Command:
    target: str
    action: str
    args: tuple[str | int | float, ...] = ()


@dataclass(frozen=True)
class ServiceDecl:
    name: str
    kind: str  # "Common" | "Custom"
    consumes: tuple[Consume, ...] = ()
    generates: Generate | None = None
    requests: tuple[Request, ...] = ()
    commands: tuple[Command, ...] = ()
    compute_op: str | None = None

    def __post_init__(self) -> None:
        _require(self.kind in ("Common", "Custom"), "kind", "kind must be Common or Custom")
        if self.kind == "Common":
            _require(len(self.consumes) == 1, "consumes", "a Common service takes exactly one input")
            _require(self.generates is not None, "generates", "a Common service generates exactly one output")
            _require(self.compute_op is not None, "compute_op", "a Common service needs a COMPUTE operation")
            _require(not self.requests, "requests", "a Common service cannot issue requests")
            _require(not self.commands, "commands", "a Common service cannot issue commands")
        else:
            _require(self.compute_op is None, "compute_op", "COMPUTE applies to Common services only")
            _require(
                len(self.consumes) + len(self.requests) >= 1,
                "consumes",
                "a Custom service needs at least one consume or request",
            )
            _require(
                (self.generates is not None) or len(self.commands) >= 1,
                "generates",
                "a Custom service needs at least one generate or command",
            )
        if self.compute_op is not None:
            _require(
                self.compute_op in COMPUTE_OPS,
                "compute_op",
                f"'{self.compute_op}' is not one of {', '.join(COMPUTE_OPS)}",
            )


@dataclass(frozen=True)
class UiCommand:
    action: str
    params: tuple[str | int | float, ...]
    target: str


@dataclass(frozen=True)
class UiRequest:
    target: str
    param: Field


@dataclass(frozen=True)
class InteractionDecl:
    name: str
    commands: tuple[UiCommand, ...] = ()
    notifies: tuple[Generate, ...] = ()
    requests: tuple[UiRequest, ...] = ()

    def __post_init__(self) -> None:
        _require(
            len(self.commands) + len(self.notifies) + len(self.requests) >= 1,
            "commands",
            "an interactor must declare at least one command, notify, or request",
        )


@dataclass(frozen=True)
class DeviceDecl:
    name: str
    location: str
    resources: tuple[str, ...]
    platform: str
    protocol: str
    database: str | None = None

    def __post_init__(self) -> None:
        _unique(self.resources, "resources", "resource")


@dataclass(frozen=True)
class VocabSection:
    structs: tuple[StructDecl, ...] = ()
    periodic_sensors: tuple[PeriodicSensorDecl, ...] = ()
    event_sensors: tuple[EventDrivenSensorDecl, ...] = ()
    request_sensors: tuple[RequestBasedSensorDecl, ...] = ()
    tags: tuple[TagDecl, ...] = ()
    actuators: tuple[ActuatorDecl, ...] = ()
    storages: tuple[StorageDecl, ...] = ()

    @property
    def sensors(self) -> tuple:
        return self.periodic_sensors + self.event_sensors + self.request_sensors


@dataclass(frozen=True)
class ArchSection:
    services: tuple[ServiceDecl, ...] = ()


@dataclass(frozen=True)
class UiSection:
    structs: tuple[StructDecl, ...] = ()
    interactions: tuple[InteractionDecl, ...] = ()


@dataclass(frozen=True)
class DeploySection:
    devices: tuple[DeviceDecl, ...] = ()


class SpanTable:
    """Maps declarations and their sub-clauses to source spans.

    Keys are tuples such as ``("struct", "TempStruct")`` for a declaration's
    name token or ``("service", "Proximity", "request", "ProfileDB")`` for an
    edge. The table participates in equality so that two parses of identical
    bytes compare equal.
    """

    def __init__(self, entries: Mapping[tuple, Span] | None = None):
        self._entries: dict[tuple, Span] = dict(entries or {})

    def add(self, key: tuple, span: Span) -> None:
        self._entries[key] = span

    def get(self, *key) -> Span | None:
        return self._entries.get(tuple(key))

    def merged(self, other: "SpanTable") -> "SpanTable":
        merged = dict(self._entries)
        merged.update(other._entries)
        return SpanTable(merged)

    def __len__(self) -> int:
        return len(self._entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpanTable) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"SpanTable({len(self._entries)} entries)"


@dataclass(frozen=True)
class ProgramModel:
    """All four parsed sections plus the source-span side table."""

    vocab: VocabSection
    arch: ArchSection
    ui: UiSection
    deploy: DeploySection
    spans: SpanTable = field(default_factory=SpanTable)

    def structs(self) -> dict[str, StructDecl]:
        """Struct namespace shared by the domain and user-interaction specs."""
        table: dict[str, StructDecl] = {}
        for s in self.vocab.structs + self.ui.structs:
            table.setdefault(s.name, s)
        return table


# Component categories, used for placement and routing.
KIND_PERIODIC = "periodicSensor"
KIND_EVENT = "eventDrivenSensor"
KIND_REQUEST = "requestBasedSensor"
KIND_TAG = "tag"
KIND_ACTUATOR = "actuator"
KIND_STORAGE = "storage"
KIND_COMMON = "commonService"
KIND_CUSTOM = "customService"
KIND_INTERACTION = "interaction"

SERVICE_KINDS = (KIND_COMMON, KIND_CUSTOM)
# Resources are fixed to devices by the deploy spec; services are mapped.
FIXED_KINDS = (
    KIND_PERIODIC,
    KIND_EVENT,
    KIND_REQUEST,
    KIND_TAG,
    KIND_ACTUATOR,
    KIND_STORAGE,
    KIND_INTERACTION,
)


def component_kinds(model: ProgramModel) -> dict[str, str]:
    """Every placeable component of the program, name -> category."""
    kinds: dict[str, str] = {}
    for s in model.vocab.periodic_sensors:
        kinds[s.name] = KIND_PERIODIC
    for s in model.vocab.event_sensors:
        kinds[s.name] = KIND_EVENT
    for s in model.vocab.request_sensors:
        kinds[s.name] = KIND_REQUEST
    for t in model.vocab.tags:
        kinds[t.name] = KIND_TAG
    for a in model.vocab.actuators:
        kinds[a.name] = KIND_ACTUATOR
    for st in model.vocab.storages:
        kinds[st.name] = KIND_STORAGE
    for svc in model.arch.services:
        kinds[svc.name] = KIND_COMMON if svc.kind == "Common" else KIND_CUSTOM
    for ui in model.ui.interactions:
        kinds[ui.name] = KIND_INTERACTION
    return kinds
