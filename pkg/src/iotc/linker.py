"""Framework generation and per-device package linking.

`generate_frameworks` turns every Custom service and interactor into a stub
descriptor: the abstract operations user logic must implement plus the emit
helpers it may call. `link` merges the validated program with a mapping table
into one self-contained package per hosting device; packages carry enough
configuration (schedules, conditions, windows, schemas) for the simulator to
execute them without re-reading the specifications.

Manifests and stubs are canonical JSON (sorted keys, two-space indent,
trailing newline) so identical inputs produce byte-identical build trees.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import model as m
from .analyzer import ValidatedProgram
from .diagnostics import Diagnostic, Span, warning
from .formatter import content_hash
from .mapper import MappingTable

MANIFEST_VERSION = 1


class LinkError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# stubs


@dataclass(frozen=True)
class StubDescriptor:
    """The wrapper between generated plumbing and user-written logic."""

    component: str
    kind: str
    operations: tuple[tuple[str, str], ...]  # (method, subject) to implement
    emits: tuple[tuple[str, str], ...]  # (helper, subject) available to call

    def to_json(self) -> str:
        payload = {
            "component": self.component,
            "kind": self.kind,
            "operations": [list(op) for op in self.operations],
            "emits": [list(e) for e in self.emits],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "StubDescriptor":
        payload = json.loads(text)
        return cls(
            component=payload["component"],
            kind=payload["kind"],
            operations=tuple((op[0], op[1]) for op in payload["operations"]),
            emits=tuple((e[0], e[1]) for e in payload["emits"]),
        )


StubSet = dict[str, StubDescriptor]


def generate_frameworks(vp: ValidatedProgram) -> StubSet:
    """Stub descriptors for every component that carries user logic.

    Common services have built-in compute and need no stub.
    """
    stubs: StubSet = {}
    for svc in vp.services():
        if svc.kind != "Custom":
            continue
        operations = [("onConsume", c.measurement) for c in svc.consumes]
        operations += [("onResponse", r.target) for r in svc.requests]
        emits = []
        if svc.generates:
            emits.append(("publish", svc.generates.measurement))
        emits += [("sendCommand", f"{c.target}.{c.action}") for c in svc.commands]
        emits += [("sendRequest", r.target) for r in svc.requests]
        stubs[svc.name] = StubDescriptor(
            component=svc.name,
            kind="customService",
            operations=tuple(operations),
            emits=tuple(emits),
        )
    for ui in vp.model.ui.interactions:
        operations = [("notifyReceived", n.measurement) for n in ui.notifies]
        operations += [("onResponse", r.target) for r in ui.requests]
        emits = [("sendCommand", f"{c.target}.{c.action}") for c in ui.commands]
        emits += [("sendRequest", r.target) for r in ui.requests]
        stubs[ui.name] = StubDescriptor(
            component=ui.name,
            kind="interaction",
            operations=tuple(operations),
            emits=tuple(emits),
        )
    return stubs


# ---------------------------------------------------------------------------
# packages


@dataclass(frozen=True)
class ComponentBinding:
    """One hosted component: its routes plus the config the runtime needs."""

    name: str
    kind: str
    subscriptions: tuple[str, ...] = ()
    publications: tuple[str, ...] = ()
    commands_out: tuple[tuple[str, str], ...] = ()
    request_routes: tuple[tuple[str, str], ...] = ()  # (target, param type)
    logic_stub: str | None = None
    config: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DevicePackage:
    device: str
    platform: str
    protocol: str
    components: tuple[ComponentBinding, ...]
    structs: dict[str, tuple[tuple[str, str], ...]]  # struct -> ((field, type), ...)
    topics: dict[str, str]  # measurement -> struct
    model_hash: str
    database: str | None = None
    manifest_version: int = MANIFEST_VERSION


def _struct_fields(vp: ValidatedProgram, name: str) -> tuple[tuple[str, str], ...]:
    struct = vp.struct(name)
    return tuple((f.name, f.type) for f in struct.fields)


def _binding_for(vp: ValidatedProgram, name: str) -> ComponentBinding:
    kind = vp.kinds[name]
    vocab = vp.model.vocab
    if kind == m.KIND_PERIODIC:
        s = next(x for x in vocab.periodic_sensors if x.name == name)
        return ComponentBinding(
            name=name,
            kind=kind,
            publications=(s.generates.measurement,),
            config={
                "samplePeriodS": s.sample_period_s,
                "durationS": s.duration_s,
                "struct": s.generates.struct,
            },
        )
    if kind == m.KIND_EVENT:
        s = next(x for x in vocab.event_sensors if x.name == name)
        return ComponentBinding(
            name=name,
            kind=kind,
            publications=(s.generates.measurement,),
            config={
                "struct": s.generates.struct,
                "condition": {
                    "field": s.condition.field,
                    "comparator": s.condition.comparator,
                    "literal": s.condition.literal,
                },
            },
        )
    if kind == m.KIND_REQUEST:
        s = next(x for x in vocab.request_sensors if x.name == name)
        return ComponentBinding(
            name=name,
            kind=kind,
            config={
                "measurement": s.generates.measurement,
                "struct": s.generates.struct,
                "keyField": s.access_param.name,
                "keyType": s.access_param.type,
            },
        )
    if kind == m.KIND_TAG:
        t = next(x for x in vocab.tags if x.name == name)
        return ComponentBinding(
            name=name,
            kind=kind,
            publications=(t.generates.measurement,),
            config={"struct": t.generates.struct},
        )
    if kind == m.KIND_ACTUATOR:
        a = next(x for x in vocab.actuators if x.name == name)
        return ComponentBinding(
            name=name,
            kind=kind,
            config={
                "actions": {
                    act.name: [[p.name, p.type] for p in act.params] for act in a.actions
                }
            },
        )
    if kind == m.KIND_STORAGE:
        st = next(x for x in vocab.storages if x.name == name)
        return ComponentBinding(
            name=name,
            kind=kind,
            config={
                "measurement": st.generates.measurement,
                "struct": st.generates.struct,
                "keyField": st.accessed_by.name,
                "keyType": st.accessed_by.type,
                "insertAction": {
                    "name": st.insert_action.name,
                    "params": [[p.name, p.type] for p in st.insert_action.params],
                },
            },
        )
    if kind in m.SERVICE_KINDS:
        svc = vp.service(name)
        config = {"windows": {c.measurement: c.window for c in svc.consumes}}
        if svc.generates:
            config["generate"] = {
                "measurement": svc.generates.measurement,
                "struct": svc.generates.struct,
            }
        if svc.kind == "Common":
            config["computeOp"] = svc.compute_op
        return ComponentBinding(
            name=name,
            kind=kind,
            subscriptions=tuple(c.measurement for c in svc.consumes),
            publications=(svc.generates.measurement,) if svc.generates else (),
            commands_out=tuple((c.target, c.action) for c in svc.commands),
            request_routes=tuple(
                (r.target, _responder_key_type(vp, r.target)) for r in svc.requests
            ),
            logic_stub=name if svc.kind == "Custom" else None,
            config=config,
        )
    # interaction
    ui = next(x for x in vp.model.ui.interactions if x.name == name)
    return ComponentBinding(
        name=name,
        kind=kind,
        subscriptions=tuple(n.measurement for n in ui.notifies),
        commands_out=tuple((c.target, c.action) for c in ui.commands),
        request_routes=tuple((r.target, r.param.type) for r in ui.requests),
        logic_stub=name,
        config={"notifies": {n.measurement: n.struct for n in ui.notifies}},
    )


def _responder_key_type(vp: ValidatedProgram, target: str) -> str:
    for st in vp.model.vocab.storages:
        if st.name == target:
            return st.accessed_by.type
    for s in vp.model.vocab.request_sensors:
        if s.name == target:
            return s.access_param.type
    return "String"


def link(vp: ValidatedProgram, mapping: MappingTable) -> tuple[list[DevicePackage], list[Diagnostic]]:
    """Merge program and mapping into one package per hosting device.

    Raises :class:`LinkError` (code ``StaleMapping``) when the mapping was
    built from a different program than `vp`.
    """
    expected_hash = content_hash(vp.model)
    if mapping.model_hash != expected_hash:
        raise LinkError(
            "StaleMapping",
            "mapping was produced from a different program "
            f"({mapping.model_hash} != {expected_hash}); re-run the mapper",
        )
    service_names = {svc.name for svc in vp.services()}
    if set(mapping.assigned) != service_names:
        raise LinkError(
            "StaleMapping",
            "mapping does not cover the program's computational services",
        )

    hosted = mapping.device_components()
    warnings: list[Diagnostic] = []
    packages: list[DevicePackage] = []
    for dev in vp.devices():
        names = hosted.get(dev.name, [])
        if not names:
            span = vp.model.spans.get("device", dev.name) or Span("deploy.spec", 1, 1, 1)
            warnings.append(
                warning("EmptyDevice", f"device '{dev.name}' hosts no components", span)
            )
            continue
        bindings = tuple(_binding_for(vp, name) for name in names)
        topics: dict[str, str] = {}
        struct_names: set[str] = set()
        for b in bindings:
            for topic in b.publications + b.subscriptions:
                entry = vp.topic_index.get(topic)
                if entry:
                    topics[topic] = entry.struct
                    struct_names.add(entry.struct)
            for key in ("struct",):
                if key in b.config:
                    struct_names.add(b.config[key])
            if "generate" in b.config:
                struct_names.add(b.config["generate"]["struct"])
            if "notifies" in b.config:
                struct_names.update(b.config["notifies"].values())
        packages.append(
            DevicePackage(
                device=dev.name,
                platform=dev.platform,
                protocol=dev.protocol,
                database=dev.database,
                components=bindings,
                structs={name: _struct_fields(vp, name) for name in sorted(struct_names)},
                topics={k: topics[k] for k in sorted(topics)},
                model_hash=expected_hash,
            )
        )
    return packages, warnings


# ---------------------------------------------------------------------------
# manifest serialization


def package_to_json(pkg: DevicePackage) -> str:
    payload = {
        "manifestVersion": pkg.manifest_version,
        "device": pkg.device,
        "platform": pkg.platform,
        "protocol": pkg.protocol,
        "database": pkg.database,
        "modelHash": pkg.model_hash,
        "structs": {name: [list(f) for f in fields] for name, fields in pkg.structs.items()},
        "topics": pkg.topics,
        "components": [
            {
                "name": b.name,
                "kind": b.kind,
                "subscriptions": list(b.subscriptions),
                "publications": list(b.publications),
                "commandsOut": [list(c) for c in b.commands_out],
                "requestRoutes": [list(r) for r in b.request_routes],
                "logicStub": b.logic_stub,
                "config": b.config,
            }
            for b in pkg.components
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def package_from_json(text: str) -> DevicePackage:
    payload = json.loads(text)
    if payload.get("manifestVersion") != MANIFEST_VERSION:
        raise LinkError(
            "BadManifest",
            f"unsupported manifest version {payload.get('manifestVersion')!r}",
        )
    components = tuple(
        ComponentBinding(
            name=c["name"],
            kind=c["kind"],
            subscriptions=tuple(c["subscriptions"]),
            publications=tuple(c["publications"]),
            commands_out=tuple((x[0], x[1]) for x in c["commandsOut"]),
            request_routes=tuple((x[0], x[1]) for x in c["requestRoutes"]),
            logic_stub=c["logicStub"],
            config=c["config"],
        )
        for c in payload["components"]
    )
    return DevicePackage(
        device=payload["device"],
        platform=payload["platform"],
        protocol=payload["protocol"],
        database=payload["database"],
        components=components,
        structs={
            name: tuple((f[0], f[1]) for f in fields)
            for name, fields in payload["structs"].items()
        },
        topics=dict(payload["topics"]),
        model_hash=payload["modelHash"],
    )
