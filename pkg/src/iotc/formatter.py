"""Canonical pretty-printer for parsed sections.

``parse(format(section)) == section`` for every valid section: formatting
fixes layout (indentation, clause order, time units normalized to seconds)
without touching declaration order or names. The canonical text also feeds
the program content hash used to detect stale build artifacts.
"""

from __future__ import annotations

import hashlib
import re

from .model import (
    ArchSection,
    DeploySection,
    DeviceDecl,
    InteractionDecl,
    ProgramModel,
    ServiceDecl,
    StructDecl,
    UiSection,
    VocabSection,
)

_IDENT_ONLY = re.compile(r"[A-Za-z_][A-Za-z0-9_#-]*\Z")
_INDENT = "    "


def _quote(text: str) -> str:
    body = text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{body}"'


def _label(text: str) -> str:
    return text if _IDENT_ONLY.match(text) else _quote(text)


def _literal(value: str | int | float) -> str:
    if isinstance(value, str):
        return _label(value)
    return repr(value)


def _struct_lines(struct: StructDecl, depth: int) -> list[str]:
    pad = _INDENT * depth
    lines = [f"{pad}{struct.name} {{"]
    lines += [f"{pad}{_INDENT}{f.name}: {f.type}" for f in struct.fields]
    lines.append(pad + "}")
    return lines


def _action_text(action) -> str:
    params = ", ".join(f"{p.name}: {p.type}" for p in action.params)
    return f"action {action.name}({params})"


def format_vocab(section: VocabSection) -> str:
    blocks: list[str] = []
    if section.structs:
        lines = ["structs:"]
        for s in section.structs:
            lines += _struct_lines(s, 1)
        blocks.append("\n".join(lines))
    if section.sensors:
        lines = ["sensors:"]
        if section.periodic_sensors:
            lines.append(_INDENT + "periodicSensors:")
            for s in section.periodic_sensors:
                lines += [
                    f"{_INDENT * 2}{s.name} {{",
                    f"{_INDENT * 3}generate {s.generates.measurement}: {s.generates.struct}",
                    f"{_INDENT * 3}sample period {s.sample_period_s}s for {s.duration_s}s",
                    _INDENT * 2 + "}",
                ]
        if section.event_sensors:
            lines.append(_INDENT + "eventDrivenSensors:")
            for s in section.event_sensors:
                c = s.condition
                lines += [
                    f"{_INDENT * 2}{s.name} {{",
                    f"{_INDENT * 3}generate {s.generates.measurement}: {s.generates.struct}",
                    f"{_INDENT * 3}onCondition {c.field} {c.comparator} {_literal(c.literal)}",
                    _INDENT * 2 + "}",
                ]
        if section.request_sensors:
            lines.append(_INDENT + "requestBasedSensors:")
            for s in section.request_sensors:
                lines += [
                    f"{_INDENT * 2}{s.name} {{",
                    f"{_INDENT * 3}generate {s.generates.measurement}: {s.generates.struct}",
                    f"{_INDENT * 3}accessed-by {s.access_param.name}: {s.access_param.type}",
                    _INDENT * 2 + "}",
                ]
        blocks.append("\n".join(lines))
    if section.tags:
        lines = ["tags:"]
        for t in section.tags:
            lines += [
                f"{_INDENT}{t.name} {{",
                f"{_INDENT * 2}generate {t.generates.measurement}: {t.generates.struct}",
                _INDENT + "}",
            ]
        blocks.append("\n".join(lines))
    if section.actuators:
        lines = ["actuators:"]
        for a in section.actuators:
            lines.append(f"{_INDENT}{a.name} {{")
            lines += [f"{_INDENT * 2}{_action_text(act)}" for act in a.actions]
            lines.append(_INDENT + "}")
        blocks.append("\n".join(lines))
    if section.storages:
        lines = ["storages:"]
        for st in section.storages:
            lines += [
                f"{_INDENT}{st.name} {{",
                f"{_INDENT * 2}generate {st.generates.measurement}: {st.generates.struct}",
                f"{_INDENT * 2}accessed-by {st.accessed_by.name}: {st.accessed_by.type}",
                f"{_INDENT * 2}{_action_text(st.insert_action)}",
                _INDENT + "}",
            ]
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


def _service_lines(svc: ServiceDecl) -> list[str]:
    pad = _INDENT
    lines = [f"{pad}{svc.kind} {svc.name} {{"]
    for c in svc.consumes:
        suffix = f" window {c.window}" if c.window != 1 else ""
        lines.append(f"{pad * 2}consume {c.measurement}{suffix}")
    for r in svc.requests:
        lines.append(f"{pad * 2}request {r.target}({_literal(r.binding)})")
    if svc.compute_op:
        lines.append(f"{pad * 2}COMPUTE {svc.compute_op}")
    if svc.generates:
        lines.append(f"{pad * 2}generate {svc.generates.measurement}: {svc.generates.struct}")
    for cmd in svc.commands:
        args = ", ".join(_literal(a) for a in cmd.args)
        lines.append(f"{pad * 2}command {cmd.action}({args}) to {cmd.target}")
    lines.append(pad + "}")
    return lines


def format_arch(section: ArchSection) -> str:
    if not section.services:
        return ""
    lines = ["computationalServices:"]
    for svc in section.services:
        lines += _service_lines(svc)
    return "\n".join(lines) + "\n"


def _interaction_lines(ui: InteractionDecl) -> list[str]:
    pad = _INDENT
    lines = [f"{pad}{ui.name} {{"]
    for n in ui.notifies:
        lines.append(f"{pad * 2}notify {n.measurement} from {n.struct}")
    for cmd in ui.commands:
        args = ", ".join(_literal(a) for a in cmd.params)
        lines.append(f"{pad * 2}command {cmd.action}({args}) to {cmd.target}")
    for r in ui.requests:
        lines.append(f"{pad * 2}request {r.target}({r.param.name}: {r.param.type})")
    lines.append(pad + "}")
    return lines


def format_ui(section: UiSection) -> str:
    blocks: list[str] = []
    if section.structs:
        lines = ["structs:"]
        for s in section.structs:
            lines += _struct_lines(s, 1)
        blocks.append("\n".join(lines))
    if section.interactions:
        lines = ["userInteractions:"]
        for ui in section.interactions:
            lines += _interaction_lines(ui)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


def _device_lines(dev: DeviceDecl) -> list[str]:
    pad = _INDENT
    lines = [f"{pad}{dev.name} {{", f"{pad * 2}location {_label(dev.location)}"]
    if dev.resources:
        lines.append(f"{pad * 2}resources {', '.join(dev.resources)}")
    lines.append(f"{pad * 2}platform {dev.platform}")
    lines.append(f"{pad * 2}protocol {dev.protocol}")
    if dev.database:
        lines.append(f"{pad * 2}database {dev.database}")
    lines.append(pad + "}")
    return lines


def format_deploy(section: DeploySection) -> str:
    if not section.devices:
        return ""
    lines = ["devices:"]
    for dev in section.devices:
        lines += _device_lines(dev)
    return "\n".join(lines) + "\n"


_FORMATTERS = {
    VocabSection: format_vocab,
    ArchSection: format_arch,
    UiSection: format_ui,
    DeploySection: format_deploy,
}


def format_section(section) -> str:
    """Canonical text for any parsed section."""
    return _FORMATTERS[type(section)](section)


def content_hash(model: ProgramModel) -> str:
    """Content hash of a program: stable across files, paths, and layout."""
    canonical = "\n--\n".join(
        (
            format_vocab(model.vocab),
            format_arch(model.arch),
            format_ui(model.ui),
            format_deploy(model.deploy),
        )
    )
    return "sha256:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()
