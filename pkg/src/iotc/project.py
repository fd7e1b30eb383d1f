"""Project layout and the parse-then-validate pipeline.

A project is a directory holding the four specification files. An optional
``iotc.json`` in the directory can rename the files, change the build
directory or default seed, and extend the platform/protocol/database
allow-lists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .analyzer import Validation, validate
from .diagnostics import Diagnostic, Span, error
from .model import (
    DEFAULT_DATABASES,
    DEFAULT_PLATFORMS,
    DEFAULT_PROTOCOLS,
    ProgramModel,
    SpanTable,
)
from .parser import parse_arch, parse_deploy, parse_ui, parse_vocab

CONFIG_FILE = "iotc.json"


class ProjectError(Exception):
    """A project is unusable before parsing starts (missing files, bad config)."""


@dataclass(frozen=True)
class ProjectConfig:
    project_dir: Path
    vocab_file: str = "vocab.spec"
    arch_file: str = "arch.spec"
    ui_file: str = "ui.spec"
    deploy_file: str = "deploy.spec"
    build_dir: str = "build"
    seed: int = 0
    platforms: frozenset[str] = field(default_factory=lambda: DEFAULT_PLATFORMS)
    protocols: frozenset[str] = field(default_factory=lambda: DEFAULT_PROTOCOLS)
    databases: frozenset[str] = field(default_factory=lambda: DEFAULT_DATABASES)

    def spec_paths(self) -> dict[str, Path]:
        return {
            "vocab": self.project_dir / self.vocab_file,
            "arch": self.project_dir / self.arch_file,
            "ui": self.project_dir / self.ui_file,
            "deploy": self.project_dir / self.deploy_file,
        }


def load_config(project_dir: str | Path) -> ProjectConfig:
    """Build the project configuration, honoring an optional iotc.json."""
    directory = Path(project_dir)
    if not directory.is_dir():
        raise ProjectError(f"project directory {str(directory)!r} does not exist")
    config = ProjectConfig(project_dir=directory)
    config_path = directory / CONFIG_FILE
    if config_path.is_file():
        try:
            payload = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ProjectError(f"{config_path}: invalid JSON: {exc}") from exc
        simple = {
            "vocab": "vocab_file",
            "arch": "arch_file",
            "ui": "ui_file",
            "deploy": "deploy_file",
            "buildDir": "build_dir",
            "seed": "seed",
        }
        updates: dict = {}
        for key, attr in simple.items():
            if key in payload:
                updates[attr] = payload[key]
        for key, attr in (("platforms", "platforms"), ("protocols", "protocols"), ("databases", "databases")):
            if key in payload:
                updates[attr] = frozenset(payload[key])
        config = replace(config, **updates)
    missing = [str(path) for path in config.spec_paths().values() if not path.is_file()]
    if missing:
        raise ProjectError("missing specification file(s): " + ", ".join(sorted(missing)))
    return config


@dataclass(frozen=True)
class LoadResult:
    model: ProgramModel | None
    diagnostics: tuple[Diagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.model is not None


def load_project(config: ProjectConfig) -> LoadResult:
    """Parse all four files; the model is only built when every parse is clean."""
    paths = config.spec_paths()
    parsers = {
        "vocab": parse_vocab,
        "arch": parse_arch,
        "ui": parse_ui,
        "deploy": parse_deploy,
    }
    sections: dict[str, object] = {}
    spans = SpanTable()
    diagnostics: list[Diagnostic] = []
    for kind, path in paths.items():
        result = parsers[kind](path.read_text(encoding="utf-8"), path.name)
        diagnostics.extend(result.diagnostics)
        if result.ok:
            sections[kind] = result.section
            spans = spans.merged(result.spans)
    if len(sections) != 4:
        return LoadResult(None, tuple(diagnostics))
    model = ProgramModel(
        vocab=sections["vocab"],
        arch=sections["arch"],
        ui=sections["ui"],
        deploy=sections["deploy"],
        spans=spans,
    )
    return LoadResult(model, tuple(diagnostics))


def _check_labels(config: ProjectConfig, model: ProgramModel) -> list[Diagnostic]:
    """Platform/protocol/database labels must come from the allow-lists."""
    diagnostics = []
    fallback = Span(config.deploy_file, 1, 1, 1)
    for dev in model.deploy.devices:
        checks = (
            ("platform", dev.platform, config.platforms),
            ("protocol", dev.protocol, config.protocols),
            ("database", dev.database, config.databases),
        )
        for label_kind, value, allowed in checks:
            if value is not None and value not in allowed:
                span = model.spans.get("device", dev.name, label_kind) or fallback
                diagnostics.append(
                    error(
                        "UnknownLabel",
                        f"{label_kind} '{value}' is not in the configured allow-list "
                        f"({', '.join(sorted(allowed))})",
                        span,
                    )
                )
    return diagnostics


def check_project(config: ProjectConfig) -> Validation:
    """The full front end: parse all four specs, then validate across them."""
    loaded = load_project(config)
    if not loaded.ok:
        return Validation(None, loaded.diagnostics)
    label_diagnostics = _check_labels(config, loaded.model)
    validation = validate(loaded.model)
    merged = tuple(loaded.diagnostics) + tuple(label_diagnostics) + validation.diagnostics
    if label_diagnostics:
        return Validation(None, merged)
    return Validation(validation.program, merged)
