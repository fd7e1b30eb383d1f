"""iotc: a compiler toolchain and deterministic simulator for
sense-compute-control applications described in four small languages
(domain, architecture, user interaction, deployment)."""

from .analyzer import DataflowGraph, ValidatedProgram, Validation, dataflow_graph, validate
from .diagnostics import Diagnostic, Severity, Span
from .formatter import content_hash, format_section
from .linker import DevicePackage, LinkError, StubDescriptor, generate_frameworks, link
from .mapper import MapError, MappingTable, map_services
from .model import ProgramModel
from .parser import ParseResult, parse_arch, parse_deploy, parse_ui, parse_vocab
from .project import ProjectConfig, ProjectError, check_project, load_config, load_project

__version__ = "0.1.0"

__all__ = [
    "DataflowGraph",
    "DevicePackage",
    "Diagnostic",
    "LinkError",
    "MapError",
    "MappingTable",
    "ParseResult",
    "ProgramModel",
    "ProjectConfig",
    "ProjectError",
    "Severity",
    "Span",
    "StubDescriptor",
    "ValidatedProgram",
    "Validation",
    "check_project",
    "content_hash",
    "dataflow_graph",
    "format_section",
    "generate_frameworks",
    "link",
    "load_config",
    "load_project",
    "map_services",
    "parse_arch",
    "parse_deploy",
    "parse_ui",
    "parse_vocab",
    "validate",
]
