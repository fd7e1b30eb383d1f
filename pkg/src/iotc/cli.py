"""The `iotc` command line: check, graph, map, link, build, run, fmt.

Exit codes: 0 on success, 1 on compile or simulation errors, 2 on usage
errors (bad flags, unreadable project). The environment variable
``IOTC_SEED`` overrides any ``--seed`` flag.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .analyzer import dataflow_graph
from .diagnostics import Severity, has_errors, render_all
from .formatter import format_section
from .linker import LinkError, generate_frameworks, link, package_from_json, package_to_json
from .mapper import MapError, MappingTable, map_services, render_table
from .parser import parse_arch, parse_deploy, parse_ui, parse_vocab
from .project import ProjectConfig, ProjectError, check_project, load_config
from .sim import SimError, SimInputError, load_feedback, load_storage_rows, parse_trace_csv, resolve_logic
from .sim import runtime as sim_runtime

OK, COMPILE_ERROR, USAGE_ERROR = 0, 1, 2


def _print_diagnostics(diagnostics, quiet: bool) -> None:
    shown = [d for d in diagnostics if not quiet or d.severity is Severity.ERROR]
    if shown:
        print(render_all(shown), file=sys.stderr)


def _resolve_seed(flag_value: int) -> int:
    env = os.environ.get("IOTC_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ProjectError(f"IOTC_SEED must be an integer, got {env!r}") from None
    return flag_value


def _load_checked(project_dir: str, quiet: bool):
    config = load_config(project_dir)
    validation = check_project(config)
    _print_diagnostics(validation.diagnostics, quiet)
    return config, validation


def cmd_check(args) -> int:
    _config, validation = _load_checked(args.project, args.quiet)
    if not validation.ok:
        return COMPILE_ERROR
    if args.graph:
        print(dataflow_graph(validation.program).to_dot(), end="")
    return OK


def cmd_graph(args) -> int:
    _config, validation = _load_checked(args.project, args.quiet)
    if not validation.ok:
        return COMPILE_ERROR
    print(dataflow_graph(validation.program).to_dot(), end="")
    return OK


def cmd_map(args) -> int:
    config, validation = _load_checked(args.project, args.quiet)
    if not validation.ok:
        return COMPILE_ERROR
    table = map_services(validation.program, _resolve_seed(args.seed))
    if not args.quiet or not args.out:
        rendered = render_table(table)
        if rendered:
            print(rendered)
    if args.out:
        Path(args.out).write_text(table.to_json(), encoding="utf-8")
    return OK


def _emit_build(program, mapping: MappingTable, out_dir: Path, quiet: bool) -> int:
    packages, warnings = link(program, mapping)
    _print_diagnostics(warnings, quiet)
    stubs = generate_frameworks(program)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "mapping.json").write_text(mapping.to_json(), encoding="utf-8")
    for pkg in packages:
        device_dir = out_dir / pkg.device
        device_dir.mkdir(parents=True, exist_ok=True)
        (device_dir / "manifest.json").write_text(package_to_json(pkg), encoding="utf-8")
    stub_dir = out_dir / "stubs"
    stub_dir.mkdir(parents=True, exist_ok=True)
    for name in sorted(stubs):
        (stub_dir / f"{name}.stub").write_text(stubs[name].to_json(), encoding="utf-8")
    if not quiet:
        print(f"wrote {len(packages)} package(s) and {len(stubs)} stub(s) to {out_dir}")
    return OK


def cmd_link(args) -> int:
    config, validation = _load_checked(args.project, args.quiet)
    if not validation.ok:
        return COMPILE_ERROR
    mapping_path = Path(args.mapping)
    if not mapping_path.is_file():
        raise ProjectError(f"mapping file {args.mapping!r} does not exist")
    mapping = MappingTable.from_json(mapping_path.read_text(encoding="utf-8"))
    out_dir = Path(args.out) if args.out else config.project_dir / config.build_dir
    return _emit_build(validation.program, mapping, out_dir, args.quiet)


def cmd_build(args) -> int:
    config, validation = _load_checked(args.project, args.quiet)
    if not validation.ok:
        return COMPILE_ERROR
    seed = _resolve_seed(args.seed if args.seed is not None else config.seed)
    mapping = map_services(validation.program, seed)
    out_dir = Path(args.out) if args.out else config.project_dir / config.build_dir
    return _emit_build(validation.program, mapping, out_dir, args.quiet)


def _load_build_dir(build_dir: Path):
    if not build_dir.is_dir():
        raise ProjectError(f"build directory {str(build_dir)!r} does not exist")
    manifests = sorted(build_dir.glob("*/manifest.json"))
    if not manifests:
        raise ProjectError(f"no device manifests under {str(build_dir)!r}")
    return [package_from_json(path.read_text(encoding="utf-8")) for path in manifests]


def _load_traces(packages, traces_dir: Path | None):
    """One CSV per sensor-like component, named `<component>.csv`."""
    sensor_fields: dict[str, tuple] = {}
    for pkg in packages:
        for binding in pkg.components:
            if binding.kind in ("periodicSensor", "eventDrivenSensor", "tag"):
                struct = binding.config["struct"]
                sensor_fields[binding.name] = pkg.structs[struct]
    traces = {}
    if traces_dir is None:
        return traces
    for name, fields in sorted(sensor_fields.items()):
        path = traces_dir / f"{name}.csv"
        if path.is_file():
            traces[name] = parse_trace_csv(name, path.read_text(encoding="utf-8"), fields)
    return traces


def cmd_run(args) -> int:
    packages = _load_build_dir(Path(args.build_dir))
    traces = _load_traces(packages, Path(args.traces) if args.traces else None)
    registry = {}
    for spec in args.logic or ():
        if "=" not in spec:
            raise ProjectError(f"--logic takes COMPONENT=LOGIC, got {spec!r}")
        component, logic_spec = spec.split("=", 1)
        try:
            registry[component] = resolve_logic(logic_spec)
        except ValueError as exc:
            raise ProjectError(str(exc)) from exc
    storage_rows = None
    if args.storage:
        storage_rows = load_storage_rows(Path(args.storage).read_text(encoding="utf-8"))
    feedback = None
    if args.feedback:
        feedback = load_feedback(Path(args.feedback).read_text(encoding="utf-8"))

    trace = sim_runtime.run(
        packages,
        registry,
        traces,
        storage_rows=storage_rows,
        feedback=feedback,
        horizon_ms=args.horizon_ms,
        seed=_resolve_seed(args.seed),
        pace=args.pace,
    )
    text = trace.render_text()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    elif not args.quiet:
        print(text, end="")
    if args.log_json:
        Path(args.log_json).write_text(trace.to_json(), encoding="utf-8")
    return OK


def cmd_fmt(args) -> int:
    config = load_config(args.project)
    paths = config.spec_paths()
    parsers = {"vocab": parse_vocab, "arch": parse_arch, "ui": parse_ui, "deploy": parse_deploy}
    dirty = []
    failed = False
    for kind, path in paths.items():
        source = path.read_text(encoding="utf-8")
        result = parsers[kind](source, path.name)
        if not result.ok:
            _print_diagnostics(result.diagnostics, args.quiet)
            failed = True
            continue
        canonical = format_section(result.section)
        if canonical != source:
            dirty.append(path)
            if not args.check:
                path.write_text(canonical, encoding="utf-8")
    if failed:
        return COMPILE_ERROR
    if args.check and dirty:
        for path in dirty:
            print(f"{path.name}: not in canonical form", file=sys.stderr)
        return COMPILE_ERROR
    if not args.quiet and dirty and not args.check:
        for path in dirty:
            print(f"rewrote {path.name}")
    return OK


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iotc",
        description="Compile, map, link, and simulate sense-compute-control applications.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_project_command(name: str, func, help_text: str):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("project", help="project directory with the four .spec files")
        p.add_argument("--quiet", action="store_true", help="print errors only")
        p.set_defaults(func=func)
        return p

    p_check = add_project_command("check", cmd_check, "parse and validate a project")
    p_check.add_argument("--graph", choices=["dot"], help="also emit the dataflow graph")

    add_project_command("graph", cmd_graph, "emit the dataflow graph as dot text")

    p_map = add_project_command("map", cmd_map, "assign computational services to devices")
    p_map.add_argument("--seed", type=int, default=0, help="mapping seed (default 0)")
    p_map.add_argument("--out", help="write the mapping table as JSON")

    p_link = add_project_command("link", cmd_link, "link packages from an existing mapping")
    p_link.add_argument("--mapping", required=True, help="mapping JSON produced by `iotc map`")
    p_link.add_argument("--out", help="build directory (default <project>/build)")

    p_build = add_project_command("build", cmd_build, "check + map + link in one step")
    p_build.add_argument("--seed", type=int, default=None, help="mapping seed (default from config)")
    p_build.add_argument("--out", help="build directory (default <project>/build)")

    p_run = sub.add_parser("run", help="simulate a built application")
    p_run.add_argument("build_dir", help="directory produced by `iotc build`")
    p_run.add_argument("--traces", help="directory of per-sensor CSV traces")
    p_run.add_argument("--storage", help="JSON file seeding storage and lookup rows")
    p_run.add_argument("--feedback", help="JSON feedback model closing the physical loop")
    p_run.add_argument("--horizon-ms", type=int, default=0, help="virtual time horizon (ms)")
    p_run.add_argument("--seed", type=int, default=0, help="run seed recorded in the trace")
    p_run.add_argument(
        "--logic",
        action="append",
        metavar="COMPONENT=LOGIC",
        help="bind a stub to logic: built-in name, module:Class, or file.py:Class",
    )
    p_run.add_argument("--out", help="write the text trace to a file instead of stdout")
    p_run.add_argument("--log-json", help="also write the machine-readable JSON log")
    p_run.add_argument(
        "--pace",
        type=float,
        default=0.0,
        help="wall-clock seconds per virtual second (display pacing only)",
    )
    p_run.add_argument("--quiet", action="store_true", help="print errors only")
    p_run.set_defaults(func=cmd_run)

    p_fmt = add_project_command("fmt", cmd_fmt, "rewrite spec files to canonical form")
    p_fmt.add_argument("--check", action="store_true", help="fail instead of rewriting")

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_arg_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ProjectError as exc:
        print(f"iotc: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (MapError, LinkError, SimError, SimInputError) as exc:
        code = getattr(exc, "code", "Error")
        print(f"iotc: error: [{code}] {exc}", file=sys.stderr)
        return COMPILE_ERROR


if __name__ == "__main__":
    sys.exit(main())
