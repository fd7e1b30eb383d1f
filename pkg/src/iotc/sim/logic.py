"""User-logic interface and the built-in reference implementations.

Custom services and interactors are executed only through their stub
identifier: before a run, each identifier must be bound to a
:class:`ComponentLogic` in the registry. Logic never touches the engine
directly -- it receives a :class:`LogicContext` restricted to the component's
declared emissions.
"""

from __future__ import annotations

import importlib
import importlib.util
from pathlib import Path


class ComponentLogic:
    """Base class for registered logic; every callback defaults to a no-op."""

    def on_consume(self, ctx: "LogicContext", topic: str, record: dict) -> None:
        pass

    def on_response(self, ctx: "LogicContext", target: str, record: dict) -> None:
        pass

    def on_notify(self, ctx: "LogicContext", topic: str, record: dict) -> None:
        pass

    def on_command(self, ctx: "LogicContext", action: str, args: tuple) -> None:
        pass


class LogicContext:
    """What a piece of logic may see and do during one activation."""

    def __init__(self, engine, instance):
        self._engine = engine
        self._instance = instance

    @property
    def component(self) -> str:
        return self._instance.name

    @property
    def device(self) -> str:
        return self._instance.device

    @property
    def now_ms(self) -> int:
        return self._engine.now_ms

    @property
    def publications(self) -> tuple[str, ...]:
        return self._instance.binding.publications

    def publish(self, topic: str, record: dict) -> None:
        self._engine.logic_publish(self._instance, topic, record)

    def send_command(self, target: str, action: str, *args) -> None:
        self._engine.logic_command(self._instance, target, action, tuple(args))

    def send_request(self, target: str, value) -> None:
        self._engine.logic_request(self._instance, target, value)


def _first_numeric(record: dict) -> str | None:
    for name, value in record.items():
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return name
    return None


class HvacControlLogic(ComponentLogic):
    """Reference thermostat rule: keep the averaged value within [low, high].

    Below `low` it commands `set_action(setpoint)`; above `high` it commands
    `off_action()`; otherwise it stays silent.
    """

    def __init__(
        self,
        low: float = 25.0,
        high: float = 36.0,
        setpoint: float = 30.0,
        actuator: str = "Heater",
        set_action: str = "SetTemp",
        off_action: str = "Off",
        field: str | None = None,
    ):
        self.low = low
        self.high = high
        self.setpoint = setpoint
        self.actuator = actuator
        self.set_action = set_action
        self.off_action = off_action
        self.field = field

    def on_consume(self, ctx: LogicContext, topic: str, record: dict) -> None:
        field = self.field or _first_numeric(record)
        if field is None:
            return
        value = record[field]
        if value < self.low:
            ctx.send_command(self.actuator, self.set_action, self.setpoint)
        elif value > self.high:
            ctx.send_command(self.actuator, self.off_action)


class RecordingUiLogic(ComponentLogic):
    """Interactor stand-in that simply remembers what reached the user."""

    def __init__(self):
        self.notifications: list[tuple[int, str, dict]] = []
        self.responses: list[tuple[int, str, dict]] = []

    def on_notify(self, ctx: LogicContext, topic: str, record: dict) -> None:
        self.notifications.append((ctx.now_ms, topic, record))

    def on_response(self, ctx: LogicContext, target: str, record: dict) -> None:
        self.responses.append((ctx.now_ms, target, record))


BUILTIN_LOGIC = {
    "hvac_controller": HvacControlLogic,
    "ui_recorder": RecordingUiLogic,
    "noop": ComponentLogic,
}


def resolve_logic(spec: str) -> ComponentLogic:
    """Instantiate logic from a CLI-style spec.

    Accepted forms: a built-in name (``hvac_controller``), a module path
    (``mypkg.logic:MyLogic``), or a file path (``./logic.py:MyLogic``).
    """
    if spec in BUILTIN_LOGIC:
        return BUILTIN_LOGIC[spec]()
    if ":" not in spec:
        raise ValueError(
            f"unknown logic '{spec}' (expected one of {sorted(BUILTIN_LOGIC)} "
            "or module:Class / file.py:Class)"
        )
    location, attr = spec.rsplit(":", 1)
    if location.endswith(".py"):
        path = Path(location)
        module_spec = importlib.util.spec_from_file_location(f"_iotc_logic_{path.stem}", path)
        if module_spec is None or module_spec.loader is None:
            raise ValueError(f"cannot load logic file {location!r}")
        module = importlib.util.module_from_spec(module_spec)
        module_spec.loader.exec_module(module)
    else:
        module = importlib.import_module(location)
    try:
        factory = getattr(module, attr)
    except AttributeError as exc:
        raise ValueError(f"{location!r} has no attribute {attr!r}") from exc
    logic = factory()
    if not isinstance(logic, ComponentLogic):
        raise ValueError(f"{spec!r} did not produce a ComponentLogic")
    return logic
