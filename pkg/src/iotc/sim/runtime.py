"""Deterministic discrete-event execution of linked device packages.

Virtual time is integer milliseconds. Every scheduled event carries the key
``(t_ms, phase, actor, seq)``: source emissions (sensor and tag samples) run
in phase 0, deliveries and everything they trigger in phase 1, so all sensor
events of a tick are processed before any fan-out. `actor` is the emitting
instance for sources and the receiving instance for deliveries; `seq` is a
global counter that keeps cascades first-in first-out. Identical inputs
therefore produce byte-identical traces.

Interaction-mode semantics on the simulated bus:

* Publish fans out to every subscribed service instance and, as Notify
  messages, to every subscribed interactor instance (same tick).
* Request reaches its unique responder and yields a Response one virtual
  millisecond later; a missing row drops the response with a note.
* Command is logged as the actuation event and handed to every instance of
  the target actuator (or storage, executing its insert action).
"""

from __future__ import annotations

import heapq
import json
import time
from dataclasses import dataclass, field

from .. import model as m
from ..linker import DevicePackage
from .inputs import FeedbackModel, SensorTrace, SimInputError, StorageState, coerce_value
from .logic import ComponentLogic, LogicContext

PHASE_SOURCE = 0
PHASE_DELIVER = 1

REQUEST_LATENCY_MS = 1
_CASCADE_LIMIT = 100_000


class SimError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Message:
    t_ms: int
    kind: str  # Publish | Request | Response | Command | Notify
    sender: str
    topic: str | None = None
    target: str | None = None
    action: str | None = None
    payload: dict | list | None = None

    def subject(self) -> str:
        if self.kind == "Publish":
            return self.topic or "-"
        if self.kind == "Notify":
            return f"{self.topic}->{self.target}"
        if self.kind == "Command":
            return f"{self.target}.{self.action}"
        return self.target or "-"

    def to_dict(self) -> dict:
        return {
            "tMs": self.t_ms,
            "kind": self.kind,
            "sender": self.sender,
            "topic": self.topic,
            "target": self.target,
            "action": self.action,
            "payload": self.payload,
        }


@dataclass(frozen=True)
class SimTrace:
    """Everything observable from one run, in deterministic order."""

    events: tuple[Message, ...]
    notes: tuple[tuple[int, str, str], ...]
    horizon_ms: int
    seed: int
    consume_activations: dict[str, int]
    notify_activations: dict[str, int]

    def of_kind(self, kind: str) -> tuple[Message, ...]:
        return tuple(e for e in self.events if e.kind == kind)

    def publishes(self, topic: str | None = None) -> tuple[Message, ...]:
        return tuple(
            e for e in self.of_kind("Publish") if topic is None or e.topic == topic
        )

    def commands(self, target: str | None = None, action: str | None = None) -> tuple[Message, ...]:
        return tuple(
            e
            for e in self.of_kind("Command")
            if (target is None or e.target == target) and (action is None or e.action == action)
        )

    def notifies(self, topic: str | None = None) -> tuple[Message, ...]:
        return tuple(e for e in self.of_kind("Notify") if topic is None or e.topic == topic)

    def render_text(self) -> str:
        lines = [
            f"{e.t_ms} {e.kind} {e.sender} {e.subject()} "
            f"{json.dumps(e.payload, sort_keys=True, separators=(',', ':'))}"
            for e in self.events
        ]
        lines += [f"# {t} {code} {text}" for t, code, text in self.notes]
        return "\n".join(lines) + "\n" if lines else ""

    def to_json(self) -> str:
        payload = {
            "horizonMs": self.horizon_ms,
            "seed": self.seed,
            "events": [e.to_dict() for e in self.events],
            "notes": [{"tMs": t, "code": code, "text": text} for t, code, text in self.notes],
            "consumeActivations": dict(sorted(self.consume_activations.items())),
            "notifyActivations": dict(sorted(self.notify_activations.items())),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def compute_common(op: str, window: list[dict], field_name: str) -> dict:
    """Tumbling-window aggregate: the last record with `field_name` replaced.

    COUNT_BY_SAMPLE yields the window length; the others fold the named
    numeric field.
    """
    if not window:
        raise SimError("EmptyWindow", "compute_common needs a non-empty window")
    values = []
    for record in window:
        value = record.get(field_name)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SimError(
                "NonNumericField", f"field '{field_name}' is not numeric in {record!r}"
            )
        values.append(value)
    if op == "AVG_BY_SAMPLE":
        result = sum(values) / len(values)
    elif op == "SUM_BY_SAMPLE":
        result = sum(values)
    elif op == "COUNT_BY_SAMPLE":
        result = len(values)
    elif op == "MAX_BY_SAMPLE":
        result = max(values)
    elif op == "MIN_BY_SAMPLE":
        result = min(values)
    else:
        raise SimError("UnknownOp", f"unknown compute operation '{op}'")
    out = dict(window[-1])
    out[field_name] = result
    return out


def _compare(value, comparator: str, literal) -> bool:
    if comparator == "<":
        return value < literal
    if comparator == "<=":
        return value <= literal
    if comparator == ">":
        return value > literal
    if comparator == ">=":
        return value >= literal
    return value == literal


@dataclass
class _Instance:
    name: str
    device: str
    binding: object
    windows: dict[str, list] = field(default_factory=dict)

    @property
    def id(self) -> str:
        return f"{self.name}@{self.device}"

    @property
    def kind(self) -> str:
        return self.binding.kind


class Engine:
    def __init__(
        self,
        packages: list[DevicePackage],
        registry: dict[str, ComponentLogic],
        traces: dict[str, SensorTrace],
        storage_rows: dict[str, dict] | None = None,
        feedback: FeedbackModel | None = None,
        horizon_ms: int = 0,
        seed: int = 0,
        pace: float = 0.0,
    ):
        self.registry = dict(registry)
        self.traces = dict(traces)
        self.feedback = feedback
        self.horizon_ms = int(horizon_ms)
        self.seed = int(seed)
        self.pace = pace
        self.now_ms = 0

        self.structs: dict[str, tuple[tuple[str, str], ...]] = {}
        self.topics: dict[str, str] = {}
        self.instances: list[_Instance] = []
        for pkg in packages:
            self.structs.update(pkg.structs)
            self.topics.update(pkg.topics)
            for binding in pkg.components:
                self.instances.append(_Instance(binding.name, pkg.device, binding))
        self.instances.sort(key=lambda i: (i.name, i.device))

        self.subscribers: dict[str, list[_Instance]] = {}
        self.notify_subs: dict[str, list[_Instance]] = {}
        self.by_name: dict[str, list[_Instance]] = {}
        for inst in self.instances:
            self.by_name.setdefault(inst.name, []).append(inst)
            table = self.notify_subs if inst.kind == m.KIND_INTERACTION else self.subscribers
            for topic in inst.binding.subscriptions:
                table.setdefault(topic, []).append(inst)

        self.storage_states: dict[str, StorageState] = {}
        rows_in = storage_rows or {}
        for inst in self.instances:
            if inst.kind in (m.KIND_STORAGE, m.KIND_REQUEST) and inst.name not in self.storage_states:
                state = StorageState(inst.name, inst.binding.config["keyType"])
                for raw_key, record in rows_in.get(inst.name, {}).items():
                    key = state.coerce_key(raw_key, f"storage seed for '{inst.name}'")
                    state.rows[key] = self._validated(
                        inst.binding.config["struct"], record, f"storage seed for '{inst.name}'"
                    )
                self.storage_states[inst.name] = state

        self._check_preconditions()

        self._queue: list = []
        self._seq = 0
        self.events: list[Message] = []
        self.notes: list[tuple[int, str, str]] = []
        self.consume_activations: dict[str, int] = {}
        self.notify_activations: dict[str, int] = {}
        self._tick_budget = 0
        self._current_tick = -1

    # -- setup checks --------------------------------------------------------

    def _check_preconditions(self) -> None:
        for inst in self.instances:
            if inst.binding.logic_stub and inst.binding.logic_stub not in self.registry:
                raise SimError(
                    "MissingLogic",
                    f"no logic registered for stub '{inst.binding.logic_stub}' "
                    f"(component '{inst.name}')",
                )
            if inst.kind in (m.KIND_PERIODIC, m.KIND_EVENT, m.KIND_TAG) and inst.name not in self.traces:
                raise SimError("MissingTrace", f"no trace provided for sensor '{inst.name}'")
            for target, _action in inst.binding.commands_out:
                if target not in self.by_name:
                    raise SimError(
                        "BrokenClosure", f"command target '{target}' is hosted nowhere"
                    )
            for target, _ptype in inst.binding.request_routes:
                if target not in self.storage_states:
                    raise SimError(
                        "BrokenClosure", f"request target '{target}' is hosted nowhere"
                    )

    # -- helpers --------------------------------------------------------------

    def _validated(self, struct_name: str, record: dict, context: str) -> dict:
        struct = self.structs.get(struct_name)
        if struct is None:
            raise SimError("PayloadTypeError", f"{context}: unknown struct '{struct_name}'")
        if not isinstance(record, dict):
            raise SimError("PayloadTypeError", f"{context}: payload must be a record")
        names = {name for name, _ in struct}
        extra = set(record) - names
        if extra:
            raise SimError(
                "PayloadTypeError",
                f"{context}: fields {sorted(extra)} are not in struct {struct_name}",
            )
        out = {}
        for name, type_name in struct:
            if name not in record:
                raise SimError(
                    "PayloadTypeError", f"{context}: missing field '{name}' of {struct_name}"
                )
            try:
                out[name] = coerce_value(record[name], type_name, context)
            except SimInputError as exc:
                raise SimError("PayloadTypeError", str(exc)) from exc
        return out

    def _schedule(self, t_ms: int, phase: int, actor: str, thunk) -> None:
        if t_ms > self.horizon_ms:
            return
        self._seq += 1
        heapq.heappush(self._queue, (t_ms, phase, actor, self._seq, thunk))

    def _note(self, code: str, text: str) -> None:
        self.notes.append((self.now_ms, code, text))

    def _logic_for(self, inst: _Instance) -> ComponentLogic:
        return self.registry[inst.binding.logic_stub]

    def _first_numeric_field(self, struct_name: str) -> str:
        for name, type_name in self.structs[struct_name]:
            if type_name in m.NUMERIC_TYPES:
                return name
        raise SimError("NonNumericField", f"struct '{struct_name}' has no numeric field")

    # -- run loop --------------------------------------------------------------

    def run(self) -> SimTrace:
        for inst in self.instances:
            if inst.kind == m.KIND_PERIODIC:
                period_ms = inst.binding.config["samplePeriodS"] * 1000
                self._schedule(
                    period_ms, PHASE_SOURCE, inst.id, self._periodic_thunk(inst, period_ms)
                )
            elif inst.kind == m.KIND_EVENT:
                for t, record in self.traces[inst.name].samples:
                    self._schedule(t, PHASE_SOURCE, inst.id, self._event_thunk(inst, t, record))
            elif inst.kind == m.KIND_TAG:
                for t, record in self.traces[inst.name].samples:
                    self._schedule(t, PHASE_SOURCE, inst.id, self._tag_thunk(inst, t, record))

        wall_anchor = time.monotonic()
        while self._queue:
            t_ms, _phase, _actor, _seq, thunk = heapq.heappop(self._queue)
            if t_ms != self._current_tick:
                self._current_tick = t_ms
                self._tick_budget = _CASCADE_LIMIT
            self._tick_budget -= 1
            if self._tick_budget < 0:
                raise SimError(
                    "RunawayCascade", f"more than {_CASCADE_LIMIT} events at t={t_ms}ms"
                )
            if self.pace > 0:
                target_wall = wall_anchor + (t_ms / 1000.0) * self.pace
                delay = target_wall - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            self.now_ms = t_ms
            thunk()

        return SimTrace(
            events=tuple(self.events),
            notes=tuple(self.notes),
            horizon_ms=self.horizon_ms,
            seed=self.seed,
            consume_activations=dict(sorted(self.consume_activations.items())),
            notify_activations=dict(sorted(self.notify_activations.items())),
        )

    # -- sources ----------------------------------------------------------------

    def _periodic_thunk(self, inst: _Instance, period_ms: int):
        def fire() -> None:
            t = self.now_ms
            base = self.traces[inst.name].value_at(t)
            self._apply_feedback(inst, t, base)
            self._publish(inst, inst.binding.publications[0], base)
            next_t = t + period_ms
            if next_t <= inst.binding.config["durationS"] * 1000:
                self._schedule(next_t, PHASE_SOURCE, inst.id, self._periodic_thunk(inst, period_ms))

        return fire

    def _event_thunk(self, inst: _Instance, t: int, record: dict):
        def fire() -> None:
            sample = dict(record)
            self._apply_feedback(inst, t, sample)
            cond = inst.binding.config["condition"]
            value = sample.get(cond["field"])
            if value is None:
                raise SimError(
                    "PayloadTypeError",
                    f"trace for '{inst.name}' lacks condition field '{cond['field']}'",
                )
            if _compare(value, cond["comparator"], cond["literal"]):
                self._publish(inst, inst.binding.publications[0], sample)

        return fire

    def _tag_thunk(self, inst: _Instance, t: int, record: dict):
        def fire() -> None:
            self._publish(inst, inst.binding.publications[0], dict(record))

        return fire

    def _apply_feedback(self, inst: _Instance, t: int, record: dict) -> None:
        fb = self.feedback
        if fb is not None and fb.sensor == inst.name and fb.field in record:
            record[fb.field] = fb.sample(t, record[fb.field])

    # -- bus ----------------------------------------------------------------------

    def _publish(self, inst: _Instance, topic: str, record: dict) -> None:
        struct_name = self.topics.get(topic)
        if struct_name is None:
            raise SimError("PayloadTypeError", f"topic '{topic}' has no declared struct")
        payload = self._validated(struct_name, record, f"{inst.id} publish '{topic}'")
        self.events.append(Message(self.now_ms, "Publish", inst.id, topic=topic, payload=payload))
        services = self.subscribers.get(topic, ())
        interactors = self.notify_subs.get(topic, ())
        if not services and not interactors:
            self._note("NoSubscriber", f"no subscriber for '{topic}'; message dropped")
            return
        for sub in services:
            self._schedule(
                self.now_ms, PHASE_DELIVER, sub.id, self._consume_thunk(sub, topic, payload)
            )
        for ui in interactors:
            self._schedule(
                self.now_ms, PHASE_DELIVER, ui.id, self._notify_thunk(ui, inst, topic, payload)
            )

    def _consume_thunk(self, inst: _Instance, topic: str, payload: dict):
        def deliver() -> None:
            self.consume_activations[topic] = self.consume_activations.get(topic, 0) + 1
            if inst.kind == m.KIND_COMMON:
                self._common_consume(inst, topic, payload)
            else:
                self._logic_for(inst).on_consume(LogicContext(self, inst), topic, payload)

        return deliver

    def _notify_thunk(self, ui: _Instance, sender: _Instance, topic: str, payload: dict):
        def deliver() -> None:
            self.notify_activations[topic] = self.notify_activations.get(topic, 0) + 1
            self.events.append(
                Message(
                    self.now_ms, "Notify", sender.id, topic=topic, target=ui.id, payload=payload
                )
            )
            self._logic_for(ui).on_notify(LogicContext(self, ui), topic, payload)

        return deliver

    def _common_consume(self, inst: _Instance, topic: str, payload: dict) -> None:
        window = inst.windows.setdefault(topic, [])
        window.append(payload)
        size = inst.binding.config["windows"][topic]
        if len(window) < size:
            return
        batch = window[:]
        window.clear()
        agg_field = self._first_numeric_field(self.topics[topic])
        result = compute_common(inst.binding.config["computeOp"], batch, agg_field)
        gen = inst.binding.config["generate"]
        out_fields = self.structs[gen["struct"]]
        out_record = {name: result[name] for name, _ in out_fields if name in result}
        self._publish(inst, gen["measurement"], out_record)

    # -- logic emissions -------------------------------------------------------------

    def logic_publish(self, inst: _Instance, topic: str, record: dict) -> None:
        if topic not in inst.binding.publications:
            raise SimError(
                "UndeclaredEmit", f"'{inst.name}' does not declare a generate for '{topic}'"
            )
        self._publish(inst, topic, record)

    def logic_command(self, inst: _Instance, target: str, action: str, args: tuple) -> None:
        if (target, action) not in inst.binding.commands_out:
            raise SimError(
                "UndeclaredEmit", f"'{inst.name}' does not declare command {target}.{action}"
            )
        targets = self.by_name.get(target, [])
        checked = self._check_command_args(targets[0], action, args) if targets else list(args)
        self.events.append(
            Message(
                self.now_ms, "Command", inst.id, target=target, action=action, payload=checked
            )
        )
        if self.feedback is not None:
            self.feedback.on_command(self.now_ms, target, action, tuple(checked))
        for tinst in targets:
            self._schedule(
                self.now_ms,
                PHASE_DELIVER,
                tinst.id,
                self._command_thunk(tinst, action, tuple(checked)),
            )

    def _check_command_args(self, tinst: _Instance, action: str, args: tuple) -> list:
        config = tinst.binding.config
        if tinst.kind == m.KIND_ACTUATOR:
            params = config["actions"].get(action)
        elif tinst.kind == m.KIND_STORAGE:
            insert = config["insertAction"]
            params = insert["params"] if insert["name"] == action else None
        else:
            return list(args)
        if params is None:
            raise SimError("UndeclaredEmit", f"'{tinst.name}' has no action '{action}'")
        if len(params) != len(args):
            raise SimError(
                "PayloadTypeError",
                f"{tinst.name}.{action} takes {len(params)} argument(s), got {len(args)}",
            )
        checked = []
        for (pname, ptype), value in zip(params, args):
            try:
                checked.append(coerce_value(value, ptype, f"{tinst.name}.{action}({pname})"))
            except SimInputError as exc:
                raise SimError("PayloadTypeError", str(exc)) from exc
        return checked

    def _command_thunk(self, tinst: _Instance, action: str, args: tuple):
        def deliver() -> None:
            if tinst.kind == m.KIND_STORAGE:
                self._storage_insert(tinst, action, args)
            elif tinst.kind in (m.KIND_COMMON, m.KIND_CUSTOM):
                self._logic_for(tinst).on_command(LogicContext(self, tinst), action, args)
            # actuators: the Command message is the actuation record

        return deliver

    def _storage_insert(self, tinst: _Instance, action: str, args: tuple) -> None:
        config = tinst.binding.config
        insert = config["insertAction"]
        if action != insert["name"]:
            return
        record = {pname: value for (pname, _ptype), value in zip(insert["params"], args)}
        payload = self._validated(
            config["struct"], record, f"insert into '{tinst.name}'"
        )
        key = payload.get(config["keyField"])
        if key is None:
            raise SimError(
                "PayloadTypeError",
                f"insert into '{tinst.name}' does not bind its key field '{config['keyField']}'",
            )
        self.storage_states[tinst.name].rows[key] = payload

    def logic_request(self, inst: _Instance, target: str, value) -> None:
        if target not in {t for t, _ in inst.binding.request_routes}:
            raise SimError(
                "UndeclaredEmit", f"'{inst.name}' does not declare a request to '{target}'"
            )
        responders = self.by_name.get(target, [])
        if len(responders) > 1:
            raise SimError(
                "AmbiguousResponder",
                f"request target '{target}' is hosted on several devices: "
                + ", ".join(sorted(r.device for r in responders)),
            )
        responder = responders[0]
        state = self.storage_states[target]
        try:
            key = state.coerce_key(value, f"request to '{target}'")
        except SimInputError as exc:
            raise SimError("PayloadTypeError", str(exc)) from exc
        self.events.append(
            Message(
                self.now_ms,
                "Request",
                inst.id,
                target=target,
                payload={responder.binding.config["keyField"]: key},
            )
        )
        self._schedule(
            self.now_ms + REQUEST_LATENCY_MS,
            PHASE_DELIVER,
            responder.id,
            self._respond_thunk(responder, inst, key),
        )

    def _respond_thunk(self, responder: _Instance, requester: _Instance, key):
        def deliver() -> None:
            state = self.storage_states[responder.name]
            row = state.rows.get(key)
            if row is None:
                self._note(
                    "NoRow", f"'{responder.name}' has no row for key {key!r}; request dropped"
                )
                return
            self.events.append(
                Message(
                    self.now_ms,
                    "Response",
                    responder.id,
                    target=requester.id,
                    payload=dict(row),
                )
            )
            self._logic_for(requester).on_response(
                LogicContext(self, requester), responder.name, dict(row)
            )

        return deliver


def run(
    packages: list[DevicePackage],
    registry: dict[str, ComponentLogic],
    traces: dict[str, SensorTrace],
    storage_rows: dict[str, dict] | None = None,
    feedback: FeedbackModel | None = None,
    horizon_ms: int = 0,
    seed: int = 0,
    pace: float = 0.0,
) -> SimTrace:
    """Execute linked packages up to `horizon_ms` of virtual time."""
    if feedback is not None:
        feedback.reset()
    engine = Engine(
        packages,
        registry,
        traces,
        storage_rows=storage_rows,
        feedback=feedback,
        horizon_ms=horizon_ms,
        seed=seed,
        pace=pace,
    )
    return engine.run()
