"""Simulation inputs: sensor traces, storage contents, and the feedback model.

Traces stand in for physical instruments: one CSV per sensor with a
``t_ms`` column followed by the fields of the sensor's struct. Storage rows
seed request-response lookups. The feedback model closes the physical loop
for testing (an actuator command changes the drift of a measured field).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from ..model import NUMERIC_TYPES


class SimInputError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def coerce_value(value, type_name: str, context: str):
    """Coerce a raw value to a struct field type, or fail with PayloadTypeError."""
    if type_name == "double":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SimInputError("PayloadTypeError", f"{context}: expected a double, got {value!r}")
        return float(value)
    if type_name == "long":
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise SimInputError("PayloadTypeError", f"{context}: expected a long, got {value!r}")
        return int(value)
    if not isinstance(value, str):
        raise SimInputError("PayloadTypeError", f"{context}: expected a String, got {value!r}")
    return value


def _parse_cell(text: str, type_name: str, context: str):
    if type_name in NUMERIC_TYPES:
        try:
            return coerce_value(float(text) if type_name == "double" else int(text), type_name, context)
        except ValueError as exc:
            raise SimInputError("PayloadTypeError", f"{context}: {text!r} is not a {type_name}") from exc
    return text


@dataclass(frozen=True)
class SensorTrace:
    """Timestamped records feeding one sensor; timestamps strictly increase."""

    sensor: str
    samples: tuple[tuple[int, dict], ...]

    def __post_init__(self) -> None:
        last = -1
        for t, _ in self.samples:
            if t <= last:
                raise SimInputError(
                    "BadTrace", f"trace for '{self.sensor}' must have strictly increasing t_ms"
                )
            last = t

    def value_at(self, t_ms: int) -> dict:
        """Sample-and-hold: latest record at or before `t_ms` (first record
        holds before the trace starts)."""
        chosen = self.samples[0][1]
        for t, record in self.samples:
            if t > t_ms:
                break
            chosen = record
        return dict(chosen)


def parse_trace_csv(sensor: str, text: str, fields: tuple[tuple[str, str], ...]) -> SensorTrace:
    """Parse a `t_ms,field...` CSV against the sensor's struct fields."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SimInputError("BadTrace", f"trace for '{sensor}' is empty") from None
    header = [h.strip() for h in header]
    if not header or header[0] != "t_ms":
        raise SimInputError("BadTrace", f"trace for '{sensor}' must start with a t_ms column")
    types = dict(fields)
    expected = {name for name, _ in fields}
    if set(header[1:]) != expected:
        raise SimInputError(
            "BadTrace",
            f"trace for '{sensor}' has columns {header[1:]}, expected {sorted(expected)}",
        )
    samples = []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise SimInputError("BadTrace", f"trace for '{sensor}' line {lineno}: wrong column count")
        context = f"trace '{sensor}' line {lineno}"
        try:
            t = int(row[0])
        except ValueError as exc:
            raise SimInputError("BadTrace", f"{context}: t_ms must be an integer") from exc
        record = {
            name: _parse_cell(row[i + 1].strip(), types[name], context)
            for i, name in enumerate(header[1:])
        }
        samples.append((t, record))
    if not samples:
        raise SimInputError("BadTrace", f"trace for '{sensor}' has no samples")
    return SensorTrace(sensor, tuple(samples))


@dataclass
class StorageState:
    """Mutable keyed rows behind one storage or request-based sensor."""

    name: str
    key_type: str
    rows: dict = field(default_factory=dict)

    def coerce_key(self, key, context: str):
        if self.key_type == "long":
            try:
                return int(key)
            except (TypeError, ValueError):
                raise SimInputError("PayloadTypeError", f"{context}: key {key!r} is not a long") from None
        if self.key_type == "double":
            try:
                return float(key)
            except (TypeError, ValueError):
                raise SimInputError("PayloadTypeError", f"{context}: key {key!r} is not a double") from None
        return str(key)


def load_storage_rows(text: str) -> dict[str, dict]:
    """Parse the storage seed file: {component: {key: record}}."""
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SimInputError("BadStorageSeed", f"storage seed is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or not all(isinstance(v, dict) for v in payload.values()):
        raise SimInputError("BadStorageSeed", "storage seed must map component names to row maps")
    return payload


@dataclass(frozen=True)
class FeedbackResponse:
    rate_per_s: float
    target_arg: int | None = None  # index of the command argument capping the drift


class FeedbackModel:
    """Additive drift applied to one measured field in response to commands.

    A command with a positive rate raises the effective value by
    ``rate_per_s`` each second, clamped at the commanded target when the
    response names one; a negative rate lowers it without a floor. Drift
    accumulates into an offset added to the raw trace value at each sample.
    """

    def __init__(
        self,
        sensor: str,
        field: str,
        actuator: str,
        responses: dict[str, FeedbackResponse],
        max_rate_per_s: float = 5.0,
    ):
        for action, response in responses.items():
            if abs(response.rate_per_s) > max_rate_per_s:
                raise SimInputError(
                    "BadFeedback",
                    f"response '{action}' rate {response.rate_per_s} exceeds the bound {max_rate_per_s}",
                )
        self.sensor = sensor
        self.field = field
        self.actuator = actuator
        self.responses = dict(responses)
        self.max_rate_per_s = max_rate_per_s
        self.reset()

    def reset(self) -> None:
        self._rate = 0.0
        self._ceiling: float | None = None
        self._offset = 0.0
        self._last_ms = 0

    def on_command(self, t_ms: int, actuator: str, action: str, args: tuple) -> None:
        if actuator != self.actuator or action not in self.responses:
            return
        self._advance(t_ms)
        response = self.responses[action]
        self._rate = response.rate_per_s
        self._ceiling = None
        if response.target_arg is not None and response.target_arg < len(args):
            target = args[response.target_arg]
            if isinstance(target, (int, float)) and not isinstance(target, bool):
                self._ceiling = float(target)

    def sample(self, t_ms: int, base: float) -> float:
        self._advance(t_ms)
        value = base + self._offset
        if self._ceiling is not None and self._rate > 0 and value > self._ceiling:
            value = self._ceiling
            self._offset = self._ceiling - base
        return value

    def _advance(self, t_ms: int) -> None:
        dt = (t_ms - self._last_ms) / 1000.0
        if dt > 0:
            self._offset += self._rate * dt
        self._last_ms = max(self._last_ms, t_ms)


def hvac_feedback(
    sensor: str = "TemperatureSensor", field: str = "tempValue", actuator: str = "Heater"
) -> FeedbackModel:
    """The documented reference loop: SetTemp(x) drives the field toward x at
    +0.5 units/s, Off lowers it at 0.2 units/s."""
    return FeedbackModel(
        sensor=sensor,
        field=field,
        actuator=actuator,
        responses={
            "SetTemp": FeedbackResponse(rate_per_s=0.5, target_arg=0),
            "Off": FeedbackResponse(rate_per_s=-0.2),
        },
    )


def load_feedback(text: str) -> FeedbackModel:
    try:
        payload = json.loads(text)
        responses = {
            action: FeedbackResponse(
                rate_per_s=float(spec["ratePerS"]),
                target_arg=spec.get("targetArg"),
            )
            for action, spec in payload["responses"].items()
        }
        return FeedbackModel(
            sensor=payload["sensor"],
            field=payload["field"],
            actuator=payload["actuator"],
            responses=responses,
            max_rate_per_s=float(payload.get("maxRatePerS", 5.0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise SimInputError("BadFeedback", f"not a valid feedback file: {exc}") from exc
