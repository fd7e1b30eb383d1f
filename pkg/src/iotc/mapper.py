"""Assignment of computational services to devices.

Services pinned through a device's ``resources`` list stay where the
deployment put them; every other service is placed on a randomly chosen
compute-capable device (platform JavaSE or NodeJS). Randomness comes from a
fixed 64-bit linear congruential generator so the mapping is reproducible
bit-for-bit across runs, machines, and implementations:

    state' = state * 6364136223846793005 + 1442695040888963407   (mod 2^64)
    index  = (state' >> 32) mod len(eligible devices, sorted by name)

Services are drawn in lexicographic name order, so declaration order never
influences the result. Pinned services do not consume a draw.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .analyzer import ValidatedProgram
from .formatter import content_hash
from .model import COMPUTE_CAPABLE_PLATFORMS, SERVICE_KINDS

LCG_MULTIPLIER = 6364136223846793005
LCG_INCREMENT = 1442695040888963407
_MASK64 = (1 << 64) - 1


class MapError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class MappingTable:
    """Where every component lives: fixed placements plus mapped services."""

    fixed: dict[str, tuple[str, ...]]  # resource -> hosting devices
    assigned: dict[str, str]  # service -> device
    seed: int
    model_hash: str

    def device_components(self) -> dict[str, list[str]]:
        """Inverse view: device -> hosted components, all lists sorted."""
        hosted: dict[str, list[str]] = {}
        for resource, devices in self.fixed.items():
            for device in devices:
                hosted.setdefault(device, []).append(resource)
        for service, device in self.assigned.items():
            hosted.setdefault(device, []).append(service)
        return {dev: sorted(names) for dev, names in sorted(hosted.items())}

    def to_json(self) -> str:
        payload = {
            "version": 1,
            "modelHash": self.model_hash,
            "seed": self.seed,
            "fixed": {k: list(v) for k, v in sorted(self.fixed.items())},
            "assigned": dict(sorted(self.assigned.items())),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MappingTable":
        try:
            payload = json.loads(text)
            return cls(
                fixed={k: tuple(v) for k, v in payload["fixed"].items()},
                assigned=dict(payload["assigned"]),
                seed=int(payload["seed"]),
                model_hash=str(payload["modelHash"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MapError("BadMapping", f"not a valid mapping file: {exc}") from exc


def lcg_next(state: int) -> int:
    return (state * LCG_MULTIPLIER + LCG_INCREMENT) & _MASK64


def map_services(vp: ValidatedProgram, seed: int) -> MappingTable:
    """Place every computational service on exactly one device.

    Raises :class:`MapError` when an unpinned service exists but no device is
    compute-capable, or a service is pinned to more than one device.
    """
    services = sorted(svc.name for svc in vp.services())
    fixed = {
        name: devices
        for name, devices in vp.placements.items()
        if vp.kinds.get(name) not in SERVICE_KINDS
    }
    pinned = {
        name: devices for name, devices in vp.placements.items() if vp.kinds.get(name) in SERVICE_KINDS
    }

    eligible = sorted(
        dev.name for dev in vp.devices() if dev.platform in COMPUTE_CAPABLE_PLATFORMS
    )

    assigned: dict[str, str] = {}
    state = seed & _MASK64
    for service in services:
        if service in pinned:
            devices = pinned[service]
            if len(devices) > 1:
                raise MapError(
                    "AmbiguousPlacement",
                    f"service '{service}' is pinned to several devices: {', '.join(devices)}",
                )
            assigned[service] = devices[0]
            continue
        if not eligible:
            raise MapError(
                "NoEligibleDevice",
                f"no compute-capable device (platform in {sorted(COMPUTE_CAPABLE_PLATFORMS)}) "
                f"for service '{service}'",
            )
        state = lcg_next(state)
        assigned[service] = eligible[(state >> 32) % len(eligible)]

    return MappingTable(
        fixed={k: v for k, v in sorted(fixed.items())},
        assigned=assigned,
        seed=seed & _MASK64,
        model_hash=content_hash(vp.model),
    )


def render_table(table: MappingTable) -> str:
    """`service -> device`, one line per service, sorted by service name."""
    return "\n".join(f"{svc} -> {dev}" for svc, dev in sorted(table.assigned.items()))
