"""Simulated force-sensing contact: a clamped linear spring with scripted events."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError
from .geometry import Surface, surface_height


class EventKind(str, Enum):
    HEIGHT_DROP = "height_drop"
    FORCE_BIAS = "force_bias"


@dataclass(frozen=True)
class ScenarioEvent:
    kind: EventKind
    at_step: int
    magnitude: float

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", EventKind(self.kind))
        except ValueError as exc:
            raise ConfigError(f"unknown event kind {self.kind!r}") from exc
        if int(self.at_step) != self.at_step or self.at_step < 0:
            raise ConfigError("event at_step must be a non-negative integer")
        if not np.isfinite(self.magnitude):
            raise ConfigError("event magnitude must be finite")
        object.__setattr__(self, "at_step", int(self.at_step))


@dataclass
class ContactEnv:
    """Single-owner state machine; events at step ``s`` act on readings from step ``s`` on."""

    surface: Surface
    stiffness: float = 100.0
    noise_sigma: float = 0.0
    rng_seed: int = 0
    events: list[ScenarioEvent] = field(default_factory=list)
    current_step: int = 0
    bias: float = 0.0

    def __post_init__(self):
        if not self.stiffness > 0:
            raise ConfigError("stiffness must be > 0")
        if not self.noise_sigma >= 0:
            raise ConfigError("noise_sigma must be >= 0")
        self.events = sorted(self.events, key=lambda e: e.at_step)
        self._apply_events()

    def _apply_events(self):
        for ev in self.events:
            if ev.at_step != self.current_step:
                continue
            if ev.kind is EventKind.HEIGHT_DROP:
                self.surface = self.surface.shifted(-ev.magnitude)
            else:
                self.bias = ev.magnitude

    def measure(self, tool_tip) -> float:
        tip = np.asarray(tool_tip, dtype=float)
        depth = max(0.0, surface_height(self.surface, tip[0]) - tip[2])
        F = self.stiffness * depth + self.bias
        if self.noise_sigma > 0:
            rng = np.random.default_rng([int(self.rng_seed), self.current_step])
            F += rng.normal(0.0, self.noise_sigma)
        return float(min(1.0, max(0.0, F)))

    def advance(self) -> None:
        self.current_step += 1
        self._apply_events()

    def event_at(self, step: int) -> str:
        return "+".join(ev.kind.value for ev in self.events if ev.at_step == step)


def parse_scenario(data: dict) -> dict:
    """Validate a scenario mapping ``{stiffness, noise_sigma, seed, events}``."""
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a JSON object")
    try:
        events = [
            ScenarioEvent(e["kind"], e["at_step"], float(e["magnitude"])) for e in data.get("events", [])
        ]
        out = {
            "stiffness": float(data.get("stiffness", 100.0)),
            "noise_sigma": float(data.get("noise_sigma", 0.0)),
            "seed": int(data.get("seed", 0)),
            "events": events,
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed scenario: {exc}") from exc
    if not out["stiffness"] > 0 or not out["noise_sigma"] >= 0:
        raise ConfigError("scenario needs stiffness > 0 and noise_sigma >= 0")
    return out


def load_scenario(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    return parse_scenario(data)


def env_from_scenario(surface: Surface, scenario: dict, seed: int | None = None) -> ContactEnv:
    return ContactEnv(
        surface=surface,
        stiffness=scenario["stiffness"],
        noise_sigma=scenario["noise_sigma"],
        rng_seed=scenario["seed"] if seed is None else seed,
        events=list(scenario["events"]),
    )
