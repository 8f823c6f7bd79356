"""Interaction state machine: digit detection, confirmation, motion, safety stop.

``step`` is a pure, total transition function.  Timers never run here: the
machine emits ArmTimer actions and the host delivers Timeout events, so every
transition is deterministic and directly testable.

States and the happy path: Idle --TouchStart--> DetectingDigit
--Digit(confident)--> AwaitingConfirmation --ConfirmTouch--> Motion
--MotionComplete--> Idle.  Touching the arm during Motion stops it; a
double tap inside the window resumes, otherwise the machine falls back to
Idle.  Any (state, event) pair not listed in the table is a no-op.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import ConfigError

CONFIRM_TIMER = "confirm"
DOUBLE_TAP_TIMER = "double_tap"


# --- states ---------------------------------------------------------------

@dataclass(frozen=True)
class Idle:
    pass


@dataclass(frozen=True)
class DetectingDigit:
    pass


@dataclass(frozen=True)
class AwaitingConfirmation:
    label: int


@dataclass(frozen=True)
class Motion:
    task: "Task"


@dataclass(frozen=True)
class Stopped:
    task: "Task"


HfsmState = Union[Idle, DetectingDigit, AwaitingConfirmation, Motion, Stopped]


# --- events ----------------------------------------------------------------

@dataclass(frozen=True)
class TouchStart:
    pass


@dataclass(frozen=True)
class Digit:
    label: int
    confidence: float


@dataclass(frozen=True)
class LowConfidence:
    pass


@dataclass(frozen=True)
class ConfirmTouch:
    pass


@dataclass(frozen=True)
class Timeout:
    timer_id: str


@dataclass(frozen=True)
class MotionComplete:
    pass


@dataclass(frozen=True)
class ArmTouch:
    pass


@dataclass(frozen=True)
class DoubleTap:
    pass


HfsmEvent = Union[TouchStart, Digit, LowConfidence, ConfirmTouch, Timeout,
                  MotionComplete, ArmTouch, DoubleTap]


# --- actions ---------------------------------------------------------------

@dataclass(frozen=True)
class Speak:
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("spoken text must be non-empty")


@dataclass(frozen=True)
class StartMotion:
    task: "Task"


@dataclass(frozen=True)
class StopMotion:
    pass


@dataclass(frozen=True)
class ResumeMotion:
    pass


@dataclass(frozen=True)
class ArmTimer:
    timer_id: str
    duration: float


@dataclass(frozen=True)
class CancelTimer:
    timer_id: str


HfsmAction = Union[Speak, StartMotion, StopMotion, ResumeMotion, ArmTimer, CancelTimer]


# --- configuration ----------------------------------------------------------

@dataclass(frozen=True)
class Task:
    name: str
    motion_id: str


@dataclass(frozen=True)
class TaskRegistry:
    """Digit-to-task assignment; unmapped digits are rejected on recognition."""

    tasks: dict = field(default_factory=dict)

    def __post_init__(self):
        for digit in self.tasks:
            if digit not in range(10):
                raise ConfigError(f"task registry key {digit!r} is not a digit 0..9")

    def get(self, digit: int) -> Optional[Task]:
        return self.tasks.get(digit)

    @classmethod
    def demo(cls) -> "TaskRegistry":
        """The fruit-delivery assignment used throughout the docs and demos."""
        return cls({
            1: Task("apple", "deliver_apple"),
            2: Task("orange", "deliver_orange"),
            3: Task("lemon", "deliver_lemon"),
        })


@dataclass(frozen=True)
class HfsmConfig:
    confidence_threshold: float = 0.80
    confirm_timeout: float = 5.0
    double_tap_window: float = 2.0


# --- spoken feedback ---------------------------------------------------------

def spoken_text(kind: str, label: Optional[int] = None, task: Optional[Task] = None) -> str:
    """Deterministic feedback strings; rendered to audio by the client, if at all."""
    if kind == "recognized":
        return f"Recognized digit {label}: {task.name}. Touch the robot to confirm."
    if kind == "redraw":
        return "I did not catch that. Please draw the digit again."
    if kind == "unknown":
        return f"Digit {label} is not assigned to any task."
    raise ValueError(f"unknown speech context {kind!r}")


# --- the transition function --------------------------------------------------

def step(state: HfsmState, event: HfsmEvent, registry: TaskRegistry,
         cfg: HfsmConfig = HfsmConfig()):
    """Apply one event; returns (new_state, actions).  Total over all pairs."""
    if isinstance(state, Idle) and isinstance(event, TouchStart):
        return DetectingDigit(), []

    if isinstance(state, DetectingDigit):
        if isinstance(event, Digit):
            if event.confidence < cfg.confidence_threshold:
                return Idle(), [Speak(spoken_text("redraw"))]
            task = registry.get(event.label)
            if task is None:
                return Idle(), [Speak(spoken_text("unknown", label=event.label))]
            return AwaitingConfirmation(event.label), [
                Speak(spoken_text("recognized", label=event.label, task=task)),
                ArmTimer(CONFIRM_TIMER, cfg.confirm_timeout),
            ]
        if isinstance(event, LowConfidence):
            return Idle(), [Speak(spoken_text("redraw"))]
        if isinstance(event, Timeout):
            # abort a detection that never finishes; keeps every state a
            # bounded number of timeouts away from Idle
            return Idle(), []

    if isinstance(state, AwaitingConfirmation):
        if isinstance(event, ConfirmTouch):
            task = registry.get(state.label)
            if task is None:
                return Idle(), [Speak(spoken_text("unknown", label=state.label))]
            return Motion(task), [StartMotion(task)]
        if isinstance(event, Timeout) and event.timer_id == CONFIRM_TIMER:
            return Idle(), []

    if isinstance(state, Motion):
        if isinstance(event, ArmTouch):
            return Stopped(state.task), [StopMotion(), ArmTimer(DOUBLE_TAP_TIMER, cfg.double_tap_window)]
        if isinstance(event, MotionComplete):
            return Idle(), []

    if isinstance(state, Stopped):
        if isinstance(event, DoubleTap):
            return Motion(state.task), [ResumeMotion()]
        if isinstance(event, Timeout) and event.timer_id == DOUBLE_TAP_TIMER:
            return Idle(), []

    return state, []


def run_scenario(initial: HfsmState, events, registry: TaskRegistry,
                 cfg: HfsmConfig = HfsmConfig()) -> list:
    """Fold ``step`` over events; trace starts with (initial, []) and grows one
    (state, actions) entry per event."""
    trace = [(initial, [])]
    state = initial
    for event in events:
        state, actions = step(state, event, registry, cfg)
        trace.append((state, actions))
    return trace


def trace_to_jsonl(trace) -> str:
    """One JSON object per trace entry, for conformance dumps."""
    import json

    lines = []
    for state, actions in trace:
        lines.append(json.dumps({
            "state": state_name(state),
            "actions": [action_name(a) for a in actions],
        }))
    return "\n".join(lines)


def state_name(state: HfsmState) -> str:
    if isinstance(state, AwaitingConfirmation):
        return f"AwaitingConfirmation({state.label})"
    if isinstance(state, Motion):
        return f"Motion({state.task.name})"
    if isinstance(state, Stopped):
        return f"Stopped({state.task.name})"
    return type(state).__name__


def action_name(action: HfsmAction) -> str:
    if isinstance(action, Speak):
        return f"Speak({action.text})"
    if isinstance(action, StartMotion):
        return f"StartMotion({action.task.motion_id})"
    if isinstance(action, ArmTimer):
        return f"ArmTimer({action.timer_id}, {action.duration})"
    if isinstance(action, CancelTimer):
        return f"CancelTimer({action.timer_id})"
    return type(action).__name__
