"""One client session: frames or strokes in, recognition and task events out.

The engine is synchronous and transport-free.  ``handle_text``/``handle``
take one client message and return the server messages it produced, each
stamped with a per-session sequence number.  Timers requested by the task
layer are exposed through :meth:`Session.pop_timer_requests`; the transport
schedules them and calls :meth:`Session.fire_timer` when they elapse, so the
same engine runs under asyncio, in tests and in batch replays.

Client message types: frame, stroke, confirm_touch, arm_touch, double_tap,
reset.  Server message types: touch_started, prediction, hfsm_state, action,
error.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import bilstm, hfsm
from .config import GlobalConfig
from .dataset import stroke_to_frames
from .errors import DigitpadError
from .online import RecognitionEvent, StreamClassifier
from .signals import StreamFrame, TorqueSample, WrenchSample

CLIENT_TYPES = ("frame", "stroke", "confirm_touch", "arm_touch", "double_tap", "reset")


@dataclass(frozen=True)
class TimerRequest:
    timer_id: str
    generation: int
    duration: float


class Session:
    """Owns one stream classifier and one task state machine."""

    def __init__(self, model: bilstm.BiLstmClassifier, config: GlobalConfig):
        self.config = config
        self.stream = StreamClassifier(
            model,
            thresholds=config.thresholds,
            baseline_window=config.baseline_window,
            capture_window=config.capture_window,
            confidence_threshold=config.confidence_threshold,
        )
        self.state: hfsm.HfsmState = hfsm.Idle()
        self._seq = 0
        self._stream_t = 0.0            # keeps stroke frames on one time axis
        self._timer_generation = 0
        self._armed: dict = {}          # timer_id -> generation
        self._timer_requests: list = []

    # -- transport surface ---------------------------------------------------

    def handle_text(self, text: str) -> list:
        """Parse one JSON line and handle it; malformed input yields an error
        message and leaves the session usable."""
        try:
            msg = json.loads(text)
        except json.JSONDecodeError as e:
            return [self._error(f"invalid JSON: {e}")]
        return self.handle(msg)

    def handle(self, msg) -> list:
        if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
            return [self._error("message must be an object with a string 'type'")]
        kind = msg["type"]
        if kind not in CLIENT_TYPES:
            return [self._error(f"unknown message type {kind!r}")]
        try:
            if kind == "frame":
                return self._on_frame(msg)
            if kind == "stroke":
                return self._on_stroke(msg)
            if kind == "reset":
                return self._on_reset()
            event = {"confirm_touch": hfsm.ConfirmTouch(),
                     "arm_touch": hfsm.ArmTouch(),
                     "double_tap": hfsm.DoubleTap()}[kind]
            return self._apply_hfsm_event(event)
        except DigitpadError as e:
            return [self._error(str(e))]
        except (KeyError, TypeError, ValueError, IndexError) as e:
            return [self._error(f"malformed {kind} message: {e}")]

    def pop_timer_requests(self) -> list:
        out = self._timer_requests
        self._timer_requests = []
        return out

    def fire_timer(self, timer_id: str, generation: int) -> list:
        """Deliver a scheduled timeout; stale generations are ignored."""
        if self._armed.get(timer_id) != generation:
            return []
        del self._armed[timer_id]
        return self._apply_hfsm_event(hfsm.Timeout(timer_id))

    # -- client messages -----------------------------------------------------

    def _on_frame(self, msg) -> list:
        frame = _parse_frame(msg)
        self._stream_t = max(self._stream_t, frame.t)
        return self._push_frame(frame)

    def _on_stroke(self, msg) -> list:
        points = msg["points"]
        if not isinstance(points, list) or len(points) < 2:
            raise ValueError("stroke needs at least 2 points")
        xy = np.array([[float(p["x"]), float(p["y"])] for p in points])
        t_ms = np.array([float(p["t_ms"]) for p in points])
        if not (np.all(np.isfinite(xy)) and np.all(np.isfinite(t_ms))):
            raise ValueError("stroke contains non-finite values")
        frames = stroke_to_frames(xy, t_ms, self.config.synth, fps=self.config.stroke_fps)

        out = []
        dt = 1.0 / self.config.stroke_fps
        base = self._stream_t + dt
        for frame in frames:
            out.extend(self._push_frame(StreamFrame(t=base + frame.t, wrench=frame.wrench)))
        # the capture window is longer than any stroke: pad with silence until
        # the classifier closes the capture it started
        t = base + frames[-1].t
        silence = WrenchSample(0, 0, 0, 0, 0, 0)
        for _ in range(self.config.capture_window):
            if self.stream.phase != "capturing":
                break
            t += dt
            out.extend(self._push_frame(StreamFrame(t=t, wrench=silence)))
        self._stream_t = t
        return out

    def _on_reset(self) -> list:
        self.stream.reset()
        self._invalidate_timers()
        self.state = hfsm.Idle()
        return [self._out({"type": "hfsm_state", "state": hfsm.state_name(self.state)})]

    # -- internals -------------------------------------------------------------

    def _push_frame(self, frame: StreamFrame) -> list:
        event = self.stream.push_frame(frame)
        if event is None:
            return []
        return self._on_recognition(event)

    def _on_recognition(self, event: RecognitionEvent) -> list:
        if event.kind == "touch_started":
            out = [self._out({"type": "touch_started", "onset": event.onset})]
            return out + self._apply_hfsm_event(hfsm.TouchStart())
        pred = event.prediction
        out = [self._out({
            "type": "prediction",
            "probabilities": [float(p) for p in pred.probabilities],
            "label": pred.label,
            "confidence": pred.confidence,
            "onset": event.onset,
            "confident": event.kind == "digit",
            "degenerate": event.degenerate,
        })]
        if event.kind == "digit":
            return out + self._apply_hfsm_event(hfsm.Digit(pred.label, pred.confidence))
        return out + self._apply_hfsm_event(hfsm.LowConfidence())

    def _apply_hfsm_event(self, event: hfsm.HfsmEvent) -> list:
        new_state, actions = hfsm.step(self.state, event, self.config.task_registry,
                                       self.config.hfsm_config())
        out = []
        changed = new_state != self.state
        if changed and type(new_state) is not type(self.state):
            # timers belong to the state being left
            self._invalidate_timers()
        self.state = new_state
        for action in actions:
            out.extend(self._apply_action(action))
        if changed:
            out.append(self._out({"type": "hfsm_state", "state": hfsm.state_name(new_state)}))
        return out

    def _apply_action(self, action: hfsm.HfsmAction) -> list:
        if isinstance(action, hfsm.Speak):
            return [self._out({"type": "action", "action": "speak", "text": action.text})]
        if isinstance(action, hfsm.StartMotion):
            return [self._out({"type": "action", "action": "start_motion",
                               "task": {"name": action.task.name, "motion_id": action.task.motion_id}})]
        if isinstance(action, hfsm.StopMotion):
            return [self._out({"type": "action", "action": "stop_motion"})]
        if isinstance(action, hfsm.ResumeMotion):
            return [self._out({"type": "action", "action": "resume_motion"})]
        if isinstance(action, hfsm.ArmTimer):
            self._timer_generation += 1
            self._armed[action.timer_id] = self._timer_generation
            self._timer_requests.append(
                TimerRequest(action.timer_id, self._timer_generation, action.duration))
            return []
        if isinstance(action, hfsm.CancelTimer):
            self._armed.pop(action.timer_id, None)
            return []
        raise AssertionError(f"unhandled action {action!r}")

    def _invalidate_timers(self) -> None:
        self._armed.clear()

    def _out(self, msg: dict) -> dict:
        self._seq += 1
        msg["seq"] = self._seq
        return msg

    def _error(self, text: str) -> dict:
        return self._out({"type": "error", "message": text})


def _parse_frame(msg) -> StreamFrame:
    wrench = msg["wrench"]
    if not isinstance(wrench, (list, tuple)) or len(wrench) != 6:
        raise ValueError("wrench must be a list of 6 numbers")
    values = [float(v) for v in wrench]
    if not all(math.isfinite(v) for v in values):
        raise ValueError("wrench contains non-finite values")
    torque = None
    if msg.get("torque") is not None:
        tau = msg["torque"]
        if not isinstance(tau, (list, tuple)) or len(tau) != 7:
            raise ValueError("torque must be a list of 7 numbers")
        torque = TorqueSample.from_array([float(v) for v in tau])
    return StreamFrame(t=float(msg.get("t", 0.0)),
                       wrench=WrenchSample(*values), torque=torque)


def event_to_message(event: RecognitionEvent) -> dict:
    """Wire form of a recognition event, matching the session protocol."""
    if event.kind == "touch_started":
        return {"type": "touch_started", "onset": event.onset}
    pred = event.prediction
    return {
        "type": "prediction",
        "probabilities": [float(p) for p in pred.probabilities],
        "label": pred.label,
        "confidence": pred.confidence,
        "onset": event.onset,
        "confident": event.kind == "digit",
        "degenerate": event.degenerate,
    }
