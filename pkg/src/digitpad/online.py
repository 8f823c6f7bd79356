"""Streaming digit recognition: onset detection, windowed capture, classify.

A :class:`StreamClassifier` consumes one live stream frame at a time.  It
keeps its own baseline estimate, waits in the idle phase until a frame
crosses the touch thresholds, then captures a fixed window of frames.  Once
the window is full the trailing silence is trimmed, the touch is resampled
to the canonical length and classified; the resulting event is gated by a
confidence threshold.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import bilstm
from .errors import EmptyTouchError, InvalidSequenceError
from .signals import (
    BaselineState,
    StreamFrame,
    TouchSequence,
    TouchThresholds,
    compensate,
    is_touch,
    resample,
    trim_trailing_silence,
)


@dataclass(frozen=True)
class RecognitionEvent:
    """Emitted by the stream classifier: touch onset or a finished capture.

    ``kind`` is "touch_started", "digit" (confidence at or above threshold)
    or "low_confidence".  ``onset`` is the stream frame index where the touch
    began.  ``degenerate`` marks captures that trimmed to nothing and carry a
    uniform placeholder prediction.
    """

    kind: str
    onset: int
    prediction: Optional[bilstm.Prediction] = None
    degenerate: bool = False


class StreamClassifier:
    """Per-session streaming recognizer; feed frames in time order."""

    def __init__(self, model: bilstm.BiLstmClassifier,
                 thresholds: TouchThresholds = TouchThresholds(),
                 baseline_window: int = 50,
                 capture_window: int = 300,
                 confidence_threshold: float = 0.80):
        self.model = model
        self.thresholds = thresholds
        self.capture_window = capture_window
        self.confidence_threshold = confidence_threshold
        self.baseline = BaselineState(baseline_window)
        self.phase = "idle"
        self._buffer: list = []
        self._onset = -1
        self._frame_index = -1

    def reset(self) -> None:
        """Back to idle with a fresh baseline; the frame counter keeps running."""
        self.baseline = BaselineState(self.baseline.window)
        self.phase = "idle"
        self._buffer = []
        self._onset = -1

    def push_frame(self, frame: StreamFrame) -> Optional[RecognitionEvent]:
        """Process one raw frame; returns an event on touch onset or capture end."""
        self._frame_index += 1
        corrected = compensate(frame, self.baseline, self.thresholds)
        if self.phase == "idle":
            if is_touch(corrected, self.thresholds):
                self.phase = "capturing"
                self._onset = self._frame_index
                self._buffer = [corrected.wrench.as_array()]
                return RecognitionEvent(kind="touch_started", onset=self._onset)
            return None

        self._buffer.append(corrected.wrench.as_array())
        if len(self._buffer) < self.capture_window:
            return None
        event = self._classify_capture()
        self.phase = "idle"
        self._buffer = []
        return event

    def _classify_capture(self) -> RecognitionEvent:
        captured = TouchSequence(np.array(self._buffer))
        try:
            touch = trim_trailing_silence(captured, self.thresholds)
            canonical = resample(touch)
        except (EmptyTouchError, InvalidSequenceError):
            # nothing usable survived the window: let the task layer ask for
            # a redraw instead of failing the stream
            return RecognitionEvent(kind="low_confidence", onset=self._onset,
                                    prediction=bilstm.Prediction.uniform(self.model.classes),
                                    degenerate=True)
        pred = bilstm.forward(self.model, canonical)
        kind = "digit" if pred.confidence >= self.confidence_threshold else "low_confidence"
        return RecognitionEvent(kind=kind, onset=self._onset, prediction=pred)


def replay(sc: StreamClassifier, frames) -> list:
    """Push every frame through ``sc`` and collect the emitted events."""
    events = []
    for frame in frames:
        event = sc.push_frame(frame)
        if event is not None:
            events.append(event)
    return events
