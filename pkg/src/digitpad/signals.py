"""Wrench/torque stream types, baseline compensation, segmentation and resampling.

A "wrench" is the 6-vector of end-effector forces (fx, fy, fz) in newtons and
moments (mx, my, mz) in newton-meters.  Continuous streams of wrench (and
optionally joint torque) frames are baseline-corrected with a sliding window,
cut into individual touches by thresholding with falling-edge debounce, and
resampled to a fixed canonical length so every downstream consumer sees the
same shape.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional

import numpy as np

from .errors import DataQualityError, EmptyTouchError, InvalidSequenceError

# Column order used everywhere a wrench is stored as a flat array.
WRENCH_CHANNELS = ("fx", "fy", "fz", "mx", "my", "mz")
CANONICAL_LENGTH = 100


@dataclass(frozen=True)
class WrenchSample:
    """One end-effector force/moment reading (N and Nm)."""

    fx: float
    fy: float
    fz: float
    mx: float
    my: float
    mz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.fx, self.fy, self.fz, self.mx, self.my, self.mz], dtype=float)

    @classmethod
    def from_array(cls, a) -> "WrenchSample":
        fx, fy, fz, mx, my, mz = (float(v) for v in a)
        return cls(fx, fy, fz, mx, my, mz)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_array())))


@dataclass(frozen=True)
class TorqueSample:
    """External torques of the 7 robot joints (axis 1..7, Nm)."""

    tau: tuple

    def __post_init__(self):
        if len(self.tau) != 7:
            raise DataQualityError(f"torque sample needs 7 components, got {len(self.tau)}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.tau, dtype=float)

    @classmethod
    def from_array(cls, a) -> "TorqueSample":
        return cls(tuple(float(v) for v in a))

    @property
    def tau2(self) -> float:
        """Torque on joint 2, the axis most sensitive to touchpad contact."""
        return float(self.tau[1])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.as_array())))


@dataclass(frozen=True)
class StreamFrame:
    """One time-stamped reading of a live stream.

    Timestamps must strictly increase within a stream; torque is optional
    because wrench-only sources exist.
    """

    t: float
    wrench: WrenchSample
    torque: Optional[TorqueSample] = None


@dataclass(frozen=True)
class PoseMeta:
    """Robot pose and user identity attached to a recorded sequence."""

    xyz: tuple = (450.0, 0.0, 300.0)        # Cartesian position, mm
    euler: tuple = (120.0, 0.0, -180.0)     # Z-Y-X angles, degrees
    user_id: str = ""


@dataclass
class TouchSequence:
    """One segmented digit drawing.

    ``wrench`` is a (L, 6) float array with columns fx, fy, fz, mx, my, mz.
    L must be >= 2 before resampling and equals 100 once canonicalized.
    ``torque`` optionally carries the (L, 7) joint torques for sources that
    record them.  ``origin`` records provenance ("original", "reversed",
    "rotated(+90)", ...).
    """

    wrench: np.ndarray
    label: Optional[int] = None
    meta: PoseMeta = field(default_factory=PoseMeta)
    origin: str = "original"
    onset: Optional[int] = None  # start index in the source stream, if segmented
    torque: Optional[np.ndarray] = None

    def __post_init__(self):
        self.wrench = np.asarray(self.wrench, dtype=float)
        if self.wrench.ndim != 2 or self.wrench.shape[1] != 6:
            raise InvalidSequenceError(f"wrench must be (L, 6), got {self.wrench.shape}")
        if self.torque is not None:
            self.torque = np.asarray(self.torque, dtype=float)
            if self.torque.shape != (self.wrench.shape[0], 7):
                raise InvalidSequenceError(
                    f"torque must be (L, 7) matching wrench, got {self.torque.shape}")
        if self.label is not None and self.label not in range(10):
            raise InvalidSequenceError(f"label must be a digit 0..9, got {self.label}")

    def __len__(self) -> int:
        return self.wrench.shape[0]

    def frames(self) -> list:
        return [WrenchSample.from_array(row) for row in self.wrench]

    def is_canonical(self) -> bool:
        return len(self) == CANONICAL_LENGTH and bool(np.all(np.isfinite(self.wrench)))


@dataclass(frozen=True)
class TouchThresholds:
    """Contact decision thresholds applied to baseline-corrected frames.

    Defaults sit well below the 1-2 N forces of a typical finger stroke.
    """

    fz: float = 0.5     # N, on |fz|
    tau2: float = 0.2   # Nm, on |joint-2 torque|

    def wrench_exceeds(self, fz_value: float) -> bool:
        return abs(fz_value) > self.fz

    def torque_exceeds(self, tau2_value: float) -> bool:
        return abs(tau2_value) > self.tau2


@dataclass(frozen=True)
class SegmentConfig:
    """Segmentation tuning: falling-edge debounce and minimum touch length."""

    debounce: int = 5      # consecutive below-threshold frames ending a touch
    min_length: int = 20   # shorter detections are discarded as spurious


class BaselineState:
    """Sliding-window offset estimate for one stream session.

    Keeps the last ``window`` raw non-touch frames; the baseline is their
    arithmetic mean.  Touching frames never enter the window so the signal
    itself is not subtracted away.
    """

    def __init__(self, window: int = 50):
        if window < 1:
            raise ValueError("baseline window must be >= 1")
        self.window = window
        self._wrench_buf: deque = deque(maxlen=window)
        self._torque_buf: deque = deque(maxlen=window)

    @property
    def wrench_baseline(self) -> np.ndarray:
        if not self._wrench_buf:
            return np.zeros(6)
        return np.mean(self._wrench_buf, axis=0)

    @property
    def torque_baseline(self) -> np.ndarray:
        if not self._torque_buf:
            return np.zeros(7)
        return np.mean(self._torque_buf, axis=0)

    def push(self, wrench: np.ndarray, torque: Optional[np.ndarray] = None) -> None:
        self._wrench_buf.append(np.asarray(wrench, dtype=float))
        if torque is not None:
            self._torque_buf.append(np.asarray(torque, dtype=float))


def is_touch(frame: StreamFrame, thresholds: TouchThresholds) -> bool:
    """Contact predicate on a baseline-corrected frame.

    True iff |tau2| exceeds the torque threshold (when torque is present)
    or |fz| exceeds the force threshold.
    """
    if frame.torque is not None and thresholds.torque_exceeds(frame.torque.tau2):
        return True
    return thresholds.wrench_exceeds(frame.wrench.fz)


def compensate(frame: StreamFrame, state: BaselineState, thresholds: TouchThresholds) -> StreamFrame:
    """Subtract the sliding-window baseline from one raw frame.

    Frames judged non-touch after subtraction feed the window; touching
    frames leave the baseline frozen.  Raises :class:`DataQualityError`
    on non-finite input.
    """
    if not frame.wrench.is_finite() or (frame.torque is not None and not frame.torque.is_finite()):
        raise DataQualityError(f"non-finite values in frame at t={frame.t}")

    raw_w = frame.wrench.as_array()
    corrected_w = raw_w - state.wrench_baseline
    if frame.torque is not None:
        raw_tau = frame.torque.as_array()
        corrected_tau = TorqueSample.from_array(raw_tau - state.torque_baseline)
    else:
        raw_tau = None
        corrected_tau = None
    corrected = replace(frame, wrench=WrenchSample.from_array(corrected_w), torque=corrected_tau)

    if not is_touch(corrected, thresholds):
        state.push(raw_w, raw_tau)
    return corrected


def segment(
    stream: Iterable[StreamFrame],
    thresholds: TouchThresholds,
    config: SegmentConfig = SegmentConfig(),
) -> list:
    """Cut a compensated, time-ordered stream into individual touches.

    A touch starts at the first frame where :func:`is_touch` holds and ends
    once ``config.debounce`` consecutive frames fall below threshold; the
    trailing silent run is not part of the returned sequence.  Touches
    shorter than ``config.min_length`` frames are dropped.
    """
    sequences = []
    touch_rows: list = []
    torque_rows: list = []
    start_idx = -1
    silent_run = 0

    def close():
        n_keep = len(touch_rows) - silent_run if silent_run else len(touch_rows)
        if n_keep >= config.min_length:
            torque = None
            if all(r is not None for r in torque_rows[:n_keep]):
                torque = np.array(torque_rows[:n_keep])
            sequences.append(TouchSequence(np.array(touch_rows[:n_keep]),
                                           onset=start_idx, torque=torque))

    for idx, frame in enumerate(stream):
        touching = is_touch(frame, thresholds)
        if start_idx < 0:
            if touching:
                start_idx = idx
                touch_rows = [frame.wrench.as_array()]
                torque_rows = [None if frame.torque is None else frame.torque.as_array()]
                silent_run = 0
        else:
            touch_rows.append(frame.wrench.as_array())
            torque_rows.append(None if frame.torque is None else frame.torque.as_array())
            silent_run = 0 if touching else silent_run + 1
            if silent_run >= config.debounce:
                close()
                start_idx = -1
                touch_rows = []
                torque_rows = []
                silent_run = 0
    if start_idx >= 0:
        close()
    return sequences


def resample(seq: TouchSequence, target: int = CANONICAL_LENGTH) -> TouchSequence:
    """Resample every channel to ``target`` frames by linear interpolation.

    The sequence is parameterized uniformly by frame index, so the first and
    last samples are preserved exactly and a sequence already at the target
    length passes through bit-identical.
    """
    n = len(seq)
    if n < 2:
        raise InvalidSequenceError(f"need at least 2 frames to resample, got {n}")
    if n == target:
        return replace_wrench(seq, seq.wrench.copy(),
                              None if seq.torque is None else seq.torque.copy())
    x_new = np.linspace(0.0, n - 1, target)
    x_old = np.arange(n, dtype=float)
    out = np.empty((target, 6))
    for ch in range(6):
        out[:, ch] = np.interp(x_new, x_old, seq.wrench[:, ch])
    torque = None
    if seq.torque is not None:
        torque = np.empty((target, 7))
        for ch in range(7):
            torque[:, ch] = np.interp(x_new, x_old, seq.torque[:, ch])
    return replace_wrench(seq, out, torque)


def trim_trailing_silence(seq: TouchSequence, thresholds: TouchThresholds) -> TouchSequence:
    """Drop the maximal trailing run of below-threshold frames.

    Raises :class:`EmptyTouchError` when no frame exceeds the force threshold.
    """
    above = np.abs(seq.wrench[:, 2]) > thresholds.fz
    if seq.torque is not None:
        above |= np.abs(seq.torque[:, 1]) > thresholds.tau2
    if not above.any():
        raise EmptyTouchError("sequence is entirely below the touch threshold")
    last = int(np.nonzero(above)[0][-1])
    torque = None if seq.torque is None else seq.torque[: last + 1].copy()
    return replace_wrench(seq, seq.wrench[: last + 1].copy(), torque)


def replace_wrench(seq: TouchSequence, wrench: np.ndarray,
                   torque: Optional[np.ndarray] = None) -> TouchSequence:
    """Copy of ``seq`` with new frame data but unchanged metadata."""
    return TouchSequence(wrench, label=seq.label, meta=seq.meta, origin=seq.origin,
                         onset=seq.onset, torque=torque)
