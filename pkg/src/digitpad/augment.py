"""Physical-symmetry augmentation: reversed and rotated digit transforms.

A digit traced backwards produces the time-reversed wrench with the planar
force direction flipped; empirically the x and z moment components flip too
while fz and my only reverse in time.  A digit traced rotated about the pad
normal produces force and moment vectors rotated by the same angle about z.
Both transforms preserve the label, so applying them to recorded sequences
expands the dataset without new data collection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .signals import TouchSequence, replace_wrench

# Per-channel sign map for a reversed stroke: fx, fy, mx, mz flip; fz, my keep.
_REVERSE_SIGNS = np.array([-1.0, -1.0, 1.0, -1.0, 1.0, -1.0])


@dataclass(frozen=True)
class RotationAngle:
    """Rotation about the end-effector z-axis, normalized to (-180, 180] degrees."""

    theta: float

    def __post_init__(self):
        if not math.isfinite(self.theta):
            raise ValueError("rotation angle must be finite")
        t = math.fmod(self.theta, 360.0)
        if t > 180.0:
            t -= 360.0
        elif t <= -180.0:
            t += 360.0
        object.__setattr__(self, "theta", t)

    @property
    def radians(self) -> float:
        return math.radians(self.theta)


def reverse_digit(seq: TouchSequence) -> TouchSequence:
    """Transform a sequence into its reversed-stroke counterpart.

    Time order is flipped, then fx, fy, mx and mz change sign.  The
    transform is an involution: applying it twice restores the input.
    """
    out = replace_wrench(seq, seq.wrench[::-1] * _REVERSE_SIGNS)
    if seq.origin == "original":
        out.origin = "reversed"
    elif seq.origin == "reversed":
        out.origin = "original"
    return out


def rotate_digit(seq: TouchSequence, angle: RotationAngle) -> TouchSequence:
    """Rotate force and moment vectors about z by ``angle``.

    z-components are unchanged by construction; planar magnitudes are
    preserved.
    """
    c, s = math.cos(angle.radians), math.sin(angle.radians)
    rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    w = seq.wrench
    out = np.empty_like(w)
    out[:, 0:3] = w[:, 0:3] @ rz.T
    out[:, 3:6] = w[:, 3:6] @ rz.T
    rotated = replace_wrench(seq, out)
    if seq.origin == "original":
        rotated.origin = f"rotated({angle.theta:+g})"
    return rotated


def augment_dataset(ds: Dataset, mode: str, angles: tuple = ()) -> Dataset:
    """Expand a dataset with reversed or rotated copies of every sequence.

    ``mode`` is "reversed" (result size 2N) or "rotated" with one copy per
    angle in ``angles`` (result size N * (1 + len(angles))).  Originals come
    first; provenance is recorded per sequence.
    """
    if mode == "reversed":
        extra = [reverse_digit(s) for s in ds.sequences]
    elif mode == "rotated":
        rots = [RotationAngle(a) for a in angles]
        extra = [rotate_digit(s, r) for r in rots for s in ds.sequences]
    else:
        raise ValueError(f"unknown augmentation mode {mode!r}")
    return Dataset(list(ds.sequences) + extra)
