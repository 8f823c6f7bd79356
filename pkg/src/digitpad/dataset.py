"""Dataset ingest/export, stratified splitting and synthetic sequence generation.

Canonical on-disk layout: one CSV per sequence with header
``t,tau1,...,tau7,fx,fy,fz,mx,my,mz`` under ``<root>/<digit>/<id>.csv``;
torque columns may be empty for wrench-only sources.  A ``meta.json`` sidecar
per digit directory carries user ids, poses and provenance.

The synthetic generator plays back single-stroke digit templates through a
simple contact model (pressure profile, sliding friction along the finger
velocity, lever-arm moments about the pad center) so the full pipeline can be
exercised without the recorded data.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import DatasetError
from .signals import (
    CANONICAL_LENGTH,
    BaselineState,
    PoseMeta,
    StreamFrame,
    TorqueSample,
    TouchSequence,
    TouchThresholds,
    WrenchSample,
    compensate,
    resample,
)

CSV_HEADER = ["t", "tau1", "tau2", "tau3", "tau4", "tau5", "tau6", "tau7",
              "fx", "fy", "fz", "mx", "my", "mz"]
PAD_MM = 120.0
PAD_HALF_MM = PAD_MM / 2.0

RngLike = Union[int, np.random.Generator]


def _rng_of(rng: RngLike) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


@dataclass
class Dataset:
    """An immutable-by-convention collection of canonical labeled sequences."""

    sequences: list

    def __len__(self) -> int:
        return len(self.sequences)

    def class_counts(self) -> dict:
        counts = {d: 0 for d in range(10)}
        for seq in self.sequences:
            if seq.label is None:
                raise DatasetError("dataset contains an unlabeled sequence")
            counts[seq.label] += 1
        return counts

    def labels(self) -> np.ndarray:
        return np.array([s.label for s in self.sequences], dtype=int)

    def stacked(self) -> np.ndarray:
        """All sequences as one (N, 100, 6) array; requires canonical lengths."""
        for s in self.sequences:
            if len(s) != CANONICAL_LENGTH:
                raise DatasetError(f"non-canonical sequence of length {len(s)}")
        return np.stack([s.wrench for s in self.sequences])

    def subset(self, indices) -> "Dataset":
        return Dataset([self.sequences[i] for i in indices])


@dataclass(frozen=True)
class SplitConfig:
    train_fraction: float = 0.7
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise DatasetError(f"train_fraction must be in (0, 1), got {self.train_fraction}")


@dataclass(frozen=True)
class StrokeTemplate:
    """Single-stroke drawing path for one digit, in pad-centered mm coordinates."""

    digit: int
    polyline: np.ndarray  # (K, 2), |x|,|y| <= 60
    duration: float = 2.0

    def __post_init__(self):
        pts = np.asarray(self.polyline, dtype=float)
        object.__setattr__(self, "polyline", pts)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise DatasetError(f"template for digit {self.digit} needs >= 2 2-D points")
        if np.abs(pts).max() > PAD_HALF_MM + 1e-9:
            raise DatasetError(f"template for digit {self.digit} leaves the pad bounds")

    def reversed_path(self) -> "StrokeTemplate":
        return replace(self, polyline=self.polyline[::-1].copy())


def load_templates(path: Optional[Path] = None) -> dict:
    """Load the digit stroke templates, from ``path`` or the packaged default."""
    if path is None:
        text = resources.files("digitpad").joinpath("data/stroke_templates.json").read_text()
    else:
        text = Path(path).read_text()
    raw = json.loads(text)
    duration = float(raw.get("duration_s", 2.0))
    return {
        int(d): StrokeTemplate(int(d), np.array(pts, dtype=float), duration)
        for d, pts in raw["digits"].items()
    }


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthParams:
    """Contact-model and jitter parameters for synthetic sequences.

    Pressure plateau draws are truncated to ``pressure_bounds`` so synthetic
    touch forces stay in the 1-2 N range typical of finger strokes.
    """

    pressure_mean: float = 1.5      # N, plateau level
    pressure_std: float = 0.2
    pressure_bounds: tuple = (1.0, 2.0)
    mu_mean: float = 0.3            # sliding friction coefficient
    mu_std: float = 0.03
    ramp_frac: float = 0.12         # fraction of the touch spent ramping up/down
    raw_length_mean: int = 115      # acquisition length before canonicalization
    raw_length_jitter: int = 20
    time_warp: float = 0.12         # smooth speed variation along the stroke
    path_jitter_mm: float = 1.2     # low-frequency positional wobble
    scale_jitter: float = 0.06
    rotation_jitter_deg: float = 2.0
    offset_jitter_mm: float = 3.0
    force_noise: float = 0.02       # N, white noise on force channels
    fz_wobble: float = 0.04         # relative smooth pressure variation
    mz_noise: float = 0.004         # Nm, white noise on mz

    def without_jitter(self) -> "SynthParams":
        return replace(
            self, pressure_std=0.0, mu_std=0.0, raw_length_jitter=0, time_warp=0.0,
            path_jitter_mm=0.0, scale_jitter=0.0, rotation_jitter_deg=0.0,
            offset_jitter_mm=0.0, force_noise=0.0, fz_wobble=0.0, mz_noise=0.0,
        )


def pressure_profile(n: int, level: float, ramp_frac: float) -> np.ndarray:
    """Time-symmetric plateau profile: smoothstep ramps at both ends."""
    u = np.linspace(0.0, 1.0, n)
    rise = np.clip(u / ramp_frac, 0.0, 1.0) if ramp_frac > 0 else np.ones(n)
    fall = np.clip((1.0 - u) / ramp_frac, 0.0, 1.0) if ramp_frac > 0 else np.ones(n)
    edge = np.minimum(rise, fall)
    return level * edge * edge * (3.0 - 2.0 * edge)


def wrench_from_path(points_mm: np.ndarray, fz: np.ndarray, mu: float,
                     rng: Optional[np.random.Generator] = None,
                     force_noise: float = 0.0, mz_noise: float = 0.0):
    """Map a traced path plus a pressure profile to a wrench time series.

    The planar force is sliding friction along the finger velocity; moments
    are the cross product of the contact offset from the pad center (meters)
    with the force vector, plus white noise on mz.  Returns the (N, 6) wrench
    and a trace dict with the contact offsets and mz noise, so the moment
    identity is checkable downstream.
    """
    pts = np.asarray(points_mm, dtype=float)
    n = pts.shape[0]
    vel = np.gradient(pts, axis=0)
    speed = np.linalg.norm(vel, axis=1)
    direction = np.zeros_like(vel)
    ok = speed > 1e-12
    direction[ok] = vel[ok] / speed[ok, None]
    # carry the last good direction through zero-velocity samples
    for i in range(1, n):
        if not ok[i]:
            direction[i] = direction[i - 1]

    wrench = np.zeros((n, 6))
    wrench[:, 2] = fz
    wrench[:, 0] = mu * fz * direction[:, 0]
    wrench[:, 1] = mu * fz * direction[:, 1]
    if rng is not None and force_noise > 0.0:
        wrench[:, 0:3] += rng.normal(0.0, force_noise, size=(n, 3))

    r_m = pts / 1000.0
    noise_mz = rng.normal(0.0, mz_noise, size=n) if (rng is not None and mz_noise > 0.0) else np.zeros(n)
    wrench[:, 3] = r_m[:, 1] * wrench[:, 2]
    wrench[:, 4] = -r_m[:, 0] * wrench[:, 2]
    wrench[:, 5] = r_m[:, 0] * wrench[:, 1] - r_m[:, 1] * wrench[:, 0] + noise_mz
    return wrench, {"r_m": r_m, "mz_noise": noise_mz}


def _sample_polyline(polyline: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Positions at normalized arclengths ``u`` in [0, 1] along the polyline."""
    seg = np.linalg.norm(np.diff(polyline, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]
    if total <= 0.0:
        return np.repeat(polyline[:1], len(u), axis=0)
    target = np.clip(u, 0.0, 1.0) * total
    out = np.empty((len(u), 2))
    out[:, 0] = np.interp(target, s, polyline[:, 0])
    out[:, 1] = np.interp(target, s, polyline[:, 1])
    return out


def _truncated_normal(rng: np.random.Generator, mean: float, std: float, bounds: tuple) -> float:
    if std <= 0.0:
        return float(min(max(mean, bounds[0]), bounds[1]))
    for _ in range(1000):
        v = rng.normal(mean, std)
        if bounds[0] <= v <= bounds[1]:
            return float(v)
    return float(mean)


def synthesize_from_template(template: StrokeTemplate, rng: RngLike,
                             params: SynthParams = SynthParams(),
                             label: Optional[int] = None,
                             meta: Optional[PoseMeta] = None,
                             return_trace: bool = False):
    """Generate one canonical touch sequence by playing back a stroke template."""
    rng = _rng_of(rng)

    n = int(params.raw_length_mean)
    if params.raw_length_jitter > 0:
        n += int(rng.integers(-params.raw_length_jitter, params.raw_length_jitter + 1))
    n = max(n, 30)

    u = np.linspace(0.0, 1.0, n)
    if params.time_warp > 0.0:
        c = rng.uniform(-params.time_warp, params.time_warp, size=2)
        u = u + c[0] * np.sin(np.pi * u) / np.pi + c[1] * np.sin(2.0 * np.pi * u) / (2.0 * np.pi)
    pts = _sample_polyline(template.polyline, u)

    if params.scale_jitter > 0.0:
        pts = pts * (1.0 + rng.uniform(-params.scale_jitter, params.scale_jitter))
    if params.rotation_jitter_deg > 0.0:
        a = math.radians(rng.uniform(-params.rotation_jitter_deg, params.rotation_jitter_deg))
        rot = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
        pts = pts @ rot.T
    if params.offset_jitter_mm > 0.0:
        pts = pts + rng.uniform(-params.offset_jitter_mm, params.offset_jitter_mm, size=2)
    if params.path_jitter_mm > 0.0:
        phases = rng.uniform(0.0, 2.0 * np.pi, size=(2, 3))
        amps = rng.normal(0.0, params.path_jitter_mm, size=(2, 3))
        for axis in range(2):
            wobble = sum(amps[axis, k] * np.sin((k + 1) * np.pi * u + phases[axis, k]) for k in range(3))
            pts[:, axis] += wobble
    pts = np.clip(pts, -PAD_HALF_MM, PAD_HALF_MM)

    level = _truncated_normal(rng, params.pressure_mean, params.pressure_std, params.pressure_bounds)
    fz = pressure_profile(n, level, params.ramp_frac)
    if params.fz_wobble > 0.0:
        phase = rng.uniform(0.0, 2.0 * np.pi)
        fz = fz * (1.0 + params.fz_wobble * np.sin(2.0 * np.pi * u + phase))

    mu = params.mu_mean if params.mu_std <= 0.0 else max(0.05, rng.normal(params.mu_mean, params.mu_std))
    wrench, trace = wrench_from_path(pts, fz, mu, rng=rng,
                                     force_noise=params.force_noise, mz_noise=params.mz_noise)

    seq = TouchSequence(wrench, label=label, meta=meta or PoseMeta())
    canonical = resample(seq, CANONICAL_LENGTH)
    if return_trace:
        trace.update({"points_mm": pts, "wrench_raw": wrench, "mu": mu, "fz_level": level})
        return canonical, trace
    return canonical


def synthesize(digit: int, rng: RngLike, params: SynthParams = SynthParams(),
               meta: Optional[PoseMeta] = None, return_trace: bool = False,
               templates: Optional[dict] = None):
    """Generate one labeled synthetic sequence for ``digit``."""
    templates = templates or load_templates()
    if digit not in templates:
        raise DatasetError(f"no stroke template for digit {digit}")
    return synthesize_from_template(templates[digit], rng, params,
                                    label=digit, meta=meta, return_trace=return_trace)


def make_synthetic_dataset(per_class: int, users: int, rng: RngLike,
                           params: SynthParams = SynthParams()) -> Dataset:
    """Synthesize ``10 * per_class * users`` sequences with per-user variation.

    Each simulated user gets their own pressure level, stroke speed and
    friction draw, mimicking the handwriting variation of a multi-user
    recording session.
    """
    if per_class < 1:
        raise DatasetError("per_class must be >= 1")
    rng = _rng_of(rng)
    templates = load_templates()
    sequences = []
    for u in range(users):
        user_params = replace(
            params,
            pressure_mean=_truncated_normal(rng, params.pressure_mean, 0.12,
                                            (params.pressure_bounds[0] + 0.1, params.pressure_bounds[1] - 0.1)),
            mu_mean=max(0.1, rng.normal(params.mu_mean, 0.04)),
            raw_length_mean=int(rng.normal(params.raw_length_mean, 8)),
        )
        meta = PoseMeta(user_id=f"user{u + 1:02d}")
        for digit in range(10):
            for _ in range(per_class):
                sequences.append(synthesize(digit, rng, user_params, meta=meta, templates=templates))
    return Dataset(sequences)


def stroke_to_frames(points_mm: np.ndarray, t_ms: np.ndarray,
                     params: SynthParams = SynthParams(), fps: float = 50.0) -> list:
    """Convert a recorded pointer path into wrench stream frames.

    The path supplies geometry and timing; the contact model supplies the
    pressure profile and friction mapping deterministically (no jitter), so
    the same stroke always produces the same frames.
    """
    pts = np.asarray(points_mm, dtype=float)
    t = np.asarray(t_ms, dtype=float) / 1000.0
    if pts.shape[0] < 2 or pts.shape[0] != t.shape[0]:
        raise DatasetError("stroke needs >= 2 timed points")
    t = t - t[0]
    duration = t[-1]
    if duration <= 0.0:
        raise DatasetError("stroke timestamps must increase")
    n = max(int(round(duration * fps)) + 1, 10)
    grid = np.linspace(0.0, duration, n)
    resampled = np.empty((n, 2))
    resampled[:, 0] = np.interp(grid, t, pts[:, 0])
    resampled[:, 1] = np.interp(grid, t, pts[:, 1])
    resampled = np.clip(resampled, -PAD_HALF_MM, PAD_HALF_MM)

    fz = pressure_profile(n, params.pressure_mean, params.ramp_frac)
    wrench, _ = wrench_from_path(resampled, fz, params.mu_mean)
    return [StreamFrame(t=float(grid[i]), wrench=WrenchSample.from_array(wrench[i]))
            for i in range(n)]


# ---------------------------------------------------------------------------
# On-disk layout
# ---------------------------------------------------------------------------

def load(root, compensate_on_load: bool = False,
         thresholds: TouchThresholds = TouchThresholds(),
         baseline_window: int = 50,
         column_map: Optional[dict] = None) -> Dataset:
    """Load a dataset from the canonical directory layout.

    ``column_map`` maps canonical column names to the header names actually
    present in the files, for ingesting externally published exports.
    """
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"dataset root {root} is not a directory")
    digit_dirs = sorted(p for p in root.iterdir() if p.is_dir() and not p.name.startswith("."))
    if not digit_dirs:
        raise DatasetError(f"no digit directories under {root}")
    sequences = []
    for d in digit_dirs:
        if not (d.name.isdigit() and len(d.name) == 1):
            raise DatasetError(f"unexpected directory {d.name!r}: digit directories must be named 0..9")
        digit = int(d.name)
        meta_by_file = _read_meta(d)
        for f in sorted(d.glob("*.csv")):
            frames, torques = _read_sequence_csv(f, column_map)
            entry = meta_by_file.get(f.stem, meta_by_file.get("default", {}))
            meta = PoseMeta(
                xyz=tuple(entry.get("xyz", PoseMeta().xyz)),
                euler=tuple(entry.get("euler", PoseMeta().euler)),
                user_id=entry.get("user_id", ""),
            )
            if compensate_on_load:
                frames, torques = _compensate_rows(frames, torques, thresholds, baseline_window)
            if frames.shape[0] < 2:
                raise DatasetError(f"{f}: needs at least 2 frames")
            torque = np.array(torques, dtype=float) if all(t is not None for t in torques) else None
            seq = TouchSequence(frames, label=digit, meta=meta,
                                origin=entry.get("origin", "original"), torque=torque)
            if len(seq) != CANONICAL_LENGTH:
                seq = resample(seq, CANONICAL_LENGTH)
            sequences.append(seq)
    if not sequences:
        raise DatasetError(f"no sequences found under {root}")
    return Dataset(sequences)


def _read_meta(digit_dir: Path) -> dict:
    meta_path = digit_dir / "meta.json"
    if not meta_path.exists():
        return {}
    try:
        raw = json.loads(meta_path.read_text())
    except json.JSONDecodeError as e:
        raise DatasetError(f"{meta_path}: invalid JSON ({e})") from e
    entries = dict(raw.get("files", {}))
    if "default" in raw:
        entries["default"] = raw["default"]
    return entries


def _read_sequence_csv(path: Path, column_map: Optional[dict]):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        header_index = {c.strip(): i for i, c in enumerate(header)}
        # column_map maps canonical names to the header names actually present
        names = {}
        for canon in CSV_HEADER:
            actual = column_map.get(canon, canon) if column_map else canon
            if actual in header_index:
                names[canon] = header_index[actual]
        missing = [c for c in ("fx", "fy", "fz", "mx", "my", "mz") if c not in names]
        if missing:
            raise DatasetError(f"{path}: missing columns {missing}")
        tau_cols = [names.get(f"tau{i}") for i in range(1, 8)]
        has_tau = all(c is not None for c in tau_cols)
        wrench_cols = [names[c] for c in ("fx", "fy", "fz", "mx", "my", "mz")]
        rows, taus = [], []
        for ln, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(row[c]) for c in wrench_cols])
                if has_tau and all(row[c].strip() for c in tau_cols):
                    taus.append([float(row[c]) for c in tau_cols])
                else:
                    taus.append(None)
            except (ValueError, IndexError) as e:
                raise DatasetError(f"{path}:{ln}: malformed row ({e})") from e
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    frames = np.array(rows, dtype=float)
    if not np.all(np.isfinite(frames)):
        raise DatasetError(f"{path}: non-finite values")
    return frames, taus


def read_stream_csv(path, column_map: Optional[dict] = None) -> list:
    """Read a continuous stream recording (canonical CSV) as StreamFrames."""
    path = Path(path)
    frames, torques = _read_sequence_csv(path, column_map)
    times = _read_time_column(path, column_map)
    out = []
    for i in range(frames.shape[0]):
        torque = TorqueSample.from_array(torques[i]) if torques[i] is not None else None
        t = times[i] if times is not None else float(i)
        out.append(StreamFrame(t=t, wrench=WrenchSample.from_array(frames[i]), torque=torque))
    return out


def _read_time_column(path: Path, column_map: Optional[dict]) -> Optional[list]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        name = column_map.get("t", "t") if column_map else "t"
        index = {c.strip(): i for i, c in enumerate(header)}.get(name)
        if index is None:
            return None
        return [float(row[index]) for row in reader if row and any(c.strip() for c in row)]


def _compensate_rows(frames: np.ndarray, torques: list,
                     thresholds: TouchThresholds, window: int):
    state = BaselineState(window)
    out = np.empty_like(frames)
    out_tau = []
    for i in range(frames.shape[0]):
        torque = TorqueSample.from_array(torques[i]) if torques[i] is not None else None
        corrected = compensate(
            StreamFrame(t=float(i), wrench=WrenchSample.from_array(frames[i]), torque=torque),
            state, thresholds)
        out[i] = corrected.wrench.as_array()
        out_tau.append(None if corrected.torque is None else corrected.torque.as_array().tolist())
    return out, out_tau


def export(ds: Dataset, root) -> None:
    """Write a dataset in the canonical layout; floats keep full precision."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    by_digit: dict = {}
    for seq in ds.sequences:
        if seq.label is None:
            raise DatasetError("cannot export an unlabeled sequence")
        by_digit.setdefault(seq.label, []).append(seq)
    for digit, seqs in sorted(by_digit.items()):
        d = root / str(digit)
        d.mkdir(parents=True, exist_ok=True)
        meta_files = {}
        for i, seq in enumerate(seqs):
            stem = f"seq_{i:05d}"
            with open(d / f"{stem}.csv", "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(CSV_HEADER)
                for k, row in enumerate(seq.wrench):
                    tau = [""] * 7 if seq.torque is None else [repr(float(v)) for v in seq.torque[k]]
                    writer.writerow([float(k)] + tau + [repr(float(v)) for v in row])
            meta_files[stem] = {
                "user_id": seq.meta.user_id,
                "xyz": list(seq.meta.xyz),
                "euler": list(seq.meta.euler),
                "origin": seq.origin,
            }
        (d / "meta.json").write_text(json.dumps({"files": meta_files}, indent=1))


def split(ds: Dataset, cfg: SplitConfig = SplitConfig()):
    """Deterministic train/test partition, stratified per class by default."""
    if len(ds) == 0:
        raise DatasetError("cannot split an empty dataset")
    rng = np.random.default_rng(cfg.seed)
    train_idx: list = []
    test_idx: list = []
    if cfg.stratified:
        labels = ds.labels()
        for digit in sorted(set(labels.tolist())):
            cls = np.nonzero(labels == digit)[0]
            if len(cls) < 2:
                raise DatasetError(f"class {digit} has {len(cls)} sample(s); stratified split needs >= 2")
            perm = cls[rng.permutation(len(cls))]
            n_train = int(round(cfg.train_fraction * len(cls)))
            n_train = min(max(n_train, 1), len(cls) - 1)
            train_idx.extend(perm[:n_train].tolist())
            test_idx.extend(perm[n_train:].tolist())
    else:
        perm = rng.permutation(len(ds))
        n_train = int(round(cfg.train_fraction * len(ds)))
        n_train = min(max(n_train, 1), len(ds) - 1)
        train_idx = perm[:n_train].tolist()
        test_idx = perm[n_train:].tolist()
    return ds.subset(sorted(train_idx)), ds.subset(sorted(test_idx))
