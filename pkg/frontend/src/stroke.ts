/**
 * Pointer capture on the virtual pad: turns raw pointer samples into either
 * one stroke message or one double-tap, never both.  Multi-touch and
 * too-short contacts are rejected with a visible hint instead of a message.
 */

import { StrokeMessage, StrokeSample } from "./protocol.js";

export interface StrokeRecorderOptions {
  minDurationMs?: number;   // strokes shorter than this are discarded
  minSamples?: number;
  tapMaxMs?: number;        // at most this long to count as a tap
  tapMaxMm?: number;        // and at most this much travel
  doubleTapGapMs?: number;  // max pause between two taps
  minSampleGapMs?: number;  // dedupe: drop faster repeats unless they moved
  minTravelMm?: number;
  canDoubleTap?: () => boolean;
  onStroke: (msg: StrokeMessage) => void;
  onDoubleTap: () => void;
  onHint?: (text: string) => void;
}

interface ActiveStroke {
  pointerId: number;
  t0: number;
  points: StrokeSample[];
}

export class StrokeRecorder {
  private active: ActiveStroke | null = null;
  private lastTapEndedAt: number | null = null;
  private readonly o: Required<Omit<StrokeRecorderOptions, "onStroke" | "onDoubleTap" | "onHint" | "canDoubleTap">>;
  private readonly onStroke: (msg: StrokeMessage) => void;
  private readonly onDoubleTap: () => void;
  private readonly onHint: (text: string) => void;
  private readonly canDoubleTap: () => boolean;

  constructor(opts: StrokeRecorderOptions) {
    this.o = {
      minDurationMs: opts.minDurationMs ?? 100,
      minSamples: opts.minSamples ?? 5,
      tapMaxMs: opts.tapMaxMs ?? 250,
      tapMaxMm: opts.tapMaxMm ?? 4,
      doubleTapGapMs: opts.doubleTapGapMs ?? 450,
      minSampleGapMs: opts.minSampleGapMs ?? 8,
      minTravelMm: opts.minTravelMm ?? 0.25,
    };
    this.onStroke = opts.onStroke;
    this.onDoubleTap = opts.onDoubleTap;
    this.onHint = opts.onHint ?? (() => undefined);
    this.canDoubleTap = opts.canDoubleTap ?? (() => true);
  }

  pointerDown(xMm: number, yMm: number, tMs: number, pointerId: number): void {
    if (this.active !== null && this.active.pointerId !== pointerId) {
      // a second finger invalidates the drawing in progress
      this.active = null;
      this.lastTapEndedAt = null;
      this.onHint("Use a single finger on the pad.");
      return;
    }
    this.active = { pointerId, t0: tMs, points: [{ x: xMm, y: yMm, t_ms: 0 }] };
  }

  pointerMove(xMm: number, yMm: number, tMs: number, pointerId: number): void {
    const stroke = this.active;
    if (stroke === null || stroke.pointerId !== pointerId) return;
    const t = tMs - stroke.t0;
    const last = stroke.points[stroke.points.length - 1];
    const moved = Math.hypot(xMm - last.x, yMm - last.y);
    if (t - last.t_ms < this.o.minSampleGapMs && moved < this.o.minTravelMm) return;
    stroke.points.push({ x: xMm, y: yMm, t_ms: t });
  }

  pointerUp(xMm: number, yMm: number, tMs: number, pointerId: number): void {
    const stroke = this.active;
    if (stroke === null || stroke.pointerId !== pointerId) return;
    this.active = null;
    const t = tMs - stroke.t0;
    const last = stroke.points[stroke.points.length - 1];
    if (t > last.t_ms) stroke.points.push({ x: xMm, y: yMm, t_ms: t });

    if (this.isTap(stroke)) {
      this.handleTap(tMs);
      return;
    }
    this.lastTapEndedAt = null;
    if (t < this.o.minDurationMs || stroke.points.length < this.o.minSamples) {
      this.onHint("Stroke too short; draw the full digit in one motion.");
      return;
    }
    this.onStroke({ type: "stroke", points: stroke.points });
  }

  pointerCancel(pointerId: number): void {
    if (this.active !== null && this.active.pointerId === pointerId) {
      this.active = null;
    }
  }

  private isTap(stroke: ActiveStroke): boolean {
    const duration = stroke.points[stroke.points.length - 1].t_ms;
    if (duration > this.o.tapMaxMs) return false;
    const first = stroke.points[0];
    return stroke.points.every(
      (p) => Math.hypot(p.x - first.x, p.y - first.y) <= this.o.tapMaxMm,
    );
  }

  private handleTap(endedAt: number): void {
    if (this.lastTapEndedAt !== null && endedAt - this.lastTapEndedAt <= this.o.doubleTapGapMs) {
      this.lastTapEndedAt = null;
      if (this.canDoubleTap()) {
        this.onDoubleTap();
      } else {
        this.onHint("Double-tap resumes motion only while the robot is stopped.");
      }
      return;
    }
    this.lastTapEndedAt = endedAt;
  }
}

/** Canvas pixel -> pad mm (origin at pad center, +y up). */
export function pxToMm(px: number, py: number, canvasPx: number, padMm = 120): { x: number; y: number } {
  const scale = padMm / canvasPx;
  return { x: px * scale - padMm / 2, y: padMm / 2 - py * scale };
}

/** Pad mm -> canvas pixel. */
export function mmToPx(xMm: number, yMm: number, canvasPx: number, padMm = 120): { x: number; y: number } {
  const scale = canvasPx / padMm;
  return { x: (xMm + padMm / 2) * scale, y: (padMm / 2 - yMm) * scale };
}

export type PadOrientation = "standard" | "rot+90" | "rot-90" | "reversed";

/** Transform template points for the guide overlay (never the user's stroke). */
export function orientTemplate(points: Array<[number, number]>, orientation: PadOrientation): Array<[number, number]> {
  const nz = (v: number): number => (v === 0 ? 0 : v); // avoid -0 in output
  if (orientation === "rot+90") return points.map(([x, y]) => [nz(-y), nz(x)]);
  if (orientation === "rot-90") return points.map(([x, y]) => [nz(y), nz(-x)]);
  if (orientation === "reversed") return [...points].reverse();
  return points;
}
