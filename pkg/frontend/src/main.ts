/**
 * Wires the virtual touchpad together: canvas drawing, template guides,
 * gesture buttons, live probability bars and the session socket.
 */

import { ServerMessage } from "./protocol.js";
import { SessionSocket } from "./socket.js";
import { mmToPx, orientTemplate, PadOrientation, pxToMm, StrokeRecorder } from "./stroke.js";
import {
  renderBanner,
  renderBars,
  renderStateBadge,
  renderTaskLegend,
  setMotionIndicator,
  Transcript,
} from "./view.js";

const CANVAS_PX = 480;

interface Templates {
  digits: Record<string, Array<[number, number]>>;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function boot(): void {
  const canvas = el<HTMLCanvasElement>("pad");
  canvas.width = CANVAS_PX;
  canvas.height = CANVAS_PX;
  const ctx = canvas.getContext("2d")!;
  const barsRoot = el<HTMLElement>("bars");
  const badge = el<HTMLElement>("state-badge");
  const banner = el<HTMLElement>("banner");
  const motion = el<HTMLElement>("motion-indicator");
  const legend = el<HTMLElement>("legend");
  const transcript = new Transcript(el<HTMLElement>("transcript"), true);

  let hfsmState = "Idle";
  let templates: Templates | null = null;
  let guideDigit = "3";
  let orientation: PadOrientation = "standard";
  let trail: Array<{ x: number; y: number }> = [];

  const socket = new SessionSocket({
    url: `ws://${location.host}/session`,
    onMessage: handleServer,
    onStateChange: (state) => renderBanner(banner, state),
    onParseError: () => transcript.hint("Received a malformed server message."),
  });

  const recorder = new StrokeRecorder({
    canDoubleTap: () => hfsmState.startsWith("Stopped"),
    onStroke: (msg) => {
      if (!socket.send(msg)) transcript.hint("Not connected; stroke dropped.");
    },
    onDoubleTap: () => socket.send({ type: "double_tap" }),
    onHint: (text) => transcript.hint(text),
  });

  function handleServer(msg: ServerMessage): void {
    switch (msg.type) {
      case "touch_started":
        break;
      case "prediction":
        renderBars(barsRoot, msg);
        if (!msg.confident) transcript.hint("Low confidence — please redraw.");
        break;
      case "hfsm_state":
        hfsmState = msg.state;
        renderStateBadge(badge, msg.state);
        if (msg.state === "Idle") setMotionIndicator(motion, false);
        break;
      case "action":
        if (msg.action === "speak") transcript.append(msg);
        if (msg.action === "start_motion" || msg.action === "resume_motion") {
          setMotionIndicator(motion, true);
        }
        if (msg.action === "stop_motion") setMotionIndicator(motion, false);
        break;
      case "error":
        transcript.hint(`server error: ${msg.message}`);
        break;
    }
  }

  // --- canvas drawing -------------------------------------------------------

  function redraw(): void {
    ctx.clearRect(0, 0, CANVAS_PX, CANVAS_PX);
    ctx.strokeStyle = "#2a2f3a";
    ctx.lineWidth = 1;
    for (let mm = -40; mm <= 40; mm += 20) {
      const { x } = mmToPx(mm, 0, CANVAS_PX);
      ctx.beginPath(); ctx.moveTo(x, 0); ctx.lineTo(x, CANVAS_PX); ctx.stroke();
      const { y } = mmToPx(0, mm, CANVAS_PX);
      ctx.beginPath(); ctx.moveTo(0, y); ctx.lineTo(CANVAS_PX, y); ctx.stroke();
    }
    if (templates) {
      const pts = orientTemplate(templates.digits[guideDigit] ?? [], orientation);
      if (pts.length > 1) {
        ctx.strokeStyle = "rgba(110,160,255,0.35)";
        ctx.lineWidth = 10;
        ctx.lineCap = "round";
        ctx.beginPath();
        pts.forEach(([xMm, yMm], i) => {
          const { x, y } = mmToPx(xMm, yMm, CANVAS_PX);
          if (i === 0) ctx.moveTo(x, y); else ctx.lineTo(x, y);
        });
        ctx.stroke();
        // start marker shows the expected stroke direction
        const start = mmToPx(pts[0][0], pts[0][1], CANVAS_PX);
        ctx.fillStyle = "rgba(110,220,140,0.9)";
        ctx.beginPath();
        ctx.arc(start.x, start.y, 7, 0, Math.PI * 2);
        ctx.fill();
      }
    }
    if (trail.length > 1) {
      ctx.strokeStyle = "#e8ecf4";
      ctx.lineWidth = 4;
      ctx.lineCap = "round";
      ctx.beginPath();
      trail.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
      ctx.stroke();
    }
  }

  function canvasPos(ev: PointerEvent): { px: number; py: number } {
    const rect = canvas.getBoundingClientRect();
    return {
      px: ((ev.clientX - rect.left) / rect.width) * CANVAS_PX,
      py: ((ev.clientY - rect.top) / rect.height) * CANVAS_PX,
    };
  }

  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    const { px, py } = canvasPos(ev);
    trail = [{ x: px, y: py }];
    const mm = pxToMm(px, py, CANVAS_PX);
    recorder.pointerDown(mm.x, mm.y, ev.timeStamp, ev.pointerId);
    redraw();
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (ev.buttons === 0) return;
    const { px, py } = canvasPos(ev);
    trail.push({ x: px, y: py });
    const mm = pxToMm(px, py, CANVAS_PX);
    recorder.pointerMove(mm.x, mm.y, ev.timeStamp, ev.pointerId);
    redraw();
  });
  canvas.addEventListener("pointerup", (ev) => {
    const { px, py } = canvasPos(ev);
    const mm = pxToMm(px, py, CANVAS_PX);
    recorder.pointerUp(mm.x, mm.y, ev.timeStamp, ev.pointerId);
    trail = [];
    redraw();
  });
  canvas.addEventListener("pointercancel", (ev) => {
    recorder.pointerCancel(ev.pointerId);
    trail = [];
    redraw();
  });

  // tapping the area around the pad stands in for touching the robot arm;
  // events that started on the pad itself bubble up and must not count
  el<HTMLElement>("outside-zone").addEventListener("pointerdown", (ev) => {
    if (ev.target !== canvas) socket.send({ type: "arm_touch" });
  });

  // --- controls ----------------------------------------------------------------

  el<HTMLButtonElement>("btn-confirm").addEventListener("click", () => {
    socket.send({ type: "confirm_touch" });
  });
  el<HTMLButtonElement>("btn-arm").addEventListener("click", () => {
    socket.send({ type: "arm_touch" });
  });
  el<HTMLButtonElement>("btn-reset").addEventListener("click", () => {
    socket.send({ type: "reset" });
    renderBars(barsRoot, null);
  });

  const dial = el<HTMLSelectElement>("orientation");
  dial.addEventListener("change", () => {
    orientation = dial.value as PadOrientation;
    redraw();
  });
  const digitPick = el<HTMLSelectElement>("guide-digit");
  digitPick.addEventListener("change", () => {
    guideDigit = digitPick.value;
    redraw();
  });

  // --- startup ---------------------------------------------------------------------

  renderBars(barsRoot, null);
  renderStateBadge(badge, "Idle");
  setMotionIndicator(motion, false);
  redraw();
  socket.connect();

  fetch("/templates")
    .then((r) => r.json())
    .then((body) => {
      templates = body as Templates;
      redraw();
    })
    .catch(() => transcript.hint("Template guides unavailable."));
  fetch("/tasks")
    .then((r) => r.json())
    .then((tasks) => renderTaskLegend(legend, tasks))
    .catch(() => undefined);
}

if (typeof document !== "undefined" && document.getElementById("pad")) {
  boot();
}
