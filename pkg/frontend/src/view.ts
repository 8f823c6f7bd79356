/**
 * DOM rendering: probability bars, state badge, speak transcript, connection
 * banner and motion indicator.  Renders only what the server sent.
 */

import { ActionMessage, PredictionMessage } from "./protocol.js";
import { ConnectionState } from "./socket.js";

export function renderBars(root: HTMLElement, msg: PredictionMessage | null): void {
  if (msg === null) {
    root.innerHTML = '<div class="bars-empty">draw a digit to see probabilities</div>';
    return;
  }
  root.innerHTML = msg.probabilities
    .map((p, digit) => {
      const pct = Math.round(p * 1000) / 10;
      const top = digit === msg.label;
      return `
      <div class="bar-row${top ? " bar-top" : ""}" data-digit="${digit}">
        <span class="bar-digit">${digit}</span>
        <span class="bar-track"><span class="bar-fill" style="width:${pct}%"></span></span>
        <span class="bar-pct">${pct.toFixed(1)}%</span>
      </div>`;
    })
    .join("");
}

export function renderStateBadge(el: HTMLElement, state: string): void {
  el.textContent = state;
  el.dataset.state = state.split("(")[0];
}

export function renderBanner(el: HTMLElement, state: ConnectionState): void {
  el.textContent =
    state === "connected" ? "connected"
    : state === "reconnecting" ? "connection lost, retrying…"
    : "disconnected";
  el.dataset.state = state;
}

export class Transcript {
  private readonly root: HTMLElement;
  private readonly speak: boolean;

  constructor(root: HTMLElement, speakAloud = false) {
    this.root = root;
    this.speak = speakAloud;
  }

  append(msg: ActionMessage): void {
    if (msg.action !== "speak" || !msg.text) return;
    const line = document.createElement("div");
    line.className = "transcript-line";
    line.textContent = msg.text;
    this.root.appendChild(line);
    this.root.scrollTop = this.root.scrollHeight;
    if (this.speak && typeof speechSynthesis !== "undefined") {
      speechSynthesis.speak(new SpeechSynthesisUtterance(msg.text));
    }
  }

  hint(text: string): void {
    const line = document.createElement("div");
    line.className = "transcript-line transcript-hint";
    line.textContent = text;
    this.root.appendChild(line);
    this.root.scrollTop = this.root.scrollHeight;
  }
}

export function setMotionIndicator(el: HTMLElement, active: boolean): void {
  el.classList.toggle("motion-active", active);
  el.textContent = active ? "MOTION" : "idle";
}

export function renderTaskLegend(el: HTMLElement, tasks: Record<string, { name: string }>): void {
  el.innerHTML = Object.entries(tasks)
    .map(([digit, t]) => `<span class="legend-item"><b>${digit}</b> → ${t.name}</span>`)
    .join(" ");
}
