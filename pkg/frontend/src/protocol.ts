/**
 * Wire protocol of the digitpad gateway: JSON messages over one WebSocket.
 *
 * Client -> server: frame | stroke | confirm_touch | arm_touch | double_tap | reset
 * Server -> client: touch_started | prediction | hfsm_state | action | error
 *
 * Every server message carries a per-session "seq" that strictly increases.
 * The client never computes classifications; predictions only ever arrive
 * from the server.
 */

export interface StrokeSample {
  x: number;    // mm, pad frame (origin center, +x right)
  y: number;    // mm, pad frame (+y up)
  t_ms: number; // milliseconds since the stroke began
}

export interface StrokeMessage {
  type: "stroke";
  points: StrokeSample[];
}

export interface SimpleMessage {
  type: "confirm_touch" | "arm_touch" | "double_tap" | "reset";
}

export type ClientMessage = StrokeMessage | SimpleMessage;

export interface TouchStartedMessage {
  type: "touch_started";
  seq: number;
  onset: number;
}

export interface PredictionMessage {
  type: "prediction";
  seq: number;
  probabilities: number[];
  label: number;
  confidence: number;
  confident: boolean;
  degenerate: boolean;
  onset: number;
}

export interface HfsmStateMessage {
  type: "hfsm_state";
  seq: number;
  state: string;
}

export interface ActionMessage {
  type: "action";
  seq: number;
  action: "speak" | "start_motion" | "stop_motion" | "resume_motion";
  text?: string;
  task?: { name: string; motion_id: string };
}

export interface ErrorMessage {
  type: "error";
  seq: number;
  message: string;
}

export type ServerMessage =
  | TouchStartedMessage
  | PredictionMessage
  | HfsmStateMessage
  | ActionMessage
  | ErrorMessage;

export function parseServerMessage(raw: string): ServerMessage | null {
  let value: unknown;
  try {
    value = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof value !== "object" || value === null) return null;
  const msg = value as Record<string, unknown>;
  if (typeof msg.type !== "string" || typeof msg.seq !== "number") return null;
  switch (msg.type) {
    case "touch_started":
      return typeof msg.onset === "number" ? (msg as unknown as TouchStartedMessage) : null;
    case "prediction":
      return Array.isArray(msg.probabilities) &&
        msg.probabilities.length === 10 &&
        msg.probabilities.every((p) => typeof p === "number") &&
        typeof msg.label === "number" &&
        typeof msg.confidence === "number"
        ? (msg as unknown as PredictionMessage)
        : null;
    case "hfsm_state":
      return typeof msg.state === "string" ? (msg as unknown as HfsmStateMessage) : null;
    case "action":
      return typeof msg.action === "string" ? (msg as unknown as ActionMessage) : null;
    case "error":
      return typeof msg.message === "string" ? (msg as unknown as ErrorMessage) : null;
    default:
      return null;
  }
}
