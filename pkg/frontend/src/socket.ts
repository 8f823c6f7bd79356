/**
 * WebSocket transport with auto-reconnect (1s doubling to 15s max).
 * Parsed server messages and connection-state changes surface via callbacks.
 */

import { ClientMessage, parseServerMessage, ServerMessage } from "./protocol.js";

export type ConnectionState = "connected" | "disconnected" | "reconnecting";

export interface SessionSocketOptions {
  url: string;
  onMessage: (msg: ServerMessage) => void;
  onStateChange?: (state: ConnectionState) => void;
  onParseError?: (raw: string) => void;
  reconnect?: boolean;
  socketFactory?: (url: string) => WebSocket;
}

export class SessionSocket {
  private ws: WebSocket | null = null;
  private backoffMs = 1000;
  private closedByUser = false;
  private readonly opts: SessionSocketOptions;

  constructor(opts: SessionSocketOptions) {
    this.opts = opts;
  }

  connect(): void {
    this.closedByUser = false;
    const factory = this.opts.socketFactory ?? ((url: string) => new WebSocket(url));
    const ws = factory(this.opts.url);
    this.ws = ws;
    ws.onopen = () => {
      this.backoffMs = 1000;
      this.opts.onStateChange?.("connected");
    };
    ws.onmessage = (ev: MessageEvent) => {
      const msg = parseServerMessage(String(ev.data));
      if (msg) {
        this.opts.onMessage(msg);
      } else {
        this.opts.onParseError?.(String(ev.data));
      }
    };
    ws.onclose = () => {
      this.ws = null;
      if (this.closedByUser || this.opts.reconnect === false) {
        this.opts.onStateChange?.("disconnected");
        return;
      }
      this.opts.onStateChange?.("reconnecting");
      setTimeout(() => this.connect(), this.backoffMs);
      this.backoffMs = Math.min(this.backoffMs * 2, 15000);
    };
  }

  send(msg: ClientMessage): boolean {
    if (!this.ws || this.ws.readyState !== WebSocket.OPEN) return false;
    this.ws.send(JSON.stringify(msg));
    return true;
  }

  disconnect(): void {
    this.closedByUser = true;
    this.ws?.close();
  }

  get connected(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }
}
