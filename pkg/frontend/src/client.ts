/**
 * WebSocket wiring and the render loop. Network messages are queued and
 * folded into the view once per animation frame; inputs are flushed once per
 * server tick window. On disconnect the client shows a banner and retries,
 * reattaching by session id so a paused game resumes where it left off.
 */

import { InputBuffer } from "./input.js";
import type { CreateMessage, ServerMessage } from "./protocol.js";
import { render } from "./render.js";
import { applyAll, createView, markDisconnected, type ClientView } from "./view.js";

const RECONNECT_DELAY_MS = 1500;

export interface ClientOptions {
  url: string;
  create: Omit<CreateMessage, "type" | "session">;
  canvas: HTMLCanvasElement;
}

export class PlayClient {
  view: ClientView = createView();
  showBelief = false;

  private ws: WebSocket | null = null;
  private queue: ServerMessage[] = [];
  private input = new InputBuffer();
  private flushTimer: number | null = null;
  private closed = false;

  constructor(private options: ClientOptions) {}

  connect(): void {
    const ws = new WebSocket(this.options.url);
    this.ws = ws;
    ws.onopen = () => {
      // Reattach by id when resuming; otherwise create fresh.
      const create: CreateMessage = this.view.sessionId
        ? { type: "create", session: this.view.sessionId }
        : { type: "create", ...this.options.create };
      ws.send(JSON.stringify(create));
      if (this.view.sessionId === null) ws.send(JSON.stringify({ type: "start" }));
    };
    ws.onmessage = (ev) => this.queue.push(JSON.parse(ev.data) as ServerMessage);
    ws.onclose = () => {
      this.view = markDisconnected(this.view);
      this.stopInputFlush();
      if (!this.closed) setTimeout(() => this.connect(), RECONNECT_DELAY_MS);
    };
    this.startRenderLoop();
  }

  close(): void {
    this.closed = true;
    this.stopInputFlush();
    this.ws?.close();
  }

  handleKeydown(key: string): boolean {
    return this.input.press(key);
  }

  toggleBelief(): void {
    this.showBelief = !this.showBelief;
  }

  /** Fold queued messages and draw. Rendering never touches game state. */
  private startRenderLoop(): void {
    const step = () => {
      if (this.queue.length > 0) {
        const hadGrid = this.view.grid.length > 0;
        this.view = applyAll(this.view, this.queue.splice(0));
        if (!hadGrid && this.view.grid.length > 0) this.sizeCanvas();
        if (this.flushTimer === null && !this.view.done) this.startInputFlush();
      }
      const ctx = this.options.canvas.getContext("2d");
      if (ctx) render(ctx, this.view, { showBelief: this.showBelief });
      if (!this.closed) requestAnimationFrame(step);
    };
    requestAnimationFrame(step);
  }

  /** One `key` message at most per tick window, aligned to the server rate. */
  private startInputFlush(): void {
    this.flushTimer = setInterval(() => {
      const msg = this.input.flush();
      if (msg && this.ws?.readyState === WebSocket.OPEN) {
        this.ws.send(JSON.stringify(msg));
      }
    }, this.view.tickMs) as unknown as number;
  }

  private stopInputFlush(): void {
    if (this.flushTimer !== null) {
      clearInterval(this.flushTimer);
      this.flushTimer = null;
    }
  }

  private sizeCanvas(): void {
    const rows = this.view.grid.length;
    const cols = this.view.grid[0].length;
    this.options.canvas.width = cols * 40;
    this.options.canvas.height = rows * 40 + 90;
  }
}
