/**
 * ClientView: everything the renderer draws, derived solely from protocol
 * messages by a pure reducer. There is no game logic here — the client never
 * predicts, interpolates, or validates moves, so disabling rendering can
 * never change what the server logs.
 */

import type { EventMessage, Pose, PotStatus, ServerMessage } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

export interface ClientView {
  sessionId: string | null;
  /** Grid rows as token strings; set by the full state after `create`. */
  grid: string[];
  tickMs: number;
  horizon: number;
  clock: number;
  poses: Pose[];
  held: string[];
  pots: PotStatus[];
  ordersRemaining: number;
  unstuck: boolean;
  done: boolean;
  connection: ConnectionStatus;
  /** Latest robot belief distribution (subtask label -> probability). */
  belief: Record<string, number>;
  /** Recent non-belief events, newest last (bounded ticker). */
  events: EventMessage[];
  summary: {
    ordersDelivered: number;
    performance: number;
    workload: [number, number, number];
    fluency: [number, number];
  } | null;
  lastError: string | null;
}

const EVENT_TICKER_LENGTH = 8;

export function createView(): ClientView {
  return {
    sessionId: null,
    grid: [],
    tickMs: 200,
    horizon: 0,
    clock: 0,
    poses: [],
    held: [],
    pots: [],
    ordersRemaining: 0,
    unstuck: false,
    done: false,
    connection: "connecting",
    belief: {},
    events: [],
    summary: null,
    lastError: null,
  };
}

/** Fold one server message into the view. Pure: returns a new view. */
export function applyMessage(view: ClientView, msg: ServerMessage): ClientView {
  switch (msg.type) {
    case "state": {
      const next: ClientView = {
        ...view,
        sessionId: msg.session,
        clock: msg.clock,
        poses: msg.poses,
        held: msg.held,
        pots: msg.pots,
        ordersRemaining: msg.orders_remaining,
        unstuck: msg.unstuck,
        done: msg.done,
        connection: "connected",
      };
      if (msg.full) {
        next.grid = (msg.grid ?? "").split("/").filter((row) => row.length > 0);
        next.tickMs = msg.tick_ms ?? view.tickMs;
        next.horizon = msg.horizon ?? view.horizon;
      }
      return next;
    }
    case "event": {
      if (msg.kind === "belief") {
        return { ...view, belief: msg.belief ?? {} };
      }
      const events = [...view.events, msg].slice(-EVENT_TICKER_LENGTH);
      return { ...view, events };
    }
    case "summary":
      return {
        ...view,
        summary: {
          ordersDelivered: msg.orders_delivered,
          performance: msg.performance,
          workload: msg.workload,
          fluency: msg.fluency,
        },
      };
    case "error":
      return { ...view, lastError: msg.message };
  }
}

export function applyAll(view: ClientView, messages: ServerMessage[]): ClientView {
  return messages.reduce(applyMessage, view);
}

export function markDisconnected(view: ClientView): ClientView {
  return { ...view, connection: "disconnected" };
}
