/**
 * Wire protocol message shapes. JSON messages over a WebSocket, each with a
 * `type` field: `create`, `start`, `key` go to the server; `state`, `event`,
 * `summary`, `error` come back. The first `state` after `create` carries the
 * full grid (rows joined with `/`); later states are deltas.
 */

export type Orientation = "up" | "down" | "left" | "right";

export interface Pose {
  pos: [number, number];
  dir: Orientation;
}

export interface PotStatus {
  tile: [number, number];
  onions: number;
  timer: number;
  ready: boolean;
}

export interface StateMessage {
  type: "state";
  session: string;
  clock: number;
  poses: Pose[];
  held: string[];
  pots: PotStatus[];
  orders_remaining: number;
  unstuck: boolean;
  done: boolean;
  /** Present only on the full state sent after `create`. */
  full?: boolean;
  grid?: string;
  tick_ms?: number;
  horizon?: number;
}

export interface EventMessage {
  type: "event";
  session: string;
  clock: number;
  agent: number;
  kind: string;
  tile?: [number, number];
  /** Belief events carry the robot's subtask distribution instead of a tile. */
  belief?: Record<string, number>;
}

export interface SummaryMessage {
  type: "summary";
  session: string;
  orders_delivered: number;
  delivery_times: number[];
  performance: number;
  /** Robot-minus-human deltas: onions picked, dishes picked, orders delivered. */
  workload: [number, number, number];
  fluency: [number, number];
}

export interface ErrorMessage {
  type: "error";
  message: string;
}

export type ServerMessage = StateMessage | EventMessage | SummaryMessage | ErrorMessage;

export interface CreateMessage {
  type: "create";
  layout?: string;
  grid?: string;
  session?: string;
  seed?: number;
  tick_ms?: number;
}

export interface StartMessage {
  type: "start";
}

export interface KeyMessage {
  type: "key";
  key: string;
}

export type ClientMessage = CreateMessage | StartMessage | KeyMessage;
