/**
 * Keyboard capture. Arrow keys (or WASD) move, space/enter interacts. Within
 * one tick window only the latest pressed key is sent — exactly one `key`
 * message per window in which anything was pressed, mirroring the server's
 * last-writer-wins key buffer.
 */

import type { KeyMessage } from "./protocol.js";

const KEY_BINDINGS: Record<string, string> = {
  ArrowUp: "up",
  ArrowDown: "down",
  ArrowLeft: "left",
  ArrowRight: "right",
  w: "up",
  s: "down",
  a: "left",
  d: "right",
  " ": "interact",
  Enter: "interact",
};

export class InputBuffer {
  private pending: string | null = null;

  /** Record a keydown; returns true when the key is bound. */
  press(key: string): boolean {
    const action = KEY_BINDINGS[key];
    if (action === undefined) return false;
    this.pending = action;
    return true;
  }

  /**
   * Called once per tick window: the single `key` message to send, or null
   * when nothing was pressed since the previous flush.
   */
  flush(): KeyMessage | null {
    if (this.pending === null) return null;
    const msg: KeyMessage = { type: "key", key: this.pending };
    this.pending = null;
    return msg;
  }
}
