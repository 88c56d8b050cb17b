/**
 * Page bootstrap: read connection parameters from the query string, start the
 * client, and forward keyboard input. `?layout=NAME` picks a bundled layout,
 * `?session=ID` reattaches to a paused game, `?seed=N` seeds the episode.
 */

import { PlayClient } from "./client.js";

function wsUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  return `${proto}://${location.host}/ws`;
}

function start(): void {
  const canvas = document.getElementById("game") as HTMLCanvasElement;
  const params = new URLSearchParams(location.search);
  const create: Record<string, unknown> = {};
  if (params.has("layout")) create.layout = params.get("layout");
  if (params.has("seed")) create.seed = Number(params.get("seed"));
  const client = new PlayClient({ url: wsUrl(), create, canvas });
  if (params.has("session")) client.view.sessionId = params.get("session");
  client.connect();

  document.addEventListener("keydown", (ev) => {
    if (ev.key === "b") {
      client.toggleBelief();
      return;
    }
    if (client.handleKeydown(ev.key)) ev.preventDefault();
  });
}

document.addEventListener("DOMContentLoaded", start);
