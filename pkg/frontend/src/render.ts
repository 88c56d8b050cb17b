/**
 * Canvas rendering of a ClientView. Pure output: reads the view, draws, and
 * never feeds anything back into game state. Tiles use a fixed sprite legend
 * over the 8 tokens; a debug toggle overlays the robot's belief bar chart.
 */

import type { ClientView } from "./view.js";

export const TILE = 40;

/** Fixed sprite legend: fill color + glyph per token. */
const LEGEND: Record<string, { fill: string; glyph: string }> = {
  e: { fill: "#f3ead8", glyph: "" }, // open floor
  c: { fill: "#8d7b66", glyph: "" }, // counter
  s: { fill: "#4f8f4f", glyph: "S" }, // serving counter
  d: { fill: "#5b7fae", glyph: "D" }, // dish dispenser
  n: { fill: "#c9a227", glyph: "O" }, // onion dispenser
  p: { fill: "#444444", glyph: "P" }, // pot
  h: { fill: "#f3ead8", glyph: "" }, // start tiles render as floor
  r: { fill: "#f3ead8", glyph: "" },
};

const AGENT_COLORS = ["#d0533a", "#3a6fd0"]; // human, robot

export interface RenderOptions {
  showBelief: boolean;
}

export function canvasSize(view: ClientView): { width: number; height: number } {
  const rows = view.grid.length;
  const cols = rows > 0 ? view.grid[0].length : 0;
  return { width: cols * TILE, height: rows * TILE + 90 };
}

export function render(
  ctx: CanvasRenderingContext2D,
  view: ClientView,
  options: RenderOptions = { showBelief: false },
): void {
  const { width, height } = canvasSize(view);
  ctx.clearRect(0, 0, width, height);
  drawTiles(ctx, view);
  drawPots(ctx, view);
  drawAgents(ctx, view);
  drawStatusBar(ctx, view);
  if (options.showBelief) drawBeliefOverlay(ctx, view);
  if (view.summary !== null) drawSummaryPanel(ctx, view);
  if (view.connection === "disconnected") drawDisconnectBanner(ctx, view);
}

function drawTiles(ctx: CanvasRenderingContext2D, view: ClientView): void {
  ctx.font = `${TILE * 0.5}px monospace`;
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  view.grid.forEach((row, y) => {
    for (let x = 0; x < row.length; x++) {
      const sprite = LEGEND[row[x]] ?? LEGEND.e;
      ctx.fillStyle = sprite.fill;
      ctx.fillRect(x * TILE, y * TILE, TILE, TILE);
      ctx.strokeStyle = "#00000022";
      ctx.strokeRect(x * TILE, y * TILE, TILE, TILE);
      if (sprite.glyph) {
        ctx.fillStyle = "#ffffff";
        ctx.fillText(sprite.glyph, (x + 0.5) * TILE, (y + 0.5) * TILE);
      }
    }
  });
}

function drawPots(ctx: CanvasRenderingContext2D, view: ClientView): void {
  ctx.font = `${TILE * 0.3}px monospace`;
  for (const pot of view.pots) {
    const [x, y] = pot.tile;
    const label = pot.ready ? "✓" : pot.timer > 0 ? `${pot.timer}` : `${pot.onions}/3`;
    ctx.fillStyle = pot.ready ? "#7fe07f" : "#ffd37f";
    ctx.fillText(label, (x + 0.5) * TILE, (y + 0.82) * TILE);
  }
}

function drawAgents(ctx: CanvasRenderingContext2D, view: ClientView): void {
  view.poses.forEach((pose, i) => {
    const [x, y] = pose.pos;
    const cx = (x + 0.5) * TILE;
    const cy = (y + 0.5) * TILE;
    ctx.fillStyle = AGENT_COLORS[i] ?? "#888888";
    ctx.beginPath();
    ctx.arc(cx, cy, TILE * 0.32, 0, 2 * Math.PI);
    ctx.fill();
    // facing marker
    const d = TILE * 0.28;
    const offset = { up: [0, -d], down: [0, d], left: [-d, 0], right: [d, 0] }[pose.dir];
    ctx.fillStyle = "#ffffff";
    ctx.beginPath();
    ctx.arc(cx + offset[0], cy + offset[1], TILE * 0.08, 0, 2 * Math.PI);
    ctx.fill();
    const held = view.held[i];
    if (held && held !== "nothing") {
      ctx.font = `${TILE * 0.3}px monospace`;
      ctx.fillText(held[0].toUpperCase(), cx, cy);
    }
  });
}

function drawStatusBar(ctx: CanvasRenderingContext2D, view: ClientView): void {
  const y = view.grid.length * TILE;
  ctx.fillStyle = "#222222";
  ctx.fillRect(0, y, canvasSize(view).width, 90);
  ctx.fillStyle = "#ffffff";
  ctx.font = "14px monospace";
  ctx.textAlign = "left";
  const ticksLeft = Math.max(view.horizon - view.clock, 0);
  ctx.fillText(
    `orders left: ${view.ordersRemaining}   ticks left: ${ticksLeft}` +
      (view.unstuck ? "   [auto-unstuck]" : ""),
    8,
    y + 20,
  );
  const latest = view.events[view.events.length - 1];
  if (latest) {
    ctx.fillText(`t=${latest.clock} agent ${latest.agent}: ${latest.kind}`, 8, y + 40);
  }
  ctx.textAlign = "center";
}

function drawBeliefOverlay(ctx: CanvasRenderingContext2D, view: ClientView): void {
  const entries = Object.entries(view.belief);
  if (entries.length === 0) return;
  const barWidth = 120;
  ctx.save();
  ctx.globalAlpha = 0.9;
  ctx.fillStyle = "#000000cc";
  ctx.fillRect(0, 0, barWidth + 160, entries.length * 16 + 8);
  ctx.font = "11px monospace";
  ctx.textAlign = "left";
  entries.forEach(([label, prob], i) => {
    const y = 6 + i * 16;
    ctx.fillStyle = "#3a6fd0";
    ctx.fillRect(150, y, barWidth * prob, 12);
    ctx.fillStyle = "#ffffff";
    ctx.fillText(`${label} ${(prob * 100).toFixed(0)}%`, 4, y + 10);
  });
  ctx.restore();
}

function drawSummaryPanel(ctx: CanvasRenderingContext2D, view: ClientView): void {
  const s = view.summary!;
  const { width } = canvasSize(view);
  const lines = summaryLines(s);
  ctx.save();
  ctx.fillStyle = "#000000dd";
  ctx.fillRect(width / 2 - 160, 40, 320, 30 + lines.length * 20);
  ctx.fillStyle = "#ffffff";
  ctx.font = "14px monospace";
  ctx.textAlign = "center";
  lines.forEach((line, i) => ctx.fillText(line, width / 2, 65 + i * 20));
  ctx.restore();
}

/** Summary panel text: performance plus the three workload deltas. */
export function summaryLines(s: NonNullable<ClientView["summary"]>): string[] {
  return [
    `episode over — ${s.ordersDelivered} delivered`,
    `performance ${s.performance.toFixed(3)}`,
    `Δ onions    ${fmtDelta(s.workload[0])}`,
    `Δ dishes    ${fmtDelta(s.workload[1])}`,
    `Δ orders    ${fmtDelta(s.workload[2])}`,
  ];
}

function fmtDelta(v: number): string {
  return v > 0 ? `robot +${v}` : v < 0 ? `human +${-v}` : "even";
}

function drawDisconnectBanner(ctx: CanvasRenderingContext2D, view: ClientView): void {
  const { width } = canvasSize(view);
  ctx.save();
  ctx.fillStyle = "#b03030ee";
  ctx.fillRect(0, 0, width, 28);
  ctx.fillStyle = "#ffffff";
  ctx.font = "14px monospace";
  ctx.textAlign = "center";
  ctx.fillText("disconnected — reconnecting to resume session…", width / 2, 19);
  ctx.restore();
}
