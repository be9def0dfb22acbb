/**
 * Minimal deterministic SVG line charts: one mean curve per policy with a
 * shaded +/- 1 std band.  No DOM dependency; output is a plain SVG string
 * that is byte-identical for identical inputs.
 */

import type { Series } from "./trace.js";

export interface PanelData {
  title: string;
  series: Series[];
}

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
];

const W = 420;
const H = 320;
const MARGIN = { top: 34, right: 12, bottom: 42, left: 56 };

const fmt = (v: number): string => {
  if (!Number.isFinite(v)) throw new Error(`non-finite coordinate ${v}`);
  return v.toFixed(3).replace(/\.?0+$/, "") || "0";
};

function niceTicks(lo: number, hi: number, count: number): number[] {
  if (hi <= lo) return [lo];
  const span = hi - lo;
  const step = Math.pow(10, Math.floor(Math.log10(span / count)));
  const err = span / count / step;
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-12 * span; v += s) ticks.push(v);
  return ticks;
}

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function renderPanel(panel: PanelData, xOff: number): string {
  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  const xMax = Math.max(...panel.series.map((s) => s.t[s.t.length - 1]));
  const xMin = Math.min(...panel.series.map((s) => s.t[0]));
  let yMax = -Infinity;
  for (const s of panel.series) {
    for (let i = 0; i < s.t.length; i++) yMax = Math.max(yMax, s.mean[i] + s.std[i]);
  }
  const yMin = 0;
  if (yMax <= yMin) yMax = yMin + 1;

  const sx = (v: number) => MARGIN.left + ((v - xMin) / (xMax - xMin || 1)) * plotW;
  const sy = (v: number) => MARGIN.top + (1 - (v - yMin) / (yMax - yMin)) * plotH;

  const parts: string[] = [`<g transform="translate(${xOff},0)">`];
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="18" text-anchor="middle" font-size="13" font-family="sans-serif">${esc(panel.title)}</text>`,
  );
  // axes
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top + plotH}" x2="${MARGIN.left + plotW}" y2="${MARGIN.top + plotH}" stroke="#333"/>`,
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${MARGIN.top + plotH}" stroke="#333"/>`,
  );
  for (const tick of niceTicks(xMin, xMax, 5)) {
    parts.push(
      `<line x1="${fmt(sx(tick))}" y1="${MARGIN.top + plotH}" x2="${fmt(sx(tick))}" y2="${MARGIN.top + plotH + 4}" stroke="#333"/>`,
      `<text x="${fmt(sx(tick))}" y="${MARGIN.top + plotH + 16}" text-anchor="middle" font-size="10" font-family="sans-serif">${fmt(tick)}</text>`,
    );
  }
  for (const tick of niceTicks(yMin, yMax, 5)) {
    parts.push(
      `<line x1="${MARGIN.left - 4}" y1="${fmt(sy(tick))}" x2="${MARGIN.left}" y2="${fmt(sy(tick))}" stroke="#333"/>`,
      `<text x="${MARGIN.left - 7}" y="${fmt(sy(tick) + 3)}" text-anchor="end" font-size="10" font-family="sans-serif">${fmt(tick)}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${H - 8}" text-anchor="middle" font-size="11" font-family="sans-serif">round</text>`,
    `<text transform="translate(14,${MARGIN.top + plotH / 2}) rotate(-90)" text-anchor="middle" font-size="11" font-family="sans-serif">cumulative regret</text>`,
  );

  panel.series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const upper = s.t.map((t, i) => `${fmt(sx(t))},${fmt(sy(s.mean[i] + s.std[i]))}`);
    const lower = s.t
      .map((t, i) => `${fmt(sx(t))},${fmt(sy(Math.max(yMin, s.mean[i] - s.std[i])))}`)
      .reverse();
    parts.push(
      `<polygon points="${upper.concat(lower).join(" ")}" fill="${color}" fill-opacity="0.15" stroke="none"/>`,
    );
    const line = s.t.map((t, i) => `${fmt(sx(t))},${fmt(sy(s.mean[i]))}`).join(" ");
    parts.push(`<polyline points="${line}" fill="none" stroke="${color}" stroke-width="1.5"/>`);
    // legend entry
    const ly = MARGIN.top + 8 + idx * 14;
    parts.push(
      `<line x1="${MARGIN.left + 8}" y1="${ly}" x2="${MARGIN.left + 26}" y2="${ly}" stroke="${color}" stroke-width="1.5"/>`,
      `<text x="${MARGIN.left + 30}" y="${ly + 3}" font-size="10" font-family="sans-serif">${esc(s.policy)}</text>`,
    );
  });
  parts.push("</g>");
  return parts.join("\n");
}

export function renderSvg(panels: PanelData[]): string {
  if (panels.length === 0) throw new Error("no panels to render");
  const body = panels.map((p, i) => renderPanel(p, i * W)).join("\n");
  const width = W * panels.length;
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${H}" viewBox="0 0 ${width} ${H}">`,
    `<rect width="${width}" height="${H}" fill="white"/>`,
    body,
    "</svg>",
    "",
  ].join("\n");
}
