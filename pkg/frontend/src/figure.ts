/**
 * Figure specs: a small JSON format describing which experiment directories
 * and policies go into each panel, validated up front so a typo fails before
 * any rendering work happens.
 */

import { existsSync, mkdirSync, writeFileSync } from "node:fs";
import { dirname, join, resolve } from "node:path";
import { z } from "zod";

import { aggregate, listTraces, readTrace, type Series } from "./trace.js";
import { renderSvg, type PanelData } from "./svg.js";

export const FigureSpecSchema = z.object({
  input_dir: z.string(),
  output: z.string(),
  format: z.literal("svg").default("svg"),
  panels: z
    .array(
      z.object({
        dir: z.string(),
        title: z.string(),
        policies: z.array(z.string()).nonempty().optional(),
      }),
    )
    .nonempty(),
});

export type FigureSpec = z.infer<typeof FigureSpecSchema>;

export function parseFigureSpec(raw: unknown): FigureSpec {
  const res = FigureSpecSchema.safeParse(raw);
  if (!res.success) {
    const issue = res.error.issues[0];
    throw new Error(`invalid figure spec: ${issue.path.join(".") || "<root>"}: ${issue.message}`);
  }
  return res.data;
}

export function loadPanelSeries(spec: FigureSpec): PanelData[] {
  return spec.panels.map((panel) => {
    const dir = resolve(join(spec.input_dir, panel.dir));
    if (!existsSync(dir)) {
      throw new Error(`panel '${panel.title}': experiment directory not found: ${dir}`);
    }
    const paths = listTraces(dir, panel.policies);
    if (paths.length === 0) {
      throw new Error(
        `panel '${panel.title}': no trace files in ${dir}` +
          (panel.policies ? ` for policies [${panel.policies.join(", ")}]` : ""),
      );
    }
    const series: Series[] = aggregate(paths.map(readTrace));
    if (panel.policies) {
      const found = new Set(series.map((s) => s.policy));
      for (const p of panel.policies) {
        if (!found.has(p)) {
          throw new Error(`panel '${panel.title}': no traces for policy '${p}' in ${dir}`);
        }
      }
    }
    return { title: panel.title, series };
  });
}

/** Renders the figure and returns the output path. */
export function render(spec: FigureSpec): string {
  const svg = renderSvg(loadPanelSeries(spec));
  const out = resolve(spec.output);
  mkdirSync(dirname(out), { recursive: true });
  writeFileSync(out, svg, "utf8");
  return out;
}
