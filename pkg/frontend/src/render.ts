/**
 * Figure renderers for the three harness CSV schemas.
 *
 * The renderer never computes physics: every curve, cell and inset is a
 * direct plot of CSV columns, so byte-identical CSV input produces
 * byte-identical SVG output.
 */

import { CsvData, SchemaError, column, num, parseCsv, requireColumns } from "./csv.js";
import { Box, LinearScale, WIDTH, HEIGHT, axes, document as svgDocument, fmt, polyline } from "./svg.js";

export type FigureKind = "decay" | "wavefunctions" | "heatmap";

export interface PlotSpec {
  csvText: string;
  kind: FigureKind;
  title?: string;
  xlabel?: string;
  ylabel?: string;
}

const DECAY_COLUMNS = ["t", "abs2rho01", "quad_fit", "exp_fit"] as const;
const WAVE_COLUMNS = [
  "x",
  "abs2_psi0",
  "abs2_psi1",
  "phase0",
  "phase1",
  "phase_diff",
] as const;
const HEATMAP_COLUMNS = [
  "dx",
  "xmax_requested",
  "xmax_effective",
  "computed_2rho01",
  "rel_err_percent",
  "divergent",
  "norm0",
  "norm1",
] as const;

const PLOT_BOX: Box = { x0: 70, y0: 40, w: WIDTH - 100, h: HEIGHT - 110 };

function finiteExtent(values: (number | null)[], pad = 0.05): [number, number] {
  const finite = values.filter(
    (v): v is number => v !== null && Number.isFinite(v),
  );
  if (finite.length === 0) throw new SchemaError("no finite values to plot");
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const span = hi - lo;
  return [lo - pad * span, hi + pad * span];
}

function renderDecay(data: CsvData, spec: PlotSpec): string {
  requireColumns(data, DECAY_COLUMNS, "decay");
  const t = column(data, "t");
  const value = column(data, "abs2rho01");
  const quad = column(data, "quad_fit");
  const exp = column(data, "exp_fit");
  const [tlo, thi] = finiteExtent(t, 0.02);
  const [vlo, vhi] = finiteExtent([...value, 0, 1], 0.04);
  const sx = new LinearScale(tlo, thi, PLOT_BOX.x0, PLOT_BOX.x0 + PLOT_BOX.w);
  const sy = new LinearScale(vlo, vhi, PLOT_BOX.y0 + PLOT_BOX.h, PLOT_BOX.y0);
  const body = [
    axes(PLOT_BOX, sx, sy, spec.xlabel ?? "t", spec.ylabel ?? "|2 rho01(t)|"),
    polyline(t, value, sx, sy, `stroke="#1f77b4" stroke-width="2"`),
    polyline(t, quad, sx, sy, `stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 3"`),
    polyline(t, exp, sx, sy, `stroke="#2ca02c" stroke-width="1.5" stroke-dasharray="2 3"`),
    `<g font-size="12" font-family="sans-serif">`,
    `<line x1="${PLOT_BOX.x0 + 12}" y1="52" x2="${PLOT_BOX.x0 + 42}" y2="52" stroke="#1f77b4" stroke-width="2"/>`,
    `<text x="${PLOT_BOX.x0 + 48}" y="56">coherence</text>`,
    `<line x1="${PLOT_BOX.x0 + 12}" y1="70" x2="${PLOT_BOX.x0 + 42}" y2="70" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 3"/>`,
    `<text x="${PLOT_BOX.x0 + 48}" y="74">quadratic fit</text>`,
    `<line x1="${PLOT_BOX.x0 + 12}" y1="88" x2="${PLOT_BOX.x0 + 42}" y2="88" stroke="#2ca02c" stroke-width="1.5" stroke-dasharray="2 3"/>`,
    `<text x="${PLOT_BOX.x0 + 48}" y="92">exponential fit</text>`,
    `</g>`,
  ].join("\n");
  return svgDocument(body, spec.title ?? "coherence decay");
}

function renderWavefunctions(data: CsvData, spec: PlotSpec): string {
  requireColumns(data, WAVE_COLUMNS, "wavefunctions");
  const x = column(data, "x");
  const d0 = column(data, "abs2_psi0");
  const d1 = column(data, "abs2_psi1");
  const dphi = column(data, "phase_diff");
  const [xlo, xhi] = finiteExtent(x, 0.01);
  const [, dhi] = finiteExtent([...d0, ...d1, 0], 0.05);
  const sx = new LinearScale(xlo, xhi, PLOT_BOX.x0, PLOT_BOX.x0 + PLOT_BOX.w);
  const sy = new LinearScale(0, dhi, PLOT_BOX.y0 + PLOT_BOX.h, PLOT_BOX.y0);

  const inset: Box = { x0: WIDTH - 280, y0: 55, w: 220, h: 130 };
  const ix = new LinearScale(xlo, xhi, inset.x0, inset.x0 + inset.w);
  const iy = new LinearScale(-Math.PI, Math.PI, inset.y0 + inset.h, inset.y0);

  const body = [
    axes(PLOT_BOX, sx, sy, spec.xlabel ?? "x", spec.ylabel ?? "|psi|^2"),
    polyline(x, d0, sx, sy, `stroke="#1f77b4" stroke-width="1.5"`),
    polyline(x, d1, sx, sy, `stroke="#d62728" stroke-width="1.5"`),
    `<g font-size="12" font-family="sans-serif">`,
    `<line x1="${PLOT_BOX.x0 + 12}" y1="52" x2="${PLOT_BOX.x0 + 42}" y2="52" stroke="#1f77b4" stroke-width="1.5"/>`,
    `<text x="${PLOT_BOX.x0 + 48}" y="56">component 0</text>`,
    `<line x1="${PLOT_BOX.x0 + 12}" y1="70" x2="${PLOT_BOX.x0 + 42}" y2="70" stroke="#d62728" stroke-width="1.5"/>`,
    `<text x="${PLOT_BOX.x0 + 48}" y="74">component 1</text>`,
    `</g>`,
    `<rect x="${inset.x0}" y="${inset.y0}" width="${inset.w}" height="${inset.h}" fill="white" stroke="#666"/>`,
    polyline(x, dphi, ix, iy, `stroke="#9467bd" stroke-width="1"`),
    `<text x="${inset.x0 + inset.w / 2}" y="${inset.y0 + inset.h + 14}" font-size="11" text-anchor="middle" font-family="sans-serif">phase difference</text>`,
  ].join("\n");
  return svgDocument(body, spec.title ?? "post-decoupling wavefunctions");
}

/** Blue-to-red ramp on log10(error %); divergent cells are black. */
function heatColor(err: number): string {
  if (!Number.isFinite(err)) return "#111111";
  const t = Math.max(0, Math.min(1, (Math.log10(Math.max(err, 0.01)) + 2) / 4));
  const r = Math.round(40 + 215 * t);
  const g = Math.round(70 + 60 * (1 - t));
  const b = Math.round(200 - 170 * t);
  return `rgb(${r},${g},${b})`;
}

function renderHeatmap(data: CsvData, spec: PlotSpec): string {
  requireColumns(data, HEATMAP_COLUMNS, "heatmap");
  const idx = (name: string) => data.header.indexOf(name);
  const cells = data.rows.map((row, k) => ({
    dx: num(row[idx("dx")], "dx", k + 1),
    xmax: num(row[idx("xmax_requested")], "xmax_requested", k + 1),
    err: row[idx("divergent")] === "True"
      ? Infinity
      : num(row[idx("rel_err_percent")], "rel_err_percent", k + 1),
  }));
  const dxs = [...new Set(cells.map((c) => c.dx))].sort((a, b) => b - a);
  const xmaxs = [...new Set(cells.map((c) => c.xmax))].sort((a, b) => a - b);
  const cw = PLOT_BOX.w / dxs.length;
  const ch = PLOT_BOX.h / xmaxs.length;
  const parts: string[] = [];
  for (const cell of cells) {
    const i = dxs.indexOf(cell.dx);
    const j = xmaxs.indexOf(cell.xmax);
    const px = PLOT_BOX.x0 + i * cw;
    const py = PLOT_BOX.y0 + j * ch;
    parts.push(
      `<rect x="${fmt(px, 2)}" y="${fmt(py, 2)}" width="${fmt(cw, 2)}" height="${fmt(ch, 2)}" fill="${heatColor(cell.err)}" stroke="white"/>`,
      `<text x="${fmt(px + cw / 2, 2)}" y="${fmt(py + ch / 2 + 4, 2)}" font-size="12" text-anchor="middle" fill="white" font-family="sans-serif">${Number.isFinite(cell.err) ? fmt(cell.err, 1) : "inf"}</text>`,
    );
  }
  for (let i = 0; i < dxs.length; i++) {
    parts.push(
      `<text x="${fmt(PLOT_BOX.x0 + (i + 0.5) * cw, 2)}" y="${PLOT_BOX.y0 + PLOT_BOX.h + 18}" font-size="12" text-anchor="middle" font-family="sans-serif">dx=${dxs[i]}</text>`,
    );
  }
  for (let j = 0; j < xmaxs.length; j++) {
    parts.push(
      `<text x="${PLOT_BOX.x0 - 8}" y="${fmt(PLOT_BOX.y0 + (j + 0.5) * ch + 4, 2)}" font-size="12" text-anchor="end" font-family="sans-serif">${xmaxs[j]}</text>`,
    );
  }
  parts.push(
    `<text x="${PLOT_BOX.x0 + PLOT_BOX.w / 2}" y="${PLOT_BOX.y0 + PLOT_BOX.h + 36}" font-size="13" text-anchor="middle" font-family="sans-serif">${spec.xlabel ?? "spacing"}</text>`,
    `<text x="${PLOT_BOX.x0 - 46}" y="${PLOT_BOX.y0 + PLOT_BOX.h / 2}" font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 ${PLOT_BOX.x0 - 46} ${PLOT_BOX.y0 + PLOT_BOX.h / 2})">${spec.ylabel ?? "cut-off"}</text>`,
  );
  return svgDocument(parts.join("\n"), spec.title ?? "relative error (%)");
}

export function render(spec: PlotSpec): string {
  const data = parseCsv(spec.csvText);
  switch (spec.kind) {
    case "decay":
      return renderDecay(data, spec);
    case "wavefunctions":
      return renderWavefunctions(data, spec);
    case "heatmap":
      return renderHeatmap(data, spec);
    default:
      throw new SchemaError(`unknown figure kind '${spec.kind as string}'`);
  }
}
