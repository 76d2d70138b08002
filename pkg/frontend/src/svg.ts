/**
 * Minimal deterministic SVG assembly: fixed canvas, fixed styling, fixed
 * number formatting, no timestamps — identical input data yields identical
 * bytes.
 */

export const WIDTH = 800;
export const HEIGHT = 500;

/** Stable short formatting for coordinates and labels. */
export function fmt(value: number, digits = 2): string {
  if (!Number.isFinite(value)) return "inf";
  if (value === 0) return "0";
  const rounded = Number(value.toPrecision(6));
  return digits >= 0 && Math.abs(rounded) >= 0.01 && Math.abs(rounded) < 1e5
    ? String(Number(rounded.toFixed(digits + 2)))
    : rounded.toExponential(digits);
}

export interface Box {
  x0: number;
  y0: number;
  w: number;
  h: number;
}

export class LinearScale {
  constructor(
    readonly lo: number,
    readonly hi: number,
    readonly out0: number,
    readonly out1: number,
  ) {}

  map(v: number): number {
    const t = (v - this.lo) / (this.hi - this.lo || 1);
    return this.out0 + t * (this.out1 - this.out0);
  }

  ticks(n = 5): number[] {
    const out: number[] = [];
    for (let i = 0; i <= n; i++) out.push(this.lo + ((this.hi - this.lo) * i) / n);
    return out;
  }
}

export function polyline(
  xs: (number | null)[],
  ys: (number | null)[],
  sx: LinearScale,
  sy: LinearScale,
  style: string,
): string {
  const segments: string[] = [];
  let current: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    const x = xs[i];
    const y = ys[i];
    if (x === null || y === null || !Number.isFinite(x) || !Number.isFinite(y)) {
      if (current.length > 1) segments.push(current.join(" "));
      current = [];
      continue;
    }
    current.push(`${fmt(sx.map(x), 3)},${fmt(sy.map(y), 3)}`);
  }
  if (current.length > 1) segments.push(current.join(" "));
  return segments
    .map((pts) => `<polyline fill="none" ${style} points="${pts}"/>`)
    .join("\n");
}

export function axes(
  box: Box,
  sx: LinearScale,
  sy: LinearScale,
  xlabel: string,
  ylabel: string,
): string {
  const parts: string[] = [];
  parts.push(
    `<rect x="${box.x0}" y="${box.y0}" width="${box.w}" height="${box.h}" fill="none" stroke="#333" stroke-width="1"/>`,
  );
  for (const t of sx.ticks()) {
    const px = fmt(sx.map(t), 2);
    parts.push(
      `<line x1="${px}" y1="${box.y0 + box.h}" x2="${px}" y2="${box.y0 + box.h + 5}" stroke="#333"/>`,
      `<text x="${px}" y="${box.y0 + box.h + 18}" font-size="11" text-anchor="middle" font-family="sans-serif">${fmt(t)}</text>`,
    );
  }
  for (const t of sy.ticks()) {
    const py = fmt(sy.map(t), 2);
    parts.push(
      `<line x1="${box.x0 - 5}" y1="${py}" x2="${box.x0}" y2="${py}" stroke="#333"/>`,
      `<text x="${box.x0 - 8}" y="${py}" font-size="11" text-anchor="end" dominant-baseline="middle" font-family="sans-serif">${fmt(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${box.x0 + box.w / 2}" y="${box.y0 + box.h + 36}" font-size="13" text-anchor="middle" font-family="sans-serif">${xlabel}</text>`,
    `<text x="${box.x0 - 46}" y="${box.y0 + box.h / 2}" font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 ${box.x0 - 46} ${box.y0 + box.h / 2})">${ylabel}</text>`,
  );
  return parts.join("\n");
}

export function document(body: string, title: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="22" font-size="15" text-anchor="middle" font-family="sans-serif">${title}</text>`,
    body,
    `</svg>`,
    ``,
  ].join("\n");
}
