/** SVG and PNG rendering of a chart model through one shared layout. */

import { ChartModel, computeLayout, Layout, StyleOptions } from "./model.js";
import { Canvas, encodePng, parseColor, textWidth } from "./raster.js";

const AXIS = "#333333";
const GRID = "#dddddd";

function fmt(v: number): string {
  return v.toFixed(2);
}

export function renderSvg(model: ChartModel, style: StyleOptions, dataHash: string): string {
  const layout = computeLayout(model, style);
  const { plot } = layout;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${layout.width}" height="${layout.height}" ` +
      `viewBox="0 0 ${layout.width} ${layout.height}" font-family="Helvetica, Arial, sans-serif">`,
  );
  parts.push(`<!-- datahash:${dataHash} -->`);
  parts.push(`<rect width="${layout.width}" height="${layout.height}" fill="#ffffff"/>`);
  parts.push(
    `<text x="${fmt(layout.width / 2)}" y="24" text-anchor="middle" font-size="15">${model.title}</text>`,
  );
  for (const tick of layout.xTicks) {
    const x = layout.toX(tick.value);
    parts.push(
      `<line x1="${fmt(x)}" y1="${plot.y}" x2="${fmt(x)}" y2="${plot.y + plot.h}" stroke="${GRID}"/>`,
    );
    parts.push(
      `<line x1="${fmt(x)}" y1="${plot.y + plot.h}" x2="${fmt(x)}" y2="${plot.y + plot.h + 5}" stroke="${AXIS}"/>`,
    );
    parts.push(
      `<text x="${fmt(x)}" y="${plot.y + plot.h + 20}" text-anchor="middle" font-size="11">${tick.label}</text>`,
    );
  }
  for (const tick of layout.yTicks) {
    const y = layout.toY(tick.value);
    parts.push(
      `<line x1="${plot.x}" y1="${fmt(y)}" x2="${plot.x + plot.w}" y2="${fmt(y)}" stroke="${GRID}"/>`,
    );
    parts.push(
      `<line x1="${plot.x - 5}" y1="${fmt(y)}" x2="${plot.x}" y2="${fmt(y)}" stroke="${AXIS}"/>`,
    );
    parts.push(
      `<text x="${plot.x - 8}" y="${fmt(y + 4)}" text-anchor="end" font-size="11">${tick.label}</text>`,
    );
  }
  parts.push(
    `<rect x="${plot.x}" y="${plot.y}" width="${plot.w}" height="${plot.h}" fill="none" stroke="${AXIS}"/>`,
  );
  parts.push(
    `<text x="${fmt(plot.x + plot.w / 2)}" y="${layout.height - 12}" text-anchor="middle" font-size="12">${model.xLabel}</text>`,
  );
  parts.push(
    `<text x="18" y="${fmt(plot.y + plot.h / 2)}" text-anchor="middle" font-size="12" ` +
      `transform="rotate(-90 18 ${fmt(plot.y + plot.h / 2)})">${model.yLabel}</text>`,
  );
  model.series.forEach((series) => {
    const pts = series.points
      .map(([x, y]) => `${fmt(layout.toX(x))},${fmt(layout.toY(y))}`)
      .join(" ");
    const dash = series.dashed ? ' stroke-dasharray="6 4"' : "";
    parts.push(
      `<polyline points="${pts}" fill="none" stroke="${series.color}" stroke-width="2"${dash}/>`,
    );
    if (!series.dashed) {
      for (const [x, y] of series.points) {
        parts.push(
          `<circle cx="${fmt(layout.toX(x))}" cy="${fmt(layout.toY(y))}" r="3" fill="${series.color}"/>`,
        );
      }
    }
  });
  model.series.forEach((series, i) => {
    const lx = plot.x + 12;
    const ly = plot.y + 14 + 16 * i;
    const dash = series.dashed ? ' stroke-dasharray="6 4"' : "";
    parts.push(
      `<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" stroke="${series.color}" stroke-width="2"${dash}/>`,
    );
    parts.push(`<text x="${lx + 28}" y="${ly}" font-size="11">${series.label}</text>`);
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export function renderPng(model: ChartModel, style: StyleOptions, dataHash: string): Buffer {
  const layout = computeLayout(model, style);
  const { plot } = layout;
  const canvas = new Canvas(layout.width, layout.height);
  const axis = parseColor(AXIS);
  const grid = parseColor(GRID);

  canvas.text(
    Math.round(layout.width / 2 - textWidth(model.title, 2) / 2),
    10,
    model.title,
    axis,
    2,
  );
  for (const tick of layout.xTicks) {
    const x = layout.toX(tick.value);
    canvas.line(x, plot.y, x, plot.y + plot.h, grid);
    canvas.line(x, plot.y + plot.h, x, plot.y + plot.h + 5, axis);
    canvas.text(x - textWidth(tick.label) / 2, plot.y + plot.h + 10, tick.label, axis);
  }
  for (const tick of layout.yTicks) {
    const y = layout.toY(tick.value);
    canvas.line(plot.x, y, plot.x + plot.w, y, grid);
    canvas.line(plot.x - 5, y, plot.x, y, axis);
    canvas.text(plot.x - 8 - textWidth(tick.label), y - 3, tick.label, axis);
  }
  canvas.line(plot.x, plot.y, plot.x + plot.w, plot.y, axis);
  canvas.line(plot.x, plot.y + plot.h, plot.x + plot.w, plot.y + plot.h, axis);
  canvas.line(plot.x, plot.y, plot.x, plot.y + plot.h, axis);
  canvas.line(plot.x + plot.w, plot.y, plot.x + plot.w, plot.y + plot.h, axis);
  canvas.text(
    Math.round(plot.x + plot.w / 2 - textWidth(model.xLabel) / 2),
    layout.height - 18,
    model.xLabel,
    axis,
  );
  canvas.text(10, 10, model.yLabel, axis);

  model.series.forEach((series) => {
    const color = parseColor(series.color);
    const pts = series.points.map(
      ([x, y]) => [layout.toX(x), layout.toY(y)] as [number, number],
    );
    canvas.polyline(pts, color, series.dashed ? { dash: [6, 4] } : { thickness: 2 });
    if (!series.dashed) {
      for (const [x, y] of pts) canvas.marker(x, y, color);
    }
  });
  model.series.forEach((series, i) => {
    const color = parseColor(series.color);
    const lx = plot.x + 12;
    const ly = plot.y + 12 + 14 * i;
    canvas.line(lx, ly + 3, lx + 22, ly + 3, color, series.dashed ? { dash: [6, 4] } : { thickness: 2 });
    canvas.text(lx + 28, ly, series.label, axis);
  });
  return encodePng(canvas, { datahash: dataHash });
}
