// Robustness-curve chart model: a pure mapping from (iteration, accuracy)
// pairs to SVG coordinates. The rendered points carry the report's numbers
// verbatim so tests can assert the chart shows exactly what was measured.

export interface ChartPoint {
  iteration: number;
  accuracy: number;
  x: number;
  y: number;
}

export interface ChartModel {
  width: number;
  height: number;
  pad: number;
  points: ChartPoint[];
  path: string;
  yTicks: { value: number; y: number }[];
  xTicks: { value: number; x: number }[];
}

export function chartModel(
  pairs: [number, number][],
  width = 560,
  height = 240,
  pad = 36,
): ChartModel {
  const innerW = width - 2 * pad;
  const innerH = height - 2 * pad;
  const maxIter = Math.max(1, ...pairs.map(([i]) => i));
  const points = pairs.map(([iteration, accuracy]) => ({
    iteration,
    accuracy,
    x: pad + (iteration / maxIter) * innerW,
    y: pad + (1 - accuracy) * innerH,
  }));
  const path = points
    .map((p, idx) => `${idx === 0 ? "M" : "L"}${p.x.toFixed(2)},${p.y.toFixed(2)}`)
    .join(" ");
  const yTicks = [0, 0.25, 0.5, 0.75, 1].map((value) => ({
    value,
    y: pad + (1 - value) * innerH,
  }));
  const xTicks = pairs.map(([iteration]) => ({
    value: iteration,
    x: pad + (iteration / maxIter) * innerW,
  }));
  return { width, height, pad, points, path, yTicks, xTicks };
}

export function chartSvg(model: ChartModel): string {
  const { width, height, pad } = model;
  const axis =
    `<line x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}" class="axis"/>` +
    `<line x1="${pad}" y1="${pad}" x2="${pad}" y2="${height - pad}" class="axis"/>`;
  const yLabels = model.yTicks
    .map(
      (t) =>
        `<text x="${pad - 6}" y="${t.y + 4}" text-anchor="end" class="tick">${t.value.toFixed(2)}</text>` +
        `<line x1="${pad}" y1="${t.y}" x2="${width - pad}" y2="${t.y}" class="grid"/>`,
    )
    .join("");
  const xLabels = model.xTicks
    .map((t) => `<text x="${t.x}" y="${height - pad + 16}" text-anchor="middle" class="tick">${t.value}</text>`)
    .join("");
  const dots = model.points
    .map(
      (p) =>
        `<circle cx="${p.x.toFixed(2)}" cy="${p.y.toFixed(2)}" r="3" class="dot">` +
        `<title>iteration ${p.iteration}: ${p.accuracy.toFixed(3)}</title></circle>`,
    )
    .join("");
  return (
    `<svg viewBox="0 0 ${width} ${height}" width="${width}" height="${height}" role="img">` +
    `${yLabels}${axis}<path d="${model.path}" class="curve" fill="none"/>${dots}${xLabels}</svg>`
  );
}

export function parseCurveCsv(text: string): [number, number][] {
  const lines = text.trim().split(/\r?\n/);
  if (lines[0] !== "iteration,accuracy") {
    throw new Error(`unexpected curve header: ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const [i, a] = line.split(",");
    return [Number.parseInt(i, 10), Number.parseFloat(a)] as [number, number];
  });
}
