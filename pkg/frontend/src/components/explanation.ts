// Prediction explanation views: probability bars, the confidence gauge with
// its reliance bands, the neighbor table, and the mini-graph drawing.

import type { PredictionReport } from "../types";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function formatPercent(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}

export function probabilityBars(probabilities: Record<string, number>): HTMLElement {
  const wrap = el("div", "probability-bars");
  for (const [name, p] of Object.entries(probabilities)) {
    const row = el("div", "probability-row");
    row.dataset.class = name;
    const label = el("span", "probability-label", name);
    const track = el("div", "probability-track");
    const fill = el("div", `probability-fill class-${name}`);
    fill.style.width = `${(p * 100).toFixed(2)}%`;
    track.appendChild(fill);
    const value = el("span", "probability-value", formatPercent(p));
    row.append(label, track, value);
    wrap.appendChild(row);
  }
  return wrap;
}

export function confidenceGauge(
  confidence: number | null,
  bucket: string | null,
): HTMLElement {
  const wrap = el("div", "confidence-gauge");
  if (confidence === null) {
    wrap.appendChild(el("p", "gauge-empty", "no confidence score for this model variant"));
    return wrap;
  }
  const track = el("div", "gauge-track");
  // Reliance bands: below 0.3 self-dominant, above 0.7 graph-dependent.
  for (const [cls, left, width] of [
    ["band-self", 0, 30],
    ["band-middle", 30, 40],
    ["band-graph", 70, 30],
  ] as const) {
    const band = el("div", `gauge-band ${cls}`);
    band.style.left = `${left}%`;
    band.style.width = `${width}%`;
    track.appendChild(band);
  }
  const needle = el("div", "gauge-needle");
  needle.style.left = `${(confidence * 100).toFixed(2)}%`;
  track.appendChild(needle);
  wrap.appendChild(track);
  const caption = el("div", "gauge-caption");
  caption.dataset.bucket = bucket ?? "";
  caption.textContent = `confidence ${confidence.toFixed(3)} · ${bucket ?? "?"}`;
  wrap.appendChild(caption);
  return wrap;
}

export function neighborTable(report: PredictionReport): HTMLElement {
  const table = el("table", "neighbor-table");
  const head = el("tr");
  for (const title of ["#", "patient", "label", "similarity", "attention", "contribution"]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);
  report.neighbors.forEach((nb, rank) => {
    const row = el("tr");
    row.dataset.trainRow = String(nb.train_row);
    row.appendChild(el("td", undefined, String(rank + 1)));
    row.appendChild(el("td", undefined, `#${nb.train_row}`));
    row.appendChild(el("td", `label-${nb.label}`, nb.label));
    row.appendChild(el("td", undefined, nb.similarity.toFixed(3)));
    row.appendChild(el("td", undefined, nb.attention.toFixed(3)));
    row.appendChild(el("td", undefined, formatPercent(nb.contribution)));
    table.appendChild(row);
  });
  return table;
}

/** Radial mini-graph: the new patient sits at the center, neighbors on a
 * ring, circle area scaled by contribution. */
export function miniGraphView(report: PredictionReport): SVGSVGElement {
  const size = 320;
  const center = size / 2;
  const ring = size * 0.36;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${size} ${size}`);
  svg.setAttribute("class", "mini-graph");

  const byRow = new Map(report.neighbors.map((nb) => [nb.train_row, nb]));
  const positions = new Map<number, [number, number]>();
  positions.set(0, [center, center]);
  report.mini_graph.train_row_ids.forEach((row, index) => {
    const angle = (2 * Math.PI * index) / report.mini_graph.train_row_ids.length;
    positions.set(index + 1, [
      center + ring * Math.cos(angle),
      center + ring * Math.sin(angle),
    ]);
  });

  for (const edge of report.mini_graph.edges) {
    const from = positions.get(edge.src);
    const to = positions.get(edge.dst);
    if (!from || !to) continue;
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", from[0].toFixed(1));
    line.setAttribute("y1", from[1].toFixed(1));
    line.setAttribute("x2", to[0].toFixed(1));
    line.setAttribute("y2", to[1].toFixed(1));
    line.setAttribute(
      "class",
      edge.dst === 0 ? "graph-edge graph-edge-in" : "graph-edge",
    );
    svg.appendChild(line);
  }

  report.mini_graph.train_row_ids.forEach((row, index) => {
    const nb = byRow.get(row);
    const [x, y] = positions.get(index + 1)!;
    const node = document.createElementNS(SVG_NS, "circle");
    node.setAttribute("cx", x.toFixed(1));
    node.setAttribute("cy", y.toFixed(1));
    node.setAttribute("r", (6 + 16 * (nb?.contribution ?? 0)).toFixed(1));
    node.setAttribute("class", `graph-node label-${nb?.label ?? "unknown"}`);
    node.dataset.trainRow = String(row);
    svg.appendChild(node);
  });

  const patient = document.createElementNS(SVG_NS, "circle");
  patient.setAttribute("cx", String(center));
  patient.setAttribute("cy", String(center));
  patient.setAttribute("r", "11");
  patient.setAttribute("class", "graph-node graph-node-patient");
  svg.appendChild(patient);
  return svg;
}

export function explanationView(report: PredictionReport): HTMLElement {
  const card = el("div", "explanation-card");
  const headline = el("h3", "prediction-headline");
  headline.dataset.predictedClass = report.predicted_class;
  headline.textContent = `Predicted: ${report.predicted_class}`;
  card.appendChild(headline);
  card.appendChild(probabilityBars(report.probabilities));
  card.appendChild(confidenceGauge(report.confidence, report.reliance_bucket));
  card.appendChild(neighborTable(report));
  card.appendChild(miniGraphView(report));
  const meta = el("p", "report-meta");
  meta.textContent = `model ${report.model_id.slice(0, 12)} · ${report.timestamp}`;
  card.appendChild(meta);
  return card;
}
