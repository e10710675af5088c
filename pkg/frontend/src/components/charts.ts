// Dashboard views: confusion heatmap, one-vs-rest ROC curves, and the
// ablation table. All values come straight from service reports.

import type { AblationReport, EvalReport, RocPoint } from "../types";

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

export function confusionHeatmap(report: EvalReport): HTMLElement {
  const wrap = el("div", "confusion-heatmap");
  const table = el("table", "heatmap-table");
  const head = el("tr");
  head.appendChild(el("th", undefined, "true \\ predicted"));
  for (const name of report.class_names) head.appendChild(el("th", undefined, name));
  table.appendChild(head);
  const peak = Math.max(1, ...report.confusion.flat());
  report.confusion.forEach((row, t) => {
    const tr = el("tr");
    tr.appendChild(el("th", undefined, report.class_names[t]));
    row.forEach((count, p) => {
      const cell = el("td", "heatmap-cell", String(count));
      cell.dataset.true = report.class_names[t];
      cell.dataset.pred = report.class_names[p];
      cell.dataset.count = String(count);
      const intensity = count / peak;
      cell.style.backgroundColor = `rgba(43, 108, 176, ${(0.08 + 0.8 * intensity).toFixed(3)})`;
      if (intensity > 0.55) cell.classList.add("heatmap-cell-dark");
      tr.appendChild(cell);
    });
    table.appendChild(tr);
  });
  wrap.appendChild(table);
  wrap.appendChild(
    el("p", "heatmap-caption",
       `accuracy ${(report.accuracy * 100).toFixed(1)}% over ${report.n_test} test patients`),
  );
  return wrap;
}

export function rocChart(curves: Record<string, RocPoint[]>): SVGSVGElement {
  const size = 360;
  const pad = 34;
  const span = size - 2 * pad;
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${size} ${size}`);
  svg.setAttribute("class", "roc-chart");

  const x = (fpr: number) => pad + fpr * span;
  const y = (tpr: number) => size - pad - tpr * span;

  const frame = document.createElementNS(SVG_NS, "rect");
  frame.setAttribute("x", String(pad));
  frame.setAttribute("y", String(pad));
  frame.setAttribute("width", String(span));
  frame.setAttribute("height", String(span));
  frame.setAttribute("class", "roc-frame");
  svg.appendChild(frame);

  const diagonal = document.createElementNS(SVG_NS, "line");
  diagonal.setAttribute("x1", String(x(0)));
  diagonal.setAttribute("y1", String(y(0)));
  diagonal.setAttribute("x2", String(x(1)));
  diagonal.setAttribute("y2", String(y(1)));
  diagonal.setAttribute("class", "roc-diagonal");
  svg.appendChild(diagonal);

  for (const [name, points] of Object.entries(curves)) {
    const path = points
      .map(([, fpr, tpr]) => `${x(fpr).toFixed(1)},${y(tpr).toFixed(1)}`)
      .join(" ");
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", path);
    line.setAttribute("class", `roc-curve curve-${name}`);
    line.dataset.class = name;
    svg.appendChild(line);
  }
  return svg;
}

export function ablationTable(report: AblationReport): HTMLElement {
  const table = el("table", "ablation-table");
  const head = el("tr");
  for (const title of ["configuration", "mean accuracy", "std", "mean macro F1", "std"]) {
    head.appendChild(el("th", undefined, title));
  }
  table.appendChild(head);
  const best = Math.max(
    ...report.rows.map((r) => r.mean_accuracy ?? Number.NEGATIVE_INFINITY),
  );
  for (const row of report.rows) {
    const tr = el("tr");
    tr.dataset.name = row.name;
    tr.appendChild(el("td", undefined, row.name));
    const fmt = (v: number | null) => (v === null ? "failed" : v.toFixed(4));
    const acc = el("td", undefined, fmt(row.mean_accuracy));
    if (row.mean_accuracy !== null && row.mean_accuracy === best) {
      acc.classList.add("ablation-best");
    }
    tr.appendChild(acc);
    tr.appendChild(el("td", undefined, fmt(row.std_accuracy)));
    tr.appendChild(el("td", undefined, fmt(row.mean_macro_f1)));
    tr.appendChild(el("td", undefined, fmt(row.std_macro_f1)));
    table.appendChild(tr);
  }
  const wrap = el("div", "ablation-wrap");
  wrap.appendChild(table);
  wrap.appendChild(el("p", "ablation-caption", `seeds: ${report.seeds.join(", ")}`));
  return wrap;
}
