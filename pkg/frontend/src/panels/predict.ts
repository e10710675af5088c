// Patient entry form, prediction card, and the what-if comparison flow.
// At most one predict request is in flight; a newer submit supersedes the
// response of an older one.

import { ApiClient, ApiError, fieldErrors } from "../api";
import { explanationView, formatPercent } from "../components/explanation";
import type { PredictionReport, PredictRequest } from "../types";
import {
  FIELDS,
  FormState,
  buildPredictRequest,
  emptyForm,
  validateForm,
} from "../validation";

export interface PredictSnapshot {
  request: PredictRequest;
  report: PredictionReport;
}

export class PredictPanel {
  readonly root: HTMLElement;
  history: PredictSnapshot[] = [];
  private requestToken = 0;
  private form: HTMLFormElement;
  private resultHost: HTMLElement;
  private banner: HTMLElement;
  private submitButton!: HTMLButtonElement;

  constructor(
    private api: ApiClient,
    private onNeedTraining?: () => void,
  ) {
    this.root = document.createElement("section");
    this.root.className = "panel predict-panel";
    this.banner = document.createElement("div");
    this.banner.className = "banner hidden";
    this.form = this.buildForm();
    this.resultHost = document.createElement("div");
    this.resultHost.className = "result-host";
    this.root.append(this.banner, this.form, this.resultHost);
  }

  private buildForm(): HTMLFormElement {
    const form = document.createElement("form");
    form.className = "patient-form";
    form.noValidate = true;
    for (const spec of FIELDS) {
      const row = document.createElement("div");
      row.className = "form-row";
      row.dataset.field = spec.name;

      const label = document.createElement("label");
      label.htmlFor = `field-${spec.name}`;
      label.textContent = `${spec.label} (${spec.unit})`;

      const input = document.createElement("input");
      input.type = "text";
      input.id = `field-${spec.name}`;
      input.name = spec.name;
      input.placeholder = `${spec.min}–${spec.max}`;

      const unknown = document.createElement("input");
      unknown.type = "checkbox";
      unknown.id = `unknown-${spec.name}`;
      unknown.className = "unknown-toggle";
      const unknownLabel = document.createElement("label");
      unknownLabel.htmlFor = unknown.id;
      unknownLabel.textContent = "unknown";

      const note = document.createElement("span");
      note.className = "field-note";

      unknown.addEventListener("change", () => {
        input.disabled = unknown.checked;
        this.refreshValidation();
      });
      input.addEventListener("input", () => this.refreshValidation());

      row.append(label, input, unknown, unknownLabel, note);
      form.appendChild(row);
    }
    this.submitButton = document.createElement("button");
    this.submitButton.type = "submit";
    this.submitButton.textContent = "Predict";
    form.appendChild(this.submitButton);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit();
    });
    return form;
  }

  readFormState(): FormState {
    const state = emptyForm();
    for (const spec of FIELDS) {
      const input = this.form.querySelector<HTMLInputElement>(`#field-${spec.name}`)!;
      const unknown = this.form.querySelector<HTMLInputElement>(`#unknown-${spec.name}`)!;
      state[spec.name] = { text: input.value, unknown: unknown.checked };
    }
    return state;
  }

  writeFormState(state: FormState): void {
    for (const spec of FIELDS) {
      const input = this.form.querySelector<HTMLInputElement>(`#field-${spec.name}`)!;
      const unknown = this.form.querySelector<HTMLInputElement>(`#unknown-${spec.name}`)!;
      input.value = state[spec.name].text;
      unknown.checked = state[spec.name].unknown;
      input.disabled = unknown.checked;
    }
    this.refreshValidation();
  }

  refreshValidation(): void {
    const state = this.readFormState();
    const validation = validateForm(state);
    for (const spec of FIELDS) {
      const row = this.form.querySelector<HTMLElement>(`[data-field="${spec.name}"]`)!;
      const note = row.querySelector<HTMLElement>(".field-note")!;
      const issue = validation.issues.find((i) => i.field === spec.name) ?? null;
      row.classList.toggle("has-error", issue?.severity === "error");
      row.classList.toggle("has-warning", issue?.severity === "warning");
      note.textContent = issue ? issue.message : "";
    }
    this.submitButton.disabled = !validation.canSubmit;
  }

  private showBanner(kind: "error" | "info", text: string, cta?: HTMLElement): void {
    this.banner.className = `banner banner-${kind}`;
    this.banner.textContent = text;
    if (cta) this.banner.appendChild(cta);
  }

  private clearBanner(): void {
    this.banner.className = "banner hidden";
    this.banner.textContent = "";
  }

  async submit(): Promise<PredictionReport | null> {
    const state = this.readFormState();
    const validation = validateForm(state);
    if (!validation.canSubmit) return null;
    const body = buildPredictRequest(state);
    const token = ++this.requestToken;
    try {
      const report = await this.api.predict(body);
      if (token !== this.requestToken) return null; // superseded
      this.clearBanner();
      this.history.push({ request: body, report });
      this.renderResult();
      return report;
    } catch (error) {
      if (token !== this.requestToken) return null;
      this.handleError(error);
      return null;
    }
  }

  private handleError(error: unknown): void {
    if (error instanceof ApiError && error.status === 422) {
      const perField = fieldErrors(error);
      for (const [field, message] of Object.entries(perField)) {
        const row = this.form.querySelector<HTMLElement>(`[data-field="${field}"]`);
        if (row) {
          row.classList.add("has-error");
          row.querySelector<HTMLElement>(".field-note")!.textContent = message;
        }
      }
      this.showBanner("error", "the service rejected some fields");
      return;
    }
    if (error instanceof ApiError && error.status === 503) {
      const cta = document.createElement("button");
      cta.type = "button";
      cta.className = "banner-cta";
      cta.textContent = "open the training panel";
      cta.addEventListener("click", () => this.onNeedTraining?.());
      this.showBanner("info", "no model is loaded yet — train one first. ", cta);
      return;
    }
    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "banner-cta";
    retry.textContent = "retry";
    retry.addEventListener("click", () => void this.submit());
    this.showBanner("error", "the service is unreachable. ", retry);
  }

  renderResult(): void {
    this.resultHost.replaceChildren();
    if (this.history.length === 0) return;
    const latest = this.history[this.history.length - 1];
    this.resultHost.appendChild(explanationView(latest.report));
    if (this.history.length > 1) {
      const baseline = this.history[this.history.length - 2];
      this.resultHost.appendChild(deltaSummary(baseline.report, latest.report));
    }
    this.resultHost.appendChild(historyList(this.history));
  }
}

export function deltaSummary(
  before: PredictionReport,
  after: PredictionReport,
): HTMLElement {
  const wrap = document.createElement("div");
  wrap.className = "delta-summary";
  const title = document.createElement("h4");
  title.textContent = "What-if comparison";
  wrap.appendChild(title);
  const list = document.createElement("ul");
  for (const name of Object.keys(after.probabilities)) {
    const delta = after.probabilities[name] - (before.probabilities[name] ?? 0);
    const item = document.createElement("li");
    item.dataset.class = name;
    item.dataset.delta = delta.toFixed(6);
    const sign = delta >= 0 ? "+" : "−";
    item.textContent = `${name}: ${formatPercent(after.probabilities[name])} (${sign}${formatPercent(Math.abs(delta))})`;
    list.appendChild(item);
  }
  wrap.appendChild(list);
  if (before.confidence !== null && after.confidence !== null) {
    const conf = document.createElement("p");
    conf.className = "delta-confidence";
    const delta = after.confidence - before.confidence;
    conf.dataset.delta = delta.toFixed(6);
    conf.textContent = `confidence ${after.confidence.toFixed(3)} (${delta >= 0 ? "+" : ""}${delta.toFixed(3)})`;
    wrap.appendChild(conf);
  }
  return wrap;
}

export function historyList(history: PredictSnapshot[]): HTMLElement {
  const wrap = document.createElement("ol");
  wrap.className = "predict-history";
  history.forEach((snapshot, index) => {
    const item = document.createElement("li");
    item.dataset.index = String(index);
    item.textContent = `${index === 0 ? "baseline" : `edit ${index}`}: ${snapshot.report.predicted_class} (${formatPercent(
      snapshot.report.probabilities[snapshot.report.predicted_class] ?? 0,
    )})`;
    wrap.appendChild(item);
  });
  return wrap;
}
