// Metrics, ablation, and training panels. Each renders an empty-state
// placeholder until the service has the corresponding report.

import { ApiClient, ApiError } from "../api";
import { ablationTable, confusionHeatmap, rocChart } from "../components/charts";

function emptyState(text: string): HTMLElement {
  const box = document.createElement("div");
  box.className = "empty-state";
  box.textContent = text;
  return box;
}

export class MetricsPanel {
  readonly root: HTMLElement;

  constructor(private api: ApiClient) {
    this.root = document.createElement("section");
    this.root.className = "panel metrics-panel";
  }

  async refresh(): Promise<void> {
    this.root.replaceChildren();
    try {
      const report = await this.api.metrics();
      const heading = document.createElement("h3");
      heading.textContent = "Confusion matrix";
      this.root.append(heading, confusionHeatmap(report));
      const roc = await this.api.roc();
      const rocHeading = document.createElement("h3");
      rocHeading.textContent = "One-vs-rest ROC";
      this.root.append(rocHeading, rocChart(roc.classes));
      const summary = document.createElement("p");
      summary.className = "metrics-summary";
      summary.textContent =
        `macro F1 ${(report.macro_f1 * 100).toFixed(1)}%` +
        (report.macro_auc !== null ? ` · macro AUC ${report.macro_auc.toFixed(3)}` : "");
      this.root.appendChild(summary);
    } catch (error) {
      if (error instanceof ApiError && error.status === 503) {
        this.root.appendChild(emptyState("no evaluation yet — train a model first"));
        return;
      }
      this.root.appendChild(emptyState("metrics unavailable: service unreachable"));
    }
  }
}

export class AblationPanel {
  readonly root: HTMLElement;

  constructor(private api: ApiClient) {
    this.root = document.createElement("section");
    this.root.className = "panel ablation-panel";
  }

  async refresh(): Promise<void> {
    this.root.replaceChildren();
    try {
      const report = await this.api.ablation();
      this.root.appendChild(ablationTable(report));
    } catch (error) {
      if (error instanceof ApiError && error.status === 503) {
        this.root.appendChild(emptyState("no ablation results yet"));
        return;
      }
      this.root.appendChild(emptyState("ablation table unavailable"));
    }
  }
}

export class TrainingPanel {
  readonly root: HTMLElement;
  private startButton: HTMLButtonElement;
  private status: HTMLElement;
  private pollTimer: number | null = null;

  constructor(
    private api: ApiClient,
    private onModelReady?: () => void,
  ) {
    this.root = document.createElement("section");
    this.root.className = "panel training-panel";

    const form = document.createElement("form");
    form.className = "training-form";
    form.innerHTML = `
      <label>patients <input name="n" type="number" value="540" min="30"></label>
      <label>data seed <input name="seed" type="number" value="7"></label>
      <label>epochs <input name="epochs" type="number" value="150" min="1"></label>
      <label>training seed <input name="train_seed" type="number" value="7"></label>
    `;
    this.startButton = document.createElement("button");
    this.startButton.type = "submit";
    this.startButton.textContent = "Train on synthetic cohort";
    form.appendChild(this.startButton);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.start(form);
    });

    this.status = document.createElement("div");
    this.status.className = "training-status";
    this.root.append(form, this.status);
  }

  private async start(form: HTMLFormElement): Promise<void> {
    const data = new FormData(form);
    const body = {
      synthetic: { n: Number(data.get("n")), seed: Number(data.get("seed")) },
      config: {
        epochs: Number(data.get("epochs")),
        seed: Number(data.get("train_seed")),
      },
    };
    this.startButton.disabled = true;
    this.status.textContent = "submitting job…";
    try {
      const { job_id } = await this.api.startTraining(body);
      this.poll(job_id);
    } catch (error) {
      this.startButton.disabled = false;
      this.status.textContent =
        error instanceof ApiError && error.status === 409
          ? "a job is already running"
          : "failed to start the job";
    }
  }

  private poll(jobId: string): void {
    const tick = async () => {
      try {
        const job = await this.api.job(jobId);
        if (job.status === "running") {
          const p = job.progress;
          this.status.textContent = p
            ? `epoch ${p.epoch}/${p.total_epochs} · loss ${p.loss.toFixed(4)}`
            : "starting…";
          this.pollTimer = window.setTimeout(tick, 500);
          return;
        }
        this.startButton.disabled = false;
        if (job.status === "done") {
          this.status.textContent = "training finished";
          this.onModelReady?.();
        } else {
          this.status.textContent = `training failed: ${job.error}`;
        }
      } catch {
        this.startButton.disabled = false;
        this.status.textContent = "lost contact with the job";
      }
    };
    void tick();
  }

  dispose(): void {
    if (this.pollTimer !== null) window.clearTimeout(this.pollTimer);
  }
}
