// Console shell: tab bar over the predict, metrics, ablation, and training
// panels.

import { ApiClient, FetchLike } from "./api";
import { AblationPanel, MetricsPanel, TrainingPanel } from "./panels/dashboards";
import { PredictPanel } from "./panels/predict";

const TABS = ["predict", "metrics", "ablation", "training"] as const;
export type TabName = (typeof TABS)[number];

export class App {
  readonly root: HTMLElement;
  readonly predict: PredictPanel;
  readonly metrics: MetricsPanel;
  readonly ablation: AblationPanel;
  readonly training: TrainingPanel;
  private active: TabName = "predict";
  private host: HTMLElement;

  constructor(fetchFn?: FetchLike) {
    const api = new ApiClient(fetchFn);
    this.predict = new PredictPanel(api, () => this.show("training"));
    this.metrics = new MetricsPanel(api);
    this.ablation = new AblationPanel(api);
    this.training = new TrainingPanel(api, () => void this.metrics.refresh());

    this.root = document.createElement("div");
    this.root.className = "app";
    const header = document.createElement("header");
    header.innerHTML = `<h1>Diabetes typing console</h1>
      <p class="subtitle">patient-similarity graph classifier with confidence-guided explanations</p>`;
    const nav = document.createElement("nav");
    nav.className = "tab-bar";
    for (const tab of TABS) {
      const button = document.createElement("button");
      button.type = "button";
      button.dataset.tab = tab;
      button.textContent = tab;
      button.addEventListener("click", () => this.show(tab));
      nav.appendChild(button);
    }
    this.host = document.createElement("main");
    this.root.append(header, nav, this.host);
    this.show("predict");
  }

  show(tab: TabName): void {
    this.active = tab;
    for (const button of this.root.querySelectorAll<HTMLButtonElement>(".tab-bar button")) {
      button.classList.toggle("active", button.dataset.tab === tab);
    }
    this.host.replaceChildren();
    if (tab === "predict") {
      this.host.appendChild(this.predict.root);
      this.predict.refreshValidation();
    } else if (tab === "metrics") {
      this.host.appendChild(this.metrics.root);
      void this.metrics.refresh();
    } else if (tab === "ablation") {
      this.host.appendChild(this.ablation.root);
      void this.ablation.refresh();
    } else {
      this.host.appendChild(this.training.root);
    }
  }

  get activeTab(): TabName {
    return this.active;
  }
}
