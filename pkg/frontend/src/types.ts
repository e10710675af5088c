// Wire types of the service JSON API. Every number the console renders is
// traceable to one of these fields; the UI performs no model math.

export type ClassName = "type1" | "type2" | "gestational";

export interface NeighborAttribution {
  train_row: number;
  similarity: number;
  edge_weight: number;
  attention: number;
  contribution: number;
  label: string;
}

export interface MiniGraphExport {
  node_count: number;
  edges: { src: number; dst: number; weight: number }[];
  k_per_node: number[];
  new_patient_node: number;
  train_row_ids: number[];
  similarities: number[];
}

export interface PredictionReport {
  predicted_class: string;
  probabilities: Record<string, number>;
  confidence: number | null;
  reliance_bucket: string | null;
  neighbors: NeighborAttribution[];
  mini_graph: MiniGraphExport;
  model_id: string;
  timestamp: string;
  model_version?: number | null;
}

/** (threshold | null, fpr, tpr) points, descending thresholds. */
export type RocPoint = [number | null, number, number];

export interface EvalReport {
  accuracy: number;
  confusion: number[][];
  class_names: string[];
  precision: number[];
  recall: number[];
  f1: number[];
  auc: (number | null)[];
  macro_precision: number;
  macro_recall: number;
  macro_f1: number;
  macro_auc: number | null;
  n_test: number;
  explainability: Record<string, number> | null;
  roc: Record<string, RocPoint[]> | null;
}

export interface AblationRow {
  name: string;
  accuracy: Record<string, number>;
  macro_f1: Record<string, number>;
  mean_accuracy: number | null;
  std_accuracy: number | null;
  mean_macro_f1: number | null;
  std_macro_f1: number | null;
  errors: Record<string, string> | null;
}

export interface AblationReport {
  seeds: number[];
  rows: AblationRow[];
}

export interface ModelInfo {
  version: number | null;
  model_id: string;
  schema_version: number;
  hidden_dim: number;
  variant: string;
  class_names: string[];
  feature_names: string[];
  n_train: number;
  config: Record<string, unknown>;
}

export interface JobStatus {
  id: string;
  kind: "train" | "ablate";
  status: "running" | "done" | "failed";
  progress: { epoch: number; total_epochs: number; loss: number } | null;
  report: Record<string, unknown> | null;
  error: string | null;
  rejected_rows: { line: number; reason: string }[];
}

/** Request body of POST /api/predict; null marks an unknown measurement. */
export type PredictRequest = Record<string, number | null>;
