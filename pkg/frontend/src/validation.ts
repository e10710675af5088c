// Patient form model: parsing, plausible-range hints, and serialization to
// the predict request body. Range bounds are soft warnings from the cohort's
// descriptive statistics; only negative values are hard errors, mirroring
// the service rule.

import type { PredictRequest } from "./types";

export interface FieldSpec {
  name: string;
  label: string;
  unit: string;
  min: number;
  max: number;
}

export const FIELDS: FieldSpec[] = [
  { name: "age", label: "Age", unit: "years", min: 18, max: 87 },
  { name: "bmi", label: "BMI", unit: "kg/m²", min: 17.1, max: 47.8 },
  { name: "fpg", label: "Fasting plasma glucose", unit: "mg/dL", min: 70, max: 312 },
  { name: "hba1c", label: "HbA1c", unit: "%", min: 5.1, max: 13.4 },
  { name: "sbp", label: "Systolic BP", unit: "mmHg", min: 95, max: 188 },
  { name: "dbp", label: "Diastolic BP", unit: "mmHg", min: 55, max: 112 },
  { name: "pregnancies", label: "Pregnancies", unit: "count", min: 0, max: 10 },
];

export interface FieldState {
  text: string;
  unknown: boolean;
}

export type FormState = Record<string, FieldState>;

export interface FieldIssue {
  field: string;
  severity: "error" | "warning";
  message: string;
}

export function emptyForm(): FormState {
  const state: FormState = {};
  for (const spec of FIELDS) state[spec.name] = { text: "", unknown: false };
  return state;
}

export function parseField(
  spec: FieldSpec,
  state: FieldState,
): { value: number | null; issue: FieldIssue | null } {
  if (state.unknown) return { value: null, issue: null };
  const text = state.text.trim();
  if (text === "") {
    return {
      value: null,
      issue: {
        field: spec.name,
        severity: "error",
        message: "enter a value or mark it unknown",
      },
    };
  }
  const value = Number(text);
  if (!Number.isFinite(value)) {
    return {
      value: null,
      issue: { field: spec.name, severity: "error", message: "not a number" },
    };
  }
  if (value < 0) {
    return {
      value: null,
      issue: {
        field: spec.name,
        severity: "error",
        message: "negative measurements are implausible",
      },
    };
  }
  if (value < spec.min || value > spec.max) {
    return {
      value,
      issue: {
        field: spec.name,
        severity: "warning",
        message: `outside the usual ${spec.min}–${spec.max} ${spec.unit} range`,
      },
    };
  }
  return { value, issue: null };
}

export interface FormValidation {
  issues: FieldIssue[];
  canSubmit: boolean;
}

export function validateForm(state: FormState): FormValidation {
  const issues: FieldIssue[] = [];
  for (const spec of FIELDS) {
    const { issue } = parseField(spec, state[spec.name]);
    if (issue) issues.push(issue);
  }
  return {
    issues,
    canSubmit: !issues.some((issue) => issue.severity === "error"),
  };
}

/** Serialize the form into the predict request body; unknown fields as null. */
export function buildPredictRequest(state: FormState): PredictRequest {
  const body: PredictRequest = {};
  for (const spec of FIELDS) {
    const { value } = parseField(spec, state[spec.name]);
    body[spec.name] = state[spec.name].unknown ? null : value;
  }
  return body;
}

/** Inverse of the form rendering: rebuild the state from a request body. */
export function formFromRequest(body: PredictRequest): FormState {
  const state: FormState = {};
  for (const spec of FIELDS) {
    const value = body[spec.name];
    state[spec.name] =
      value === null || value === undefined
        ? { text: "", unknown: true }
        : { text: String(value), unknown: false };
  }
  return state;
}
