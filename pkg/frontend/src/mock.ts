// Fixture-backed fetch: lets the console (and its test suite) run without
// the Python service. Fixtures are recorded from a real service session.

import predictReport from "../fixtures/predict_report.json";
import metricsReport from "../fixtures/metrics.json";
import ablationReport from "../fixtures/ablation.json";
import modelInfo from "../fixtures/model.json";
import rocData from "../fixtures/roc.json";
import type { FetchLike } from "./api";

function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function mockFetch(): FetchLike {
  let jobPolls = 0;
  return async (input: string, init?: RequestInit) => {
    const url = typeof input === "string" ? input : String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    if (path === "/api/health") return jsonResponse({ status: "ok" });
    if (path === "/api/predict" && init?.method === "POST") {
      return jsonResponse(predictReport);
    }
    if (path === "/api/metrics") return jsonResponse(metricsReport);
    if (path === "/api/roc") return jsonResponse(rocData);
    if (path === "/api/ablation") return jsonResponse(ablationReport);
    if (path === "/api/model") return jsonResponse(modelInfo);
    if (path === "/api/train" && init?.method === "POST") {
      jobPolls = 0;
      return jsonResponse({ job_id: "job-mock" }, 202);
    }
    if (path.startsWith("/api/jobs/")) {
      jobPolls += 1;
      if (jobPolls < 3) {
        return jsonResponse({
          id: "job-mock", kind: "train", status: "running",
          progress: { epoch: jobPolls * 50, total_epochs: 150, loss: 0.4 / jobPolls },
          report: null, error: null, rejected_rows: [],
        });
      }
      return jsonResponse({
        id: "job-mock", kind: "train", status: "done", progress: null,
        report: metricsReport, error: null, rejected_rows: [],
      });
    }
    return jsonResponse({ detail: `no mock for ${path}` }, 404);
  };
}
