/** Typed client for the lorlut session API. All viewer pixels come from here. */

export type Axis = "r" | "g" | "b";

export interface SessionMeta {
  id: string;
  G: number;
  K: number;
  R: number;
  scales: number[];
}

export interface Metrics {
  psnr: number | null;
  mean_de00: number;
}

export interface FactorComponent {
  index: number;
  u: number[];
  v: number[];
  w: number[];
  c: number[];
  magnitude: number;
  scale: number;
}

export interface FactorsPayload {
  grid: number;
  rank: number;
  components: FactorComponent[];
}

export interface SlicePayload {
  axis: Axis;
  index: number;
  grid: number;
  /** rows[i][j] is the clamped RGB triple at lattice cell (i, j) of the plane. */
  rows: number[][][];
}

export interface FitReport {
  steps: number;
  duration_s: number;
  final_loss: number;
  psnr: number | null;
  ssim: number | null;
  mean_de00: number;
}

export type FitResponse = SessionMeta & { report: FitReport };

export interface FitOptions {
  steps?: number;
  rank?: number;
  grid?: number;
  seed?: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function errorFrom(res: Response): Promise<ApiError> {
  let detail = res.statusText || `HTTP ${res.status}`;
  try {
    const body = (await res.json()) as { detail?: unknown };
    if (typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(res.status, detail);
}

async function asJson<T>(res: Response): Promise<T> {
  if (!res.ok) throw await errorFrom(res);
  return (await res.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  private url(path: string): string {
    return `${this.base}/v1${path}`;
  }

  async health(): Promise<{ status: string; version: string }> {
    return asJson(await fetch(this.url("/health")));
  }

  async createSession(image: Blob, model?: Blob): Promise<SessionMeta> {
    const form = new FormData();
    form.append("image", image, "image.png");
    if (model) form.append("model", model, "model.lorlut");
    return asJson(await fetch(this.url("/sessions"), { method: "POST", body: form }));
  }

  async putScales(sessionId: string, scales: number[]): Promise<number[]> {
    const res = await fetch(this.url(`/sessions/${sessionId}/scales`), {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(scales),
    });
    const body = await asJson<{ scales: number[] }>(res);
    return body.scales;
  }

  async fetchPreview(sessionId: string): Promise<Blob> {
    const res = await fetch(this.url(`/sessions/${sessionId}/preview`));
    if (!res.ok) throw await errorFrom(res);
    return res.blob();
  }

  async fetchMetrics(sessionId: string): Promise<Metrics> {
    return asJson(await fetch(this.url(`/sessions/${sessionId}/metrics`)));
  }

  async fetchFactors(sessionId: string): Promise<FactorsPayload> {
    return asJson(await fetch(this.url(`/sessions/${sessionId}/factors`)));
  }

  async fetchSlice(sessionId: string, axis: Axis, index: number): Promise<SlicePayload> {
    const query = `axis=${axis}&index=${index}`;
    return asJson(await fetch(this.url(`/sessions/${sessionId}/lut/slice?${query}`)));
  }

  async fit(sessionId: string, target: Blob, options: FitOptions = {}): Promise<FitResponse> {
    const form = new FormData();
    form.append("target", target, "target.png");
    if (options.steps !== undefined) form.append("steps", String(options.steps));
    if (options.rank !== undefined) form.append("rank", String(options.rank));
    if (options.grid !== undefined) form.append("grid", String(options.grid));
    if (options.seed !== undefined) form.append("seed", String(options.seed));
    return asJson(await fetch(this.url(`/sessions/${sessionId}/fit`), { method: "POST", body: form }));
  }

  exportUrl(sessionId: string): string {
    return this.url(`/sessions/${sessionId}/export.cube`);
  }
}
