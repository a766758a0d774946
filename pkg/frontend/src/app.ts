/** Viewer application: wires the DOM to the session API.
 *
 * Every pixel shown comes from the server; the preview is a fetched
 * rendering, never a client-side recomputation. All server mutations run
 * through one MutationQueue, slider readouts only ever show values the
 * server has acknowledged, and a rejected update snaps the sliders back.
 */

import type { ApiClient, FactorsPayload, Metrics, SessionMeta } from "./api.js";
import { ApiError } from "./api.js";
import { CompareView } from "./compare.js";
import { drawCoefficientBar, drawComponentChart } from "./charts.js";
import { debounce } from "./debounce.js";
import { paintSlice } from "./heatmap.js";
import {
  MutationQueue,
  clampSliceIndex,
  initialState,
  scalesEqual,
  soloScales,
  type SliceAxis,
  type ViewerState,
} from "./state.js";

export const SCALE_MIN = -4;
export const SCALE_MAX = 4;
export const SCALE_STEP = 0.05;
const DEFAULT_DEBOUNCE_MS = 80;

export type ViewerApi = Pick<
  ApiClient,
  | "createSession"
  | "putScales"
  | "fetchPreview"
  | "fetchMetrics"
  | "fetchFactors"
  | "fetchSlice"
  | "fit"
  | "exportUrl"
>;

export interface AppOptions {
  debounceMs?: number;
}

export interface AppUi {
  imageInput: HTMLInputElement;
  modelInput: HTMLInputElement;
  openButton: HTMLButtonElement;
  sessionLine: HTMLElement;
  errorLine: HTMLElement;
  retryButton: HTMLButtonElement;
  compareCanvas: HTMLCanvasElement;
  modeSelect: HTMLSelectElement;
  wipeRange: HTMLInputElement;
  metricsLine: HTMLElement;
  sliderPanel: HTMLElement;
  resetButton: HTMLButtonElement;
  chartsPanel: HTMLElement;
  axisSelect: HTMLSelectElement;
  indexRange: HTMLInputElement;
  indexLabel: HTMLElement;
  sliceCanvas: HTMLCanvasElement;
  fitTarget: HTMLInputElement;
  fitSteps: HTMLInputElement;
  fitRank: HTMLInputElement;
  fitButton: HTMLButtonElement;
  fitReport: HTMLElement;
  exportLink: HTMLAnchorElement;
}

export interface App {
  state: ViewerState;
  queue: MutationQueue;
  ui: AppUi;
  compare: CompareView;
  openSession(image: Blob, model?: Blob): Promise<void>;
  /** Simulate a slider drag; the request still debounces and queues. */
  setSlider(index: number, value: number): void;
  flushScales(): void;
  refreshOutputs(): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = "",
  text = "",
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function canvasCtx(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  try {
    return canvas.getContext("2d");
  } catch {
    return null;
  }
}

function objectUrl(blob: Blob): string {
  try {
    return URL.createObjectURL(blob);
  } catch {
    return "";
  }
}

function formatMetrics(metrics: Metrics): string {
  const psnr = metrics.psnr === null ? "inf" : metrics.psnr.toFixed(2);
  return `PSNR ${psnr} dB · mean ΔE00 ${metrics.mean_de00.toFixed(3)}`;
}

function messageFrom(err: unknown): string {
  if (err instanceof ApiError) return `server rejected the request: ${err.message}`;
  if (err instanceof Error) return err.message;
  return String(err);
}

export function createApp(root: HTMLElement, api: ViewerApi, options: AppOptions = {}): App {
  const state = initialState();
  const queue = new MutationQueue();
  const debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS;

  // ---- static layout ----------------------------------------------------
  root.textContent = "";
  const header = el("header");
  header.append(el("h1", "", "lorlut viewer"));
  const sessionLine = el("span", "session-line", "no session");
  header.append(sessionLine);

  const errorLine = el("div", "error-line");
  const retryButton = el("button", "", "retry");
  retryButton.hidden = true;
  errorLine.hidden = true;

  const openPanel = el("section", "open-panel");
  const imageInput = el("input");
  imageInput.type = "file";
  imageInput.accept = "image/png,image/x-portable-pixmap";
  const modelInput = el("input");
  modelInput.type = "file";
  const openButton = el("button", "", "open");
  openPanel.append(
    el("label", "", "image"),
    imageInput,
    el("label", "", "model (optional)"),
    modelInput,
    openButton,
  );

  const comparePanel = el("section", "compare-panel");
  const compareCanvas = el("canvas");
  compareCanvas.width = 640;
  compareCanvas.height = 420;
  const modeSelect = el("select");
  for (const mode of ["split-wipe", "side-by-side"]) {
    const option = el("option", "", mode);
    option.value = mode;
    modeSelect.append(option);
  }
  const wipeRange = el("input");
  wipeRange.type = "range";
  wipeRange.min = "0";
  wipeRange.max = "1";
  wipeRange.step = "0.01";
  wipeRange.value = "0.5";
  const metricsLine = el("div", "metrics-line");
  comparePanel.append(compareCanvas, el("div", "compare-controls"), metricsLine);
  comparePanel.querySelector(".compare-controls")!.append(modeSelect, wipeRange);

  const sliderSection = el("section", "slider-section");
  const sliderPanel = el("div", "slider-panel");
  const resetButton = el("button", "", "reset scales");
  sliderSection.append(el("h2", "", "components"), sliderPanel, resetButton);

  const chartsPanel = el("section", "charts-panel");

  const sliceSection = el("section", "slice-section");
  const axisSelect = el("select");
  for (const axis of ["r", "g", "b"]) {
    const option = el("option", "", axis);
    option.value = axis;
    axisSelect.append(option);
  }
  axisSelect.value = state.sliceAxis;
  const indexRange = el("input");
  indexRange.type = "range";
  indexRange.min = "0";
  indexRange.step = "1";
  indexRange.value = "0";
  const indexLabel = el("span", "", "0");
  const sliceCanvas = el("canvas");
  sliceCanvas.width = 264;
  sliceCanvas.height = 264;
  sliceSection.append(
    el("h2", "", "LUT slice"),
    axisSelect,
    indexRange,
    indexLabel,
    sliceCanvas,
  );

  const fitSection = el("section", "fit-section");
  const fitTarget = el("input");
  fitTarget.type = "file";
  const fitSteps = el("input");
  fitSteps.type = "number";
  fitSteps.value = "200";
  const fitRank = el("input");
  fitRank.type = "number";
  fitRank.value = "8";
  const fitButton = el("button", "", "fit to target");
  const fitReport = el("div", "fit-report");
  fitSection.append(
    el("h2", "", "fit"),
    el("label", "", "target"),
    fitTarget,
    el("label", "", "steps"),
    fitSteps,
    el("label", "", "rank"),
    fitRank,
    fitButton,
    fitReport,
  );

  const exportLink = el("a", "export-link", "download .cube");
  exportLink.hidden = true;

  root.append(
    header,
    errorLine,
    openPanel,
    comparePanel,
    sliderSection,
    chartsPanel,
    sliceSection,
    fitSection,
    exportLink,
  );
  errorLine.append(retryButton);

  const compare = new CompareView(compareCanvas);
  const beforeImage = new Image();
  const afterImage = new Image();
  beforeImage.onload = () => compare.setImages(beforeImage, afterImage);
  afterImage.onload = () => compare.setImages(beforeImage, afterImage);

  const ui: AppUi = {
    imageInput,
    modelInput,
    openButton,
    sessionLine,
    errorLine,
    retryButton,
    compareCanvas,
    modeSelect,
    wipeRange,
    metricsLine,
    sliderPanel,
    resetButton,
    chartsPanel,
    axisSelect,
    indexRange,
    indexLabel,
    sliceCanvas,
    fitTarget,
    fitSteps,
    fitRank,
    fitButton,
    fitReport,
    exportLink,
  };

  // ---- errors -----------------------------------------------------------
  function showError(message: string, retryable = false): void {
    errorLine.hidden = false;
    for (const node of [...errorLine.childNodes]) {
      if (node !== retryButton) node.remove();
    }
    errorLine.prepend(`${message} `);
    retryButton.hidden = !retryable;
  }

  function clearError(): void {
    errorLine.hidden = true;
    retryButton.hidden = true;
  }

  // ---- sliders ----------------------------------------------------------
  interface SliderRow {
    range: HTMLInputElement;
    readout: HTMLElement;
  }
  let sliderRows: SliderRow[] = [];
  // Last scales handed to the queue (or acknowledged); repeats are skipped
  // so releasing a slider at the same value twice sends one request.
  let lastRequested: number[] = [];

  const pushScales = debounce((values: number[]) => {
    const session = state.session;
    if (session === null) return;
    queue.submit(
      "scales",
      () => api.putScales(session.id, values),
      (acked) => {
        state.scales = acked;
        clearError();
        syncSliders();
        refreshOutputs();
      },
      (err) => {
        // Snap back to the acknowledged values.
        lastRequested = [...state.scales];
        syncSliders();
        showError(messageFrom(err));
      },
    );
  }, debounceMs);

  function requestScales(values: number[]): void {
    if (scalesEqual(values, lastRequested)) return;
    lastRequested = [...values];
    pushScales(values);
  }

  function syncSliders(): void {
    sliderRows.forEach((row, i) => {
      row.range.value = String(state.scales[i]);
      row.readout.textContent = state.scales[i].toFixed(2);
    });
  }

  function sliderTargets(): number[] {
    return sliderRows.map((row) => Number(row.range.value));
  }

  function buildSliders(): void {
    sliderPanel.textContent = "";
    sliderRows = [];
    const rank = state.session?.R ?? 0;
    if (rank === 0) {
      sliderPanel.append(el("p", "empty-state", "no residual components"));
      return;
    }
    for (let i = 0; i < rank; i++) {
      const row = el("div", "slider-row");
      const range = el("input");
      range.type = "range";
      range.min = String(SCALE_MIN);
      range.max = String(SCALE_MAX);
      range.step = String(SCALE_STEP);
      const readout = el("span", "scale-readout");
      const solo = el("button", "solo", "solo");
      solo.addEventListener("click", () => {
        const values = soloScales(state.scales, i);
        sliderRows.forEach((other, j) => (other.range.value = String(values[j])));
        requestScales(values);
        pushScales.flush();
      });
      range.addEventListener("input", () => requestScales(sliderTargets()));
      row.append(el("label", "", `s${i}`), range, readout, solo);
      sliderPanel.append(row);
      sliderRows.push({ range, readout });
    }
    syncSliders();
  }

  resetButton.addEventListener("click", () => {
    const ones = state.scales.map(() => 1);
    sliderRows.forEach((row, i) => (row.range.value = String(ones[i])));
    requestScales(ones);
    pushScales.flush();
  });

  // ---- server-derived panes ----------------------------------------------
  function refreshPreview(): void {
    const session = state.session;
    if (session === null) return;
    queue.submit(
      "preview",
      () => api.fetchPreview(session.id),
      (blob) => {
        const url = objectUrl(blob);
        if (url) afterImage.src = url;
        compare.setImages(beforeImage, afterImage);
      },
      (err) => showError(`preview failed: ${messageFrom(err)}`, true),
    );
  }

  function refreshMetrics(): void {
    const session = state.session;
    if (session === null) return;
    queue.submit(
      "metrics",
      () => api.fetchMetrics(session.id),
      (metrics) => {
        metricsLine.textContent = formatMetrics(metrics);
      },
      (err) => showError(`metrics failed: ${messageFrom(err)}`, true),
    );
  }

  function refreshSlice(): void {
    const session = state.session;
    if (session === null) return;
    const axis = state.sliceAxis;
    const index = state.sliceIndex;
    queue.submit(
      "slice",
      () => api.fetchSlice(session.id, axis, index),
      (slice) => paintSlice(sliceCanvas, slice),
      (err) => showError(`slice failed: ${messageFrom(err)}`, true),
    );
  }

  function renderCharts(payload: FactorsPayload): void {
    chartsPanel.textContent = "";
    chartsPanel.append(el("h2", "", "factor curves"));
    if (payload.rank === 0) {
      chartsPanel.append(el("p", "empty-state", "no components to plot"));
      return;
    }
    for (const component of payload.components) {
      const row = el("div", "chart-row");
      const title = el("div", "chart-title");
      title.textContent = `component ${component.index} · magnitude ${component.magnitude.toFixed(3)}`;
      const curves = el("canvas", "curve-canvas");
      curves.width = 240;
      curves.height = 120;
      const bar = el("canvas", "coeff-canvas");
      bar.width = 72;
      bar.height = 120;
      row.append(title, curves, bar);
      chartsPanel.append(row);
      const layout = { width: curves.width, height: curves.height, pad: 6 };
      const curveCtx = canvasCtx(curves);
      if (curveCtx) drawComponentChart(curveCtx, component, layout);
      const barCtx = canvasCtx(bar);
      if (barCtx) drawCoefficientBar(barCtx, component.c, { ...layout, width: bar.width });
    }
  }

  function refreshFactors(): void {
    const session = state.session;
    if (session === null) return;
    queue.submit(
      "factors",
      () => api.fetchFactors(session.id),
      renderCharts,
      (err) => showError(`factors failed: ${messageFrom(err)}`, true),
    );
  }

  function refreshOutputs(): void {
    refreshPreview();
    refreshMetrics();
    refreshSlice();
  }

  retryButton.addEventListener("click", () => {
    clearError();
    refreshOutputs();
  });

  // ---- session ----------------------------------------------------------
  function adoptSession(meta: SessionMeta): void {
    state.session = meta;
    state.scales = [...meta.scales];
    state.sliceIndex = clampSliceIndex(state.sliceIndex, meta.G);
    lastRequested = [...meta.scales];
    sessionLine.textContent = `session ${meta.id.slice(0, 8)} · G=${meta.G} K=${meta.K} R=${meta.R}`;
    indexRange.max = String(meta.G - 1);
    indexRange.value = String(state.sliceIndex);
    indexLabel.textContent = String(state.sliceIndex);
    exportLink.hidden = false;
    exportLink.href = api.exportUrl(meta.id);
    buildSliders();
    refreshFactors();
    refreshOutputs();
  }

  function openSession(image: Blob, model?: Blob): Promise<void> {
    const beforeUrl = objectUrl(image);
    return queue.submit(
      "session",
      () => api.createSession(image, model),
      (meta) => {
        clearError();
        if (beforeUrl) beforeImage.src = beforeUrl;
        adoptSession(meta);
      },
      (err) => showError(messageFrom(err)),
    );
  }

  openButton.addEventListener("click", () => {
    const image = imageInput.files?.[0];
    if (!image) {
      showError("choose an image first");
      return;
    }
    void openSession(image, modelInput.files?.[0] ?? undefined);
  });

  // ---- compare controls ---------------------------------------------------
  modeSelect.addEventListener("change", () => {
    state.compareMode = modeSelect.value === "side-by-side" ? "side-by-side" : "split-wipe";
    wipeRange.hidden = state.compareMode !== "split-wipe";
    compare.setMode(state.compareMode);
  });
  wipeRange.addEventListener("input", () => compare.setWipe(Number(wipeRange.value)));

  // ---- slice controls -----------------------------------------------------
  axisSelect.addEventListener("change", () => {
    state.sliceAxis = axisSelect.value as SliceAxis;
    refreshSlice();
  });
  indexRange.addEventListener("input", () => {
    const grid = state.session?.G ?? 1;
    state.sliceIndex = clampSliceIndex(Number(indexRange.value), grid);
    indexLabel.textContent = String(state.sliceIndex);
    refreshSlice();
  });

  // ---- fit and export -----------------------------------------------------
  fitButton.addEventListener("click", () => {
    const session = state.session;
    const target = fitTarget.files?.[0];
    if (session === null || !target) {
      showError("open a session and choose a target image first");
      return;
    }
    if (state.fitRunning) return;
    state.fitRunning = true;
    fitButton.disabled = true;
    fitReport.textContent = "fitting…";
    queue.submit(
      "fit",
      () =>
        api.fit(session.id, target, {
          steps: Number(fitSteps.value),
          rank: Number(fitRank.value),
        }),
      (result) => {
        state.fitRunning = false;
        fitButton.disabled = false;
        const psnr = result.report.psnr === null ? "inf" : result.report.psnr.toFixed(2);
        fitReport.textContent =
          `fit: ${result.report.steps} steps · loss ${result.report.final_loss.toExponential(3)} ` +
          `· PSNR ${psnr} dB`;
        clearError();
        adoptSession(result);
      },
      (err) => {
        state.fitRunning = false;
        fitButton.disabled = false;
        fitReport.textContent = "";
        showError(`fit failed: ${messageFrom(err)}`);
      },
    );
  });

  return {
    state,
    queue,
    ui,
    compare,
    openSession,
    setSlider(index: number, value: number): void {
      const row = sliderRows[index];
      if (!row) return;
      row.range.value = String(value);
      requestScales(sliderTargets());
    },
    flushScales(): void {
      pushScales.flush();
    },
    refreshOutputs,
  };
}
