/** DOM wiring: binds the panels to the page and drives the service.
 *
 * Slider drags are debounced 250 ms and only the newest request stays in
 * flight; every other control change triggers immediately through the
 * same gate. All imagery comes back from the service as PNG bytes.
 */

import { ApiClient, ApiError, REGION_NAMES, RegionName, TransferRequest } from "./api.js";
import { AssetPanel } from "./assetPanel.js";
import {
  ControlState,
  blockedReason,
  buildTransferRequest,
  clampAlpha,
  initialControls,
  referenceControlsDisabled,
  requestToControls,
} from "./controls.js";
import { Debouncer, LatestRequestGate, isAbort } from "./debounce.js";
import { HistoryStrip } from "./history.js";
import { resultClipPercent } from "./resultView.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const baseUrlInput = el<HTMLInputElement>("base-url");
const connectButton = el<HTMLButtonElement>("connect");
const healthLine = el<HTMLSpanElement>("health");

const imageFile = el<HTMLInputElement>("file-image");
const parsingFile = el<HTMLInputElement>("file-parsing");
const landmarksFile = el<HTMLInputElement>("file-landmarks");
const denseFile = el<HTMLInputElement>("file-dense");
const uploadButton = el<HTMLButtonElement>("upload");
const uploadError = el<HTMLSpanElement>("upload-error");

const sourceSelect = el<HTMLSelectElement>("source");
const referenceSelect = el<HTMLSelectElement>("reference");
const secondSelect = el<HTMLSelectElement>("second-reference");

const alphaSlider = el<HTMLInputElement>("alpha");
const alphaValue = el<HTMLSpanElement>("alpha-value");
const removeToggle = el<HTMLInputElement>("remove");
const regionBoxes = new Map<RegionName, HTMLInputElement>(
  REGION_NAMES.map((name) => [name, el<HTMLInputElement>(`region-${name}`)]),
);
const statusLine = el<HTMLSpanElement>("status");

const sourceImage = el<HTMLImageElement>("source-image");
const resultImage = el<HTMLImageElement>("result-image");
const resultPane = el<HTMLDivElement>("result-pane");
const divider = el<HTMLInputElement>("divider");
const historyList = el<HTMLDivElement>("history");

let client = new ApiClient(baseUrlInput.value.replace(/\/$/, ""));
let assetPanel = new AssetPanel(client);
const controls: ControlState = initialControls();
const history = new HistoryStrip(8);
const debouncer = new Debouncer();
const gate = new LatestRequestGate();
let resultUrl: string | null = null;

baseUrlInput.value = localStorage.getItem("makeover-base-url") ?? "http://127.0.0.1:8000";

function pngUrl(png: Uint8Array): string {
  return URL.createObjectURL(new Blob([png.slice().buffer], { type: "image/png" }));
}

function renderAssets(): void {
  for (const select of [sourceSelect, referenceSelect, secondSelect]) {
    const keep = select.value;
    select.innerHTML = "";
    if (select === secondSelect) select.add(new Option("(none)", ""));
    for (const assetId of assetPanel.state.assets) {
      select.add(new Option(assetId.slice(0, 12), assetId));
    }
    select.value = keep;
  }
}

function renderControls(): void {
  alphaSlider.value = String(controls.alpha);
  alphaValue.textContent = controls.alpha.toFixed(2);
  removeToggle.checked = controls.remove;
  for (const [name, box] of regionBoxes) box.checked = controls.regions[name];
  const inert = referenceControlsDisabled(controls);
  referenceSelect.disabled = inert;
  secondSelect.disabled = inert;
  alphaSlider.disabled = inert;
  for (const box of regionBoxes.values()) box.disabled = inert;
  if (controls.sourceId) sourceImage.src = client.imageUrl(controls.sourceId);
}

function renderHistory(): void {
  historyList.innerHTML = "";
  history.entries().forEach((entry, index) => {
    const button = document.createElement("button");
    button.className = "history-entry";
    const thumb = document.createElement("img");
    thumb.src = pngUrl(entry.png);
    thumb.alt = describe(entry.request);
    const caption = document.createElement("span");
    caption.textContent = describe(entry.request);
    button.append(thumb, caption);
    button.addEventListener("click", () => restoreEntry(index));
    historyList.append(button);
  });
}

function describe(request: TransferRequest): string {
  if (request.mode === "remove") return "remove";
  const parts = [`a=${request.alpha ?? 1}`];
  if (request.regions) parts.push(request.regions.join("+"));
  if (request.reference_ids.length === 2) parts.push("2 refs");
  return parts.join(" ");
}

function showResult(png: Uint8Array): void {
  if (resultUrl) URL.revokeObjectURL(resultUrl);
  resultUrl = pngUrl(png);
  resultImage.src = resultUrl;
}

async function send(): Promise<void> {
  const request = buildTransferRequest(controls);
  if (!request) {
    statusLine.textContent = blockedReason(controls) ?? "";
    return;
  }
  statusLine.textContent = "rendering...";
  try {
    const png = await client.transfer(request, gate.next());
    history.push(request, png);
    showResult(png);
    renderHistory();
    statusLine.textContent = "";
  } catch (error) {
    if (isAbort(error)) return;
    statusLine.textContent = error instanceof ApiError ? error.message : String(error);
  }
}

function restoreEntry(index: number): void {
  const restored = requestToControls(history.restoreRequest(index));
  Object.assign(controls, restored);
  renderControls();
  debouncer.cancel();
  void send();
}

async function connect(): Promise<void> {
  localStorage.setItem("makeover-base-url", baseUrlInput.value);
  client = new ApiClient(baseUrlInput.value.replace(/\/$/, ""));
  assetPanel = new AssetPanel(client);
  try {
    const health = await client.health();
    healthLine.textContent =
      health.status === "ok" ? `model ${health.model_checksum?.slice(0, 12)}` : health.status;
    await assetPanel.refresh();
    renderAssets();
  } catch (error) {
    healthLine.textContent = String(error);
  }
}

connectButton.addEventListener("click", () => void connect());

uploadButton.addEventListener("click", async () => {
  const image = imageFile.files?.[0];
  const parsing = parsingFile.files?.[0];
  const landmarks = landmarksFile.files?.[0];
  if (!image || !parsing || !landmarks) {
    uploadError.textContent = "image, parsing and landmarks files are required";
    return;
  }
  const dense = denseFile.files?.[0];
  const assetId = await assetPanel.upload({ image, parsing, landmarks, dense });
  uploadError.textContent = assetPanel.state.lastError ?? "";
  if (assetId) renderAssets();
});

sourceSelect.addEventListener("change", () => {
  controls.sourceId = sourceSelect.value || null;
  renderControls();
  void send();
});
referenceSelect.addEventListener("change", () => {
  controls.referenceId = referenceSelect.value || null;
  void send();
});
secondSelect.addEventListener("change", () => {
  controls.secondReferenceId = secondSelect.value || null;
  void send();
});

alphaSlider.addEventListener("input", () => {
  controls.alpha = clampAlpha(Number(alphaSlider.value));
  alphaValue.textContent = controls.alpha.toFixed(2);
  debouncer.schedule(() => void send());
});

removeToggle.addEventListener("change", () => {
  controls.remove = removeToggle.checked;
  renderControls();
  void send();
});

for (const [name, box] of regionBoxes) {
  box.addEventListener("change", () => {
    controls.regions[name] = box.checked;
    void send();
  });
}

divider.addEventListener("input", () => {
  resultPane.style.width = `${resultClipPercent(Number(divider.value))}%`;
});

renderControls();
void connect();
