/** Client for the makeup transfer HTTP API.
 *
 * Every image shown in the UI byte-originates from this client; nothing
 * is computed locally. Request bodies mirror the service schema exactly.
 */

export const REGION_NAMES = ["eye", "lip", "skin"] as const;
export type RegionName = (typeof REGION_NAMES)[number];

export type TransferMode = "transfer" | "remove";

export interface TransferRequest {
  source_id: string;
  reference_ids: string[];
  alpha?: number;
  regions?: string[];
  mode: TransferMode;
}

export interface HealthInfo {
  status: string;
  model_checksum: string | null;
}

export interface UploadFiles {
  image: Blob;
  parsing: Blob;
  landmarks: Blob;
  dense?: Blob;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorCode: string,
    readonly field: string | null,
  ) {
    super(field ? `${errorCode} (${field})` : errorCode);
    this.name = "ApiError";
  }
}

/** Violations that would make the service reject the body; [] when clean. */
export function validateTransferRequest(body: unknown): string[] {
  const problems: string[] = [];
  if (typeof body !== "object" || body === null || Array.isArray(body)) {
    return ["body must be an object"];
  }
  const record = body as Record<string, unknown>;
  const allowed = new Set(["source_id", "reference_ids", "alpha", "regions", "mode"]);
  for (const key of Object.keys(record)) {
    if (!allowed.has(key)) problems.push(`unexpected key ${key}`);
  }
  if (typeof record.source_id !== "string" || record.source_id === "") {
    problems.push("source_id must be a non-empty string");
  }
  const refs = record.reference_ids;
  if (!Array.isArray(refs) || refs.some((r) => typeof r !== "string")) {
    problems.push("reference_ids must be an array of strings");
  } else if (refs.length > 2) {
    problems.push("at most two references");
  }
  if ("alpha" in record) {
    const alpha = record.alpha;
    if (typeof alpha !== "number" || !(alpha >= 0 && alpha <= 1)) {
      problems.push("alpha must be a number in [0, 1]");
    }
  }
  if ("regions" in record) {
    const regions = record.regions;
    if (
      !Array.isArray(regions) ||
      regions.length === 0 ||
      regions.some((r) => !(REGION_NAMES as readonly string[]).includes(r as string)) ||
      new Set(regions).size !== regions.length
    ) {
      problems.push("regions must be a non-empty set drawn from eye/lip/skin");
    }
  }
  if (record.mode !== "transfer" && record.mode !== "remove") {
    problems.push("mode must be transfer or remove");
  }
  if (record.mode === "remove") {
    if (Array.isArray(refs) && refs.length > 0) problems.push("remove takes no references");
    if ("alpha" in record) problems.push("remove takes no alpha");
    if ("regions" in record) problems.push("remove takes no regions");
  }
  if (record.mode === "transfer" && Array.isArray(refs) && refs.length === 0) {
    problems.push("transfer needs at least one reference");
  }
  return problems;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function errorFrom(response: Response): Promise<ApiError> {
  let code = `http-${response.status}`;
  let field: string | null = null;
  try {
    const body = (await response.json()) as { error_code?: string; field?: string | null };
    if (typeof body.error_code === "string") code = body.error_code;
    if (typeof body.field === "string") field = body.field;
  } catch {
    // non-JSON error body; keep the status-derived code
  }
  return new ApiError(response.status, code, field);
}

export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  imageUrl(assetId: string): string {
    return `${this.baseUrl}/api/assets/${assetId}/image`;
  }

  async health(): Promise<HealthInfo> {
    const response = await this.fetchFn(`${this.baseUrl}/api/health`);
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as HealthInfo;
  }

  async listAssets(): Promise<string[]> {
    const response = await this.fetchFn(`${this.baseUrl}/api/assets`);
    if (!response.ok) throw await errorFrom(response);
    const body = (await response.json()) as { assets: { asset_id: string }[] };
    return body.assets.map((entry) => entry.asset_id);
  }

  async uploadAsset(files: UploadFiles): Promise<string> {
    const form = new FormData();
    form.append("image", files.image, "image.png");
    form.append("parsing", files.parsing, "parsing.png");
    form.append("landmarks", files.landmarks, "landmarks.json");
    if (files.dense) form.append("dense", files.dense, "dense.json");
    const response = await this.fetchFn(`${this.baseUrl}/api/assets`, {
      method: "POST",
      body: form,
    });
    if (!response.ok) throw await errorFrom(response);
    const body = (await response.json()) as { asset_id: string };
    return body.asset_id;
  }

  async transfer(request: TransferRequest, signal?: AbortSignal): Promise<Uint8Array> {
    const response = await this.fetchFn(`${this.baseUrl}/api/transfer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
      signal,
    });
    if (!response.ok) throw await errorFrom(response);
    return new Uint8Array(await response.arrayBuffer());
  }
}
