/** Upload and listing state for the asset picker.
 *
 * The asset list is always service-backed: refresh re-reads it from the
 * API, so a page reload shows exactly what the service holds.
 */

import { ApiClient, ApiError, UploadFiles } from "./api.js";

export interface AssetPanelState {
  assets: string[];
  uploading: boolean;
  lastError: string | null;
}

export class AssetPanel {
  state: AssetPanelState = { assets: [], uploading: false, lastError: null };

  constructor(private readonly client: ApiClient) {}

  async refresh(): Promise<void> {
    this.state.assets = await this.client.listAssets();
  }

  /** Returns the new asset id, or null with lastError set on rejection. */
  async upload(files: UploadFiles): Promise<string | null> {
    this.state.uploading = true;
    this.state.lastError = null;
    try {
      const assetId = await this.client.uploadAsset(files);
      await this.refresh();
      return assetId;
    } catch (error) {
      if (error instanceof ApiError) {
        this.state.lastError = error.field
          ? `${error.field}: ${error.errorCode}`
          : error.errorCode;
        return null;
      }
      throw error;
    } finally {
      this.state.uploading = false;
    }
  }
}
