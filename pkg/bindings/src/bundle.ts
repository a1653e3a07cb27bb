/**
 * Attention bundles cross the boundary as a manifest object plus a flat
 * list of tensors in manifest order (each layer's self map, then its cross
 * map when present), mirroring the on-disk directory layout.
 */
import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { FeatwarpError } from "./errors.js";
import { readTensorFile, Tensor, writeTensorFile } from "./fwt.js";

export interface BundleManifestLayer {
  id: string;
  height: number;
  width: number;
  self: string;
  cross: string | null;
}

export interface BundleManifest {
  format: string;
  resolutions: number[];
  layers: BundleManifestLayer[];
}

export interface Bundle {
  manifest: BundleManifest;
  tensors: Tensor[];
}

export const BUNDLE_FORMAT = "featwarp-bundle-v1";

/** Assemble a bundle from (id, self, cross?) layer triples. */
export function makeBundle(
  layers: Array<{ id: string; self: Tensor; cross?: Tensor | null }>,
  resolutions: number[] = [32, 64],
): Bundle {
  const manifestLayers: BundleManifestLayer[] = [];
  const tensors: Tensor[] = [];
  for (const layer of layers) {
    const [, h, w] = layer.self.dims.length === 3 ? layer.self.dims : [0, 0, 0];
    if (!h || h !== w || !resolutions.includes(h)) {
      throw new FeatwarpError(
        "config-error",
        `layer ${layer.id} must be CxRxR with R in ${resolutions}`,
      );
    }
    manifestLayers.push({
      id: layer.id,
      height: h,
      width: w,
      self: `${layer.id}.self.fwt`,
      cross: layer.cross ? `${layer.id}.cross.fwt` : null,
    });
    tensors.push(layer.self);
    if (layer.cross) tensors.push(layer.cross);
  }
  return {
    manifest: { format: BUNDLE_FORMAT, resolutions, layers: manifestLayers },
    tensors,
  };
}

/** Per-layer view over the flat tensor list. */
export function layerMaps(bundle: Bundle): Array<{ id: string; self: Tensor; cross: Tensor | null }> {
  const out: Array<{ id: string; self: Tensor; cross: Tensor | null }> = [];
  let i = 0;
  for (const layer of bundle.manifest.layers) {
    const self = bundle.tensors[i++];
    const cross = layer.cross ? bundle.tensors[i++] : null;
    out.push({ id: layer.id, self, cross });
  }
  return out;
}

export function saveBundle(dir: string, bundle: Bundle): void {
  mkdirSync(dir, { recursive: true });
  let i = 0;
  for (const layer of bundle.manifest.layers) {
    writeTensorFile(join(dir, layer.self), bundle.tensors[i++]);
    if (layer.cross) writeTensorFile(join(dir, layer.cross), bundle.tensors[i++]);
  }
  const manifest = {
    format: bundle.manifest.format,
    resolutions: bundle.manifest.resolutions,
    layers: bundle.manifest.layers,
  };
  writeFileSync(join(dir, "manifest.json"), JSON.stringify(manifest, null, 2) + "\n");
}

export function loadBundle(dir: string): Bundle {
  const manifest = JSON.parse(readFileSync(join(dir, "manifest.json"), "utf8")) as BundleManifest;
  if (manifest.format !== BUNDLE_FORMAT) {
    throw new FeatwarpError("config-error", `unexpected bundle format ${manifest.format}`);
  }
  const tensors: Tensor[] = [];
  for (const layer of manifest.layers) {
    tensors.push(readTensorFile(join(dir, layer.self)));
    if (layer.cross) tensors.push(readTensorFile(join(dir, layer.cross)));
  }
  return { manifest, tensors };
}
