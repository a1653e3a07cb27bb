/**
 * The six core operations, bound by driving the featwarp CLI through its
 * file interfaces. Inputs are written to a scratch directory, one command
 * runs, and the outputs are read back; no math happens on this side, so
 * bound results are bitwise those of the native toolkit.
 */
import { mkdtempSync, readdirSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { Bundle, loadBundle, saveBundle } from "./bundle.js";
import { Camera, writeCameraFile } from "./camera.js";
import { runCli } from "./cli.js";
import { readTensorFile, Tensor, writeTensorFile } from "./fwt.js";

export interface WarpField {
  u: Tensor;
  v: Tensor;
  valid: Tensor;
}

export type Sampling = "bilinear" | "nearest";

function withScratch<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "featwarp-bind-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function splitField(field: Tensor): WarpField {
  const [c, h, w] = field.dims;
  const plane = h * w;
  const pick = (k: number): Tensor => ({
    dims: [h, w],
    data: field.data.slice(k * plane, (k + 1) * plane),
  });
  void c;
  return { u: pick(0), v: pick(1), valid: pick(2) };
}

/** Backward warp field (index-space u, v plus validity) between two views. */
export function computeWarpField(depth: Tensor, tgtCam: Camera, srcCam: Camera): WarpField {
  return withScratch((dir) => {
    writeTensorFile(join(dir, "depth.fwt"), depth);
    writeCameraFile(join(dir, "tgt.json"), tgtCam);
    writeCameraFile(join(dir, "src.json"), srcCam);
    runCli([
      "warp",
      "--tgt-camera", join(dir, "tgt.json"),
      "--src-camera", join(dir, "src.json"),
      "--depth", join(dir, "depth.fwt"),
      "--field-out", join(dir, "field.fwt"),
    ]);
    return splitField(readTensorFile(join(dir, "field.fwt")));
  });
}

/** Warp every layer of a bundle into the target view; returns the warped
 * bundle plus one sampling mask per resolution. */
export function warpBundle(
  bundle: Bundle,
  depth: Tensor,
  tgtCam: Camera,
  srcCam: Camera,
  sampling: Sampling = "bilinear",
): { bundle: Bundle; masks: Record<number, Tensor> } {
  return withScratch((dir) => {
    saveBundle(join(dir, "bundle"), bundle);
    writeTensorFile(join(dir, "depth.fwt"), depth);
    writeCameraFile(join(dir, "tgt.json"), tgtCam);
    writeCameraFile(join(dir, "src.json"), srcCam);
    runCli([
      "warp",
      "--tgt-camera", join(dir, "tgt.json"),
      "--src-camera", join(dir, "src.json"),
      "--depth", join(dir, "depth.fwt"),
      "--bundle", join(dir, "bundle"),
      "--out-bundle", join(dir, "warped"),
      "--masks-out", join(dir, "masks"),
      "--sampling", sampling,
    ]);
    const masks: Record<number, Tensor> = {};
    for (const name of readdirSync(join(dir, "masks"))) {
      const match = /^mask_(\d+)\.fwt$/.exec(name);
      if (match) masks[Number(match[1])] = readTensorFile(join(dir, "masks", name));
    }
    return { bundle: loadBundle(join(dir, "warped")), masks };
  });
}

/** Masked blend of warped against fresh under a fixed coefficient. */
export function blendMasked(warped: Tensor, fresh: Tensor, mask: Tensor, alpha: number): Tensor {
  return withScratch((dir) => {
    writeTensorFile(join(dir, "warped.fwt"), warped);
    writeTensorFile(join(dir, "fresh.fwt"), fresh);
    writeTensorFile(join(dir, "mask.fwt"), mask);
    runCli([
      "blend",
      "--warped", join(dir, "warped.fwt"),
      "--fresh", join(dir, "fresh.fwt"),
      "--mask", join(dir, "mask.fwt"),
      "--alpha", String(alpha),
      "--out", join(dir, "out.fwt"),
    ]);
    return readTensorFile(join(dir, "out.fwt"));
  });
}

/** Decayed blend coefficient alpha0 * (T - t) / T, evaluated natively. */
export function alphaAt(alpha0: number, totalSteps: number, t: number): number {
  const stdout = runCli([
    "blend",
    "--t", String(t),
    "--total-steps", String(totalSteps),
    "--alpha0", String(alpha0),
    "--print-alpha",
  ]);
  return (JSON.parse(stdout) as { alpha: number }).alpha;
}

/** Drop splats whose view-facing normals disagree beyond thetaMax degrees.
 * Takes and returns the N x 9 splat table. */
export function filterSplats(
  table: Tensor,
  srcCam: Camera,
  tgtCam: Camera,
  thetaMax = 60.0,
): Tensor {
  return withScratch((dir) => {
    writeTensorFile(join(dir, "splats.fwt"), table);
    writeCameraFile(join(dir, "tgt.json"), tgtCam);
    writeCameraFile(join(dir, "src.json"), srcCam);
    runCli([
      "render-depth",
      "--splats", join(dir, "splats.fwt"),
      "--camera", join(dir, "tgt.json"),
      "--filter-camera", join(dir, "src.json"),
      "--theta-max", String(thetaMax),
      "--filtered-out", join(dir, "kept.fwt"),
    ]);
    return readTensorFile(join(dir, "kept.fwt"));
  });
}

/** Z-buffer depth render of a splat table, optionally normal-filtered
 * against a second view first. */
export function renderDepth(
  table: Tensor,
  cam: Camera,
  filterCam?: Camera,
  thetaMax = 60.0,
): Tensor {
  return withScratch((dir) => {
    writeTensorFile(join(dir, "splats.fwt"), table);
    writeCameraFile(join(dir, "cam.json"), cam);
    const args = [
      "render-depth",
      "--splats", join(dir, "splats.fwt"),
      "--camera", join(dir, "cam.json"),
      "--out", join(dir, "depth.fwt"),
    ];
    if (filterCam) {
      writeCameraFile(join(dir, "other.json"), filterCam);
      args.push("--filter-camera", join(dir, "other.json"), "--theta-max", String(thetaMax));
    }
    runCli(args);
    return readTensorFile(join(dir, "depth.fwt"));
  });
}
