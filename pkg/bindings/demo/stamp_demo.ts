/**
 * Bundle injection demo.
 *
 * Walks the attention-injection flow a diffusion hook would run, entirely
 * through the bindings: build per-layer indicator maps for a disk edit,
 * warp them into a target view of a synthetic plane rig, blend each layer
 * against freshly computed maps under the decaying coefficient, and then
 * run the full stamp-edit pipeline, checking its manifest against a
 * natively invoked run.
 */
import { spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { layerMaps, makeBundle } from "../src/bundle.js";
import { readCameraFile } from "../src/camera.js";
import { featwarpBin, runCli, runPipeline } from "../src/cli.js";
import { readTensorFile, Tensor } from "../src/fwt.js";
import { alphaAt, blendMasked, warpBundle } from "../src/ops.js";

function diskIndicator(res: number, cx: number, cy: number, radius: number): Tensor {
  const data = new Float32Array(res * res);
  for (let y = 0; y < res; y++) {
    for (let x = 0; x < res; x++) {
      const dx = x + 0.5 - cx * res;
      const dy = y + 0.5 - cy * res;
      data[y * res + x] = dx * dx + dy * dy <= radius * res * (radius * res) ? 1 : 0;
    }
  }
  return { dims: [1, res, res], data };
}

function smoothTensor(res: number): Tensor {
  const data = new Float32Array(res * res);
  for (let y = 0; y < res; y++) {
    for (let x = 0; x < res; x++) {
      data[y * res + x] = 0.5 + 0.5 * Math.sin((2 * Math.PI * (x + 2 * y)) / res);
    }
  }
  return { dims: [1, res, res], data };
}

export function main(): void {
  const work = mkdtempSync(join(tmpdir(), "featwarp-demo-"));
  try {
    const sceneSpec = {
      geometry: { type: "plane", z: 2.0 },
      rig: {
        type: "arc",
        count: 8,
        arc_deg: 40.0,
        distance: 2.2,
        look_at: [0, 0, 2.0],
        fx: 100.0,
        width: 128,
        height: 128,
      },
      splat_grid: 48,
    };
    writeFileSync(join(work, "scene.json"), JSON.stringify(sceneSpec));
    runCli(["synth", "--spec", join(work, "scene.json"), "--out-dir", join(work, "scene")]);
    console.log("synthesized 8-camera plane rig");

    // --- per-layer injection walkthrough on one target view ---
    const srcCam = readCameraFile(join(work, "scene", "view_003.camera.json"));
    const tgtCam = readCameraFile(join(work, "scene", "view_006.camera.json"));
    const tgtDepth = readTensorFile(join(work, "scene", "view_006.depth.fwt"));

    const sourceBundle = makeBundle([
      { id: "up0", self: diskIndicator(32, 0.5, 0.5, 0.3) },
      { id: "up1", self: diskIndicator(64, 0.5, 0.5, 0.3) },
    ]);
    const { bundle: warped, masks } = warpBundle(sourceBundle, tgtDepth, tgtCam, srcCam);
    const alpha = alphaAt(0.9, 10, 3);
    console.log(`warped ${warped.manifest.layers.length} layers; alpha(t=3, T=10) = ${alpha}`);
    for (const layer of layerMaps(warped)) {
      const res = layer.self.dims[1];
      const fresh = smoothTensor(res);
      const injected = blendMasked(layer.self, fresh, masks[res], alpha);
      const on = layer.self.data.reduce((acc, v) => acc + (v >= 0.5 ? 1 : 0), 0);
      console.log(
        `layer ${layer.id} (${res}x${res}): indicator covers ${on} px, ` +
          `mask coverage ${(masks[res].data.reduce((a, b) => a + b, 0) / (res * res)).toFixed(3)}, ` +
          `injected range [${Math.min(...injected.data).toFixed(3)}, ${Math.max(...injected.data).toFixed(3)}]`,
      );
    }

    // --- full stamp pipeline through the bindings vs a native run ---
    const runConfig = {
      scene_manifest: "scene/scene_manifest.json",
      source: "view_003",
      editor: { type: "stamp", center: [0.5, 0.5], radius: 0.3 },
      stages: 3,
      subset_size: 3,
      seed: 99,
    };
    writeFileSync(join(work, "run.json"), JSON.stringify(runConfig));
    const boundManifest = runPipeline(join(work, "run.json"), join(work, "out_bound"));

    const native = spawnSync(
      featwarpBin(),
      ["run", "--config", join(work, "run.json"), "--out-dir", join(work, "out_native")],
      { encoding: "utf8" },
    );
    if (native.status !== 0) {
      throw new Error(`native run failed: ${native.stderr}`);
    }
    const nativeManifest = JSON.parse(
      readFileSync(join(work, "out_native", "run_manifest.json"), "utf8"),
    );

    const same = JSON.stringify(boundManifest) === JSON.stringify(nativeManifest);
    const edited = boundManifest.stages.flatMap((s) => s.views).filter((v) => v.status === "edited");
    console.log(`pipeline edited ${edited.length} views over ${boundManifest.stages.length} stages`);
    if (!same) {
      throw new Error("MISMATCH: bound manifest differs from the native manifest");
    }
    console.log("MATCH: bound pipeline manifest equals the native manifest");
  } finally {
    rmSync(work, { recursive: true, force: true });
  }
}

const entry = process.argv[1] ?? "";
if (entry.endsWith("stamp_demo.js") || entry.endsWith("stamp_demo.ts")) {
  main();
}
