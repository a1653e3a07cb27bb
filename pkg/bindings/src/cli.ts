/** Process-level bridge to the featwarp CLI. Set FEATWARP_BIN to override
 * the binary (defaults to "featwarp" on PATH). */
import { spawnSync } from "node:child_process";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { FeatwarpError } from "./errors.js";

export function featwarpBin(): string {
  return process.env.FEATWARP_BIN ?? "featwarp";
}

export function runCli(args: string[]): string {
  const proc = spawnSync(featwarpBin(), args, { encoding: "utf8", maxBuffer: 1 << 28 });
  if (proc.error) {
    throw new FeatwarpError("cli-unavailable", `cannot run ${featwarpBin()}: ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const line = (proc.stderr ?? "").trim().split("\n").pop() ?? "";
    try {
      const parsed = JSON.parse(line) as { error?: string; message?: string };
      if (parsed.error) {
        throw new FeatwarpError(parsed.error, parsed.message ?? line);
      }
    } catch (e) {
      if (e instanceof FeatwarpError) throw e;
    }
    throw new FeatwarpError("cli-failure", `exit ${proc.status}: ${proc.stderr}`);
  }
  return proc.stdout ?? "";
}

export interface RunManifest {
  format: string;
  source: string;
  seed: number;
  stages: Array<{
    stage: number;
    views: Array<{
      id: string;
      status: string;
      mask_coverage: Record<string, number>;
      outputs: Record<string, string>;
      error?: { error: string; message: string };
    }>;
  }>;
  [key: string]: unknown;
}

/** Run the staged propagation pipeline and return its manifest. */
export function runPipeline(configPath: string, outDir: string): RunManifest {
  runCli(["run", "--config", configPath, "--out-dir", outDir]);
  return JSON.parse(readFileSync(join(outDir, "run_manifest.json"), "utf8")) as RunManifest;
}
