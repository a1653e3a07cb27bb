import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { expect } from "vitest";

import { Camera } from "../src/camera.js";
import { featwarpBin } from "../src/cli.js";
import { Tensor, writeTensor } from "../src/fwt.js";

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomTensor(rand: () => number, dims: number[]): Tensor {
  const count = dims.reduce((a, b) => a * b, 1);
  return { dims, data: Float32Array.from({ length: count }, () => rand() * 4 - 2) };
}

function mat3mul(a: number[], b: number[]): number[] {
  const out = new Array(9).fill(0);
  for (let i = 0; i < 3; i++)
    for (let j = 0; j < 3; j++)
      for (let k = 0; k < 3; k++) out[3 * i + j] += a[3 * i + k] * b[3 * k + j];
  return out;
}

function axisRotation(axis: 0 | 1 | 2, angle: number): number[] {
  const c = Math.cos(angle);
  const s = Math.sin(angle);
  if (axis === 0) return [1, 0, 0, 0, c, -s, 0, s, c];
  if (axis === 1) return [c, 0, s, 0, 1, 0, -s, 0, c];
  return [c, -s, 0, s, c, 0, 0, 0, 1];
}

/** Random small-pose camera: composed axis rotations keep R orthonormal. */
export function randomCamera(rand: () => number, size = 8, scale = 0.15): Camera {
  const r = mat3mul(
    axisRotation(2, (rand() - 0.5) * scale),
    mat3mul(axisRotation(1, (rand() - 0.5) * scale), axisRotation(0, (rand() - 0.5) * scale)),
  );
  const t = [(rand() - 0.5) * 0.4, (rand() - 0.5) * 0.4, (rand() - 0.5) * 0.4];
  const m = [
    r[0], r[1], r[2], t[0],
    r[3], r[4], r[5], t[1],
    r[6], r[7], r[8], t[2],
    0, 0, 0, 1,
  ];
  return {
    fx: size * (0.8 + rand()),
    fy: size * (0.8 + rand()),
    cx: size / 2 + (rand() - 0.5),
    cy: size / 2 + (rand() - 0.5),
    width: size,
    height: size,
    world_to_camera: m,
  };
}

export function randomDepth(rand: () => number, size = 8): Tensor {
  const data = Float32Array.from({ length: size * size }, () =>
    rand() < 0.1 ? 0 : 0.5 + rand() * 3,
  );
  return { dims: [size, size], data };
}

/** Unit-normal splat table rows: px py pz nx ny nz sx sy opacity. */
export function randomSplatTable(rand: () => number, n: number): Tensor {
  const rows: number[] = [];
  for (let i = 0; i < n; i++) {
    let nx = rand() - 0.5;
    let ny = rand() - 0.5;
    let nz = rand() - 0.5;
    const len = Math.hypot(nx, ny, nz) || 1;
    nx /= len;
    ny /= len;
    nz /= len;
    rows.push(
      (rand() - 0.5) * 2,
      (rand() - 0.5) * 2,
      2 + rand() * 3,
      nx,
      ny,
      nz,
      0.05 + rand() * 0.3,
      0.05 + rand() * 0.3,
      rand(),
    );
  }
  return { dims: [n, 9], data: Float32Array.from(rows) };
}

/** Invoke the CLI directly (bypassing the binding layer) for comparisons. */
export function directCli(args: string[]): string {
  const proc = spawnSync(featwarpBin(), args, { encoding: "utf8", maxBuffer: 1 << 28 });
  if (proc.status !== 0) {
    throw new Error(`direct CLI failed (${proc.status}): ${proc.stderr}`);
  }
  return proc.stdout ?? "";
}

export function scratchDir(): { dir: string; done: () => void } {
  const dir = mkdtempSync(join(tmpdir(), "featwarp-parity-"));
  return { dir, done: () => rmSync(dir, { recursive: true, force: true }) };
}

export function expectBitwiseEqual(a: Tensor, b: Tensor): void {
  expect(a.dims).toEqual(b.dims);
  expect(Buffer.compare(writeTensor(a), writeTensor(b))).toBe(0);
}
