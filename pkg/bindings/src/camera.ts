/** Camera JSON: pinhole intrinsics plus a row-major 4x4 world-to-camera
 * rigid transform. Field names match the toolkit's schema exactly. */
import { readFileSync, writeFileSync } from "node:fs";

import { FeatwarpError } from "./errors.js";

export interface Camera {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
  world_to_camera: number[];
}

export function identityCamera(
  fx: number,
  fy: number,
  cx: number,
  cy: number,
  width: number,
  height: number,
): Camera {
  const m = [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1];
  return { fx, fy, cx, cy, width, height, world_to_camera: m };
}

export function checkCamera(cam: Camera): Camera {
  if (!Array.isArray(cam.world_to_camera) || cam.world_to_camera.length !== 16) {
    throw new FeatwarpError("config-error", "world_to_camera must hold 16 numbers, row-major");
  }
  return cam;
}

export function writeCameraFile(path: string, cam: Camera): void {
  writeFileSync(path, JSON.stringify(checkCamera(cam), null, 2) + "\n");
}

export function readCameraFile(path: string): Camera {
  return checkCamera(JSON.parse(readFileSync(path, "utf8")) as Camera);
}
