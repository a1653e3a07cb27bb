/**
 * The ".fwt" binary tensor container.
 *
 * Layout: magic "FWT1", ndim (uint8, 1..3), dims (uint32 LE each),
 * dtype tag (uint8, 0 = float32), then row-major little-endian float32
 * payload. A dim may be 0; the element count must fit in 32 bits.
 */
import { readFileSync, writeFileSync } from "node:fs";

import { FeatwarpError } from "./errors.js";

export interface Tensor {
  dims: number[];
  data: Float32Array;
}

const MAGIC = "FWT1";
const MAX_ELEMENTS = 2 ** 32 - 1;

function checkDims(dims: number[]): number {
  if (dims.length < 1 || dims.length > 3) {
    throw new FeatwarpError("tensor-size", `ndim must be 1, 2 or 3, got ${dims.length}`);
  }
  let count = 1;
  for (const d of dims) {
    if (!Number.isInteger(d) || d < 0 || d > MAX_ELEMENTS) {
      throw new FeatwarpError("tensor-size", `bad dim ${d}`);
    }
    count *= d;
  }
  if (count > MAX_ELEMENTS) {
    throw new FeatwarpError("tensor-size", `element count ${count} overflows 32 bits`);
  }
  return count;
}

export function tensor(dims: number[], values: ArrayLike<number>): Tensor {
  const count = checkDims(dims);
  if (values.length !== count) {
    throw new FeatwarpError(
      "dimension-mismatch",
      `dims ${dims} need ${count} values, got ${values.length}`,
    );
  }
  return { dims: [...dims], data: Float32Array.from(values) };
}

export function writeTensor(t: Tensor): Buffer {
  const count = checkDims(t.dims);
  if (t.data.length !== count) {
    throw new FeatwarpError("dimension-mismatch", "payload does not match dims");
  }
  const headerSize = 4 + 1 + 4 * t.dims.length + 1;
  const buf = Buffer.alloc(headerSize + 4 * count);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt8(t.dims.length, 4);
  t.dims.forEach((d, i) => buf.writeUInt32LE(d, 5 + 4 * i));
  buf.writeUInt8(0, 5 + 4 * t.dims.length);
  for (let i = 0; i < count; i++) {
    buf.writeFloatLE(t.data[i], headerSize + 4 * i);
  }
  return buf;
}

export function readTensor(buf: Buffer): Tensor {
  if (buf.length < 5 || buf.toString("ascii", 0, 4) !== MAGIC) {
    throw new FeatwarpError("bad-magic", `expected magic ${MAGIC}`);
  }
  const ndim = buf.readUInt8(4);
  if (ndim < 1 || ndim > 3) {
    throw new FeatwarpError("tensor-size", `ndim must be 1, 2 or 3, got ${ndim}`);
  }
  const headerSize = 5 + 4 * ndim + 1;
  if (buf.length < headerSize) {
    throw new FeatwarpError("truncated-payload", "stream ends inside the header");
  }
  const dims: number[] = [];
  for (let i = 0; i < ndim; i++) {
    dims.push(buf.readUInt32LE(5 + 4 * i));
  }
  const count = checkDims(dims);
  const dtypeTag = buf.readUInt8(5 + 4 * ndim);
  if (dtypeTag !== 0) {
    throw new FeatwarpError("unsupported-dtype", `dtype tag ${dtypeTag} not supported`);
  }
  const expected = headerSize + 4 * count;
  if (buf.length < expected) {
    throw new FeatwarpError("truncated-payload", "payload shorter than the header promises");
  }
  if (buf.length > expected) {
    throw new FeatwarpError("truncated-payload", "trailing bytes after the payload");
  }
  const data = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = buf.readFloatLE(headerSize + 4 * i);
  }
  return { dims, data };
}

export function readTensorFile(path: string): Tensor {
  return readTensor(readFileSync(path));
}

export function writeTensorFile(path: string, t: Tensor): void {
  writeFileSync(path, writeTensor(t));
}
