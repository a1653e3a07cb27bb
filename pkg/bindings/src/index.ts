export { FeatwarpError } from "./errors.js";
export { Tensor, tensor, readTensor, writeTensor, readTensorFile, writeTensorFile } from "./fwt.js";
export { Camera, identityCamera, readCameraFile, writeCameraFile } from "./camera.js";
export {
  Bundle,
  BundleManifest,
  BundleManifestLayer,
  layerMaps,
  loadBundle,
  makeBundle,
  saveBundle,
} from "./bundle.js";
export { featwarpBin, runCli, runPipeline, RunManifest } from "./cli.js";
export {
  Sampling,
  WarpField,
  alphaAt,
  blendMasked,
  computeWarpField,
  filterSplats,
  renderDepth,
  warpBundle,
} from "./ops.js";
