"""Editor plug-ins: the stand-ins for the diffusion model.

An editor consumes a view image plus optional warped attention and produces
an edited image plus the attention bundle captured while editing. Real
diffusion stacks attach either in-process (implement :class:`EditorPlugin`)
or out of process through :class:`SubprocessEditor`, which speaks a small
file-based protocol.
"""

from __future__ import annotations

import json
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import ConfigError
from .images import read_image_file, write_image_file
from .maps import AttentionBundle, BundleLayer, FeatureMap, Mask, load_bundle, save_bundle
from .tensorio import write_tensor_file


@dataclass
class EditRequest:
    """One editing job handed to a plug-in."""

    image: np.ndarray
    conditioning: np.ndarray | None
    prompt: str
    warped_bundle: AttentionBundle | None
    masks: dict[int, Mask] | None
    step_budget: int = 20
    alpha0: float = 0.9


@dataclass
class EditResult:
    image: np.ndarray
    bundle: AttentionBundle


@runtime_checkable
class EditorPlugin(Protocol):
    def edit(self, request: EditRequest) -> EditResult: ...


def empty_bundle(resolutions=(32, 64)) -> AttentionBundle:
    return AttentionBundle((), tuple(resolutions))


class IdentityEditor:
    """Returns the input image untouched and captures no attention."""

    def __init__(self, resolutions=(32, 64)):
        self.resolutions = tuple(resolutions)

    def edit(self, request: EditRequest) -> EditResult:
        return EditResult(request.image, empty_bundle(self.resolutions))


def _disk_indicator(res: int, center: tuple[float, float], radius: float) -> np.ndarray:
    """1 x res x res indicator of a disk given in unit image coordinates."""
    ys, xs = np.mgrid[0:res, 0:res]
    cx = center[0] * res
    cy = center[1] * res
    r = radius * res
    inside = (xs + 0.5 - cx) ** 2 + (ys + 0.5 - cy) ** 2 <= r * r
    return inside[None].astype(np.float32)


@dataclass
class StampEditor:
    """Deterministic test double that paints a disk and reports it as attention.

    On the source view (no warped bundle) it paints a disk at ``center`` with
    ``radius``, both as fractions of the image size, and returns indicator
    maps of that disk at every configured resolution. On target views it
    paints wherever the warped indicator says the edit lands, so propagation
    accuracy can be scored against analytic reprojection.
    """

    center: tuple[float, float] = (0.5, 0.5)
    radius: float = 0.2
    color: tuple[float, float, float] = (1.0, 0.2, 0.1)
    resolutions: tuple[int, ...] = (32, 64)
    threshold: float = 0.5

    def _paint(self, image: np.ndarray, region: np.ndarray) -> np.ndarray:
        out = image.copy()
        color = np.asarray(self.color, dtype=np.float32)[: out.shape[0]]
        for c in range(min(out.shape[0], color.size)):
            out[c] = np.where(region, color[c], out[c])
        return out

    def _region_from_bundle(self, bundle: AttentionBundle, h: int, w: int) -> np.ndarray:
        best = None
        for layer in bundle.layers:
            fmap = layer.self_attn
            if best is None or fmap.height > best.height:
                best = fmap
        if best is None:
            return np.zeros((h, w), dtype=bool)
        ind = best.data[0] >= self.threshold
        ys = np.minimum((np.arange(h) * best.height // h), best.height - 1)
        xs = np.minimum((np.arange(w) * best.width // w), best.width - 1)
        return ind[np.ix_(ys, xs)]

    def edit(self, request: EditRequest) -> EditResult:
        image = request.image
        h, w = image.shape[1], image.shape[2]
        if request.warped_bundle is None:
            ys, xs = np.mgrid[0:h, 0:w]
            region = (
                (xs + 0.5 - self.center[0] * w) ** 2
                + (ys + 0.5 - self.center[1] * h) ** 2
            ) <= (self.radius * min(h, w)) ** 2
            layers = tuple(
                BundleLayer(
                    f"up{i}",
                    FeatureMap(_disk_indicator(res, self.center, self.radius)),
                )
                for i, res in enumerate(sorted(self.resolutions))
            )
            bundle = AttentionBundle(layers, self.resolutions)
        else:
            region = self._region_from_bundle(request.warped_bundle, h, w)
            layers = []
            for layer in request.warped_bundle.layers:
                ind = (layer.self_attn.data >= self.threshold).astype(np.float32)
                layers.append(BundleLayer(layer.layer_id, FeatureMap(ind)))
            bundle = AttentionBundle(tuple(layers), request.warped_bundle.resolutions)
        return EditResult(self._paint(image, region), bundle)


@dataclass
class SubprocessEditor:
    """Bridges to an external editor command through a work directory.

    For each view the pipeline writes ``request.json`` plus the input
    tensors into a fresh directory, appends that directory to ``command``
    and runs it. The command must write ``edited.fwt`` and, if it produced
    attention, a bundle directory named ``out_bundle``.
    """

    command: tuple[str, ...]
    keep_workdirs: bool = False
    workdir_root: Path | None = None

    def edit(self, request: EditRequest) -> EditResult:
        root = str(self.workdir_root) if self.workdir_root else None
        tmp = tempfile.mkdtemp(prefix="featwarp-edit-", dir=root)
        work = Path(tmp)
        write_image_file(work / "image.fwt", request.image)
        payload: dict = {
            "image": "image.fwt",
            "conditioning": None,
            "prompt": request.prompt,
            "bundle_dir": None,
            "masks": {},
            "step_budget": request.step_budget,
            "alpha0": request.alpha0,
            "output_image": "edited.fwt",
            "output_bundle_dir": "out_bundle",
        }
        if request.conditioning is not None:
            write_tensor_file(work / "conditioning.fwt", request.conditioning)
            payload["conditioning"] = "conditioning.fwt"
        if request.warped_bundle is not None:
            save_bundle(request.warped_bundle, work / "warped_bundle")
            payload["bundle_dir"] = "warped_bundle"
        if request.masks:
            for res, mask in request.masks.items():
                name = f"mask_{res}.fwt"
                write_tensor_file(work / name, mask.data)
                payload["masks"][str(res)] = name
        with open(work / "request.json", "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)

        proc = subprocess.run(
            [*self.command, str(work)], capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise ConfigError(
                f"editor command failed with code {proc.returncode}: {proc.stderr.strip()}"
            )
        edited_path = work / "edited.fwt"
        if not edited_path.exists():
            raise ConfigError("editor command wrote no edited.fwt")
        image = read_image_file(edited_path)
        out_bundle = work / "out_bundle"
        bundle = load_bundle(out_bundle) if out_bundle.exists() else empty_bundle()
        if not self.keep_workdirs:
            import shutil

            shutil.rmtree(work, ignore_errors=True)
        return EditResult(image, bundle)


def editor_from_config(spec: dict, resolutions=(32, 64)) -> EditorPlugin:
    """Instantiate an editor from its run-config JSON object."""
    kind = spec.get("type")
    if kind == "identity":
        return IdentityEditor(resolutions)
    if kind == "stamp":
        return StampEditor(
            center=tuple(spec.get("center", (0.5, 0.5))),
            radius=float(spec.get("radius", 0.2)),
            color=tuple(spec.get("color", (1.0, 0.2, 0.1))),
            resolutions=tuple(resolutions),
            threshold=float(spec.get("threshold", 0.5)),
        )
    if kind == "command":
        command = spec.get("command")
        if not command or not isinstance(command, list):
            raise ConfigError("command editor needs a non-empty command list")
        return SubprocessEditor(tuple(command))
    raise ConfigError(f"unknown editor type {kind!r}")
