"""Command-line surface. Every command is a pure function of its inputs and
flags; contract violations exit nonzero with one JSON error object on stderr.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from .editors import editor_from_config
from .errors import ConfigError, FeatwarpError
from .geometry import DepthMap, compute_warp_field, load_camera
from .images import export_png
from .maps import FeatureMap, Mask, load_bundle, save_bundle
from .pipeline import (
    RunConfig,
    StageConfig,
    ViewRecord,
    records_from_scene_manifest,
    run_pipeline,
)
from .blending import BlendSchedule, alpha_at, blend_masked
from .splats import FilterConfig, SplatSet, filter_splats, render_depth
from .synth import scene_spec_from_file, synth_scene
from .tensorio import read_tensor_file, write_tensor_file
from .validation import as_feature_map
from .warp import resample_warp_field, warp_bundle, warp_feature_map


@click.group()
def cli():
    """Multi-view attention feature warping toolkit."""


def _load_field_inputs(tgt_camera, src_camera, depth):
    tgt = load_camera(tgt_camera)
    src = load_camera(src_camera)
    depth_map = DepthMap(read_tensor_file(depth))
    return compute_warp_field(depth_map, tgt, src)


@cli.command()
@click.option("--tgt-camera", required=True, type=click.Path(exists=True))
@click.option("--src-camera", required=True, type=click.Path(exists=True))
@click.option("--depth", required=True, type=click.Path(exists=True), help="Target-view depth .fwt")
@click.option("--features", type=click.Path(exists=True), help="CxHxW feature tensor to warp")
@click.option("--bundle", type=click.Path(exists=True), help="Attention bundle directory to warp")
@click.option("--out", type=click.Path(), help="Warped feature tensor path")
@click.option("--out-bundle", type=click.Path(), help="Warped bundle directory")
@click.option("--mask-out", type=click.Path(), help="Sampling validity mask path (tensor mode)")
@click.option("--masks-out", type=click.Path(), help="Directory for per-resolution masks (bundle mode)")
@click.option("--field-out", type=click.Path(), help="Write the 3xHxW (u, v, valid) field tensor")
@click.option("--sampling", type=click.Choice(["bilinear", "nearest"]), default="bilinear")
def warp(tgt_camera, src_camera, depth, features, bundle, out, out_bundle, mask_out, masks_out, field_out, sampling):
    """Warp features or a bundle from the source view into the target view."""
    if (features is None) == (bundle is None) and field_out is None:
        raise ConfigError("provide exactly one of --features or --bundle (or --field-out alone)")
    if features is not None and bundle is not None:
        raise ConfigError("provide only one of --features or --bundle")
    field = _load_field_inputs(tgt_camera, src_camera, depth)
    if field_out:
        tensor = np.stack([field.u, field.v, field.valid.data.astype(np.float64)], axis=0)
        write_tensor_file(field_out, tensor.astype(np.float32))
    if features is not None:
        if not out:
            raise ConfigError("--features requires --out")
        fmap = as_feature_map(read_tensor_file(features))
        sized = resample_warp_field(field, fmap.height, fmap.width)
        warped, mask = warp_feature_map(fmap, sized, sampling)
        write_tensor_file(out, warped.data)
        if mask_out:
            write_tensor_file(mask_out, mask.data)
    elif bundle is not None:
        if not out_bundle:
            raise ConfigError("--bundle requires --out-bundle")
        src_bundle = load_bundle(bundle)
        warped_bundle, masks = warp_bundle(src_bundle, field, sampling)
        save_bundle(warped_bundle, out_bundle)
        if masks_out:
            masks_dir = Path(masks_out)
            masks_dir.mkdir(parents=True, exist_ok=True)
            for res, m in sorted(masks.items()):
                write_tensor_file(masks_dir / f"mask_{res}.fwt", m.data)


@cli.command()
@click.option("--tgt-camera", required=True, type=click.Path(exists=True))
@click.option("--src-camera", required=True, type=click.Path(exists=True))
@click.option("--depth", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.option("--png", type=click.Path(), help="Optional PNG export of the mask")
def mask(tgt_camera, src_camera, depth, out, png):
    """Write the warp validity mask for a view pair."""
    field = _load_field_inputs(tgt_camera, src_camera, depth)
    write_tensor_file(out, field.valid.data)
    if png:
        export_png(png, field.valid.data)


@cli.command("render-depth")
@click.option("--splats", required=True, type=click.Path(exists=True), help="N x 9 splat table .fwt")
@click.option("--camera", required=True, type=click.Path(exists=True), help="View to render")
@click.option("--filter-camera", type=click.Path(exists=True), help="Second view for normal filtering")
@click.option("--theta-max", type=float, default=60.0, show_default=True)
@click.option("--out", type=click.Path(), help="Depth map output .fwt")
@click.option("--filtered-out", type=click.Path(), help="Write the surviving splat table")
@click.option("--png", type=click.Path(), help="Optional PNG export of the depth")
def render_depth_cmd(splats, camera, filter_camera, theta_max, out, filtered_out, png):
    """Render a z-buffer depth map from (optionally normal-filtered) splats."""
    if out is None and filtered_out is None:
        raise ConfigError("provide --out and/or --filtered-out")
    if filtered_out is not None and filter_camera is None:
        raise ConfigError("--filtered-out requires --filter-camera")
    splat_set = SplatSet.from_table(read_tensor_file(splats))
    cam = load_camera(camera)
    if filter_camera is not None:
        other = load_camera(filter_camera)
        splat_set = filter_splats(splat_set, other, cam, FilterConfig(theta_max))
    if filtered_out:
        write_tensor_file(filtered_out, splat_set.to_table())
    if out:
        depth = render_depth(splat_set, cam)
        write_tensor_file(out, depth.data)
        if png:
            d = depth.data
            top = d.max() if d.max() > 0 else 1.0
            export_png(png, d / top)


@cli.command()
@click.option("--warped", type=click.Path(exists=True))
@click.option("--fresh", type=click.Path(exists=True))
@click.option("--mask", "mask_path", type=click.Path(exists=True))
@click.option("--out", type=click.Path())
@click.option("--alpha", type=float, help="Explicit blend coefficient")
@click.option("--t", "step", type=int, help="Denoising step index")
@click.option("--total-steps", type=int, help="Schedule length T")
@click.option("--alpha0", type=float, default=0.9, show_default=True)
@click.option("--print-alpha", is_flag=True, help="Print the resolved coefficient as JSON")
def blend(warped, fresh, mask_path, out, alpha, step, total_steps, alpha0, print_alpha):
    """Blend warped and fresh tensors under a mask and a (decaying) coefficient."""
    if alpha is None:
        if step is None or total_steps is None:
            raise ConfigError("provide --alpha or both --t and --total-steps")
        alpha = alpha_at(BlendSchedule(alpha0, total_steps), step)
    elif step is not None:
        raise ConfigError("provide either --alpha or --t, not both")
    if print_alpha:
        click.echo(json.dumps({"alpha": alpha}))
    if out is not None:
        if warped is None or fresh is None or mask_path is None:
            raise ConfigError("--out requires --warped, --fresh and --mask")
        warped_map = as_feature_map(read_tensor_file(warped))
        fresh_map = as_feature_map(read_tensor_file(fresh))
        mask = Mask(read_tensor_file(mask_path))
        blended = blend_masked(warped_map, fresh_map, mask, alpha)
        write_tensor_file(out, blended.data)
    elif not print_alpha:
        raise ConfigError("nothing to do: provide --out or --print-alpha")


@cli.command()
@click.option("--spec", required=True, type=click.Path(exists=True), help="Scene spec JSON")
@click.option("--out-dir", required=True, type=click.Path())
def synth(spec, out_dir):
    """Generate a synthetic scene: cameras, depths, images, splats."""
    synth_scene(scene_spec_from_file(spec), out_dir)


@cli.command()
@click.option("--config", required=True, type=click.Path(exists=True), help="Run config JSON")
@click.option("--out-dir", required=True, type=click.Path())
def run(config, out_dir):
    """Run the staged edit-propagation pipeline and write its manifest."""
    config_path = Path(config)
    try:
        with open(config_path) as f:
            spec = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"run config is not valid JSON: {e}") from e
    base = config_path.parent

    if "scene_manifest" in spec:
        records, splats = records_from_scene_manifest(base / spec["scene_manifest"])
    elif "views" in spec:
        records = [
            ViewRecord(
                view_id=v["id"],
                camera=load_camera(base / v["camera"]),
                image_path=base / v["image"],
                depth_path=(base / v["depth"]) if v.get("depth") else None,
            )
            for v in spec["views"]
        ]
        splats = None
        if spec.get("splats"):
            splats = SplatSet.from_table(read_tensor_file(base / spec["splats"]))
    else:
        raise ConfigError("run config needs scene_manifest or views")

    if "source" not in spec:
        raise ConfigError("run config needs a source view id")
    resolutions = tuple(spec.get("resolutions", (32, 64)))
    cfg = RunConfig(
        stages=StageConfig(
            num_stages=int(spec.get("stages", 3)),
            subset_size=int(spec.get("subset_size", 40)),
            seed=int(spec.get("seed", 0)),
        ),
        prompt=str(spec.get("prompt", "")),
        theta_max=float(spec.get("theta_max", 60.0)),
        sampling=str(spec.get("sampling", "bilinear")),
        resolutions=resolutions,
        step_budget=int(spec.get("step_budget", 20)),
        alpha0=float(spec.get("alpha0", 0.9)),
        depth_from_splats=bool(spec.get("depth_from_splats", False)),
        plugin_parallelism=int(spec.get("plugin_parallelism", 1)),
    )
    editor = editor_from_config(spec.get("editor", {"type": "identity"}), resolutions)
    run_pipeline(records, spec["source"], editor, cfg, out_dir, splats=splats)


@cli.command("eval")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True))
def eval_cmd(path_a, path_b):
    """Compare two tensors: L1, max-abs and PSNR (peak 1.0) as JSON."""
    a = read_tensor_file(path_a).astype(np.float64)
    b = read_tensor_file(path_b).astype(np.float64)
    if a.shape != b.shape:
        raise ConfigError(f"shapes differ: {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    mse = float(np.mean(diff * diff))
    psnr = "inf" if mse == 0.0 else 10.0 * math.log10(1.0 / mse)
    click.echo(
        json.dumps({"l1": float(diff.mean()), "max_abs": float(diff.max()), "psnr": psnr})
    )


def main():
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Exit as e:
        sys.exit(e.exit_code)
    except click.ClickException as e:
        e.show()
        sys.exit(e.exit_code)
    except click.Abort:
        sys.exit(1)
    except FeatwarpError as e:
        sys.stderr.write(json.dumps(e.to_json_dict()) + "\n")
        sys.exit(2)
    except OSError as e:
        sys.stderr.write(json.dumps({"error": "io-error", "message": str(e)}) + "\n")
        sys.exit(2)


if __name__ == "__main__":
    main()
