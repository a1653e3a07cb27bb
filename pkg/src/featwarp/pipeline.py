"""Staged edit-propagation control loop.

One run edits a chosen source view, captures its attention bundle, then
walks a fixed number of stages. Each stage picks a random subset of views
that have not been edited yet, computes the backward warp from each of them
to the source, warps the source bundle, and hands everything to the editor
plug-in. Selection is a pure function of (seed, stage, view ids): a Philox
counter-based generator keyed by (seed, stage) drives a Fisher-Yates
partial shuffle over the sorted unedited ids, so any implementation of the
same procedure reproduces the subsets.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .editors import EditorPlugin, EditRequest, EditResult
from .errors import ConfigError, FeatwarpError
from .geometry import Camera, DepthMap, compute_warp_field, load_camera
from .images import read_image_file, write_image_file
from .maps import AttentionBundle, Mask, save_bundle
from .splats import FilterConfig, SplatSet, filter_splats, render_depth
from .tensorio import read_tensor_file, write_tensor_file
from .warp import resample_warp_field, sampling_mask, warp_bundle

RUN_MANIFEST_FORMAT = "featwarp-run-v1"


@dataclass
class ViewRecord:
    """Bookkeeping for one rig view. The edited flag only ever turns on."""

    view_id: str
    camera: Camera
    image_path: Path
    depth_path: Path | None = None
    edited: bool = False

    def mark_edited(self) -> None:
        self.edited = True


@dataclass(frozen=True)
class StageConfig:
    num_stages: int = 3
    subset_size: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.num_stages < 1:
            raise ConfigError("num_stages must be >= 1")
        if self.subset_size < 1:
            raise ConfigError("subset_size must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must fit in 64 bits")


@dataclass(frozen=True)
class RunConfig:
    stages: StageConfig = StageConfig()
    prompt: str = ""
    theta_max: float = 60.0
    sampling: str = "bilinear"
    resolutions: tuple[int, ...] = (32, 64)
    step_budget: int = 20
    alpha0: float = 0.9
    depth_from_splats: bool = False
    plugin_parallelism: int = 1

    def __post_init__(self):
        if self.plugin_parallelism < 1:
            raise ConfigError("plugin_parallelism must be >= 1")


def select_subset(records: list[ViewRecord], cfg: StageConfig, stage: int) -> list[str]:
    """Uniform sample without replacement from the unedited views.

    Deterministic given (seed, stage, ids): Philox keyed by [seed, stage],
    then a partial Fisher-Yates over the id-sorted candidates using
    ``integers(i, n)`` draws. Clamps to however many views remain.
    """
    if stage < 0 or stage >= cfg.num_stages:
        raise ConfigError(f"stage {stage} outside [0, {cfg.num_stages})")
    candidates = sorted(r.view_id for r in records if not r.edited)
    size = min(cfg.subset_size, len(candidates))
    if size == 0:
        return []
    rng = np.random.Generator(np.random.Philox(key=[cfg.seed, stage]))
    n = len(candidates)
    picks = list(candidates)
    for i in range(size):
        j = int(rng.integers(i, n))
        picks[i], picks[j] = picks[j], picks[i]
    return picks[:size]


@dataclass
class ViewOutcome:
    view_id: str
    status: str
    mask_coverage: dict[str, float] = dataclass_field(default_factory=dict)
    error: dict | None = None
    outputs: dict[str, str] = dataclass_field(default_factory=dict)

    def to_json_dict(self) -> dict:
        d = {
            "id": self.view_id,
            "status": self.status,
            "mask_coverage": self.mask_coverage,
            "outputs": self.outputs,
        }
        if self.error is not None:
            d["error"] = self.error
        return d


def _target_depth(
    record: ViewRecord, source_cam: Camera, splats: SplatSet | None, cfg: RunConfig
) -> DepthMap:
    if record.depth_path is not None and not cfg.depth_from_splats:
        return DepthMap(read_tensor_file(record.depth_path))
    if splats is None:
        raise ConfigError(
            f"view {record.view_id} has no depth file and no splats were provided"
        )
    kept = filter_splats(splats, source_cam, record.camera, FilterConfig(cfg.theta_max))
    return render_depth(kept, record.camera)


def _check_bundle_resolutions(bundle: AttentionBundle, cfg: RunConfig, who: str) -> None:
    for layer in bundle.layers:
        for fmap in (layer.self_attn, layer.cross_attn):
            if fmap is None:
                continue
            if fmap.height not in cfg.resolutions or fmap.width not in cfg.resolutions:
                raise ConfigError(
                    f"{who} returned a {fmap.height}x{fmap.width} map, "
                    f"allowed resolutions are {cfg.resolutions}"
                )


def _edit_one_view(
    record: ViewRecord,
    source_cam: Camera,
    source_bundle: AttentionBundle,
    plugin: EditorPlugin,
    cfg: RunConfig,
    splats: SplatSet | None,
    view_dir: Path,
) -> ViewOutcome:
    depth = _target_depth(record, source_cam, splats, cfg)
    field = compute_warp_field(depth, record.camera, source_cam)
    warped, _ = warp_bundle(source_bundle, field, cfg.sampling)
    # masks cover every configured resolution even when the bundle is empty
    masks = {
        res: sampling_mask(resample_warp_field(field, res, res), cfg.sampling)
        for res in cfg.resolutions
    }

    request = EditRequest(
        image=read_image_file(record.image_path),
        conditioning=depth.data.astype(np.float32),
        prompt=cfg.prompt,
        warped_bundle=warped,
        masks=masks,
        step_budget=cfg.step_budget,
        alpha0=cfg.alpha0,
    )
    result: EditResult = plugin.edit(request)
    _check_bundle_resolutions(result.bundle, cfg, f"editor for view {record.view_id}")

    view_dir.mkdir(parents=True, exist_ok=True)
    outcome = ViewOutcome(record.view_id, "edited")
    write_image_file(view_dir / "edited.fwt", result.image)
    outcome.outputs["edited"] = "edited.fwt"
    save_bundle(warped, view_dir / "warped_bundle")
    outcome.outputs["warped_bundle"] = "warped_bundle"
    field_tensor = np.stack(
        [field.u, field.v, field.valid.data.astype(np.float64)], axis=0
    ).astype(np.float32)
    write_tensor_file(view_dir / "field.fwt", field_tensor)
    outcome.outputs["field"] = "field.fwt"
    for res, mask in sorted(masks.items()):
        name = f"mask_{res}.fwt"
        write_tensor_file(view_dir / name, mask.data)
        outcome.outputs[f"mask_{res}"] = name
        outcome.mask_coverage[str(res)] = mask.coverage()
    return outcome


def run_stage(
    records: list[ViewRecord],
    source_id: str,
    source_bundle: AttentionBundle,
    plugin: EditorPlugin,
    cfg: RunConfig,
    stage: int,
    out_dir: Path,
    splats: SplatSet | None = None,
) -> list[ViewOutcome]:
    """Edit one stage's subset of views. Per-view failures do not stop the stage."""
    by_id = {r.view_id: r for r in records}
    source = by_id.get(source_id)
    if source is None:
        raise ConfigError(f"unknown source view {source_id!r}")
    if not source.edited:
        raise ConfigError("source view must be edited before running a stage")
    subset = select_subset(records, cfg.stages, stage)
    if source_id in subset:
        raise ConfigError(f"source view {source_id!r} appeared in its own subset")

    def job(view_id: str) -> ViewOutcome:
        record = by_id[view_id]
        view_dir = out_dir / "views" / view_id
        try:
            return _edit_one_view(
                record, source.camera, source_bundle, plugin, cfg, splats, view_dir
            )
        except FeatwarpError as e:
            return ViewOutcome(view_id, "error", error=e.to_json_dict())
        except Exception as e:  # plugin code is arbitrary
            return ViewOutcome(view_id, "error", error={"error": "plugin-failure", "message": str(e)})

    if cfg.plugin_parallelism > 1:
        with ThreadPoolExecutor(max_workers=cfg.plugin_parallelism) as pool:
            outcomes = list(pool.map(job, subset))
    else:
        outcomes = [job(view_id) for view_id in subset]

    for outcome in outcomes:
        if outcome.status == "edited":
            by_id[outcome.view_id].mark_edited()
    return outcomes


def run_pipeline(
    records: list[ViewRecord],
    source_id: str,
    plugin: EditorPlugin,
    cfg: RunConfig,
    out_dir,
    splats: SplatSet | None = None,
    post_stage=None,
) -> dict:
    """Execute the full staged loop and write the run manifest.

    The manifest (per-stage subsets, per-view coverage and status) is a pure
    function of the inputs and the seed; wall-clock timing goes to a separate
    timing.json so manifests from identical runs are byte-identical.
    ``post_stage(stage_index, outcomes)`` fires after each stage, which is
    where splat fine-tuning hooks in.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    by_id = {r.view_id: r for r in records}
    if len(by_id) != len(records):
        raise ConfigError("view ids must be unique")
    source = by_id.get(source_id)
    if source is None:
        raise ConfigError(f"unknown source view {source_id!r}")

    t_start = time.perf_counter()
    source_dir = out / "source"
    source_dir.mkdir(parents=True, exist_ok=True)
    source_depth = None
    if source.depth_path is not None or splats is not None:
        source_depth = _target_depth(source, source.camera, splats, cfg)
    request = EditRequest(
        image=read_image_file(source.image_path),
        conditioning=None if source_depth is None else source_depth.data.astype(np.float32),
        prompt=cfg.prompt,
        warped_bundle=None,
        masks=None,
        step_budget=cfg.step_budget,
        alpha0=cfg.alpha0,
    )
    result = plugin.edit(request)
    _check_bundle_resolutions(result.bundle, cfg, "editor for the source view")
    source_bundle = result.bundle
    write_image_file(source_dir / "edited.fwt", result.image)
    save_bundle(source_bundle, source_dir / "bundle")
    source.mark_edited()
    timing = {"source_s": time.perf_counter() - t_start}

    stage_entries = []
    for stage in range(cfg.stages.num_stages):
        t0 = time.perf_counter()
        stage_dir = out / f"stage_{stage:02d}"
        outcomes = run_stage(
            records, source_id, source_bundle, plugin, cfg, stage, stage_dir, splats
        )
        timing[f"stage_{stage:02d}_s"] = time.perf_counter() - t0
        stage_entries.append(
            {
                "stage": stage,
                "views": [o.to_json_dict() for o in outcomes],
            }
        )
        if post_stage is not None:
            post_stage(stage, outcomes)

    manifest = {
        "format": RUN_MANIFEST_FORMAT,
        "source": source_id,
        "seed": cfg.stages.seed,
        "num_stages": cfg.stages.num_stages,
        "subset_size": cfg.stages.subset_size,
        "sampling": cfg.sampling,
        "resolutions": list(cfg.resolutions),
        "theta_max": cfg.theta_max,
        "stages": stage_entries,
    }
    with open(out / "run_manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    timing["total_s"] = time.perf_counter() - t_start
    with open(out / "timing.json", "w") as f:
        json.dump(timing, f, indent=2, sort_keys=True)
        f.write("\n")
    return manifest


def records_from_scene_manifest(manifest_path) -> tuple[list[ViewRecord], SplatSet | None]:
    """Build view records (and the splat set, if any) from a synth scene dir."""
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    try:
        with open(manifest_path) as f:
            scene = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"scene manifest is not valid JSON: {e}") from e
    records = []
    for v in scene.get("views", []):
        records.append(
            ViewRecord(
                view_id=v["id"],
                camera=load_camera(base / v["camera"]),
                image_path=base / v["image"],
                depth_path=(base / v["depth"]) if v.get("depth") else None,
            )
        )
    splats = None
    if scene.get("splats"):
        table = read_tensor_file(base / scene["splats"])
        splats = SplatSet.from_table(table)
    return records, splats
