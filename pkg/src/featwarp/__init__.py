"""featwarp: depth-based warping of attention feature maps across views.

The geometric core of single-source-view 3D scene editing: compute a
backward warp field from a target view into the source from depth and
camera poses, carry attention bundles through it, gate by a visibility
mask, blend against freshly computed maps under a decaying coefficient,
and orchestrate staged propagation over a camera rig with the diffusion
model abstracted behind an editor plug-in.
"""

from .blending import BlendSchedule, alpha_at, blend_masked
from .editors import (
    EditorPlugin,
    EditRequest,
    EditResult,
    IdentityEditor,
    StampEditor,
    SubprocessEditor,
    editor_from_config,
    empty_bundle,
)
from .errors import (
    BadMagicError,
    ConfigError,
    DimensionMismatchError,
    FeatwarpError,
    InvalidSampleError,
    NonFiniteError,
    ProjectionSingularityError,
    StepRangeError,
    TensorFormatError,
    TensorSizeError,
    TruncatedPayloadError,
    UnsupportedDtypeError,
)
from .geometry import (
    Camera,
    CameraExtrinsics,
    CameraIntrinsics,
    DepthMap,
    WarpField,
    camera_from_json_dict,
    camera_to_json_dict,
    camera_to_world,
    compute_warp_field,
    load_camera,
    project,
    relative_transform,
    save_camera,
    unproject,
    world_to_camera,
)
from .images import export_png, read_image_file, write_image_file
from .losses import (
    ExternalLoss,
    NormalMap,
    RayIntersections,
    depth_distortion_loss,
    l1_loss,
    load_rays,
    normal_consistency_loss,
    normals_from_depth,
    pair_distortion_grad,
    save_rays,
)
from .maps import (
    AttentionBundle,
    BundleLayer,
    FeatureMap,
    Mask,
    load_bundle,
    save_bundle,
)
from .pipeline import (
    RunConfig,
    StageConfig,
    ViewRecord,
    records_from_scene_manifest,
    run_pipeline,
    run_stage,
    select_subset,
)
from .splats import FilterConfig, Splat, SplatSet, filter_splats, render_depth, view_normal
from .tensorio import read_tensor, read_tensor_file, write_tensor, write_tensor_file
from .warp import resample_warp_field, warp_bundle, warp_feature_map

__version__ = "0.1.0"


def __getattr__(name):
    # the estimator layer pulls in scikit-learn; load it only when asked for
    if name in ("ViewWarper", "SplatViewFilter"):
        from . import estimators

        return getattr(estimators, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

__all__ = [
    "AttentionBundle",
    "BadMagicError",
    "BlendSchedule",
    "BundleLayer",
    "Camera",
    "CameraExtrinsics",
    "CameraIntrinsics",
    "ConfigError",
    "DepthMap",
    "DimensionMismatchError",
    "EditRequest",
    "EditResult",
    "EditorPlugin",
    "ExternalLoss",
    "FeatureMap",
    "FeatwarpError",
    "FilterConfig",
    "IdentityEditor",
    "InvalidSampleError",
    "Mask",
    "NonFiniteError",
    "NormalMap",
    "ProjectionSingularityError",
    "RayIntersections",
    "RunConfig",
    "Splat",
    "SplatSet",
    "SplatViewFilter",
    "StageConfig",
    "StampEditor",
    "StepRangeError",
    "SubprocessEditor",
    "TensorFormatError",
    "TensorSizeError",
    "TruncatedPayloadError",
    "UnsupportedDtypeError",
    "ViewRecord",
    "ViewWarper",
    "WarpField",
    "alpha_at",
    "blend_masked",
    "camera_from_json_dict",
    "camera_to_json_dict",
    "camera_to_world",
    "compute_warp_field",
    "depth_distortion_loss",
    "editor_from_config",
    "empty_bundle",
    "export_png",
    "filter_splats",
    "l1_loss",
    "load_bundle",
    "load_camera",
    "load_rays",
    "normal_consistency_loss",
    "normals_from_depth",
    "pair_distortion_grad",
    "project",
    "read_image_file",
    "read_tensor",
    "read_tensor_file",
    "records_from_scene_manifest",
    "relative_transform",
    "render_depth",
    "resample_warp_field",
    "run_pipeline",
    "run_stage",
    "save_bundle",
    "save_camera",
    "save_rays",
    "select_subset",
    "unproject",
    "view_normal",
    "warp_bundle",
    "warp_feature_map",
    "world_to_camera",
    "write_image_file",
    "write_tensor",
    "write_tensor_file",
]
