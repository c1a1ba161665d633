"""Two-view silhouette body volumetry.

Segments green-screen photos into body masks, rotates them upright by
maximizing left-right pixel symmetry, integrates elliptical cross-sections
into a pixel-denominated body volume, and fits/applies linear models from
shape features to a body-composition value. Synthetic phantoms with analytic
volumes serve as the built-in verification oracle.
"""

from .alignment import (
    AlignmentResult,
    Rect,
    RotationSearchParams,
    align_upright,
    asymmetry_score,
    bounding_rect,
    normalize_views,
    rect_centroid,
    rotate_mask,
)
from .composition import CompositionModel, FitReport, evaluate, fit_linear, predict
from .errors import (
    BadImage,
    EmptyBody,
    EmptyMask,
    FeatureMismatch,
    InsufficientData,
    ManifestParse,
    PipelineError,
    RowMismatch,
    SingularSystem,
    SpecOutOfBounds,
)
from .phantom import (
    ArmSpec,
    PhantomSpec,
    analytic_volume,
    fixture_specs,
    render_masks,
    render_phantom,
    voxel_volume,
)
from .pipeline import PipelineReport, RunConfig, run_batch, run_pipeline
from .segmentation import (
    HueThresholdParams,
    clean_mask,
    rgb_to_hsv,
    segment_green_screen,
)
from .volumetry import (
    FEATURE_NAMES,
    CalibrationScale,
    ShapeFeatures,
    SliceProfileSet,
    VolumeEstimate,
    body_volume,
    extract_profiles,
    row_runs,
    shape_features,
    slice_area,
    slice_perimeter,
)

__version__ = "0.1.0"
