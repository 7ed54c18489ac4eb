"""Rigid multimodal volume registration with Shannon and Tsallis information measures."""

__version__ = "0.1.0"

from .histogram import BinMap, EmptyOverlap, JointHistogram, accumulate, make_bin_map, normalize
from .measures import (
    Kind,
    MeasureSpec,
    MeasureValue,
    Regime,
    classify_regime,
    evaluate,
    pseudo_additivity_residual,
    shannon_entropy,
    tsallis_entropy,
)
from .optimizer import NoInitialOverlap, OptimizerConfig, Trace, hill_climb, success
from .resample import build_pyramid, gaussian_blur, match_resolution, resample_cubic, trilinear
from .transform import (
    CornerSet,
    RigidTransform,
    apply,
    compose,
    inverse,
    parse_corners,
    random_perturbation,
    serialize_corners,
    to_corner_set,
)
from .volume import (
    HeaderParseError,
    SizeMismatchError,
    Volume,
    VolumeFormatError,
    VolumeHeader,
    load_sidecar,
    load_volume,
    parse_rire_header,
    save_volume,
)
