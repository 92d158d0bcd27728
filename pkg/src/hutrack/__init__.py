"""Multi-object blob tracking for fixed-camera frame sequences.

Motion is segmented with a temporal Chi-Square neighbourhood test, blobs
are described by nine color moments and seven Hu invariants, and blobs are
associated across frames by Chi-Square nearest-neighbour matching.
"""

from .evaluation import EvalReport, identity_coverage, iou, score
from .frame_io import Frame, GrayFrame, GroundTruth, load_frame, load_ground_truth, to_grayscale
from .moments import (
    ColorMoments,
    FeatureVector,
    HuMoments,
    central_moments,
    color_moments,
    extract_features,
    hu_moments,
)
from .morphology import Blob, connected_components, erode, fill_holes, filter_by_area
from .segmentation import BinaryMask, SegmentationParams, chi_square_statistic, motion_mask
from .tracker import AssociationResult, Detection, Track, Tracker, TrackerParams, associate, chi_square_distance

__version__ = "0.1.0"

__all__ = [
    "AssociationResult", "BinaryMask", "Blob", "ColorMoments", "Detection", "EvalReport",
    "FeatureVector", "Frame", "GrayFrame", "GroundTruth", "HuMoments", "SegmentationParams",
    "Track", "Tracker", "TrackerParams", "associate", "central_moments", "chi_square_distance",
    "chi_square_statistic", "color_moments", "connected_components", "erode", "extract_features",
    "fill_holes", "filter_by_area", "hu_moments", "identity_coverage", "iou", "load_frame",
    "load_ground_truth", "motion_mask", "score", "to_grayscale",
]
