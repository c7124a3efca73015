"""Snapshot-mosaic hyperspectral cube toolkit.

Reconstructs 25-band reflectance cubes from 5x5 mosaic raw frames, estimates
the in-frame illumination level for pseudo-reflectance scaling, provides the
ECA spectral-attention primitive, and evaluates segmentation outputs with
per-class IoU / global / weighted scores.
"""

from .attention import (AttentionUnetManifest, EcaBlock, StageAttention,
                        build_attention_manifest, eca_forward, eca_gate,
                        eca_kernel_size, global_avg_pool)
from .errors import (AlignmentError, BoundsError, CalibrationError,
                     ConfigError, DomainError, EstimationError,
                     EvaluationError, HsiCubeError, SchemaError, ShapeError,
                     StageFailure, StatisticsError)
from .metrics import (ConfusionMatrix, MetricsReport, aggregate, confusion,
                      iou_per_class, kfold_mean, remap_labels, report_to_csv)
from .normalize import (BandStats, compute_band_stats, load_band_stats,
                        normalize_bandwise, normalize_pixelwise,
                        save_band_stats)
from .pipeline import (FilterSpec, PipelineConfig, ProcessResult, StageTrace,
                       align_to_center, clip_unit, crop_frame, demosaic,
                       process_frame, reflectance_correct, saturation_counts,
                       spatial_filter, subtract_bias)
from .scaling import (AlbedoCandidate, RejectionParams, ScalingReport,
                      apply_scaling, find_max_albedo, is_artificial)
from .sensor import (BANDS, MAX_COUNT, TILE, CameraConfig, HsiCube,
                     MosaicLayout, RawFrame, WhiteReference, band_offset,
                     bilinear_shift, default_band_centers,
                     synth_raw_from_cube)
from .stats import (CLASS_NAMES, ClassFrequencyTable, TableDelta,
                    class_frequencies, diff_tables)
from .synth import SceneSpec, SceneTruth, WhiteSpec, build_scene, build_white

__version__ = "0.1.0"
