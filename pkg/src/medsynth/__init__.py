"""Deterministic synthetic-dataset engine for clothed-human detection in clinical scenes."""

from .annotate import BoundingBox2D, FrameAnnotation, ObjectAnnotation, annotate_frame, bbox_from_mask
from .augment import ChromaKeyConfig, MosaicConfig, chroma_composite, green_channel_aug, mosaic
from .body_model import ParametricBody, Pose, apply_shape, forward_kinematics, sample_animation, skin_mesh
from .clothing import ClothingAsset, PaletteSpec, recolor_texture, transfer_blendshapes, transfer_weights
from .dataset import DatasetManifest, split
from .evaluation import DetectionRecord, EvalReport, average_precision, evaluate, iou, match_detections
from .render import FrameBuffers, RenderInstance, build_instances, project, rasterize
from .scene import CameraModel, FrameSpec, RandomizationConfig, compose_dr, compose_sdr, plan_dataset

__version__ = "0.1.0"
