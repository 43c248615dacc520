from .annotations import (
    AnnotationError,
    PolygonAnnotation,
    PolygonShape,
    parse_annotation,
    rasterize_mask,
    serialize_annotation,
)
from .manifest import DatasetManifest, SampleRef, load_manifest, make_manifest, save_manifest
from .synth import DEFAULT_LABEL, load_pair, synth_dataset, synth_sample

__all__ = [
    "AnnotationError",
    "PolygonAnnotation",
    "PolygonShape",
    "parse_annotation",
    "serialize_annotation",
    "rasterize_mask",
    "DatasetManifest",
    "SampleRef",
    "make_manifest",
    "save_manifest",
    "load_manifest",
    "synth_dataset",
    "synth_sample",
    "load_pair",
    "DEFAULT_LABEL",
]
