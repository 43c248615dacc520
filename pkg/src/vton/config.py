"""Layered configuration: defaults < config file < CLI flags < environment.

The file is JSON with one section per subsystem (data/augment/detect/seg/
gan/pipeline/serve). Environment overrides use VTON_<SECTION>_<KEY>, e.g.
VTON_DETECT_CONFIDENCE_THRESHOLD=0.3; values are parsed as JSON when
possible and kept as strings otherwise.
"""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path
from typing import Any

DEFAULTS: dict[str, dict[str, Any]] = {
    "data": {"split_fraction": 0.8, "label": "upper_body", "size": 64, "n": 40, "seed": 0},
    "augment": {
        "perspective": True,
        "perspective_max_shift": 0.08,
        "piecewise_affine": True,
        "piecewise_grid": 4,
        "piecewise_max_shift": 0.05,
        "elastic": True,
        "elastic_alpha": 10.0,
        "elastic_sigma": 6.0,
        "shear": True,
        "shear_max_degrees": 12.0,
        "scale": True,
        "scale_range": [0.85, 1.15],
        "copies": 4,
    },
    "detect": {
        "input_size": 640,
        "confidence_threshold": 0.25,
        "nms_iou_threshold": 0.45,
        "max_detections": 10,
        "backend": "fullframe",
    },
    "seg": {
        "spec": "small",
        "lr": 1e-3,
        "beta1": 0.9,
        "beta2": 0.999,
        "eps": 1e-8,
        "weight_decay": 0.0,
        "input_size": 64,
        "flip": True,
        "crop": True,
        "iterations": 200,
        "batch_size": 4,
        "seed": 0,
    },
    "gan": {
        "image_size": 64,
        "batch_size": 4,
        "epochs": 100,
        "lambda_fm": 10.0,
        "lambda_perc": 10.0,
        "g_lr": 2e-4,
        "d_lr": 2e-4,
        "flavor": "vanilla",
        "perceptual": "identity",
        "base_channels": 16,
        "global_downsamples": 2,
        "residual_blocks": 3,
        "enhancers": 0,
        "num_scales": 3,
        "layers": 3,
        "d_base_channels": 16,
        "seed": 0,
    },
    "pipeline": {"threshold": 0.5, "feather": 2.0, "margin": 0.1, "fallback": "error"},
    "serve": {"host": "127.0.0.1", "port": 8080, "workers": 2},
}


class ConfigError(ValueError):
    pass


def _parse_env_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def resolve_config(
    file_path: str | os.PathLike | None = None,
    flag_overrides: dict[str, Any] | None = None,
    env: dict[str, str] | None = None,
) -> dict[str, dict[str, Any]]:
    """Merge the four layers; flag_overrides keys are dotted 'section.key'."""
    cfg = copy.deepcopy(DEFAULTS)

    if file_path is not None:
        p = Path(file_path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        for section, values in doc.items():
            if section not in cfg:
                raise ConfigError(f"unknown config section '{section}'")
            cfg[section].update(values)

    for dotted, value in (flag_overrides or {}).items():
        if value is None:
            continue
        section, _, key = dotted.partition(".")
        if section not in cfg:
            raise ConfigError(f"unknown config section '{section}'")
        cfg[section][key] = value

    env = os.environ if env is None else env
    for name, raw in env.items():
        if not name.startswith("VTON_"):
            continue
        rest = name[len("VTON_") :].lower()
        section, _, key = rest.partition("_")
        if section in cfg:
            matched = None
            for existing in cfg[section]:
                if existing.replace("_", "") == key.replace("_", ""):
                    matched = existing
                    break
            cfg[section][matched or key] = _parse_env_value(raw)
    return cfg
