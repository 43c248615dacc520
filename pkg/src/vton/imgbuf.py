"""Image buffer conventions and conversions.

Every stage of the pipeline exchanges H x W x C float32 arrays with values
in [0, 1] (channel order RGB) or H x W binary masks with values in {0, 1}.
Disk representation is 8-bit PNG; conversion is value/255 on load and
round(value*255) on save so a load/save round trip is exact.
"""

from __future__ import annotations

import numpy as np
from PIL import Image as PILImage


class ImageError(ValueError):
    """Raised when an array does not satisfy the image/mask contract."""


def validate_image(img: np.ndarray) -> np.ndarray:
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ImageError(f"expected HxWxC array with C in (1, 3), got shape {img.shape}")
    if img.dtype != np.float32 and img.dtype != np.float64:
        raise ImageError(f"expected float image, got dtype {img.dtype}")
    if img.size and (img.min() < 0.0 or img.max() > 1.0):
        raise ImageError("image values must lie in [0, 1]")
    return img


def validate_mask(mask: np.ndarray) -> np.ndarray:
    if mask.ndim != 2:
        raise ImageError(f"expected HxW mask, got shape {mask.shape}")
    values = np.unique(mask)
    if not np.all(np.isin(values, (0, 1))):
        raise ImageError("mask values must be exactly 0 or 1")
    return mask


def to_uint8(img: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(img, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)


def from_uint8(raw: np.ndarray) -> np.ndarray:
    return raw.astype(np.float32) / 255.0


def load_image(path) -> np.ndarray:
    """Load a PNG/JPEG file as an HxWx3 float32 image in [0, 1]."""
    with PILImage.open(path) as im:
        rgb = im.convert("RGB")
        return from_uint8(np.asarray(rgb))


def save_image(path, img: np.ndarray) -> None:
    arr = to_uint8(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    PILImage.fromarray(arr).save(path, format="PNG")


def load_mask(path) -> np.ndarray:
    """Load a mask PNG (0/255 on disk) as an HxW array of {0, 1} float32."""
    with PILImage.open(path) as im:
        gray = np.asarray(im.convert("L"))
    return (gray >= 128).astype(np.float32)


def save_mask(path, mask: np.ndarray) -> None:
    arr = (np.asarray(mask) >= 0.5).astype(np.uint8) * 255
    PILImage.fromarray(arr).save(path, format="PNG")


def encode_png(img: np.ndarray) -> bytes:
    import io

    arr = to_uint8(img)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    buf = io.BytesIO()
    PILImage.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def decode_image(data: bytes) -> np.ndarray:
    import io

    with PILImage.open(io.BytesIO(data)) as im:
        return from_uint8(np.asarray(im.convert("RGB")))


def resize_image(img: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resize for continuous imagery."""
    import cv2

    out = cv2.resize(np.asarray(img, dtype=np.float32), (width, height), interpolation=cv2.INTER_LINEAR)
    if img.ndim == 3 and out.ndim == 2:
        out = out[:, :, None]
    return np.clip(out, 0.0, 1.0)


def resize_mask(mask: np.ndarray, height: int, width: int) -> np.ndarray:
    """Nearest-neighbour resize; preserves the {0, 1} value set."""
    import cv2

    return cv2.resize(np.asarray(mask, dtype=np.float32), (width, height), interpolation=cv2.INTER_NEAREST)


def to_gray(img: np.ndarray) -> np.ndarray:
    """Luminance conversion with weights 0.299/0.587/0.114."""
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    return img[:, :, 0] * 0.299 + img[:, :, 1] * 0.587 + img[:, :, 2] * 0.114
