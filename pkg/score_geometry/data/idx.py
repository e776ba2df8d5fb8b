"""
IDX reader for MNIST-style files.

File layout (big-endian)::

    offset  type    value
    0       int32   0x00000803 images / 0x00000801 labels
    4       int32   item count
    8       int32   rows            (images only)
    12      int32   columns         (images only)
    16/8    uint8[] payload

Gzipped files (``.gz``) are decompressed transparently.
"""

import gzip
import logging
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..errors import IdxFormatError
from .datasets import Dataset

logger = logging.getLogger(__name__)

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _read_bytes(path: Union[str, Path]) -> bytes:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"IDX file not found: {path}")
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as f:
            return f.read()
    return path.read_bytes()


def _header(blob: bytes, n_ints: int, path) -> tuple:
    size = 4 * n_ints
    if len(blob) < size:
        raise IdxFormatError(f"{path}: truncated header, expected {size} bytes, file ends at byte offset {len(blob)}")
    return struct.unpack(f">{n_ints}I", blob[:size])


def _check_magic(blob: bytes, expected: int, path) -> None:
    if len(blob) >= 4:
        (magic,) = struct.unpack(">I", blob[:4])
        if magic != expected:
            raise IdxFormatError(f"{path}: bad magic 0x{magic:08x} at byte offset 0, expected 0x{expected:08x}")


def parse_images(blob: bytes, path: str = "<bytes>") -> np.ndarray:
    """Raw uint8 images, shape (count, rows, cols)."""
    _check_magic(blob, IMAGE_MAGIC, path)
    magic, count, rows, cols = _header(blob, 4, path)
    expected = 16 + count * rows * cols
    if len(blob) < expected:
        raise IdxFormatError(
            f"{path}: truncated payload at byte offset {len(blob)}, expected {expected} bytes "
            f"for {count} images of {rows}x{cols}"
        )
    return np.frombuffer(blob, dtype=np.uint8, count=count * rows * cols, offset=16).reshape(count, rows, cols)


def parse_labels(blob: bytes, path: str = "<bytes>") -> np.ndarray:
    _check_magic(blob, LABEL_MAGIC, path)
    magic, count = _header(blob, 2, path)
    if len(blob) < 8 + count:
        raise IdxFormatError(f"{path}: truncated payload at byte offset {len(blob)}, expected {8 + count} bytes")
    return np.frombuffer(blob, dtype=np.uint8, count=count, offset=8).copy()


def load_idx(images_path: Union[str, Path], labels_path: Optional[Union[str, Path]] = None) -> Dataset:
    """
    Load an IDX image file (and optional labels) scaled to [-1, 1].

    Raises:
        FileNotFoundError: If a file is missing
        IdxFormatError: On bad magic, truncation or label count mismatch
    """
    raw = parse_images(_read_bytes(images_path), str(images_path))
    count, rows, cols = raw.shape
    labels = None
    if labels_path is not None:
        labels = parse_labels(_read_bytes(labels_path), str(labels_path))
        if labels.size != count:
            raise IdxFormatError(f"{labels_path}: {labels.size} labels for {count} images")

    samples = raw.reshape(count, rows * cols).astype(np.float64) / 127.5 - 1.0
    logger.info("Loaded %d images of %dx%d from %s", count, rows, cols, images_path)
    return Dataset(
        samples,
        (1, rows, cols),
        {"kind": "idx", "source": str(images_path)},
        labels,
    )


def encode_idx_images(images: np.ndarray) -> bytes:
    """Serialize uint8 images (count, rows, cols) in IDX format."""
    images = np.asarray(images, dtype=np.uint8)
    count, rows, cols = images.shape
    return struct.pack(">4I", IMAGE_MAGIC, count, rows, cols) + images.tobytes()


def encode_idx_labels(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels, dtype=np.uint8).ravel()
    return struct.pack(">2I", LABEL_MAGIC, labels.size) + labels.tobytes()
