"""
Immutable parameter collections for network families.

A ParamSet serializes to a flat little-endian float64 blob preceded by a JSON
header holding tensor names and shapes, so an archived draw can be audited
byte for byte.
"""

import json
import struct
from dataclasses import dataclass, field
from typing import Dict, Iterator, Mapping, Optional, Tuple

import numpy as np

from ..errors import DimensionError
from ..numerics import RngStream

_MAGIC = b"SGPS"


@dataclass(frozen=True)
class ParamSet:
    """Named parameter tensors of one network draw."""

    kind: str
    tensors: Mapping[str, np.ndarray]
    stream: Optional[RngStream] = field(default=None, compare=False)

    def __post_init__(self):
        frozen = {}
        for name, value in self.tensors.items():
            arr = np.array(value, dtype=np.float64, copy=True)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"Parameter '{name}' has non-finite entries")
            arr.setflags(write=False)
            frozen[name] = arr
        object.__setattr__(self, "tensors", frozen)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def names(self) -> Tuple[str, ...]:
        return tuple(self.tensors)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: arr.shape for name, arr in self.tensors.items()}

    def count(self) -> int:
        return int(sum(arr.size for arr in self.tensors.values()))

    def replace(self, **updates: np.ndarray) -> "ParamSet":
        """Copy with some tensors swapped out; shapes must match."""
        tensors = dict(self.tensors)
        for name, value in updates.items():
            if name not in tensors:
                raise KeyError(f"Unknown parameter '{name}'. Available: {sorted(tensors)}")
            value = np.asarray(value, dtype=np.float64)
            if value.shape != tensors[name].shape:
                raise DimensionError(f"Parameter '{name}' has shape {tensors[name].shape}, got {value.shape}")
            tensors[name] = value
        return ParamSet(self.kind, tensors, self.stream)

    def apply_update(self, grads: Mapping[str, np.ndarray], step: float) -> "ParamSet":
        """Return ``params - step * grads`` for every tensor present in ``grads``."""
        return self.replace(**{name: self.tensors[name] - step * grads[name] for name in grads})

    def flat(self) -> np.ndarray:
        if not self.tensors:
            return np.zeros(0)
        return np.concatenate([arr.ravel() for arr in self.tensors.values()])

    def to_bytes(self) -> bytes:
        header = {
            "kind": self.kind,
            "tensors": [{"name": name, "shape": list(arr.shape)} for name, arr in self.tensors.items()],
            "stream": (
                None
                if self.stream is None
                else [self.stream.master_seed, self.stream.stream_id, self.stream.counter]
            ),
        }
        encoded = json.dumps(header, sort_keys=True).encode("utf-8")
        body = self.flat().astype("<f8").tobytes()
        return _MAGIC + struct.pack("<Q", len(encoded)) + encoded + body

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ParamSet":
        if blob[:4] != _MAGIC:
            raise ValueError("Not a serialized ParamSet")
        (header_len,) = struct.unpack("<Q", blob[4:12])
        header = json.loads(blob[12 : 12 + header_len].decode("utf-8"))
        values = np.frombuffer(blob[12 + header_len :], dtype="<f8").astype(np.float64)

        tensors = {}
        offset = 0
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            size = int(np.prod(shape)) if shape else 1
            if offset + size > values.size:
                raise ValueError(f"ParamSet blob truncated at tensor '{entry['name']}'")
            tensors[entry["name"]] = values[offset : offset + size].reshape(shape)
            offset += size
        if offset != values.size:
            raise ValueError(f"ParamSet blob has {values.size - offset} trailing values")

        stream = RngStream(*header["stream"]) if header.get("stream") is not None else None
        return cls(header["kind"], tensors, stream)


def zeros_like(params: ParamSet) -> Dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.tensors.items()}
