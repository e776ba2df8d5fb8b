"""
Counter-based, splittable random streams.

A stream is the triple ``(master_seed, stream_id, counter)``. Its output is a
pure function of that triple: the Philox bit generator is keyed by
``(master_seed, stream_id)`` and starts at block ``counter``. Child streams get
fresh ``stream_id`` values derived with ``numpy.random.SeedSequence`` so that
parallel workers never share state.
"""

import hashlib
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1

# Philox4x64 emits four 64-bit words per counter increment.
WORDS_PER_BLOCK = 4

Label = Union[int, str]


def _label_to_int(label: Label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK64
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def blocks_for(n: int) -> int:
    """Number of counter blocks consumed by ``gaussian(stream, n)``."""
    return -(-int(n) // WORDS_PER_BLOCK)


@dataclass(frozen=True)
class RngStream:
    """Immutable handle on one Philox stream."""

    master_seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id", "counter"):
            value = getattr(self, name)
            if not 0 <= int(value) <= _MASK64:
                raise ValueError(f"{name} must fit in 64 bits, got {value}")

    def bit_generator(self) -> np.random.Philox:
        return np.random.Philox(
            key=np.array([self.master_seed, self.stream_id], dtype=np.uint64),
            counter=np.array([self.counter, 0, 0, 0], dtype=np.uint64),
        )

    def generator(self) -> np.random.Generator:
        """Fresh numpy ``Generator`` positioned at this stream's counter."""
        return np.random.Generator(self.bit_generator())

    def advance(self, blocks: int) -> "RngStream":
        """Same stream, counter moved forward by ``blocks``."""
        return RngStream(self.master_seed, self.stream_id, (self.counter + int(blocks)) & _MASK64)

    def spawn(self, *labels: Label) -> "RngStream":
        """Independent child stream identified by ``labels`` (ints or strings)."""
        entropy = [self.master_seed, self.stream_id] + [_label_to_int(label) for label in labels]
        child_id = np.random.SeedSequence(entropy).generate_state(1, dtype=np.uint64)[0]
        return RngStream(self.master_seed, int(child_id), 0)

    @classmethod
    def derive(cls, master_seed: int, *labels: Label) -> "RngStream":
        """Root stream for ``master_seed`` narrowed down by ``labels``."""
        return cls(int(master_seed) & _MASK64).spawn(*labels) if labels else cls(int(master_seed) & _MASK64)


def uniform(stream: RngStream, n: int) -> np.ndarray:
    """``n`` uniforms in the open interval (0, 1), one 64-bit word each."""
    u = stream.generator().random(int(n))
    # random() yields multiples of 2**-53 in [0, 1); the half-step shift keeps 0 out
    return u + 2.0**-54


def gaussian(stream: RngStream, n: int) -> np.ndarray:
    """
    ``n`` iid standard normal variates.

    Uses the inverse normal CDF so each variate consumes exactly one word and
    ``stream.advance(blocks_for(n))`` continues with disjoint variates.
    """
    return ndtri(uniform(stream, n))
