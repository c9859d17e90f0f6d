"""Counter-based random streams.

Every random draw in the package goes through an explicit :class:`RngStream`.
A stream is an immutable ``(seed, stream_id, sub)`` triple; calling
:meth:`RngStream.generator` always returns a fresh Philox generator positioned
at the start of that stream, so sampling functions are pure given a stream.
Parallel work is split into blocks, each block using ``stream.split(block)``,
which makes results independent of how blocks are scheduled on threads.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InputError

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0
    sub: tuple[int, ...] = ()

    def __post_init__(self):
        for name, value in (("seed", self.seed), ("stream_id", self.stream_id)):
            if not (0 <= int(value) < _U64):
                raise InputError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self) -> np.random.Generator:
        key = (int(self.stream_id), *map(int, self.sub))
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=key)
        return np.random.Generator(np.random.Philox(ss))

    def split(self, index: int) -> "RngStream":
        """Child stream, statistically independent of the parent and of siblings."""
        if index < 0:
            raise InputError("split index must be nonnegative")
        return RngStream(self.seed, self.stream_id, self.sub + (int(index),))


RngLike = Union[RngStream, np.random.Generator, int]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise TypeError(f"cannot build a generator from {type(rng).__name__}")


def as_stream(rng: Union[RngStream, int]) -> RngStream:
    if isinstance(rng, RngStream):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng))
    raise TypeError("an RngStream or integer seed is required for block-parallel sampling")


def block_sizes(total: int, block: int) -> list[int]:
    """Split ``total`` trials into fixed-size blocks (last one possibly short)."""
    if total < 0:
        raise InputError("number of trials must be nonnegative")
    full, rest = divmod(total, block)
    return [block] * full + ([rest] if rest else [])
