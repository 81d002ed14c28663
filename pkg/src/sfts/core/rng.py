"""Seeded randomness contract.

Every stochastic operation in this package receives an explicit
:class:`RngStream` and draws from it in a fixed, documented order (always
sequentially, never interleaved across data structures).  Two calls with the
same ``(seed, path)`` therefore reproduce identical results, and parallel
trials stay independent by using distinct stream paths.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class RngStream:
    """Immutable handle for a deterministic random stream.

    ``generator()`` returns a *fresh* generator each time, so passing the
    same stream object to an algorithm twice reproduces its draws exactly.
    """

    seed: int
    stream: int = 0
    _path: tuple[int, ...] = field(default=())

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream, *self._path))
        return np.random.Generator(np.random.PCG64(seq))

    def child(self, index: int) -> "RngStream":
        """Derived stream for a sub-task; children with distinct indices are independent."""
        return RngStream(self.seed, self.stream, self._path + (int(index),))
