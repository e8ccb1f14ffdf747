"""Named, counter-based random streams.

Every randomized stage draws from its own stream, identified by the master
seed plus a path of names (``("ase",)``, ``("pd", "thermal")``...).  The path
is hashed with CRC-32 into a ``SeedSequence`` spawn key and the resulting key
drives a Philox counter-based generator.  Adding a new stage therefore never
shifts the numbers drawn by existing ones, and the same stream always
reproduces the same draws.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    path: tuple[str, ...] = ()

    def child(self, name: str) -> "RngStream":
        return RngStream(self.master_seed, self.path + (name,))

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            entropy=int(self.master_seed),
            spawn_key=tuple(_name_key(p) for p in self.path),
        )

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(self.seed_sequence()))


def derive_seed(master_seed: int, key: str) -> int:
    """Deterministic 63-bit seed for an independent task (e.g. one sweep point)."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(_name_key(key),))
    return int(ss.generate_state(1, dtype=np.uint64)[0]) & (2**63 - 1)
