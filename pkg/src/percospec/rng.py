"""Deterministic stream-splitting random number generation.

Every stochastic routine in this package draws from a counter-based Philox
generator keyed by a hash of (master seed, experiment label, replica index,
purpose tag).  Distinct keys give statistically independent streams, and the
same key regenerates the identical stream no matter in which order (or on how
many workers) replicas are evaluated.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np

_DOMAIN = b"percospec.rng.v1"


@dataclass(frozen=True)
class SeedSpec:
    """Fully-resolved descriptor of one random stream.

    master_seed: 64-bit base seed shared by a whole run.
    experiment:  textual label separating experiments under one master seed.
    replica:     replica index within the experiment.
    purpose:     sub-stream tag ("points", "marks", "thinning", ...).
    """

    master_seed: int
    experiment: str = ""
    replica: int = 0
    purpose: str = ""

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise ValueError("master_seed must fit in an unsigned 64-bit int")
        if self.replica < 0:
            raise ValueError("replica index must be >= 0")

    def with_(self, **kwargs) -> "SeedSpec":
        """Derived spec with some labels replaced (master seed kept)."""
        return replace(self, **kwargs)

    def _key(self) -> np.ndarray:
        h = hashlib.blake2b(digest_size=16)
        h.update(_DOMAIN)
        h.update(int(self.master_seed).to_bytes(8, "little"))
        h.update(self.experiment.encode("utf-8") + b"\x00")
        h.update(int(self.replica).to_bytes(8, "little"))
        h.update(self.purpose.encode("utf-8") + b"\x00")
        d = h.digest()
        return np.frombuffer(d, dtype=np.uint64)

    def generator(self) -> np.random.Generator:
        """Fresh Generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(key=self._key()))
