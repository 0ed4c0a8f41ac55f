"""Named, independent random streams derived from one master seed.

Each labeled stream is seeded by (seed, crc32(label)), so adding a new kind of
draw to the engine never perturbs the draws of existing streams.
"""
from __future__ import annotations

import zlib

import numpy as np

PHI_STREAM = "phi"
HARVEST_STREAM = "harvest"
SYNTHETIC_STREAM = "synthetic"


def rng_stream(seed: int, label: str) -> np.random.Generator:
    """Generator for one named stream under the given master seed."""
    tag = zlib.crc32(label.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence([int(seed), tag]))
