"""Named random streams derived from one master seed.

Every stage of the pipeline draws from its own stream so that changing one
stage never perturbs the randomness of another.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master_seed: int, name: str) -> int:
    """Derive a 64-bit stage seed from (master_seed, stream name)."""
    digest = hashlib.sha256(f"{master_seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_rng(master_seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master_seed, name))
