"""Named random substreams derived from one global seed.

Every source of randomness in the pipeline (k-means init, agent init,
batch shuffling, synthetic data) draws from its own stream so that one
global seed reproduces an entire run and changing one stage's consumption
pattern cannot perturb the others.
"""

import hashlib

import numpy as np

# Stream names used by the pipeline.
STREAM_KMEANS = "kmeans"
STREAM_INIT = "init"
STREAM_SHUFFLE = "shuffle"
STREAM_SYNTH = "synth"


def derive_seed(global_seed: int, name: str) -> int:
    """Stable 63-bit seed for the substream `name` of `global_seed`."""
    digest = hashlib.blake2b(
        f"{global_seed}:{name}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") & 0x7FFFFFFFFFFFFFFF


def substream(global_seed: int, name: str) -> np.random.Generator:
    """Generator for the named substream."""
    return np.random.default_rng(derive_seed(global_seed, name))
