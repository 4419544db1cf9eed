import hashlib

import numpy as np


def derive_seed(seed: int, *keys) -> int:
    """Stable 32-bit seed from a run seed and any hashable-as-text keys."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(seed)).encode())
    for k in keys:
        h.update(b"\x1f")
        h.update(str(k).encode())
    return int.from_bytes(h.digest(), "little") % (2**31 - 1)


def rng_for(seed: int, *keys) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, *keys))
