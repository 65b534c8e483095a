"""Deterministic seed derivation.

Every stochastic component derives its own seed from its parent seed plus
a stable label, so results never depend on execution order or platform
hash randomisation.
"""

import hashlib

import numpy as np


def derive_seed(*parts) -> int:
    """Derive a 63-bit seed from a sequence of ints/strings.

    Stable across processes and Python versions (sha256, not hash()).
    """
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFFFFFFFFFFFFFF


def rng_for(*parts) -> np.random.Generator:
    """A fresh numpy Generator seeded from the given parts."""
    return np.random.default_rng(derive_seed(*parts))
