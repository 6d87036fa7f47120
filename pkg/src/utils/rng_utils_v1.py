#!/usr/bin/env python3
"""
RNG Utilities v1 - Keyed counter-based random generators
Same key always yields the same stream, independent of call order
"""

import numpy as np


def keyed_generator(*key: int) -> np.random.Generator:
    """
    Build a Philox-backed generator from an integer key tuple

    Args:
        key: Non-negative integers, e.g. (seed, episode, step)

    Returns:
        numpy Generator seeded deterministically from the key
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(k) for k in key])))
