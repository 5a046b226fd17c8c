"""Deterministic seed derivation for nested random work.

Every piece of randomness in the package hangs off one base seed; subtasks
get child seeds keyed by an integer path so that reordering or skipping
one subtask never shifts the streams of the others.
"""

from __future__ import annotations

import numpy as np


def derive_seed(base: int, *path: int) -> int:
    """Child seed for the subtask addressed by ``path`` under ``base``."""
    seq = np.random.SeedSequence([int(base), *[int(x) for x in path]])
    return int(seq.generate_state(1)[0])


def rng_for(base: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base, *path))
