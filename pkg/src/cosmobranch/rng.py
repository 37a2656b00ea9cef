"""Counter-based random streams.

Streams are Philox generators keyed by ``(seed, *path)``, so a sub-stream
for, say, the third row of a table is fixed by its path and not by how many
draws other rows consumed.
"""

from __future__ import annotations

import numpy as np


def make_stream(seed, *path):
    """Generator for ``seed`` at the given integer spawn path."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


def split(rng, n):
    """``n`` independent child generators of ``rng``."""
    return rng.spawn(n)
