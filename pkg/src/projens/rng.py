"""Deterministic, order-independent random streams.

Every random draw in the package comes from a stream identified by a
master seed plus a path of small integers (purpose tag, then indices such
as trajectory number or (layer, bond)). The stream is realized as
``np.random.Generator(PCG64(SeedSequence((master_seed, *path))))``, so the
same master seed yields bit-identical draws regardless of execution order
or parallelism degree.
"""

import numpy as np

# purpose tags (first path element)
GATES = 1
TRAJECTORY = 2
MEASUREMENT = 3
ENSEMBLE_SAMPLING = 4
INSTANCE = 5
SCAN = 6

_MASK = 0xFFFFFFFFFFFFFFFF


def stream(master_seed, *path):
    """Return a Generator for the stream (master_seed, *path)."""
    seq = np.random.SeedSequence((int(master_seed) & _MASK, *map(int, path)))
    return np.random.Generator(np.random.PCG64(seq))


def derive_seed(master_seed, *path):
    """A 64-bit child master seed for an independent sub-experiment."""
    seq = np.random.SeedSequence((int(master_seed) & _MASK, *map(int, path)))
    return int(seq.generate_state(1, dtype=np.uint64)[0])
