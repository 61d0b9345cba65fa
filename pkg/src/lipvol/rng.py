"""Seeded random streams.

Every stochastic routine takes an integer seed (or an existing Generator).  The
bit generator is NumPy's PCG64, which is platform independent.  Replica ``i`` of
a run seeded with ``s`` uses ``SeedSequence(s).spawn(R)[i]``, so replicas never
share a stream and the output does not depend on how replicas are scheduled.
"""

from __future__ import annotations

import os

import numpy as np

SEED_ENV = "LIPVOL_SEED"
DEFAULT_SEED = 20240601


def seed_sequence(seed) -> np.random.SeedSequence:
    """Integer seeds are masked to 64 bits; a tuple such as (seed, j) keys a sub-run."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, (tuple, list)):
        return np.random.SeedSequence([int(s) & (2**64 - 1) for s in seed])
    return np.random.SeedSequence(int(seed) & (2**64 - 1))


def make_rng(seed: int | np.random.Generator | np.random.SeedSequence) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(seed_sequence(seed)))


def substreams(seed, count: int) -> list[np.random.Generator]:
    """``count`` independent generators derived from ``seed``."""
    children = seed_sequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def substream_seeds(seed, count: int) -> list[int]:
    """Integer seeds for ``count`` replicas, for APIs that only accept ints."""
    children = seed_sequence(seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def resolve_seed(cli_seed: int | None) -> int:
    """CLI flag wins over the ``LIPVOL_SEED`` environment variable."""
    if cli_seed is not None:
        return cli_seed
    env = os.environ.get(SEED_ENV)
    if env:
        return int(env)
    return DEFAULT_SEED
