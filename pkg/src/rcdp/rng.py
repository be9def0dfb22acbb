"""Named, counter-based random streams.

Each simulation run owns four independent generators so that adding a policy
or changing adversary settings never perturbs the environment draws for a
given seed.  Streams are derived from ``(seed, stream_code)`` seed sequences,
optionally salted with a policy name.
"""

from __future__ import annotations

import zlib

import numpy as np

_STREAM_CODES = {
    "env": 0,
    "adversary": 1,
    "policy": 2,
    "approximator": 3,
}


def stream(name: str, seed: int, salt: str = "") -> np.random.Generator:
    if name not in _STREAM_CODES:
        raise KeyError(f"unknown stream {name!r}; expected one of {sorted(_STREAM_CODES)}")
    entropy = [int(seed), _STREAM_CODES[name]]
    if salt:
        entropy.append(zlib.crc32(salt.encode("utf-8")))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
