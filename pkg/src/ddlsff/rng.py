"""Counter-based random streams.

Algorithm ``philox4x64-10``: numpy's Philox bit generator keyed with the
128-bit integer ``seed + 2**64 * stream``. The 256-bit counter is incremented before
each block, so the first four words come from counter 1. Raw 64-bit
outputs ``x`` map to uniforms on the open interval (0, 1) as
``((x >> 11) + 0.5) * 2**-53``; normals come from Box-Muller on
consecutive uniform pairs (cos branch first, then sin). Everything
downstream of the raw words is spelled out here, so another implementation
of Philox4x64-10 reproduces the streams exactly.
"""

import numpy as np

ALGORITHM = "philox4x64-10/u53-open/box-muller"

_MASK64 = (1 << 64) - 1


def raw_words(seed, stream, n):
    seed = int(seed)
    stream = int(stream)
    if not (0 <= seed <= _MASK64 and 0 <= stream <= _MASK64):
        raise ValueError("seed and stream must be unsigned 64-bit integers")
    bitgen = np.random.Philox(key=seed + (stream << 64))
    return bitgen.random_raw(int(n))


def uniforms(seed, stream, n):
    x = raw_words(seed, stream, n)
    return ((x >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def normals(seed, stream, n):
    n = int(n)
    m = (n + 1) // 2
    u = uniforms(seed, stream, 2 * m)
    u1, u2 = u[0::2], u[1::2]
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    z = np.empty(2 * m, dtype=np.float64)
    z[0::2] = rad * np.cos(ang)
    z[1::2] = rad * np.sin(ang)
    return z[:n]
