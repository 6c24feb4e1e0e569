"""Counter-based random streams.

Every variate is addressed by ``(seed, stream, domain, position)``: a Philox
key is derived from the first three and the counter from the position. Any
partition of positions into chunks therefore reproduces the same numbers,
which keeps simulations independent of worker count and chunk size.
"""

import numpy as np
from scipy.special import ndtri

_MASK64 = (1 << 64) - 1
# Philox4x64 yields four 64-bit words per counter increment.
_WORDS_PER_COUNTER = 4


def philox_key(seed, stream, domain=0):
    """128-bit Philox key for a ``(seed, stream, domain)`` triple."""
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence([seed & 0xFFFFFFFF, seed >> 32, int(stream), int(domain)])
    return ss.generate_state(2, dtype=np.uint64)


def raw_words(seed, stream, start, count, domain=0):
    """Return ``count`` raw uint64 words at counter positions ``start, start+1, ...``."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be nonnegative")
    block, offset = divmod(int(start), _WORDS_PER_COUNTER)
    bg = np.random.Philox(key=philox_key(seed, stream, domain))
    if block:
        bg.advance(block)
    words = bg.random_raw(offset + int(count))
    return np.asarray(words[offset:], dtype=np.uint64)


def uniforms(seed, stream, start, count, domain=0):
    """Uniform variates in the open interval (0, 1), 53 bits of resolution."""
    words = raw_words(seed, stream, start, count, domain)
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def normals(seed, stream, start, count, domain=0):
    """Standard normal variates by inverse-CDF transform of :func:`uniforms`."""
    return ndtri(uniforms(seed, stream, start, count, domain))


def chunked(sampler, seed, stream, count, chunk=None, domain=0):
    """Draw ``count`` variates in chunks of ``chunk`` positions.

    The output does not depend on ``chunk``; the argument only bounds peak
    memory of a single Philox call.
    """
    if chunk is None or chunk >= count:
        return sampler(seed, stream, 0, count, domain)
    parts = [sampler(seed, stream, s, min(chunk, count - s), domain) for s in range(0, count, chunk)]
    return np.concatenate(parts)
