"""Counter-based random streams with platform-independent output.

Every random draw in this package flows through a Stream seeded explicitly;
there is no global RNG. The generator is SplitMix64 evaluated as a pure
function of (key, counter), so the same seed produces the same bytes on any
platform and any numpy version. Normals come from the Box-Muller transform.
"""

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

_U_GAMMA = np.uint64(_GAMMA)
_U_M1 = np.uint64(0xBF58476D1CE4E5B9)
_U_M2 = np.uint64(0x94D049BB133111EB)
_INV_2_53 = 2.0 ** -53


def _mix(z):
    """SplitMix64 finalizer on a uint64 array."""
    z = (z ^ (z >> np.uint64(30))) * _U_M1
    z = (z ^ (z >> np.uint64(27))) * _U_M2
    return z ^ (z >> np.uint64(31))


def _mix_int(z):
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(*tokens):
    """Fold integer and string tokens into a 64-bit seed.

    Order-sensitive: derive_seed(a, b) != derive_seed(b, a) in general.
    Strings are folded as a length tag followed by 8-byte little-endian
    chunks, so distinct token sequences cannot collide by concatenation.
    """
    h = 0
    for t in tokens:
        if isinstance(t, str):
            data = t.encode()
            h = _mix_int(h ^ _mix_int(len(data) ^ 0x5F4A7C15))
            for i in range(0, len(data), 8):
                part = int.from_bytes(data[i:i + 8], "little")
                h = _mix_int(h ^ _mix_int((part + _GAMMA) & _MASK))
        else:
            h = _mix_int(h ^ _mix_int((int(t) + _GAMMA) & _MASK))
    return h


class Stream:
    """Deterministic random stream: a counter keyed by a 64-bit seed.

    Draws advance the counter; the output is mix(key + counter * gamma),
    so a stream's history is reproducible from (seed, draw sequence) alone.
    """

    def __init__(self, seed):
        self.seed = int(seed) & _MASK
        self._key = np.uint64(self.seed)
        self._counter = 0

    def spawn(self, *tokens):
        """Child stream keyed by this stream's seed plus tokens.

        Derivation uses the seed, not the counter, so children are
        independent of how much the parent has already drawn.
        """
        return Stream(derive_seed(self.seed, *tokens))

    def raw(self, n):
        """n raw uint64 words."""
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix(self._key + idx * _U_GAMMA)

    def uniforms(self, n):
        """n doubles uniform on [0, 1)."""
        return (self.raw(n) >> np.uint64(11)) * _INV_2_53

    def normals(self, n):
        """n standard normal doubles via Box-Muller."""
        m = (n + 1) // 2
        # u1 shifted into (0, 1] so the log never sees zero
        u1 = ((self.raw(m) >> np.uint64(11)) + np.uint64(1)) * _INV_2_53
        u2 = (self.raw(m) >> np.uint64(11)) * _INV_2_53
        r = np.sqrt(-2.0 * np.log(u1))
        theta = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n]

    def integers(self, bound, n):
        """n int64 values uniform on [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return np.minimum((self.uniforms(n) * bound).astype(np.int64), bound - 1)

    def permutation(self, n):
        """Uniform permutation of range(n) as int64."""
        return np.argsort(self.raw(n), kind="stable").astype(np.int64)

    def subset(self, n, k):
        """k of range(n) uniformly without replacement, ascending."""
        if not 0 <= k <= n:
            raise ValueError("need 0 <= k <= n")
        picked = self.permutation(n)[:k]
        picked.sort()
        return picked
