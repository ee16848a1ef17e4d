"""Deterministic random stream shared by the Python API and the compiled engine.

The generator is xoshiro256** (Blackman & Vigna) with its 256-bit state
filled by four consecutive SplitMix64 outputs of the 64-bit seed. Every
derived draw comes from one 64-bit word:

* ``uniform`` -- ``(word >> 11) * 2**-53``, a double in [0, 1)
* ``bit``     -- ``word >> 63``
* ``below(n)`` -- ``min(floor(uniform * n), n - 1)``

The whole stream lives in a small ``uint64`` array so compiled kernels can
advance it in place. A stream can instead be *scripted*: words are then read
from a caller supplied array, which is how tests force specific selections,
crossover points and mutation coins. The scripted mode is a test seam and its
layout may change.

Test vectors (seed 0, first three words)::

    0x99ec5f36cb75f2b4, 0xbf6e1f784956452a, 0x1a5f849d4933e6e0
"""

from __future__ import annotations

import numpy as np
from numba import njit

MASK64 = (1 << 64) - 1

# state layout: words 0-3 hold the xoshiro state; a non-empty script
# switches the stream to replay mode
_CURSOR = 4  # next script index
_OVERRUN = 5  # set when a script is exhausted
STATE_SIZE = 6

_INV53 = 1.0 / 9007199254740992.0


def splitmix64(x: int) -> tuple[int, int]:
    """One SplitMix64 step. Returns ``(next_state, output)``."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return x, z ^ (z >> 31)


def seed_state(seed: int) -> np.ndarray:
    """Expand a 64-bit seed into a fresh generator-mode state array."""
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    words = []
    x = seed
    for _ in range(4):
        x, out = splitmix64(x)
        words.append(out)
    state = np.zeros(STATE_SIZE, dtype=np.uint64)
    state[:4] = np.array(words, dtype=np.uint64)
    return state


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, inline="always")
def next_u64(state, script):
    if script.shape[0] == 0:
        return _xoshiro(state)
    pos = state[_CURSOR]
    if pos >= np.uint64(script.shape[0]):
        state[_OVERRUN] = np.uint64(1)
        return np.uint64(0)
    state[_CURSOR] = pos + np.uint64(1)
    return script[pos]


@njit(cache=True, inline="always")
def _xoshiro(state):
    s0 = state[0]
    s1 = state[1]
    s2 = state[2]
    s3 = state[3]
    result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
    return result


@njit(cache=True, inline="always")
def next_uniform(state, script):
    return float(next_u64(state, script) >> np.uint64(11)) * _INV53


@njit(cache=True, inline="always")
def next_bit(state, script):
    return np.uint8(next_u64(state, script) >> np.uint64(63))


@njit(cache=True, inline="always")
def next_below(state, script, n):
    k = int(next_uniform(state, script) * n)
    if k >= n:
        k = n - 1
    return k


@njit(cache=True)
def fill_bits(state, script, out):
    for i in range(out.shape[0]):
        out[i] = next_bit(state, script)


_EMPTY_SCRIPT = np.zeros(0, dtype=np.uint64)


class RandomStream:
    """A seeded xoshiro256** stream.

    Args:
        seed: Unsigned 64-bit seed.
    """

    def __init__(self, seed: int):
        self.seed = seed
        self.state = seed_state(seed)
        self.script = _EMPTY_SCRIPT

    def u64(self) -> int:
        return int(next_u64(self.state, self.script))

    def uniform(self) -> float:
        return float(next_uniform(self.state, self.script))

    def bit(self) -> int:
        return int(next_bit(self.state, self.script))

    def below(self, n: int) -> int:
        return int(next_below(self.state, self.script, n))

    def bits(self, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.uint8)
        fill_bits(self.state, self.script, out)
        return out

    def check(self) -> None:
        """Raise if a scripted stream ran past its end."""
        if self.state[_OVERRUN]:
            raise RuntimeError("scripted random stream exhausted")

    def copy(self) -> RandomStream:
        other = object.__new__(type(self))
        other.__dict__.update(self.__dict__)
        other.state = self.state.copy()
        return other


class ScriptedStream(RandomStream):
    """Replays a fixed list of 64-bit words instead of generating them.

    Use the ``word_*`` helpers to build words that decode to a chosen
    uniform, bit or bounded integer.
    """

    def __init__(self, words):
        if len(words) == 0:
            raise ValueError("a scripted stream needs at least one word")
        self.seed = None
        self.state = np.zeros(STATE_SIZE, dtype=np.uint64)
        self.script = np.array([int(w) & MASK64 for w in words], dtype=np.uint64)

    @property
    def consumed(self) -> int:
        return int(self.state[_CURSOR])


def word_for_uniform(u: float) -> int:
    """Smallest word whose uniform decoding is ``u`` (``u`` on the 2**-53 grid)."""
    if not 0.0 <= u < 1.0:
        raise ValueError("u must lie in [0, 1)")
    return int(u * 9007199254740992.0) << 11


def word_for_bit(b: int) -> int:
    return (1 << 63) if b else 0


def word_for_below(k: int, n: int) -> int:
    """Word that decodes to ``k`` under ``below(n)``: the midpoint of k's cell."""
    if not 0 <= k < n:
        raise ValueError("k out of range")
    return word_for_uniform((k + 0.5) / n)
