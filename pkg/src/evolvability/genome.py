"""Genome and phenome representation, fitness and per-genome statistics.

A genome is a string of ``2 * P`` bits read as ``P`` consecutive pairs. In
1-based positions the odd bit of each pair is its evolvability bit and the
even bit is the phenome bit it guards. Stored as a 0-based ``uint8`` array,
evolvability bits sit at indices ``0, 2, 4, ...`` and phenome bits at
``1, 3, 5, ...``.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import numpy as np

from evolvability.rng import RandomStream


def _frozen(bits) -> np.ndarray:
    arr = np.array(bits, dtype=np.uint8)
    if arr.ndim != 1:
        raise ValueError("bit strings are one-dimensional")
    if arr.size and arr.max() > 1:
        raise ValueError("bits must be 0 or 1")
    arr.setflags(write=False)
    return arr


def parse_bits(text: str) -> np.ndarray:
    """Read an ASCII ``'0'``/``'1'`` string. Whitespace is ignored."""
    chars = "".join(text.split())
    if set(chars) - {"0", "1"}:
        raise ValueError(f"not a bit string: {text!r}")
    return _frozen([c == "1" for c in chars])


def format_bits(bits) -> str:
    return "".join("1" if b else "0" for b in np.asarray(bits))


class Genome:
    """Immutable bit string of (evolvability, phenome) pairs.

    Args:
        bits: Sequence of 0/1 values, or a ``'0'``/``'1'`` string. Position 1
            (the leftmost character) is the first pair's evolvability bit.
    """

    __slots__ = ("bits",)

    def __init__(self, bits):
        arr = parse_bits(bits) if isinstance(bits, str) else _frozen(bits)
        if arr.size == 0 or arr.size % 2:
            raise ValueError(f"genome length must be even and positive, got {arr.size}")
        self.bits = arr

    @property
    def pair_count(self) -> int:
        return self.bits.size // 2

    @property
    def evolvability_bits(self) -> np.ndarray:
        return self.bits[0::2]

    def __len__(self) -> int:
        return self.bits.size

    def __str__(self) -> str:
        return format_bits(self.bits)

    def __repr__(self) -> str:
        return f"Genome('{self}')"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Genome):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    @classmethod
    def from_pairs(cls, evolvability, phenome) -> Genome:
        """Interleave evolvability bits with phenome bits."""
        evo = np.asarray(evolvability, dtype=np.uint8)
        phen = np.asarray(phenome, dtype=np.uint8)
        if evo.shape != phen.shape:
            raise ValueError("evolvability and phenome lengths differ")
        bits = np.empty(2 * evo.size, dtype=np.uint8)
        bits[0::2] = evo
        bits[1::2] = phen
        return cls(bits)


def random_genome(pair_count: int, rng: RandomStream) -> Genome:
    """Draw ``2 * pair_count`` fair bits, position 1 first."""
    if pair_count < 1:
        raise ValueError(f"pair_count must be >= 1, got {pair_count}")
    return Genome(rng.bits(2 * pair_count))


def random_target(length: int, rng: RandomStream) -> np.ndarray:
    if length < 1:
        raise ValueError(f"target length must be >= 1, got {length}")
    return _frozen(rng.bits(length))


def phenome_of(g: Genome) -> np.ndarray:
    """The phenome bits of ``g`` in order (a read-only view)."""
    return g.bits[1::2]


def match_count(phenome, target) -> int:
    p = np.asarray(phenome)
    t = np.asarray(target)
    if p.shape != t.shape:
        raise ValueError(f"phenome length {p.size} != target length {t.size}")
    return int(np.count_nonzero(p == t))


@lru_cache(maxsize=None)
def fitness_table(pair_count: int, exponent: int) -> tuple[float, ...]:
    """``(m / P) ** E`` for every match count ``m`` in ``0..P``.

    Each entry is the exact rational power rounded once to a double, so the
    table is identical on every platform.
    """
    if pair_count < 1:
        raise ValueError("pair_count must be >= 1")
    if exponent < 1:
        raise ValueError("exponent must be a positive integer")
    return tuple(float(Fraction(m, pair_count) ** exponent) for m in range(pair_count + 1))


def fitness(phenome, target, exponent: int = 10) -> float:
    """Fraction of phenome bits matching ``target``, raised to ``exponent``."""
    m = match_count(phenome, target)
    return fitness_table(len(target), int(exponent))[m]


def evolvability_fraction(g: Genome) -> float:
    """Share of evolvability bits set to 1."""
    return int(g.bits[0::2].sum()) / g.pair_count
