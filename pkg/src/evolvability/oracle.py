"""Slow, deliberately plain re-implementations used to check the engine.

Nothing here shares code with the compiled path: the random stream, fitness,
selection, crossover, mutation, insertion and era handling are all written
again with plain Python lists. Only tests should import this module.
"""

from __future__ import annotations

import math
from fractions import Fraction

_M64 = (1 << 64) - 1


def naive_fitness(genome_bits, target_bits, exponent: int) -> float:
    """Fitness by walking the genome's even positions one at a time."""
    genome_bits = [int(b) for b in genome_bits]
    target_bits = [int(b) for b in target_bits]
    if len(genome_bits) != 2 * len(target_bits):
        raise ValueError("genome must hold two bits per target bit")
    matches = 0
    for i in range(len(target_bits)):
        if genome_bits[2 * i + 1] == target_bits[i]:
            matches += 1
    return float(Fraction(matches, len(target_bits)) ** exponent)


def selection_cdf(n: int, bias: float, k: int) -> float:
    """Probability that linear-bias selection returns a rank below ``k``."""
    if not 0 <= k <= n:
        raise ValueError("k must lie in [0, n]")
    x = k / n
    return bias * x - (bias - 1.0) * x * x


class WordSource:
    """64-bit words either from a script or from xoshiro256** seeded via SplitMix64."""

    def __init__(self, seed=None, words=None):
        self.words = list(words) if words is not None else None
        self.pos = 0
        if self.words is None:
            x = seed
            self.s = []
            for _ in range(4):
                x = (x + 0x9E3779B97F4A7C15) & _M64
                z = x
                z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
                z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
                self.s.append(z ^ (z >> 31))

    def word(self) -> int:
        if self.words is not None:
            if self.pos >= len(self.words):
                raise RuntimeError("script exhausted")
            w = self.words[self.pos]
            self.pos += 1
            return w

        def rotl(x, k):
            return ((x << k) | (x >> (64 - k))) & _M64

        s = self.s
        result = (rotl((s[1] * 5) & _M64, 7) * 9) & _M64
        t = (s[1] << 17) & _M64
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = rotl(s[3], 45)
        return result

    def uniform(self) -> float:
        return (self.word() >> 11) / 2.0**53

    def bit(self) -> int:
        return self.word() >> 63

    def below(self, n: int) -> int:
        return min(math.floor(self.uniform() * n), n - 1)


def _rank(n, bias, u):
    x = n * (bias - math.sqrt(bias * bias - 4.0 * (bias - 1.0) * u)) / (2.0 * (bias - 1.0))
    return max(0, min(n - 1, math.floor(x)))


def exhaustive_small_run(cfg, genomes, target, words=None, seed=None) -> list[str]:
    """Replay ``cfg.total_children`` births and log every decision.

    ``genomes`` and ``target`` are '0'/'1' strings. Randomness comes from
    ``words`` when given, else from ``seed``. Each log line is
    ``event_kind,field=value,...``.
    """
    src = WordSource(seed=seed, words=words)
    p = cfg.pair_count
    target = [int(c) for c in target]
    flips_per_era = math.floor(cfg.target_mutation_fraction * p + 0.5)

    def score(bits):
        return sum(1 for i in range(p) if bits[2 * i + 1] == target[i])

    # members: dicts with id, bits, matches; list kept best first
    members = [{"id": i, "bits": [int(c) for c in g]} for i, g in enumerate(genomes)]
    for m in members:
        m["matches"] = score(m["bits"])

    def fit(m):
        return float(Fraction(m["matches"], p) ** cfg.fitness_exponent)

    members.sort(key=lambda m: (-fit(m), m["id"]))
    n = len(members)
    next_id = n
    log = []
    for c in range(1, cfg.total_children + 1):
        mother = members[_rank(n, cfg.selection_bias, src.uniform())]
        log.append(f"select,role=mother,rank={members.index(mother)},id={mother['id']}")
        father = members[_rank(n, cfg.selection_bias, src.uniform())]
        log.append(f"select,role=father,rank={members.index(father)},id={father['id']}")

        point = 1 + src.below(p - 1) if p > 1 else 0
        orientation = src.bit()
        log.append(f"crossover,point={point},orientation={orientation}")
        left, right = (mother, father) if orientation == 0 else (father, mother)
        child = left["bits"][: 2 * point] + right["bits"][2 * point:]

        applied = 1 if src.uniform() < cfg.child_mutation_probability else 0
        log.append(f"mutate,applied={applied}")
        if applied:
            before = child[0::2]
            for i in range(p):
                if src.uniform() < cfg.evolvability_bit_rate:
                    child[2 * i] = 1 - child[2 * i]
                    log.append(f"flip,position={2 * i + 1}")
            for i in range(p):
                gate = before[i] if cfg.gate_reads_premutation else child[2 * i]
                if gate == 1 and src.uniform() < cfg.phenome_bit_rate:
                    child[2 * i + 1] = 1 - child[2 * i + 1]
                    log.append(f"flip,position={2 * i + 2}")

        newborn = {"id": next_id, "bits": child, "matches": score(child)}
        next_id += 1
        evicted = members.pop()
        rank = 0
        while rank < len(members) and fit(members[rank]) >= fit(newborn):
            rank += 1
        members.insert(rank, newborn)
        log.append(f"insert,id={newborn['id']},matches={newborn['matches']},rank={rank},"
                   f"evicted={evicted['id']}")

        if c % cfg.era_length == 0 and c < cfg.total_children and flips_per_era > 0:
            log.append(f"era,index={c // cfg.era_length - 1}")
            positions = list(range(p))
            for i in range(flips_per_era):
                j = i + src.below(p - i)
                positions[i], positions[j] = positions[j], positions[i]
                target[positions[i]] ^= 1
                log.append(f"target_flip,position={positions[i] + 1}")
            for m in members:
                m["matches"] = score(m["bits"])
            members.sort(key=lambda m: (-fit(m), m["id"]))
    return log
