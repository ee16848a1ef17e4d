"""Compiled inner loops of the steady-state engine.

Population storage is slot based: ``genomes[slot]`` never moves, and
``order[rank]`` names the slot holding the member of that rank (rank 0 is the
fittest). Members are kept sorted by fitness descending, then birth serial
ascending, so the oldest of equally fit members ranks first.

Random draws per child, in order: mother rank, father rank, crossover point,
orientation bit, mutation coin, then (if mutated) one draw per evolvability
bit followed by one draw per phenome bit whose gate is open.

When ``trace`` has rows, every decision is appended to it as
``(kind, a, b, c, d)``; see ``EVENT_*`` for the field meanings.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from evolvability.rng import next_below, next_bit, next_uniform

EVENT_SELECT = 1  # role (0 mother, 1 father), rank, birth id
EVENT_CROSS = 2  # point (pairs taken from the left parent), orientation
EVENT_MUTATE = 3  # applied
EVENT_FLIP = 4  # 1-based genome position
EVENT_INSERT = 5  # child id, matches, rank, evicted id
EVENT_ERA = 6  # era index that just ended
EVENT_TARGET_FLIP = 7  # 1-based target position
TRACE_WIDTH = 5


@njit(cache=True)
def emit(trace, tn, kind, a, b, c, d):
    i = tn[0]
    if i < trace.shape[0]:
        trace[i, 0] = kind
        trace[i, 1] = a
        trace[i, 2] = b
        trace[i, 3] = c
        trace[i, 4] = d
    tn[0] = i + 1


@njit(cache=True)
def select_rank(n, bias, u):
    """Linear-bias rank index: rank 0 is the fittest."""
    x = n * (bias - math.sqrt(bias * bias - 4.0 * (bias - 1.0) * u)) / (2.0 * (bias - 1.0))
    k = int(math.floor(x))
    if k < 0:
        return 0
    if k > n - 1:
        return n - 1
    return k


@njit(cache=True)
def crossover_into(child, mother, father, state, script):
    """Write one child of a pair-boundary single-point crossover.

    Returns ``(point, orientation)``; the child's first ``point`` pairs come
    from the mother when orientation is 0 and from the father when it is 1.
    """
    pairs = child.shape[0] // 2
    if pairs > 1:
        point = 1 + next_below(state, script, pairs - 1)
    else:
        point = 0
    orientation = next_bit(state, script)
    if orientation == 0:
        left = mother
        right = father
    else:
        left = father
        right = mother
    cut = 2 * point
    for i in range(cut):
        child[i] = left[i]
    for i in range(cut, child.shape[0]):
        child[i] = right[i]
    return point, orientation


@njit(cache=True)
def mutate_into(child, mutation_p, evo_rate, phen_rate, gate_pre, gates, state, script, trace, tn):
    """Gated mutation in place. Returns 1 if the child was chosen for mutation."""
    tracing = trace.shape[0] > 0
    applied = 1 if next_uniform(state, script) < mutation_p else 0
    if tracing:
        emit(trace, tn, EVENT_MUTATE, applied, 0, 0, 0)
    if applied == 0:
        return 0
    pairs = child.shape[0] // 2
    for i in range(pairs):
        gates[i] = child[2 * i]
    for i in range(pairs):
        if next_uniform(state, script) < evo_rate:
            child[2 * i] ^= 1
            if tracing:
                emit(trace, tn, EVENT_FLIP, 2 * i + 1, 0, 0, 0)
    for i in range(pairs):
        gate = gates[i] if gate_pre else child[2 * i]
        if gate == 1:
            if next_uniform(state, script) < phen_rate:
                child[2 * i + 1] ^= 1
                if tracing:
                    emit(trace, tn, EVENT_FLIP, 2 * i + 2, 0, 0, 0)
    return 1


@njit(cache=True)
def count_matches(genome, target):
    m = 0
    for i in range(target.shape[0]):
        if genome[2 * i + 1] == target[i]:
            m += 1
    return m


@njit(cache=True)
def insert_rank(fit, order, f):
    """Rank a new member of fitness ``f`` takes once the worst is dropped.

    The newcomer goes after every surviving member at least as fit.
    """
    lo = 0
    hi = order.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if fit[order[mid]] < f:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def replace_worst(genomes, fit, birth, order, child, f, child_id):
    """Evict the last-ranked member and insert ``child`` in its sorted place.

    Returns ``(rank, evicted_id)``.
    """
    n = order.shape[0]
    slot = order[n - 1]
    evicted = birth[slot]
    pos = insert_rank(fit, order, f)
    for r in range(n - 1, pos, -1):
        order[r] = order[r - 1]
    order[pos] = slot
    genomes[slot, :] = child
    fit[slot] = f
    birth[slot] = child_id
    return pos, evicted


@njit(cache=True)
def run_steps(genomes, fit, birth, order, target, table, bias, mutation_p, evo_rate,
              phen_rate, gate_pre, state, script, n_steps, next_id, child, gates,
              trace, tn):
    """Produce ``n_steps`` children. Returns the next unused birth id."""
    n = order.shape[0]
    tracing = trace.shape[0] > 0
    for _ in range(n_steps):
        rm = select_rank(n, bias, next_uniform(state, script))
        rf = select_rank(n, bias, next_uniform(state, script))
        mother = order[rm]
        father = order[rf]
        if tracing:
            emit(trace, tn, EVENT_SELECT, 0, rm, birth[mother], 0)
            emit(trace, tn, EVENT_SELECT, 1, rf, birth[father], 0)
        point, orientation = crossover_into(child, genomes[mother], genomes[father], state, script)
        if tracing:
            emit(trace, tn, EVENT_CROSS, point, orientation, 0, 0)
        mutate_into(child, mutation_p, evo_rate, phen_rate, gate_pre, gates, state, script,
                    trace, tn)
        m = count_matches(child, target)
        rank, evicted = replace_worst(genomes, fit, birth, order, child, table[m], next_id)
        if tracing:
            emit(trace, tn, EVENT_INSERT, next_id, m, rank, evicted)
        next_id += 1
    return next_id


@njit(cache=True)
def flip_target(target, k, state, script, trace, tn):
    """Flip ``k`` distinct target positions chosen uniformly (partial shuffle)."""
    p = target.shape[0]
    idx = np.arange(p)
    for i in range(k):
        j = i + next_below(state, script, p - i)
        tmp = idx[i]
        idx[i] = idx[j]
        idx[j] = tmp
        target[idx[i]] ^= 1
        if trace.shape[0] > 0:
            emit(trace, tn, EVENT_TARGET_FLIP, idx[i] + 1, 0, 0, 0)


@njit(cache=True)
def reevaluate(genomes, fit, birth, order, target, table):
    """Recompute every cached fitness and restore (fitness desc, birth asc) order."""
    n = genomes.shape[0]
    for s in range(n):
        fit[s] = table[count_matches(genomes[s], target)]
    by_age = np.argsort(birth)
    neg = np.empty(n)
    for i in range(n):
        neg[i] = -fit[by_age[i]]
    ranked = np.argsort(neg, kind="mergesort")
    for i in range(n):
        order[i] = by_age[ranked[i]]


@njit(cache=True)
def evolvability_ones(genomes):
    total = 0
    for s in range(genomes.shape[0]):
        g = genomes[s]
        for i in range(0, g.shape[0], 2):
            total += g[i]
    return total
