import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

import golden
from evolvability.engine import SimConfig, scripted_transcript
from evolvability.genome import fitness
from evolvability.oracle import exhaustive_small_run, naive_fitness, selection_cdf
from evolvability.rng import RandomStream, word_for_uniform


def test_naive_fitness_matches_genome_module():
    rng = RandomStream(99)
    for _ in range(1000):
        g = rng.bits(100)
        t = rng.bits(50)
        assert naive_fitness(g, t, 10) == fitness(g[1::2], t, 10)


def test_naive_fitness_endpoints():
    t = [1, 0] * 25
    perfect = [b for bit in t for b in (0, bit)]
    assert naive_fitness(perfect, t, 10) == 1.0
    opposite = [b for bit in t for b in (1, 1 - bit)]
    assert naive_fitness(opposite, t, 10) == 0.0


def test_selection_cdf_is_a_cdf():
    values = [selection_cdf(10, 1.7, k) for k in range(11)]
    assert values[0] == 0.0 and values[-1] == 1.0
    assert all(a < b for a, b in zip(values, values[1:]))


def test_golden_fixture_replays():
    lines = scripted_transcript(golden.CONFIG, golden.GENOMES, golden.TARGET, words=golden.WORDS)
    assert lines == golden.transcript()
    assert exhaustive_small_run(golden.CONFIG, golden.GENOMES, golden.TARGET,
                                words=golden.WORDS) == golden.transcript()


def test_forced_best_parents():
    cfg = SimConfig(population_size=4, pair_count=3, total_children=1,
                    child_mutation_probability=0.5, snapshot_interval=1, bucket_size=10)
    words = [word_for_uniform(u) for u in (0.0, 0.0, 0.0, 0.0, 0.9)]
    lines = scripted_transcript(cfg, golden.GENOMES, golden.TARGET, words=words)
    assert lines[0].startswith("select,role=mother,rank=0,")
    assert lines[1].startswith("select,role=father,rank=0,")
    assert lines == exhaustive_small_run(cfg, golden.GENOMES, golden.TARGET, words=words)


def test_no_mutation_means_crossover_only():
    cfg = SimConfig(population_size=4, pair_count=3, total_children=20, era_length=1000,
                    child_mutation_probability=0.0, snapshot_interval=1, bucket_size=10)
    words = [word_for_uniform(u) for u in golden.UNIFORMS[:100]]
    lines = scripted_transcript(cfg, golden.GENOMES, golden.TARGET, words=words)
    assert not any(line.startswith("flip") for line in lines)
    assert sum(line == "mutate,applied=0" for line in lines) == 20
    assert lines == exhaustive_small_run(cfg, golden.GENOMES, golden.TARGET, words=words)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 60), st.integers(1, 9),
       st.sampled_from([0.0, 0.2, 0.5, 1.0]), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1),
       st.sampled_from([1.25, 2.0]), st.booleans(), st.integers(0, 2**64 - 1), st.data())
def test_engine_matches_oracle(n, p, children, era, frac, mut, evo, phen, bias, pre, seed, data):
    cfg = SimConfig(population_size=n, pair_count=p, total_children=children, era_length=era,
                    target_mutation_fraction=frac, child_mutation_probability=mut,
                    evolvability_bit_rate=evo, phenome_bit_rate=phen, selection_bias=bias,
                    gate_reads_premutation=pre, snapshot_interval=1, bucket_size=10)
    bit = st.sampled_from("01")
    genomes = [data.draw(st.text(bit, min_size=2 * p, max_size=2 * p)) for _ in range(n)]
    target = data.draw(st.text(bit, min_size=p, max_size=p))
    assert (scripted_transcript(cfg, genomes, target, seed=seed)
            == exhaustive_small_run(cfg, genomes, target, seed=seed))


def test_engine_matches_oracle_at_full_scale_prefix():
    cfg = SimConfig(population_size=50, pair_count=50, total_children=300, era_length=100)
    rng = np.random.default_rng(5)
    genomes = ["".join(map(str, rng.integers(0, 2, 100))) for _ in range(50)]
    target = "".join(map(str, rng.integers(0, 2, 50)))
    assert (scripted_transcript(cfg, genomes, target, seed=5)
            == exhaustive_small_run(cfg, genomes, target, seed=5))
