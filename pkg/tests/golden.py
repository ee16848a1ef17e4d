"""Inputs of the committed ten-step transcript fixture."""

from pathlib import Path

from evolvability.engine import SimConfig
from evolvability.rng import word_for_uniform

FIXTURE = Path(__file__).parent / "fixtures" / "ten_steps.transcript"

CONFIG = SimConfig(population_size=4, pair_count=3, total_children=10, era_length=4,
                   target_mutation_fraction=0.34, child_mutation_probability=0.5,
                   evolvability_bit_rate=0.2, phenome_bit_rate=0.5, fitness_exponent=10,
                   snapshot_interval=1, bucket_size=10)
GENOMES = ["101010", "111111", "000110", "100011"]
TARGET = "011"
# uniforms 0.00, 0.37, 0.74, 0.11, ... ; bits decode as u >= 0.5
UNIFORMS = [(i * 37 % 100) / 100 for i in range(200)]
WORDS = [word_for_uniform(u) for u in UNIFORMS]


def transcript():
    return FIXTURE.read_text().splitlines()
