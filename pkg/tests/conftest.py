import pytest

from evolvability.engine import SimConfig


@pytest.fixture
def small_cfg():
    """A fast configuration with the default rates and a short era."""
    return SimConfig(population_size=40, pair_count=10, total_children=4000, era_length=400,
                     snapshot_interval=100, bucket_size=1000, rng_seed=7)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[n])
