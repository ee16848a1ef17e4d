import pytest

from evolvability.cli import main

CONFIG = """\
population_size = 20
pair_count = 6
total_children = 2000
era_length = 200
snapshot_interval = 100
bucket_size = 500
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(CONFIG)
    return path


def test_run_writes_outputs(tmp_path, cfg_file, capsys):
    out = tmp_path / "out"
    out.mkdir()
    assert main(["run", "--config", str(cfg_file), "--seed", "9", "--out", str(out)]) == 0
    for name in ("config.txt", "snapshots.csv", "eras.csv", "trends.csv", "fits.csv", "report.csv"):
        assert (out / name).exists()
    assert "rng_seed = 9" in (out / "config.txt").read_text()
    assert capsys.readouterr().out.startswith("seed,children")


def test_analyze_round_trips(tmp_path, cfg_file):
    out = tmp_path / "out"
    out.mkdir()
    main(["run", "--config", str(cfg_file), "--out", str(out)])
    before = (out / "trends.csv").read_bytes(), (out / "fits.csv").read_bytes()
    assert main(["analyze", "--in", str(out)]) == 0
    assert before == ((out / "trends.csv").read_bytes(), (out / "fits.csv").read_bytes())


def test_reproduce_scaled_down(tmp_path):
    assert main(["reproduce", "--seeds", "4,5", "--children", "0", "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == [
        "manifest.csv", "report.csv", "run_000_000", "run_000_001"]
    assert main(["analyze", "--in", str(tmp_path)]) == 0


def test_sweep_small(tmp_path):
    assert main(["sweep", "--name", "era", "--seeds", "1", "--children", "0", "--jobs", "1",
                 "--out", str(tmp_path)]) == 0
    assert len((tmp_path / "manifest.csv").read_text().splitlines()) == 8


@pytest.mark.parametrize("argv", [
    [],
    ["run", "--out", "."],
    ["sweep", "--name", "nosuch", "--out", "."],
    ["reproduce", "--seeds", "x", "--out", "."],
    ["analyze", "--in", "/nonexistent/dir"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_missing_output_dir(tmp_path, cfg_file):
    assert main(["run", "--config", str(cfg_file), "--out", str(tmp_path / "nope")]) == 1


def test_bad_config_value(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("era_length = 0\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 1


def test_run_failure_exit_code(tmp_path, cfg_file, monkeypatch):
    from evolvability import harness

    def broken(cfg, directory=None):
        raise MemoryError("simulated")

    monkeypatch.setattr(harness, "execute", broken)
    assert main(["run", "--config", str(cfg_file), "--out", str(tmp_path)]) == 2
