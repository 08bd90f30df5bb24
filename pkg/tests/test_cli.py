import json

import numpy as np
import pytest

from bdris.cli import EXIT_CONFIG, EXIT_IDENT, main
from bdris.config import ConfigError, SystemConfig, load_config, parse_config_file
from bdris.fixtures import decode_array, encode_array

REFERENCE_ARGS = ["--set", "ris_elements=16", "--set", "blocks=32",
              "--set", "groups=2", "--set", "frames=2"]


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestConfigParsing:
    def test_file_with_comments_and_sections(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text(
            "# scenario\n"
            "tx_antennas = 2\n"
            "rx_antennas = 4\n"
            "ris_elements = 8   # surface size\n"
            "groups = 2\n"
            "blocks = 16\n"
            "slots = 4\n"
            "frames = 2\n"
            "snr_db = 0, 10, 20\n"
            "modulation_order = 4\n"
            "solver.delta = 1e-8\n"
            "solver.max_iters = 123\n"
        )
        cfg = load_config(path)
        assert cfg.ris_elements == 8
        assert cfg.snr_db == (0.0, 10.0, 20.0)
        assert cfg.solver.delta == 1e-8
        assert cfg.solver.max_iters == 123

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("bogus = 1\n")
        with pytest.raises(ConfigError):
            load_config(path)

    def test_duplicate_key_rejected(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("blocks = 4\nblocks = 8\n")
        with pytest.raises(ConfigError):
            parse_config_file(path)

    def test_overrides_after_file(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text("blocks = 4\n")
        cfg = load_config(path, ["blocks=32", "solver.structure_projection=false"])
        assert cfg.blocks == 32
        assert cfg.solver.structure_projection is False

    def test_mapping_roundtrip(self):
        cfg = SystemConfig(blocks=12, snr_db=(1.0, 2.0))
        again = SystemConfig.from_mapping(cfg.to_mapping())
        assert again == cfg

    @pytest.mark.parametrize("kwargs", [
        dict(ris_elements=6, groups=4),
        dict(slots=1, tx_antennas=2),
        dict(modulation_order=3),
        dict(channel_model="awgn"),
        dict(blocks=0),
    ])
    def test_validation_failures(self, kwargs):
        with pytest.raises(ConfigError):
            SystemConfig(**kwargs)


class TestCheck:
    def test_reference_configuration(self, capsys):
        code, out, _ = run_cli(capsys, *REFERENCE_ARGS, "check")
        assert code == 0
        report = json.loads(out)
        assert report["kmin_pakron"] == 16
        assert report["kmin_tucker"] == 2
        assert report["complexity"] == {"pakron": 524288, "tucker": 524288}

    def test_rank_h_option(self, capsys):
        code, out, _ = run_cli(capsys, *REFERENCE_ARGS, "check", "--rank-h", "1")
        assert code == 0
        assert json.loads(out)["kruskal_lhs"] == 32 + 4 + 2


class TestSimulate:
    def test_deterministic_json(self, capsys):
        args = ["--set", "ris_elements=4", "--set", "blocks=8",
                "--set", "frames=4", "--set", "snr_db=15", "--seed", "42",
                "simulate", "--receiver", "tucker"]
        code1, out1, _ = run_cli(capsys, *args)
        code2, out2, _ = run_cli(capsys, *args)
        assert code1 == code2 == 0
        a, b = json.loads(out1), json.loads(out2)
        a.pop("wall_ms"), b.pop("wall_ms")  # timing is machine state
        assert a == b
        assert a["receiver"] == "tucker"

    def test_noiseless_flag(self, capsys):
        code, out, _ = run_cli(
            capsys, "--set", "ris_elements=4", "--set", "blocks=8",
            "--set", "frames=4", "--set", "solver.delta=1e-14",
            "simulate", "--receiver", "pakron", "--noiseless")
        assert code == 0
        result = json.loads(out)
        assert result["nmse_g"] <= 1e-8
        assert result["snr_db"] == "inf"


class TestSweep:
    def test_empty_snr_is_config_error(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "--set", "snr_db=", "sweep",
                               "--runs", "1", "--out", str(tmp_path / "o"))
        assert code == EXIT_CONFIG
        assert json.loads(err)["error"] == "config"

    def test_identifiability_exit_code(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys, *REFERENCE_ARGS, "--set", "blocks=15", "sweep",
            "--receiver", "pakron", "--runs", "1",
            "--out", str(tmp_path / "o"))
        assert code == EXIT_IDENT
        assert json.loads(err)["error"] == "identifiability"

    def test_writes_outputs_deterministically(self, capsys, tmp_path):
        args = ["--set", "ris_elements=4", "--set", "blocks=8",
                "--set", "frames=4", "--set", "snr_db=10,20", "--seed", "3",
                "sweep", "--receiver", "tucker", "--runs", "2"]
        code, _, _ = run_cli(capsys, *args, "--out", str(tmp_path / "a"))
        assert code == 0
        code, _, _ = run_cli(capsys, *args, "--out", str(tmp_path / "b"))
        assert code == 0
        report_a = json.loads((tmp_path / "a" / "report.json").read_text())
        report_b = json.loads((tmp_path / "b" / "report.json").read_text())
        assert _strip_timing(report_a) == _strip_timing(report_b)
        rows_a = _csv_without_wall(tmp_path / "a" / "trials.csv")
        rows_b = _csv_without_wall(tmp_path / "b" / "trials.csv")
        assert rows_a == rows_b


class TestFixture:
    def test_roundtrip(self, capsys, tmp_path):
        fx = tmp_path / "fx.json"
        args = ["--set", "ris_elements=4", "--set", "blocks=8",
                "--set", "frames=4", "--set", "solver.delta=1e-13",
                "--seed", "11"]
        code, _, _ = run_cli(capsys, *args, "fixture", "--out", str(fx))
        assert code == 0
        code, out, _ = run_cli(capsys, *args, "simulate",
                               "--receiver", "tucker", "--from-fixture", str(fx))
        assert code == 0
        result = json.loads(out)
        assert result["fixture_reconstruction_error"] <= 1e-12
        assert result["nmse_g"] <= 1e-6

    def test_array_encoding_roundtrip(self):
        rng = np.random.default_rng(0)
        arr = rng.standard_normal((3, 2, 4)) + 1j * rng.standard_normal((3, 2, 4))
        again = decode_array(encode_array(arr))
        assert np.array_equal(arr, again)

    def test_interleaved_layout(self):
        enc = encode_array(np.array([[1 + 2j, 3 + 4j]]))
        assert enc["dims"] == [1, 2]
        assert enc["data"] == [1.0, 2.0, 3.0, 4.0]


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in obj.items()
                if not k.startswith("wall_ms")}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def _csv_without_wall(path):
    rows = path.read_text().splitlines()
    return [",".join(r.split(",")[:-1]) for r in rows]
