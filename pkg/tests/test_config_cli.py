import csv
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from halfline_dd.cli import main
from halfline_dd.config import format_stamp, parse_config, serialize_config
from halfline_dd.propagators import load_propagator


printable_key = st.text(
    alphabet=st.characters(whitelist_categories=("Ll", "Lu", "Nd"),
                           whitelist_characters="_-"),
    min_size=1, max_size=12).filter(lambda s: not s[0].isdigit())
value_strategy = st.one_of(
    st.booleans(),
    st.integers(min_value=-10**9, max_value=10**9),
    st.floats(allow_nan=False, allow_infinity=False, width=64),
    st.complex_numbers(allow_nan=False, allow_infinity=False,
                       max_magnitude=1e6).filter(lambda z: z.imag != 0),
    st.text(alphabet="abcdefg/._", min_size=1, max_size=10),
)


class TestConfig:
    @settings(max_examples=80, deadline=None)
    @given(st.dictionaries(printable_key, value_strategy, max_size=8))
    def test_roundtrip_unchanged(self, cfg):
        assert parse_config(serialize_config(cfg)) == cfg

    def test_comments_and_blanks_ignored(self):
        text = "# a comment\n\nalpha = -2.0  # trailing\nn = 200\nflag = true\n"
        cfg = parse_config(text)
        assert cfg == {"alpha": -2.0, "n": 200, "flag": True}

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError):
            parse_config("just words\n")

    def test_stamp_is_single_sorted_line(self):
        stamp = format_stamp({"b": 2, "a": 1.5})
        assert stamp == "a=1.5 b=2"


def run_cli(args):
    return main(args)


class TestCliRun:
    def test_run_writes_json_and_exit_zero(self, tmp_path, capsys):
        out = tmp_path / "run.json"
        code = run_cli(["run", "--expr", "x^2*exp(-x)", "--alpha", "-1",
                        "--t", "1", "--n", "3", "--dx", "0.05", "--xmax", "10",
                        "--method", "fourier", "--power", "iterate",
                        "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["schema"] == "ddrun-1"
        assert payload["params"]["alpha"] == -1
        assert payload["params"]["command"] == "run"
        assert 0 < payload["abs_rho01_n"] <= 0.5 + 1e-9

    def test_run_alpha_zero_identity(self, tmp_path):
        out = tmp_path / "r.json"
        assert run_cli(["run", "--alpha", "0", "--n", "2", "--dx", "0.05",
                        "--xmax", "10", "--t", "1", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["abs_rho01_n"] == pytest.approx(0.5, abs=1e-12)

    def test_invalid_expression_nonzero_exit_no_file(self, tmp_path, capsys):
        out = tmp_path / "missing.json"
        code = run_cli(["run", "--expr", "x", "--out", str(out)])
        assert code == 2
        assert not out.exists()
        assert "error" in capsys.readouterr().err

    def test_wavefunction_dump_schema(self, tmp_path):
        out = tmp_path / "r.json"
        dump = tmp_path / "wf.csv"
        run_cli(["run", "--alpha", "-1", "--t", "1", "--n", "2",
                 "--dx", "0.05", "--xmax", "10", "--power", "iterate",
                 "--out", str(out), "--dump-wavefunctions", str(dump)])
        lines = dump.read_text().splitlines()
        assert lines[0].startswith("#")
        assert lines[1] == "x,abs2_psi0,abs2_psi1,phase0,phase1,phase_diff"

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("alpha = -1.0\nn = 2\ndx = 0.05\nxmax = 10.0\nt = 1.0\n")
        out = tmp_path / "r.json"
        code = run_cli(["run", "--config", str(cfg), "--n", "3",
                        "--power", "iterate", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["params"]["n"] == 3          # flag wins
        assert payload["params"]["alpha"] == -1.0   # file value


class TestCliSweeps:
    def test_table1_reduced(self, tmp_path):
        out = tmp_path / "t1.csv"
        code = run_cli(["table1", "--dx", "0.1", "--xmax", "10",
                        "--t", "1", "--n", "2", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# table1")
        rows = list(csv.DictReader(lines[1:]))
        assert len(rows) == 8
        assert {"computed_2rho01", "published_2rho01"} <= set(rows[0])

    def test_convergence_tiny_and_resume(self, tmp_path, capsys):
        out = tmp_path / "conv.csv"
        base = ["convergence", "--n", "20", "--dx-list", "0.01",
                "--out", str(out)]
        assert run_cli(base + ["--xmax-list", "2.5,3.0"]) == 0
        first = out.read_text()
        assert len([l for l in first.splitlines() if not l.startswith("#")]) == 3
        # resume: add one more cell, existing cells are skipped
        assert run_cli(base + ["--xmax-list", "2.5,3.0,3.5", "--resume"]) == 0
        second = out.read_text()
        assert second.startswith(first)
        rows = [l for l in second.splitlines()
                if l and not l.startswith("#") and not l.startswith("dx")]
        assert len(rows) == 3

    def test_convergence_worker_pool_matches_sequential(self, tmp_path):
        seq, par = tmp_path / "seq.csv", tmp_path / "par.csv"
        base = ["convergence", "--n", "20", "--dx-list", "0.02",
                "--xmax-list", "2.5,3.0"]
        assert run_cli(base + ["--out", str(seq)]) == 0
        assert run_cli(base + ["--workers", "2", "--out", str(par)]) == 0
        assert seq.read_bytes() == par.read_bytes()

    def test_zeno_csv(self, tmp_path):
        out = tmp_path / "zeno.csv"
        code = run_cli(["zeno", "--dx", "0.01", "--xmax", "12",
                        "--times", "0:0.5:11", "--quad-window", "0:0.1",
                        "--exp-window", "0.1:0.5", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[1] == "t,abs2rho01,quad_fit,exp_fit"
        data = list(csv.DictReader(lines[1:]))
        assert float(data[0]["abs2rho01"]) == pytest.approx(1.0, abs=5e-3)

    def test_figure3_reduced(self, tmp_path, capsys):
        out = tmp_path / "f3.csv"
        code = run_cli(["figure3", "--dx", "0.05", "--xmax", "10",
                        "--n", "3", "--out", str(out)])
        assert code == 0
        first = out.read_text().splitlines()[0]
        assert "overlap=" in first

    def test_dump_propagator_roundtrip(self, tmp_path):
        out = tmp_path / "p.prop"
        code = run_cli(["dump-propagator", "--method", "kernel",
                        "--alpha", "-1", "--tau", "0.05", "--dx", "0.05",
                        "--xmax", "5", "--out", str(out)])
        assert code == 0
        m = load_propagator(out)
        assert m.grid.npoints == 101
        assert m.alpha == -1.0


class TestDeterminism:
    def test_identical_runs_identical_bytes(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["zeno", "--dx", "0.02", "--xmax", "12", "--times", "0:0.4:9",
                "--quad-window", "0:0.2", "--exp-window", "0.2:0.4"]
        assert run_cli(args + ["--out", str(a)]) == 0
        assert run_cli(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_entry_point_runs(self):
        proc = subprocess.run(
            [sys.executable, "-m", "halfline_dd.cli", "--help"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "table1" in proc.stdout
