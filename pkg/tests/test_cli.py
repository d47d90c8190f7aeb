"""CLI artifact emission: formats, determinism, validation, selftest."""

import csv
import json
import math
import os

import numpy as np
import pytest

from rsphase import cli
from rsphase.cli import SpecError, SweepSpec, main, run


def read_csv(path):
    comments, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                comments.append(line.rstrip("\n"))
            else:
                rows.append(line.rstrip("\n"))
    header = rows[0].split(",")
    body = list(csv.reader(rows[1:]))
    return comments, header, body


class TestChannelCommand:
    def test_artifact(self, tmp_path):
        rc = main(["channel", "--epsilon", "0.1", "--s-min", "0.01",
                   "--s-max", "10", "--points", "15", "--out", str(tmp_path)])
        assert rc == 0
        comments, header, body = read_csv(tmp_path / "channel.csv")
        assert header == ["s", "i_nats", "mmse", "mode"]
        assert any("config_sha256=" in c for c in comments)
        assert any("seed=" in c for c in comments)
        assert len(body) == 15
        s_vals = [float(r[0]) for r in body]
        i_vals = [float(r[1]) for r in body]
        m_vals = [float(r[2]) for r in body]
        assert all(r[3] == "quadrature" for r in body)
        assert s_vals == sorted(s_vals)
        assert all(x2 >= x1 - 1e-12 for x1, x2 in zip(i_vals, i_vals[1:]))
        assert all(0.0 <= m <= 1.0 for m in m_vals)

    def test_byte_identical_rerun(self, tmp_path):
        args = ["channel", "--epsilon", "0.2", "--s-min", "0.1", "--s-max", "5",
                "--points", "8"]
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        main(args + ["--out", str(out1)])
        main(args + ["--out", str(out2)])
        assert (out1 / "channel.csv").read_bytes() == (out2 / "channel.csv").read_bytes()

    def test_floats_have_17_significant_digits(self, tmp_path):
        main(["channel", "--epsilon", "0.1", "--s-min", "0.5", "--s-max", "2",
              "--points", "3", "--out", str(tmp_path)])
        _, _, body = read_csv(tmp_path / "channel.csv")
        value = body[0][1]
        assert len(value.replace("-", "").replace(".", "").replace("e", "").lstrip("0")) >= 15


class TestPotentialCommand:
    def test_artifact_with_summary(self, tmp_path):
        rc = main(["potential", "--epsilon", "0.5", "--delta", "1.0",
                   "--snr", "1.0", "--points", "50", "--out", str(tmp_path)])
        assert rc == 0
        text = (tmp_path / "potential.csv").read_text()
        assert "s,F,Fprime" in text
        summary = [l for l in text.splitlines() if l.startswith("# summary:")]
        assert len(summary) == 1
        assert "s_amp=" in summary[0] and "f_star=" in summary[0]
        # The landmark matches the library value.
        s_amp = float(summary[0].split("s_amp=")[1].split()[0])
        assert s_amp == pytest.approx(0.6295127863, abs=1e-6)


class TestThresholdsCommand:
    def test_json_values(self, tmp_path, capsys):
        rc = main(["thresholds", "--epsilon", "0.1", "--snr", "10",
                   "--out", str(tmp_path)])
        assert rc == 0
        data = json.loads((tmp_path / "thresholds.json").read_text())
        assert data["h"] == pytest.approx(0.3250829733914482)
        assert data["delta_amp"] / data["delta_mmse"] == pytest.approx(
            data["r_amp"], abs=1e-10)
        printed = capsys.readouterr().out
        assert "delta_mmse" in printed

    def test_sparse_fields_present_with_p_sigma(self, tmp_path):
        main(["thresholds", "--epsilon", "0.01", "--p", "100000",
              "--sigma2", "4.0", "--out", str(tmp_path)])
        data = json.loads((tmp_path / "thresholds.json").read_text())
        assert "delta_mmse_sparse" in data
        assert data["snr"] == pytest.approx(100000 * 0.01 * 0.99 / 4.0)


class TestPhaseCommand:
    def test_sweep_with_error_cell(self, tmp_path):
        # r = 1 is a domain error for the transition check; the cell must be
        # recorded, not fatal.
        rc = main(["phase", "--epsilons", "0.01", "--snrs", "5",
                   "--rs", "0.5,1.0", "--kinds", "mmse", "--out", str(tmp_path)])
        assert rc == 0
        _, header, body = read_csv(tmp_path / "phase.csv")
        assert header == ["epsilon", "snr", "r", "kind", "m_value", "error"]
        assert len(body) == 2
        good = [row for row in body if row[5] == ""]
        bad = [row for row in body if row[5] != ""]
        assert len(good) == 1 and len(bad) == 1
        assert float(good[0][4]) > 0.5
        assert bad[0][4] == "" and "ValueError" in bad[0][5]

    def test_parallel_matches_serial(self, tmp_path):
        base = ["phase", "--epsilons", "0.05,0.01", "--snrs", "5",
                "--rs", "0.5,2.0", "--kinds", "mmse,amp"]
        main(base + ["--out", str(tmp_path / "serial")])
        main(base + ["--jobs", "2", "--out", str(tmp_path / "par")])
        assert ((tmp_path / "serial" / "phase.csv").read_bytes()
                == (tmp_path / "par" / "phase.csv").read_bytes())

    def test_empty_grid_rejected_without_output(self, tmp_path):
        rc = main(["phase", "--epsilons", "", "--snrs", "5", "--rs", "0.5",
                   "--out", str(tmp_path / "x")])
        assert rc == 2
        assert not (tmp_path / "x" / "phase.csv").exists()


class TestAmpCommand:
    def test_artifacts(self, tmp_path):
        rc = main(["amp", "--p", "300", "--delta", "0.9", "--snr", "10",
                   "--epsilon", "0.1", "--seeds", "2", "--t-max", "12",
                   "--out", str(tmp_path)])
        assert rc == 0
        _, header, body = read_csv(tmp_path / "amp.csv")
        assert header == ["seed", "t", "mse_empirical", "mse_se_predicted", "tau2"]
        seeds = sorted({row[0] for row in body})
        assert seeds == ["0", "1"]
        summary = json.loads((tmp_path / "amp_summary.json").read_text())
        assert summary["p"] == 300
        assert summary["n"] == 270
        assert "mse_final_mean" in summary and "s_amp" in summary
        assert len(summary["mse_final_per_seed"]) == 2

    def test_missing_fields_rejected(self, tmp_path):
        rc = main(["amp", "--p", "300", "--out", str(tmp_path)])
        assert rc == 2


class TestFigureCommands:
    def test_figure1(self, tmp_path):
        rc = main(["figure1", "--epsilons", "0.1,0.01", "--points", "20",
                   "--out", str(tmp_path)])
        assert rc == 0
        _, header, body = read_csv(tmp_path / "figure1.csv")
        assert header == ["epsilon", "t", "i_norm", "m_value"]
        assert len(body) == 40
        for row in body:
            assert 0.0 <= float(row[3]) <= 1.0
            assert float(row[2]) >= -1e-12

    def test_figure2_approx_mode_stamp(self, tmp_path):
        rc = main(["figure2", "--epsilon", "1e-16", "--snr", "5",
                   "--rs", "0.9,1.1", "--points", "25", "--out", str(tmp_path)])
        assert rc == 0
        _, header, body = read_csv(tmp_path / "figure2.csv")
        assert header == ["t", "F_norm", "r", "mode"]
        assert all(row[3] == "approx" for row in body)

    def test_figure2_limit_mode(self, tmp_path):
        main(["figure2", "--epsilon", "0", "--snr", "5", "--rs", "0.9",
              "--points", "25", "--out", str(tmp_path)])
        _, _, body = read_csv(tmp_path / "figure2.csv")
        assert all(row[3] == "limit" for row in body)
        # Spot value against the closed form.
        from rsphase.potential import limit_potential
        t0, f0 = float(body[0][0]), float(body[0][1])
        assert f0 == pytest.approx(limit_potential(0.9, 5.0, t0), rel=1e-12)


class TestConfigFile:
    def test_config_drives_run_and_flags_override(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "epsilon": 0.1, "s_min": 0.01, "s_max": 10.0, "s_points": 7,
            "seed": 99, "out": str(tmp_path / "cfgout"),
        }))
        rc = main(["channel", "--config", str(cfg)])
        assert rc == 0
        comments, _, body = read_csv(tmp_path / "cfgout" / "channel.csv")
        assert len(body) == 7
        assert any("seed=99" in c for c in comments)
        # Flag overrides the config value.
        rc = main(["channel", "--config", str(cfg), "--points", "4",
                   "--out", str(tmp_path / "cfgout2")])
        assert rc == 0
        _, _, body2 = read_csv(tmp_path / "cfgout2" / "channel.csv")
        assert len(body2) == 4

    def test_unknown_config_field(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"nonsense": 1}))
        assert main(["channel", "--config", str(cfg)]) == 2

    def test_discrete_prior_spec(self, tmp_path):
        root3 = math.sqrt(1.5)
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({
            "prior": {"kind": "discrete", "atoms": [-root3, 0.0, root3],
                      "weights": [1 / 3, 1 / 3, 1 / 3]},
            "s_min": 0.1, "s_max": 5.0, "s_points": 5,
        }))
        rc = main(["channel", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert rc == 0
        _, _, body = read_csv(tmp_path / "o" / "channel.csv")
        assert len(body) == 5
        # Mutual information saturates at ln(3) for three equal atoms.
        assert float(body[-1][1]) < math.log(3.0) + 1e-9


class TestSelftest:
    def test_passes(self, capsys):
        rc = main(["selftest"])
        out = capsys.readouterr().out
        assert rc == 0
        assert "PASS" in out
        assert "FAIL" not in out


class TestSpecValidation:
    def test_mode_required_fields(self):
        with pytest.raises(SpecError):
            SweepSpec(mode="figure2", rs=[0.5]).validate()
        with pytest.raises(SpecError):
            SweepSpec(mode="phase", epsilons=[0.1], snrs=[], rs=[1.5]).validate()
        with pytest.raises(SpecError):
            SweepSpec(mode="phase", epsilons=[2.0], snrs=[1.0], rs=[1.5]).validate()
        with pytest.raises(SpecError):
            SweepSpec(mode="amp", p=100).validate()

    def test_hash_stable_under_out_and_jobs(self):
        a = SweepSpec(mode="channel", epsilon=0.1, out="x", jobs=1)
        b = SweepSpec(mode="channel", epsilon=0.1, out="y", jobs=4)
        assert a.config_hash() == b.config_hash()
