import json

import numpy as np
import pytest

import mimocap.cli as cli
import mimocap.service.app as service_app
from mimocap.channelio import bundled_channel, channel_from_dict, save_channel


@pytest.fixture()
def identity_file(tmp_path):
    path = tmp_path / "id2.json"
    path.write_text(json.dumps(
        {"n_r": 2, "n_t": 2, "re": [[1.0, 0.0], [0.0, 1.0]]}))
    return str(path)


@pytest.fixture()
def singular_file(tmp_path):
    path = tmp_path / "mimo_2x3.json"
    save_channel(bundled_channel("mimo_2x3"), path)
    return str(path)


class TestCapacityCommand:
    def test_identity_channel_json(self, identity_file, capsys):
        rc = cli.main(["capacity", "--channel", identity_file,
                       "--ptot", "2", "--pap", "1,1"])
        assert rc == 0
        body = json.loads(capsys.readouterr().out)
        assert body["capacity"] == pytest.approx(2.0, abs=1e-9)
        assert body["units"] == "bits"
        assert set(body) == {"capacity", "units", "solver", "rank_h", "rank_q",
                             "tp_active", "pap_active", "n_var", "iterations",
                             "kkt_residual", "q"}

    def test_single_pap_value_broadcast(self, identity_file, capsys):
        rc = cli.main(["capacity", "--channel", identity_file,
                       "--ptot", "2", "--pap", "1"])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["capacity"] == \
            pytest.approx(2.0, abs=1e-9)

    def test_q_round_trips_through_channel_format(self, singular_file, capsys):
        rc = cli.main(["capacity", "--channel", singular_file,
                       "--ptot", "1", "--pap", "0.1,0.1,1"])
        assert rc == 0
        body = json.loads(capsys.readouterr().out)
        q = channel_from_dict({"n_r": 3, "n_t": 3,
                               "re": body["q"]["re"], "im": body["q"]["im"]})
        assert q.entries.shape == (3, 3)

    def test_wrong_pap_length_exits_2(self, identity_file, capsys):
        rc = cli.main(["capacity", "--channel", identity_file,
                       "--ptot", "2", "--pap", "1,1,1"])
        assert rc == 2

    def test_missing_file_exits_2(self, capsys):
        rc = cli.main(["capacity", "--channel", "/nonexistent.json",
                       "--ptot", "2", "--pap", "1,1"])
        assert rc == 2

    def test_nats_units(self, identity_file, capsys):
        rc = cli.main(["capacity", "--channel", identity_file,
                       "--ptot", "2", "--pap", "1,1", "--units", "nats"])
        assert rc == 0
        assert json.loads(capsys.readouterr().out)["capacity"] == \
            pytest.approx(2 * np.log(2), abs=1e-9)


class TestSweepCommand:
    def test_saturation_visible_in_csv(self, singular_file, capsys):
        rc = cli.main(["sweep", "--channel", singular_file, "--sweep", "ptot",
                       "--range", "1.2:1.5:2", "--pap", "0.1,0.1,1"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "x,capacity,rank_q,tp_active"
        c12 = float(lines[1].split(",")[1])
        c15 = float(lines[2].split(",")[1])
        assert c15 == pytest.approx(c12, abs=1e-6)
        assert lines[2].split(",")[3] == "false"

    def test_waterfill_column(self, singular_file, capsys):
        rc = cli.main(["sweep", "--channel", singular_file, "--sweep", "ptot",
                       "--range", "0.3:0.9:3", "--pap", "0.1,0.1,1",
                       "--with-waterfill"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].endswith(",waterfill_capacity")
        for line in lines[1:]:
            cells = line.split(",")
            assert float(cells[4]) >= float(cells[1]) - 1e-9

    def test_pap_sweep_approaches_waterfill(self, capsys, tmp_path):
        path = tmp_path / "mimo_3x3.json"
        save_channel(bundled_channel("mimo_3x3"), path)
        rc = cli.main(["sweep", "--channel", str(path), "--sweep", "pap",
                       "--range", "0.5:4:4", "--ptot", "3",
                       "--with-waterfill"])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        caps = [float(l.split(",")[1]) for l in lines[1:]]
        wf = [float(l.split(",")[4]) for l in lines[1:]]
        assert all(b >= a - 1e-9 for a, b in zip(caps, caps[1:]))
        assert caps[-1] == pytest.approx(wf[-1], abs=1e-3)

    def test_missing_fixed_constraint_exits_2(self, singular_file):
        rc = cli.main(["sweep", "--channel", singular_file, "--sweep", "ptot",
                       "--range", "0.2:1:3"])
        assert rc == 2

    def test_bad_range_exits_2(self, singular_file):
        rc = cli.main(["sweep", "--channel", singular_file, "--sweep", "ptot",
                       "--range", "oops", "--pap", "0.1,0.1,1"])
        assert rc == 2


class TestBenchmarkCommand:
    def test_csv_shape_and_determinism(self, capsys):
        args = ["benchmark", "--sizes", "2", "--trials", "2", "--seed", "7"]
        assert cli.main(args) == 0
        first = capsys.readouterr().out.strip().splitlines()
        assert cli.main(args) == 0
        second = capsys.readouterr().out.strip().splitlines()
        assert first[0] == "n,solver,mean_time,median_time,n_var,mean_capacity_gap_vs_basic"

        def stable_cols(lines):
            return [(c[0], c[1], c[4], c[5])
                    for c in (line.split(",") for line in lines[1:])]

        assert stable_cols(first) == stable_cols(second)

    def test_bad_sizes_exit_2(self):
        assert cli.main(["benchmark", "--sizes", "two"]) == 2


class TestValidateCommand:
    def test_table_and_exit_codes(self, capsys, monkeypatch):
        from mimocap.acceptance import CriterionResult

        outcomes = [CriterionResult("alpha", True, "ok"),
                    CriterionResult("beta", False, "broken")]
        monkeypatch.setattr(service_app, "run_all", lambda seed=0: outcomes)
        rc = cli.main(["validate"])
        out = capsys.readouterr().out
        assert rc == 1
        assert "PASS  alpha" in out and "FAIL  beta" in out
        monkeypatch.setattr(service_app, "run_all",
                            lambda seed=0: [CriterionResult("alpha", True, "ok")])
        assert cli.main(["validate"]) == 0
