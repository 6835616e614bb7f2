import csv
import io
import json
import math

import pytest

from netgeom.cli import SWEEP_COLUMNS, TABLE_COLUMNS, run
from netgeom.ingest import parse_edge_list

QUICK = ["--samples", "200", "--reps", "2", "--batches", "10", "--box", "1,10"]


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(lines))


class TestGen:
    def test_er_round_trip(self, tmp_path):
        path = tmp_path / "g.txt"
        code, _, _ = call("gen", "er", "--n", "10", "--k", "12", "--seed", "3", "-o", str(path))
        assert code == 0
        g = parse_edge_list(path.read_text())
        assert (g.n, g.k) == (10, 12)
        assert path.read_text().startswith("# netgeom ")

    def test_config_regular(self):
        code, out, _ = call("gen", "config", "--n", "8", "--regular", "3", "--r", "0.2")
        g = parse_edge_list(out)
        assert code == 0 and g.k == 12 and g.adj.max() == 0.2

    def test_non_graphical_exit_2(self):
        code, _, err = call("gen", "config", "--degrees", "3,3,1,1")
        assert code == 2 and "error" in err

    def test_missing_argument_exit_2(self):
        assert call("gen", "er", "--n", "5")[0] == 2


class TestEntropy:
    def test_empty_graph_is_zero(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("# nodes: 5\n")
        code, out, _ = call("entropy", "--input", str(path), *QUICK)
        assert code == 0
        [row] = rows(out)
        assert list(row) == SWEEP_COLUMNS
        assert abs(float(row["s_tilde"])) < 1e-12

    def test_header_records_settings(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("0 1 0.2\n")
        code, out, _ = call("entropy", "--input", str(path), *QUICK, "--seed", "11")
        header = out.splitlines()[0]
        assert header.startswith("# netgeom 0.1.0 command=entropy")
        for token in ("seed=11", "samples=200", "reps=2", "box=[1.0,10.0]", "protocol=\"faithful\""):
            assert token in header
        assert "threads" not in header

    def test_parse_error_exit_2(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("0 0\n")
        code, _, err = call("entropy", "--input", str(path), *QUICK)
        assert code == 2 and "self-loop" in err

    def test_missing_file_exit_2(self, tmp_path):
        assert call("entropy", "--input", str(tmp_path / "nope.txt"), *QUICK)[0] == 2

    def test_numerical_failure_exit_3(self, tmp_path):
        path = tmp_path / "sing.txt"
        path.write_text("0 1 1.0\n")
        code, _, err = call("entropy", "--input", str(path), "--samples", "200", "--reps", "1",
                            "--batches", "10", "--box", "1,1.00000000000001")
        assert code == 3 and "numerical failure" in err

    def test_json(self, tmp_path):
        path = tmp_path / "e.txt"
        path.write_text("0 1 0.2\n1 2 0.2\n")
        code, out, _ = call("entropy", "--input", str(path), *QUICK, "--format", "json")
        doc = json.loads(out)
        assert code == 0 and doc["columns"] == SWEEP_COLUMNS and len(doc["rows"]) == 1
        assert doc["header"]["settings"]["seed"] == 0


class TestSweep:
    def test_er_schema_and_threads(self):
        args = ["sweep", "er", "--n", "8", "--ks", "0,5,10", *QUICK]
        c1, out1, _ = call(*args, "--threads", "1")
        c3, out3, _ = call(*args, "--threads", "3")
        assert c1 == c3 == 0 and out1 == out3
        table = rows(out1)
        assert [r["k"] for r in table] == ["0", "5", "10"]
        assert float(table[1]["k_over_n"]) == pytest.approx(5 / 8)

    def test_powerlaw(self):
        code, out, _ = call("sweep", "powerlaw", "--n", "40", "--gammas", "2.5,3.5", "--k-over-n", "0.7,0.85", *QUICK)
        table = rows(out)
        assert code == 0 and [float(r["gamma"]) for r in table] == [2.5, 3.5]
        assert all(0.7 <= float(r["k_over_n"]) <= 0.85 for r in table)


class TestTable:
    def test_heterogeneity_h_column(self):
        code, out, _ = call("table", "heterogeneity", *QUICK)
        table = rows(out)
        assert code == 0 and list(table[0]) == TABLE_COLUMNS
        assert float(table[0]["h"]) == pytest.approx(1.0, abs=1e-12)
        assert len(table) == 5

    def test_real_without_data(self, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.delenv("NETGEOM_DATA", raising=False)
        code, out, _ = call("table", "real", *QUICK)
        table = rows(out)
        assert code == 0 and all(r["s_tilde"] == "" and "not found" in r["note"] for r in table)


class TestMisc:
    def test_gibbs(self):
        code, out, _ = call("gibbs", "--n", "3", "--k", "1")
        assert code == 0 and float(rows(out)[0]["gibbs_entropy"]) == pytest.approx(math.log(0.5))

    def test_geodesic(self, tmp_path):
        init = tmp_path / "init.json"
        init.write_text(json.dumps({"zeta": [1.0], "zeta_dot": [0.5]}))
        code, out, _ = call("geodesic", "--n", "1", "--init", str(init), "--smax", "1.0")
        table = rows(out)
        assert code == 0
        last = table[-1]
        assert float(last["zeta_1"]) == pytest.approx(math.exp(0.5), rel=1e-6)
        assert float(last["lambda_running"]) == float(last["lambda_running"])

    def test_bad_init_exit_2(self, tmp_path):
        init = tmp_path / "init.json"
        init.write_text("{}")
        assert call("geodesic", "--n", "1", "--init", str(init), "--smax", "1")[0] == 2

    def test_bad_threads(self, monkeypatch):
        monkeypatch.setenv("NETGEOM_THREADS", "many")
        assert call("gibbs", "--n", "3", "--k", "1")[0] == 0
        assert call("sweep", "er", "--n", "5", "--ks", "0", *QUICK)[0] == 2

    def test_console_script(self):
        import subprocess
        res = subprocess.run(["netgeom", "gibbs", "--n", "4", "--k", "2"], capture_output=True, text=True)
        assert res.returncode == 0 and "gibbs_entropy" in res.stdout
