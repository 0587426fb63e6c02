"""CLI plumbing: every subcommand, exit codes, determinism, round-trips."""

import json

import pytest

from obmatch import read_instance
from obmatch.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGen:
    def test_upper_triangular(self, capsys, tmp_path):
        out = tmp_path / "ut.json"
        code, stdout, _ = run_cli(
            capsys, "gen", "--family", "upper_triangular", "--n", "6", "--out", str(out)
        )
        assert code == 0
        inst = read_instance(out)
        assert inst.num_queries == 6
        assert "id" in json.loads(stdout)

    def test_bad_n_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "gen", "--family", "upper_triangular", "--n", "0")
        assert code == 2
        assert "error" in err

    def test_example_three_writes_three_files(self, capsys, tmp_path):
        code, stdout, _ = run_cli(
            capsys, "gen", "--family", "example_three", "--W", "5", "--out", str(tmp_path)
        )
        assert code == 0
        for name in ("I1", "I2", "I3"):
            inst = read_instance(tmp_path / f"{name}.json")
            assert inst.planted_value() == 10
        assert len(stdout.strip().splitlines()) == 3

    def test_planted_deterministic(self, capsys, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for out in (a, b):
            code, _, _ = run_cli(
                capsys, "gen", "--family", "planted", "--mu", "0.1",
                "--n", "40", "--m", "4", "--seed", "7", "--out", str(out),
            )
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_flag_selects_class(self, capsys, tmp_path):
        out = tmp_path / "sv.json"
        run_cli(capsys, "gen", "--family", "random", "--n", "10", "--k", "3",
                "--seed", "1", "--out", str(out))
        assert read_instance(out).problem_class.value == "single_valued"


class TestRun:
    @pytest.fixture()
    def ut5(self, capsys, tmp_path):
        path = tmp_path / "ut5.json"
        run_cli(capsys, "gen", "--family", "upper_triangular", "--n", "5",
                "--out", str(path))
        return path

    def test_single_run_json(self, capsys, ut5):
        code, stdout, _ = run_cli(capsys, "run", str(ut5), "ranking", "--seed", "3")
        assert code == 0
        data = json.loads(stdout)
        assert data["W"] == len(data["matching"])
        assert data["seed"] == [3]

    def test_trivial_instance(self, capsys, tmp_path):
        path = tmp_path / "one.json"
        run_cli(capsys, "gen", "--family", "upper_triangular", "--n", "1",
                "--out", str(path))
        _, stdout, _ = run_cli(capsys, "run", str(path), "ranking")
        data = json.loads(stdout)
        assert data["W"] == 1 and len(data["matching"]) == 1

    def test_class_mismatch_exits_2(self, capsys, ut5):
        code, _, err = run_cli(capsys, "run", str(ut5), "general")
        assert code == 2 and "error" in err

    def test_trace_flag(self, capsys, ut5):
        _, stdout, _ = run_cli(capsys, "run", str(ut5), "ranking", "--trace")
        data = json.loads(stdout)
        assert len(data["trace"]) == 5
        assert {"query", "available", "offers", "accepted"} <= set(data["trace"][0])

    def test_injected_ranks(self, capsys, ut5, tmp_path):
        ranks = tmp_path / "r.json"
        ranks.write_text("[0.5, 0.5, 0.5, 0.5, 0.5]")
        _, out1, _ = run_cli(capsys, "run", str(ut5), "ranking", "--ranks", str(ranks))
        _, out2, _ = run_cli(capsys, "run", str(ut5), "ranking", "--ranks", str(ranks))
        assert out1 == out2
        assert json.loads(out1)["seed"] is None

    def test_bad_ranks_length(self, capsys, ut5, tmp_path):
        ranks = tmp_path / "r.json"
        ranks.write_text("[0.5]")
        code, _, err = run_cli(capsys, "run", str(ut5), "ranking", "--ranks", str(ranks))
        assert code == 2


class TestRatio:
    def test_json_and_csv_agree(self, capsys, tmp_path):
        path = tmp_path / "ut.json"
        run_cli(capsys, "gen", "--family", "upper_triangular", "--n", "8",
                "--out", str(path))
        _, js, _ = run_cli(capsys, "ratio", str(path), "ranking",
                           "--trials", "200", "--seed", "4")
        data = json.loads(js)
        _, cs, _ = run_cli(capsys, "ratio", str(path), "ranking",
                           "--trials", "200", "--seed", "4", "--format", "csv")
        header, row = cs.strip().splitlines()
        parsed = dict(zip(header.split(","), row.split(",")))
        assert float(parsed["ratio"]) == pytest.approx(data["ratio"])
        assert parsed["instance_id"] == data["instance_id"]
        assert data["opt"] == 8


class TestAudit:
    def test_json_report(self, capsys, tmp_path):
        path = tmp_path / "ut.json"
        run_cli(capsys, "gen", "--family", "upper_triangular", "--n", "5",
                "--out", str(path))
        code, stdout, _ = run_cli(capsys, "audit", str(path), "--trials", "3")
        assert code == 0
        data = json.loads(stdout)
        assert len(data["reports"]) == 3
        assert all(r["violations"] == [] for r in data["reports"])

    def test_csv_violations_on_doctored_example(self, capsys, tmp_path):
        path = tmp_path / "ns.json"
        run_cli(capsys, "gen", "--family", "example_no_surpass",
                "--alpha", "2", "--k", "5", "--out", str(path))
        ranks = tmp_path / "r.json"
        ranks.write_text("[0.4, 0.4]")
        code, stdout, _ = run_cli(capsys, "audit", str(path),
                                  "--ranks", str(ranks), "--format", "csv")
        assert code == 0
        lines = stdout.strip().splitlines()
        assert lines[0].startswith("seed,query,bidder")
        assert len(lines) >= 2  # at least one violation row


class TestSweep:
    def test_csv_output(self, capsys):
        code, stdout, _ = run_cli(capsys, "sweep", "--mu", "0.3,0.1",
                                  "--trials", "30", "--seed", "2")
        assert code == 0
        lines = stdout.strip().splitlines()
        assert lines[0].startswith("mu_target,")
        assert len(lines) == 3

    def test_byte_determinism(self, capsys):
        _, a, _ = run_cli(capsys, "sweep", "--mu", "0.3", "--trials", "20")
        _, b, _ = run_cli(capsys, "sweep", "--mu", "0.3", "--trials", "20")
        assert a == b


def test_unknown_subcommand_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
