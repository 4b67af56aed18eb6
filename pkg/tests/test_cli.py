"""CLI behavior: formats, exit codes, determinism, environment handling."""

import json

import pytest
from mpmath import mp, mpf

from qfb import LatticeFunction
from qfb.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestEval:
    def test_csv_row_and_header(self, capsys):
        code, out, _ = run(["eval", "--q", "0.5", "--nu", "0",
                            "--z", "1", "--digits", "40"], capsys)
        assert code == 0
        lines = out.split("\r\n")
        assert lines[0] == "z,J,J_prime,terms,precision_used"
        assert lines[1].startswith("1,")

    def test_z_zero_nu_zero_has_value_no_derivative(self, capsys):
        code, out, _ = run(["eval", "--q", "0.5", "--nu", "0", "--z", "0",
                            "--digits", "40", "--format", "json"], capsys)
        assert code == 0
        rows = json.loads(out)
        assert rows[0]["J"] == "1.0"
        assert rows[0]["J_prime"] == ""

    def test_escalated_precision_reported_near_lattice_point(self, capsys):
        code, out, _ = run(["eval", "--q", "0.5", "--nu", "0", "--z", "32",
                            "--digits", "40", "--format", "json"], capsys)
        assert code == 0
        rows = json.loads(out)
        assert rows[0]["precision_used"] > 40
        # value agrees with a doubled-precision rerun
        code2, out2, _ = run(["eval", "--q", "0.5", "--nu", "0", "--z", "32",
                              "--digits", "80", "--format", "json"], capsys)
        with mp.workdps(90):
            a, b = mpf(rows[0]["J"]), mpf(json.loads(out2)[0]["J"])
            assert abs(a - b) <= abs(b) * mpf(10) ** -35

    def test_malformed_q_exits_2_naming_invariant(self, capsys):
        code, _, err = run(["eval", "--q", "1.2", "--nu", "0", "--z", "1",
                            "--digits", "40"], capsys)
        assert code == 2
        assert "0 < q < 1" in err

    def test_base_q_flag(self, capsys):
        code, out, _ = run(["eval", "--q", "0.5", "--nu", "0", "--z", "1",
                            "--base-q", "--digits", "40",
                            "--format", "json"], capsys)
        code2, out2, _ = run(["eval", "--q", "0.5", "--nu", "0", "--z", "1",
                              "--digits", "40", "--format", "json"], capsys)
        assert code == code2 == 0
        assert json.loads(out)[0]["J"] != json.loads(out2)[0]["J"]


class TestZeros:
    def test_kmax_zero_empty_table_exit_zero(self, capsys):
        code, out, _ = run(["zeros", "--q", "0.5", "--nu", "0",
                            "--kmax", "0", "--digits", "40"], capsys)
        assert code == 0
        assert out.split("\r\n")[0] == "k,j,epsilon_k,alpha_k,digits"

    def test_kmax_cap_enforced(self, capsys):
        code, _, err = run(["zeros", "--q", "0.5", "--nu", "0",
                            "--kmax", "20", "--digits", "40"], capsys)
        assert code == 2
        assert "allow-large-k" in err

    def test_deterministic_output(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            code, _, _ = run(["zeros", "--q", "0.5", "--nu", "0",
                              "--kmax", "3", "--digits", "40",
                              "--out", str(path)], capsys)
            assert code == 0
        assert a.read_bytes() == b.read_bytes()

    def test_json_format(self, capsys):
        code, out, _ = run(["zeros", "--q", "0.5", "--nu", "0", "--kmax",
                            "2", "--digits", "40", "--format", "json"],
                           capsys)
        assert code == 0
        rows = json.loads(out)
        assert [r["k"] for r in rows] == [1, 2]


class TestVerify:
    def test_subset_selection_and_pass(self, capsys):
        code, out, _ = run(["verify", "--q", "0.5", "--nu", "0",
                            "--kmax", "2", "--digits", "40",
                            "--check", "gram", "--tol", "1e-5",
                            "--format", "json"], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["passed"] is True
        assert [r["check"] for r in rep["results"]] == ["gram"]

    def test_failed_check_exits_1(self, capsys):
        # at 40 digits the Gram residual cannot reach 1e-40
        code, out, _ = run(["verify", "--q", "0.5", "--nu", "0",
                            "--kmax", "2", "--digits", "40",
                            "--check", "gram", "--format", "json"], capsys)
        assert code == 1
        assert json.loads(out)["passed"] is False

    def test_unknown_check_exits_2(self, capsys):
        code, _, err = run(["verify", "--q", "0.5", "--nu", "0",
                            "--check", "bogus", "--digits", "40"], capsys)
        assert code == 2
        assert "unknown check" in err

    def test_csv_report_format(self, capsys):
        code, out, _ = run(["verify", "--q", "0.5", "--nu", "0",
                            "--kmax", "4", "--digits", "40",
                            "--check", "signs",
                            "--theta-zero-rule", "1/m**2",
                            "--theta-inf-rule", "1/sqrt(m)"], capsys)
        assert code == 0
        lines = out.split("\r\n")
        assert lines[0] == "check,status,margin,threshold,anchor"
        assert lines[1].startswith("signs,pass")

    def test_malicious_rule_rejected(self, capsys):
        code, _, err = run(["verify", "--q", "0.5", "--nu", "0",
                            "--check", "signs", "--digits", "40",
                            "--theta-zero-rule",
                            "__import__('os').system('true')"], capsys)
        assert code == 2
        assert "unknown name" in err


class TestExpand:
    def test_constant_function_json(self, capsys):
        code, out, _ = run(["expand", "--q", "0.5", "--nu", "0", "--K", "2",
                            "--f", "1", "--digits", "40"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert len(payload["coeffs"]) == 2

    def test_mode_spec_gives_unit_vector(self, capsys):
        code, out, _ = run(["expand", "--q", "0.5", "--nu", "0", "--K", "3",
                            "--f", "mode:2", "--digits", "40"], capsys)
        assert code == 0
        coeffs = [mpf(c) for c in json.loads(out)["coeffs"]]
        with mp.workdps(50):
            assert abs(coeffs[0]) < mpf(10) ** -20
            assert abs(coeffs[1] - 1) < mpf(10) ** -18
            assert abs(coeffs[2]) < mpf(10) ** -20

    def test_mode_beyond_table_rejected(self, capsys):
        code, _, err = run(["expand", "--q", "0.5", "--nu", "0", "--K", "2",
                            "--f", "mode:5", "--digits", "40"], capsys)
        assert code == 2
        assert "zero table" in err

    def test_lattice_json_round_trip(self, tmp_path, capsys):
        lf = LatticeFunction.from_callable(lambda t: t, "0.5", 30, digits=40)
        path = tmp_path / "f.json"
        path.write_text(lf.to_json(), encoding="utf-8")
        code, out, _ = run(["expand", "--q", "0.5", "--nu", "0", "--K", "2",
                            "--f", str(path), "--digits", "40"], capsys)
        assert code == 0
        # the file re-parses to an identical lattice function
        back = LatticeFunction.from_json(path.read_text(encoding="utf-8"))
        with mp.workdps(50):
            for j in range(lf.truncation):
                assert abs(back.value(j) - lf.value(j)) < mpf(10) ** -35

    def test_plot_csv_written(self, tmp_path, capsys):
        plot = tmp_path / "plot.csv"
        code, _, _ = run(["expand", "--q", "0.5", "--nu", "0", "--K", "1",
                          "--f", "1", "--digits", "40",
                          "--plot-csv", str(plot)], capsys)
        assert code == 0
        lines = plot.read_bytes().decode("utf-8").split("\r\n")
        assert lines[0] == "x,S_K"
        assert len(lines) > 2

    def test_deterministic_rerun(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            code, _, _ = run(["expand", "--q", "0.5", "--nu", "0", "--K",
                              "2", "--f", "t**2", "--digits", "40",
                              "--out", str(path)], capsys)
            assert code == 0
        assert a.read_bytes() == b.read_bytes()


class TestEnvironment:
    def test_qfb_digits_env_default(self, monkeypatch, capsys):
        monkeypatch.setenv("QFB_DIGITS", "35")
        code, out, _ = run(["eval", "--q", "0.5", "--nu", "0", "--z", "0.5",
                            "--format", "json"], capsys)
        assert code == 0
        # J column is printed at the context's digits: 35 here
        j = json.loads(out)[0]["J"]
        mantissa = j.replace("-", "").replace(".", "").split("e")[0]
        assert len(mantissa) <= 36
