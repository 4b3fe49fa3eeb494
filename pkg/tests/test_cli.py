import json

import numpy as np
import pytest

from bthom.cli import main


def run(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestLpSeries:
    def test_exact_rational_csv(self, capsys, tmp_path):
        out = tmp_path / "coeffs.csv"
        code, stdout, _ = run(["lpseries", "--order", "4", "--out", str(out)], capsys)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "i,tau_i,sigma_i"
        assert lines[1] == "0,10/7,6"
        assert lines[3] == "2,288/2401,18/49"
        side = json.loads((tmp_path / "coeffs.json").read_text())
        assert side["omega1"] == ["0", "-6/7"]
        assert side["omega3"] == ["0", "-198/2401", "0", "18/343"]


class TestAnalyze:
    def test_builtin_normal_form(self, capsys, tmp_path):
        out = tmp_path / "cm.json"
        code, stdout, _ = run(["analyze", "--model", "bt_nf", "--out", str(out)],
                              capsys)
        assert code == 0
        assert "a = 1" in stdout
        data = json.loads(out.read_text())
        assert np.allclose(data["orbital"]["K10"], [1, 0], atol=1e-10)
        assert np.allclose(data["orbital"]["H3000"], [0, 0], atol=1e-9)

    def test_hh_reports_printed_coefficients(self, capsys):
        code, stdout, _ = run(["analyze", "--model", "hh"], capsys)
        assert code == 0
        a_line = [ln for ln in stdout.splitlines() if "a =" in ln][0]
        a_val = float(a_line.split("a =")[1].split()[0])
        assert a_val == pytest.approx(2.5515e-5, rel=1e-3)

    def test_non_bt_equilibrium_exits_3(self, capsys, tmp_path):
        model = tmp_path / "m.txt"
        model.write_text("dim 2\npar p1 p2\nx1' = -x1 + p1\nx2' = -2*x2 + p2\n")
        code, _, err = run(["analyze", "--model", str(model),
                            "--x0", "0,0", "--alpha0", "0,0"], capsys)
        assert code == 3
        assert "error" in err

    def test_non_generic_exits_3(self, capsys):
        code, _, err = run(["analyze", "--model", "bt_nf", "--coeff", "a=0"], capsys)
        assert code == 3

    def test_usage_error_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["analyze", "--nonsense"])
        assert exc.value.code == 2


class TestPredict:
    def test_json_fields_and_determinism(self, capsys, tmp_path):
        out1, out2 = tmp_path / "p1.json", tmp_path / "p2.json"
        args = ["predict", "--model", "bt_nf", "--eps", "0.1",
                "--ntst", "20", "--ncol", "4"]
        assert run(args + ["--out", str(out1)], capsys)[0] == 0
        assert run(args + ["--out", str(out2)], capsys)[0] == 0
        assert out1.read_text() == out2.read_text()
        data = json.loads(out1.read_text())
        for key in ("method", "variant", "eps", "alpha", "T", "ntst", "ncol",
                    "mesh", "orbit", "s0", "eps0", "eps1", "tangent_sign"):
            assert key in data
        assert len(data["orbit"]) == 20 * 4 + 1
        assert len(data["orbit"][0]) == 2


class TestConverge:
    def test_small_study_csv(self, capsys, tmp_path):
        out = tmp_path / "conv.csv"
        code, stdout, _ = run(["converge", "--model", "bt_nf", "--methods", "lp",
                               "--orders", "0,3", "--amplitudes", "1e-2,1e-1",
                               "--ntst", "20", "--out", str(out)], capsys)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("model,method,variant,order")
        assert len(lines) == 5
        rows = [ln.split(",") for ln in lines[1:]]
        assert all(r[-1] == "1" for r in rows)  # all converged


class TestCompare:
    def test_wrong_k_negative_control(self, capsys, tmp_path):
        out = tmp_path / "cmp.csv"
        code, *_ = run(["compare", "--model", "bt_nf", "--coeff", "c1=0.7",
                        "--eps-range", "0.1,0.2", "--out", str(out)], capsys)
        assert code == 0
        rows = {}
        for line in out.read_text().splitlines()[1:]:
            var, order, eps, a1, a2 = line.split(",")
            rows[(var, int(order), float(eps))] = (float(a1), float(a2))
        good = rows[("orbital", 3, 0.2)]
        ctrl = rows[("orbital-wrongK", 3, 0.2)]
        # dropping K11/K03 loses the c1 alpha2^3 pull-back in alpha1
        beta2 = 10 / 7 * 0.04 + 288 / 2401 * 0.2 ** 4
        assert good[0] == pytest.approx(-4 * 0.2 ** 4 - 0.7 * beta2 ** 3, abs=1e-10)
        assert ctrl[0] == pytest.approx(-4 * 0.2 ** 4, abs=1e-8)
        assert good[1] == pytest.approx(ctrl[1], abs=1e-10)

    def test_variants_coincide_for_quadratic_normal_form(self, capsys, tmp_path):
        out = tmp_path / "cmp2.csv"
        code, *_ = run(["compare", "--model", "bt_nf",
                        "--eps-range", "0.1,0.2", "--out", str(out)], capsys)
        assert code == 0
        rows = {}
        for line in out.read_text().splitlines()[1:]:
            var, order, eps, a1, a2 = line.split(",")
            rows.setdefault((int(order), float(eps)), {})[var] = (float(a1), float(a2))
        for cell in rows.values():
            base = cell["orbital"]
            for var in ("smooth", "hyper", "orbital-wrongK"):
                assert np.allclose(cell[var], base, atol=1e-8)
