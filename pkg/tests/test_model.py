import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bthom.model import (HH_BT_ALPHA, HH_BT_STATE, ModelEvalError,
                         NonEquilibriumError, ParseError, build_oracle,
                         builtin_model, eval_rhs, parse_model)
from exact_forms import random_cubic_model

TOP_NF = "dim 2\npar b1 b2\nx1' = x2\nx2' = b1 + b2*x2 + x1^2 + x1*x2\n"


class TestParsing:
    def test_topological_normal_form(self):
        m = parse_model(TOP_NF)
        assert m.dim == 2
        assert m.active_params == ("b1", "b2")
        assert np.allclose(eval_rhs(m, [0, 0], [0, 0]), [0, 0])
        assert np.allclose(eval_rhs(m, [1, 1], [0, 0]), [1, 2])

    def test_missing_equation(self):
        with pytest.raises(ParseError, match="missing equation for x2"):
            parse_model("dim 2\npar b1 b2\nx1' = x1\n")

    def test_duplicate_equation(self):
        with pytest.raises(ParseError, match="duplicate"):
            parse_model("dim 2\npar a b\nx1' = x2\nx1' = x1\nx2' = x1\n")

    def test_unknown_identifier_reports_position(self):
        with pytest.raises(ParseError, match="unknown identifier 'y'"):
            parse_model("dim 2\npar a b\nx1' = x2\nx2' = y + x1\n")

    def test_wrong_parameter_count(self):
        with pytest.raises(ParseError, match="exactly 2 active"):
            parse_model("dim 2\npar a\nx1' = x2\nx2' = x1\n")

    def test_unknown_function(self):
        with pytest.raises(ParseError, match="unknown function"):
            parse_model("dim 2\npar a b\nx1' = x2\nx2' = foo(x1)\n")

    def test_non_integer_exponent(self):
        with pytest.raises(ParseError, match="integer"):
            parse_model("dim 2\npar a b\nx1' = x2\nx2' = x1^1.5\n")

    def test_comments_fix_and_functions(self):
        text = ("# comment\ndim 2\npar a b  # active\nfix c 2.5\n"
                "x1' = c*sech(x2) - 2.5*exp(0*x1)\nx2' = a + b + psi(x1) - 1\n")
        m = parse_model(text)
        out = eval_rhs(m, [0.0, 0.0], [0.0, 0.0])
        assert np.allclose(out, [0.0, 0.0], atol=1e-15)

    def test_hodgkin_huxley_builtin(self):
        hh = builtin_model("hh")
        assert hh.dim == 4
        r = eval_rhs(hh, HH_BT_STATE, HH_BT_ALPHA)
        assert np.linalg.norm(r) < 1e-8


class TestEvaluation:
    def test_division_domain_error_reports_component(self):
        m = parse_model("dim 2\npar a b\nx1' = x2\nx2' = 1/x1\n")
        with pytest.raises(ModelEvalError, match="component 2"):
            eval_rhs(m, [0.0, 1.0], [0.0, 0.0])

    def test_batched_evaluation(self):
        m = parse_model(TOP_NF)
        xs = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
        out = eval_rhs(m, xs, np.zeros(2))
        assert out.shape == (3, 2)
        assert np.allclose(out[1], [1, 2])

    def test_psi_is_continuous_through_zero(self):
        m = parse_model("dim 2\npar a b\nx1' = psi(x2)\nx2' = x1\n")
        vals = [eval_rhs(m, [0.0, t], [0, 0])[0] for t in (-1e-9, 0.0, 1e-9)]
        assert np.allclose(vals, 1.0, atol=1e-8)


class TestOracle:
    def test_normal_form_b_and_c(self, bt_nf_orbital):
        oracle, _ = bt_nf_orbital
        assert np.allclose(oracle.B([1, 0], [1, 0]), [0.0, 2.0], atol=1e-9)
        rng = np.random.default_rng(3)
        for _ in range(4):
            q = rng.standard_normal(2)
            assert np.linalg.norm(oracle.C(q, q, q)) < 1e-8

    def test_forms_match_symbolic_on_random_cubics(self):
        rng = np.random.default_rng(42)
        for trial in range(3):
            text, sym = random_cubic_model(rng, dim=2 + trial % 2)
            m = parse_model(text, name=f"cubic{trial}")
            oracle = build_oracle(m, np.zeros(m.dim), np.zeros(2))
            probes = rng.uniform(-1, 1, size=(6, m.dim))
            ks = rng.uniform(-1, 1, size=(6, 2))
            assert np.allclose(oracle.A, sym.A(), atol=1e-7, rtol=1e-6)
            assert np.allclose(oracle.J1, sym.J1(), atol=1e-7, rtol=1e-6)
            u, v, w = probes[0], probes[1], probes[2]
            k, m2, q = ks[0], ks[1], ks[2]
            pairs = [
                (oracle.B(u, v), sym.B(u, v)),
                (oracle.A1(u, k), sym.A1(u, k)),
                (oracle.J2(k, m2), sym.J2(k, m2)),
                (oracle.C(u, v, w), sym.C(u, v, w)),
                (oracle.B1(u, v, k), sym.B1(u, v, k)),
                (oracle.A2(u, k, m2), sym.A2(u, k, m2)),
                (oracle.J3(k, m2, q), sym.J3(k, m2, q)),
            ]
            for got, want in pairs:
                scale = 1.0 + np.linalg.norm(want)
                assert np.linalg.norm(got - want) <= 1e-6 * scale

    def test_symmetry_is_exact(self, hh_orbital):
        oracle, _ = hh_orbital
        rng = np.random.default_rng(5)
        u, v, w = rng.standard_normal((3, 4))
        assert np.array_equal(oracle.B(u, v), oracle.B(v, u))
        cuvw = oracle.C(u, v, w)
        for perm in ((u, w, v), (v, u, w), (w, v, u)):
            assert np.allclose(oracle.C(*perm), cuvw, rtol=0, atol=1e-12)

    def test_hh_b_richardson_step_halving(self, hh_model):
        o1 = build_oracle(hh_model, HH_BT_STATE, HH_BT_ALPHA, h=1.0)
        o2 = build_oracle(hh_model, HH_BT_STATE, HH_BT_ALPHA, h=0.5)
        rng = np.random.default_rng(11)
        for _ in range(10):
            u, v = rng.standard_normal((2, 4))
            b1, b2 = o1.B(u, v), o2.B(u, v)
            assert np.linalg.norm(b1 - b2) <= 1e-5 * (1.0 + np.linalg.norm(b2))

    @settings(max_examples=25, deadline=None)
    @given(c=st.floats(min_value=-8.0, max_value=8.0,
                       allow_nan=False, allow_infinity=False))
    def test_forms_scale_linearly_per_slot(self, c, hh_orbital):
        oracle, _ = hh_orbital
        rng = np.random.default_rng(17)
        u, v = rng.standard_normal((2, 4))
        base = oracle.B(u, v)
        got = oracle.B(u, c * v)
        assert np.linalg.norm(got - c * base) <= 1e-8 * (1.0 + abs(c) * np.linalg.norm(base))

    def test_non_equilibrium_base_rejected(self, bt_nf_model):
        with pytest.raises(NonEquilibriumError):
            build_oracle(bt_nf_model, [0.5, 0.5], [0.0, 0.0])

    def test_nonpositive_step_rejected(self, bt_nf_model):
        with pytest.raises(ValueError):
            build_oracle(bt_nf_model, [0, 0], [0, 0], h=0.0)
