import numpy as np
import pytest
import scipy.optimize as so

from conftest import fit_slope
from bthom.corrector import (ConvergenceRecord, NoConvergenceError, build_bvp,
                             bvp_jacobian, bvp_residual, convergence_study,
                             correct_predictor, correct_with_retries,
                             newton_correct, pack_unknowns, unpack_orbit,
                             _unpack, _ricatti)
from bthom.model import eval_rhs
from bthom.predictor import Method, make_mesh, sample_predictor

LP = Method("lp")


@pytest.fixture(scope="module")
def planar_setup(bt_nf_orbital):
    _, ex = bt_nf_orbital
    mesh = make_mesh(20, 4)
    pred = sample_predictor(ex, LP, 0.1, mesh, k=1e-5)
    return ex, mesh, pred


class TestResidual:
    def test_constant_saddle_solution_has_zero_core_residual(self, bt_nf_model,
                                                             planar_setup):
        _, mesh, pred = planar_setup
        alpha = np.array([-0.01, 0.05])
        s0 = so.fsolve(lambda x: eval_rhs(bt_nf_model, x, alpha), [0.1, 0.0],
                       xtol=1e-14)
        bvp = build_bvp(bt_nf_model, mesh, 1.0, pred.orbit, s0, alpha)
        orbit = np.tile(s0, (bvp.n_orbit, 1))
        z = pack_unknowns(bvp, orbit, s0, alpha, eps0=0.0, eps1=0.0)
        r = bvp_residual(bvp, z)
        ncoll = mesh.ntst * mesh.ncol * 2
        assert np.max(np.abs(r[:ncoll])) < 1e-11          # collocation
        assert np.max(np.abs(r[ncoll:ncoll + 2])) < 1e-11  # saddle
        assert np.max(np.abs(r[ncoll + 3:])) < 1e-9        # BCs/Riccati/distances

    def test_equation_count_is_unknown_count_minus_one(self, bt_nf_model,
                                                       planar_setup):
        _, mesh, pred = planar_setup
        bvp = build_bvp(bt_nf_model, mesh, pred.T, pred.orbit, pred.s0, pred.alpha)
        z = pack_unknowns(bvp, pred.orbit, pred.s0, pred.alpha,
                          eps0=pred.eps0, eps1=pred.eps1)
        assert bvp_residual(bvp, z).size == z.size - 1

    def test_predictor_residual_order(self, bt_nf_model, bt_nf_orbital):
        _, ex = bt_nf_orbital
        mesh = make_mesh(20, 4)
        epss = [0.1, 0.05, 0.025]
        res = []
        for eps in epss:
            pred = sample_predictor(ex, LP, eps, mesh, k=eps * 1e-4)
            bvp = build_bvp(bt_nf_model, mesh, pred.T, pred.orbit, pred.s0, pred.alpha)
            z = pack_unknowns(bvp, pred.orbit, pred.s0, pred.alpha,
                              eps0=pred.eps0, eps1=pred.eps1)
            # the collocation rows scale with 2T; normalize that factor away
            res.append(np.linalg.norm(bvp_residual(bvp, z)) / pred.T)
        assert fit_slope(epss, res) >= 3.0

    def test_jacobian_matches_directional_finite_differences(self, bt_nf_model,
                                                             planar_setup):
        _, mesh, pred = planar_setup
        bvp = build_bvp(bt_nf_model, mesh, pred.T, pred.orbit, pred.s0, pred.alpha)
        z = pack_unknowns(bvp, pred.orbit, pred.s0, pred.alpha,
                          eps0=pred.eps0, eps1=pred.eps1)
        J = bvp_jacobian(bvp, z)
        rng = np.random.default_rng(1)
        h = 1e-7
        for _ in range(4):
            d = rng.standard_normal(z.size)
            d /= np.linalg.norm(d)
            fd = (bvp_residual(bvp, z + h * d) - bvp_residual(bvp, z - h * d)) / (2 * h)
            assert np.linalg.norm(J @ d - fd) <= 1e-5 * (1 + np.linalg.norm(fd))


class TestNewton:
    def test_planar_lp_converges_quickly(self, bt_nf_model, bt_nf_orbital):
        _, ex = bt_nf_orbital
        mesh = make_mesh(40, 4)
        pred = sample_predictor(ex, LP, 0.05, mesh, k=0.05 * 1e-4)
        bvp, z, iters = correct_predictor(bt_nf_model, pred)
        assert iters <= 5
        scale = 1 + np.max(np.abs(z))
        assert np.linalg.norm(bvp_residual(bvp, z)) <= 1e-10 * scale

    def test_corrected_point_is_fixed(self, bt_nf_model, bt_nf_orbital):
        _, ex = bt_nf_orbital
        mesh = make_mesh(20, 4)
        pred = sample_predictor(ex, LP, 0.05, mesh, k=0.05 * 1e-4)
        bvp, z, _ = correct_predictor(bt_nf_model, pred)
        z2, iters = newton_correct(bvp, z)
        assert iters == 0
        assert np.array_equal(z, z2)

    def test_garbage_start_fails(self, bt_nf_model, planar_setup):
        _, mesh, pred = planar_setup
        bvp = build_bvp(bt_nf_model, mesh, pred.T, pred.orbit, pred.s0, pred.alpha)
        z = pack_unknowns(bvp, np.zeros_like(pred.orbit), pred.s0, pred.alpha,
                          eps0=pred.eps0, eps1=pred.eps1)
        with pytest.raises(NoConvergenceError):
            newton_correct(bvp, z, max_iter=8)

    def test_phase_and_riccati_hold_at_corrected_solution(self, bt_nf_model,
                                                          bt_nf_orbital):
        _, ex = bt_nf_orbital
        mesh = make_mesh(20, 4)
        pred = sample_predictor(ex, LP, 0.08, mesh, k=0.08 * 1e-4)
        bvp, z, _ = correct_predictor(bt_nf_model, pred, tol=1e-12)
        orbit, s0, alpha, YU, YS, *_ = _unpack(bvp, z)
        r = bvp_residual(bvp, z)
        ncoll = mesh.ntst * mesh.ncol * 2
        phase = r[ncoll + 2]
        assert abs(phase) < 1e-10
        nSU = bvp.n_stable * bvp.n_unstable
        ric = r[ncoll + 2 + 1 + bvp.n_stable + bvp.n_unstable:
                ncoll + 3 + bvp.n_stable + bvp.n_unstable + 2 * nSU]
        assert np.max(np.abs(ric)) < 1e-10
        assert np.max(np.abs(YU)) < 1e-4 and np.max(np.abs(YS)) < 1e-4


class TestDiscretization:
    def test_doubling_ntst_converges_at_collocation_order(self, bt_nf_model,
                                                          bt_nf_orbital):
        _, ex = bt_nf_orbital
        eps, ncol = 0.1, 4
        orbits = {}
        for ntst in (10, 20, 40):
            mesh = make_mesh(ntst, ncol)
            pred = sample_predictor(ex, LP, eps, mesh, k=eps * 1e-4)
            bvp, z, _ = correct_predictor(bt_nf_model, pred, tol=1e-12)
            orbits[ntst] = unpack_orbit(bvp, z)
        # common points: coarse fine-mesh is a subset of the finer ones
        d1 = np.linalg.norm(orbits[10] - orbits[20][::2])
        d2 = np.linalg.norm(orbits[20] - orbits[40][::2])
        order = np.log2(d1 / d2)
        assert order >= ncol - 0.5

    def test_riccati_residual_formula(self):
        rng = np.random.default_rng(2)
        t = rng.standard_normal((4, 4))
        Y = rng.standard_normal((3, 1))
        R = _ricatti(t, Y, 1)
        t11, t12, t21, t22 = t[:1, :1], t[:1, 1:], t[1:, :1], t[1:, 1:]
        assert np.allclose(R, t22 @ Y - Y @ t11 + t21 - Y @ t12 @ Y)


class TestAutoEps:
    def test_converges_first_try_on_good_model(self, bt_nf_model, bt_nf_orbital):
        _, ex = bt_nf_orbital
        pred, bvp, z, iters = correct_with_retries(bt_nf_model, ex, LP,
                                                   make_mesh(20, 4))
        assert pred.eps == 0.1
        assert np.linalg.norm(bvp_residual(bvp, z)) < 1e-9

    def test_halves_eps_until_convergence(self, bt_nf_model, bt_nf_orbital,
                                          monkeypatch):
        _, ex = bt_nf_orbital
        real = correct_predictor
        calls = []

        def flaky(model, pred, tol=1e-10):
            calls.append(pred.eps)
            if pred.eps > 0.03:
                raise NoConvergenceError("forced")
            return real(model, pred, tol)

        monkeypatch.setattr("bthom.corrector.correct_predictor", flaky)
        pred, *_ = correct_with_retries(bt_nf_model, ex, LP, make_mesh(20, 4))
        assert calls == [0.1, 0.05, 0.025]
        assert pred.eps == 0.025

    def test_gives_up_after_max_tries(self, bt_nf_model, bt_nf_orbital,
                                      monkeypatch):
        _, ex = bt_nf_orbital

        def always_fail(model, pred, tol=1e-10):
            raise NoConvergenceError("forced")

        monkeypatch.setattr("bthom.corrector.correct_predictor", always_fail)
        with pytest.raises(NoConvergenceError, match="8 eps-halvings"):
            correct_with_retries(bt_nf_model, ex, LP, make_mesh(20, 4))


class TestStudy:
    def test_records_and_csv(self, bt_nf_model, bt_nf_orbital):
        _, ex = bt_nf_orbital
        mesh = make_mesh(20, 4)
        recs = convergence_study(bt_nf_model, ex, [LP], [0, 3], [1e-2, 1e-1],
                                 mesh=mesh)
        assert len(recs) == 4
        assert all(r.converged for r in recs)
        assert all(np.isfinite(r.delta) and r.delta >= 0 for r in recs)
        d0 = [r.delta for r in recs if r.order == 0]
        d3 = [r.delta for r in recs if r.order == 3]
        assert all(a > b for a, b in zip(d0, d3))
        row = recs[0].csv_row()
        assert row.startswith("bt_nf,lp,orbital,0,")
        assert len(row.split(",")) == len(ConvergenceRecord.CSV_HEADER.split(","))
