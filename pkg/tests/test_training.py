"""Losses, multiplier schedule, L-BFGS, diagnostics."""

import numpy as np
import pytest

from helmtrial.domains import Circle, DomainSpec, Rect, Sampling, wavenumber
from helmtrial.jets import JetBatch
from helmtrial.network import Architecture, MlpParams, init_params
from helmtrial.training import (DynamicLambda, FixedLambda, GradientHistogram,
                                LossBreakdown, TrainConfig, _SoftObjective,
                                _TrialObjective, collocation_points,
                                gradient_histogram, lambda_target,
                                lambda_update, last_hidden_weight_slice,
                                lbfgs_minimize, loss_boundary, loss_pde,
                                train_soft, train_trial)
from helmtrial.trial import form_for_shape, residual_coefficients

from conftest import fd_param_gradient


def plane_wave_evaluator(k, ux, uy):
    """Analytic jet of sin(k (ux x + uy y)) -- an exact Helmholtz solution."""
    def ev(x, y):
        phase = k * (ux * x + uy * y)
        s, c = np.sin(phase), np.cos(phase)
        return JetBatch(s, k * ux * c, k * uy * c,
                        -k * k * ux * ux * s, -k * k * ux * uy * s,
                        -k * k * uy * uy * s)
    return ev


def constant_field_evaluator(value):
    def ev(x, y):
        z = np.zeros_like(np.asarray(x, dtype=float))
        return JetBatch(np.full_like(z, value), z, z, z, z, z)
    return ev


class TestLosses:
    def test_plane_wave_is_exact_solution(self, rng):
        pts = rng.uniform(-1, 1, size=(500, 2))
        for k in (1.0, 5.5436, 13.859):
            th = rng.uniform(0, 2 * np.pi)
            ld = loss_pde(plane_wave_evaluator(k, np.cos(th), np.sin(th)), pts, k)
            assert ld <= 1e-20

    def test_constant_field_residual(self, rng):
        pts = rng.uniform(-1, 1, size=(100, 2))
        assert loss_pde(constant_field_evaluator(1.0), pts, 2.0) == pytest.approx(16.0)

    def test_empty_points_rejected(self):
        with pytest.raises(ValueError):
            loss_pde(constant_field_evaluator(0.0), np.zeros((0, 2)), 1.0)
        with pytest.raises(ValueError):
            loss_boundary(np.zeros(0), np.zeros(0))

    def test_boundary_loss_values(self):
        assert loss_boundary(np.array([1.0, 2.0]), np.array([1.0, 2.0])) == 0.0
        assert loss_boundary(np.array([2.0]), np.array([1.0])) == 1.0
        # zero network on the canonical rectangle data: mean of {1,0,1,0}
        psi = np.array([-1.0, 0.0, 1.0, 0.0] * 20)
        assert loss_boundary(np.zeros(80), psi) == pytest.approx(0.5)

    def test_lambda_scaling_identity(self):
        lb = LossBreakdown(loss_pde=2.0, loss_boundary=0.25, lam=4.0)
        scaled = LossBreakdown(loss_pde=2.0, loss_boundary=0.25, lam=12.0)
        assert scaled.loss_total - lb.loss_total == pytest.approx((12.0 - 4.0) * 0.25)


class TestLambdaSchedule:
    def test_hand_example(self, rng):
        # std 10 vs 0.1 -> target 100; blend with alpha=1e-3 from 1
        gd = rng.normal(0.0, 10.0, 200_000)
        gb = rng.normal(0.0, 0.1, 200_000)
        gd = (gd - gd.mean()) / gd.std() * 10.0
        gb = (gb - gb.mean()) / gb.std() * 0.1
        assert lambda_target(gd, gb) == pytest.approx(100.0)
        assert lambda_update(1.0, gd, gb, 1e-3) == pytest.approx(1.099)

    def test_target_floor_is_one(self, rng):
        gd = rng.normal(0.0, 0.05, 1000)
        gb = rng.normal(0.0, 1.0, 1000)
        assert lambda_target(gd, gb) == 1.0

    def test_full_replacement(self, rng):
        gd = rng.normal(0.0, 3.0, 10_000)
        gb = rng.normal(0.0, 1.0, 10_000)
        tgt = lambda_target(gd, gb)
        assert lambda_update(0.5, gd, gb, 1.0) == pytest.approx(tgt)

    def test_degenerate_boundary_gradient_holds(self):
        gd = np.array([1.0, -1.0])
        gb = np.zeros(5)
        assert lambda_update(2.5, gd, gb, 0.1) == 2.5

    def test_schedule_validation(self):
        with pytest.raises(ValueError):
            DynamicLambda(alpha=0.0)
        with pytest.raises(ValueError):
            DynamicLambda(lam0=-1.0)
        with pytest.raises(ValueError):
            FixedLambda(lam=0.0)


class TestLbfgs:
    def test_quadratic_bowl(self):
        target = np.array([1.0, -2.0, 3.0, 0.5])

        def fun(x):
            d = x - target
            return float(d @ d), 2.0 * d

        res = lbfgs_minimize(fun, np.zeros(4), TrainConfig(max_iters=50,
                                                           grad_tolerance=1e-10))
        assert res.n_iters <= 50
        assert np.abs(res.x - target).max() <= 1e-8

    def test_rosenbrock(self):
        def fun(v):
            x, y = v
            f = (1 - x) ** 2 + 100.0 * (y - x * x) ** 2
            g = np.array([-2 * (1 - x) - 400.0 * x * (y - x * x),
                          200.0 * (y - x * x)])
            return float(f), g

        res = lbfgs_minimize(fun, np.array([-1.2, 1.0]),
                             TrainConfig(max_iters=200, grad_tolerance=1e-8))
        assert res.f <= 1e-6

    def test_zero_gradient_immediate_stop(self):
        def fun(x):
            return 1.0, np.zeros_like(x)

        res = lbfgs_minimize(fun, np.ones(3), TrainConfig(max_iters=10,
                                                          grad_tolerance=1e-3))
        assert res.n_iters == 0
        assert res.status == "converged"

    def test_monotone_accepted_values(self):
        def fun(v):
            x, y = v
            f = np.sin(3 * x) * np.cos(2 * y) + 0.1 * (x * x + y * y)
            g = np.array([3 * np.cos(3 * x) * np.cos(2 * y) + 0.2 * x,
                          -2 * np.sin(3 * x) * np.sin(2 * y) + 0.2 * y])
            return float(f), g

        res = lbfgs_minimize(fun, np.array([0.9, -0.4]),
                             TrainConfig(max_iters=100, grad_tolerance=1e-9))
        assert np.all(np.diff(res.f_history) <= 1e-14)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(max_iters=0)
        with pytest.raises(ValueError):
            TrainConfig(grad_tolerance=0.0)
        with pytest.raises(ValueError):
            TrainConfig(wolfe_c1=0.5, wolfe_c2=0.4)


class TestHistograms:
    def test_constant_vector(self):
        h = gradient_histogram(np.full(64, 2.5), bins=10)
        assert (h.counts > 0).sum() == 1
        assert h.counts.sum() == 64
        assert h.std == 0.0

    def test_two_values_two_bins(self):
        h = gradient_histogram(np.array([-1.0, 1.0]), bins=2)
        np.testing.assert_array_equal(h.counts, [1, 1])
        assert (h.vmin, h.vmax) == (-1.0, 1.0)

    def test_csv_dump(self, tmp_path):
        h = gradient_histogram(np.linspace(-1, 1, 100), bins=4)
        h.write_csv(tmp_path / "h.csv")
        lines = (tmp_path / "h.csv").read_text().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) == 5

    def test_last_hidden_slice(self):
        arch = Architecture((2, 3, 4, 1))
        sl = last_hidden_weight_slice(arch)
        # layer 0: 3*2+3 = 9 entries; last hidden weights: 4*3 = 12
        assert (sl.start, sl.stop) == (9, 21)


class TestObjectiveGradients:
    def test_soft_components_match_fd(self, rng):
        rect = Rect()
        interior, boundary, psi = (rng.uniform(-1, 1, (20, 2)),
                                   None, None)
        from helmtrial.domains import sample_rectangle
        interior2, boundary, psi = sample_rectangle(rect, Sampling(20, 8, seed=1))
        arch = Architecture((2, 6, 1))
        obj = _SoftObjective(arch, interior2, boundary, psi, k=3.0, lam=2.0)
        theta = init_params(arch, 2).to_flat()

        f, g = obj(theta)
        gfd = fd_param_gradient(lambda t: obj(t)[0], theta)
        assert np.abs(g - gfd).max() / max(1e-8, np.abs(gfd).max()) <= 1e-4

    def test_trial_objective_matches_fd(self, rng):
        circ = Circle()
        dom = DomainSpec(circ, Sampling(30, seed=2))
        form = form_for_shape(circ)
        pts = collocation_points(dom)
        coeffs = residual_coefficients(form, 2.0, pts[:, 0], pts[:, 1])
        arch = Architecture((2, 6, 1))
        obj = _TrialObjective(arch, coeffs, pts[:, 0].copy(), pts[:, 1].copy())
        theta = init_params(arch, 3).to_flat()

        f, g = obj(theta)
        gfd = fd_param_gradient(lambda t: obj(t)[0], theta)
        assert np.abs(g - gfd).max() / max(1e-8, np.abs(gfd).max()) <= 1e-4


def tiny_soft_run(seed=0, dynamic=False):
    rect = Rect()
    dom = DomainSpec(rect, Sampling(60, 16, seed=seed))
    params0 = init_params(Architecture((2, 8, 1)), seed)
    schedule = DynamicLambda(alpha=0.5, lam0=1.0) if dynamic else FixedLambda(1.0)
    cfg = TrainConfig(max_iters=25, grad_tolerance=1e-12)
    return train_soft(dom, params0, wavenumber(300, 340), schedule, cfg)


class TestTrainers:
    def test_soft_requires_boundary_shape(self):
        dom = DomainSpec(Circle(), Sampling(50, seed=0))
        params0 = init_params(Architecture((2, 4, 1)), 0)
        with pytest.raises(ValueError):
            train_soft(dom, params0, 1.0, FixedLambda(1.0),
                       TrainConfig(max_iters=5, grad_tolerance=1e-9))

    def test_soft_report_shapes_and_determinism(self):
        a = tiny_soft_run(seed=1)
        b = tiny_soft_run(seed=1)
        assert a.n_iters == b.n_iters
        np.testing.assert_array_equal(a.loss_total, b.loss_total)
        assert a.histograms is not None
        assert set(a.histograms) == {"grad_pde", "grad_boundary"}
        assert np.all(a.loss_pde >= 0) and np.all(a.loss_boundary >= 0)
        np.testing.assert_allclose(
            a.loss_total, a.loss_pde + a.lam * a.loss_boundary, rtol=1e-12)

    def test_dynamic_lambda_run_invariants(self):
        rep = tiny_soft_run(seed=2, dynamic=True)
        assert rep.method == "soft-dynamic"
        assert rep.lambda_hat is not None
        hats = rep.lambda_hat[np.isfinite(rep.lambda_hat)]
        assert np.all(hats >= 1.0)
        assert np.all(rep.lam >= min(1.0, 1.0))

    def test_trial_never_evaluates_boundary_mismatch(self):
        circ = Circle()
        dom = DomainSpec(circ, Sampling(80, seed=3))
        params0 = init_params(Architecture((2, 8, 1)), 3)
        rep = train_trial(dom, form_for_shape(circ), params0, 2.0,
                          TrainConfig(max_iters=20, grad_tolerance=1e-12))
        assert rep.method == "trial"
        assert np.all(rep.loss_boundary == 0.0)
        assert np.all(rep.lam == 0.0)

    def test_report_csv_format(self, tmp_path):
        rep = tiny_soft_run(seed=4)
        rep.write_csv(tmp_path / "report.csv")
        lines = (tmp_path / "report.csv").read_text().splitlines()
        assert lines[0].startswith("# {")
        assert lines[1] == "iteration,loss_pde,loss_boundary,loss_total,lambda,grad_norm"
        assert len(lines) == 2 + rep.n_iters

    def test_rect_collocation_includes_boundary(self):
        dom = DomainSpec(Rect(), Sampling(40, 16, seed=5))
        pts = collocation_points(dom)
        assert pts.shape == (56, 2)
        on_boundary = (np.isclose(np.abs(pts[:, 0]), 1.0)
                       | np.isclose(np.abs(pts[:, 1]), 1.0))
        assert on_boundary.sum() == 16
