"""Network evaluation, jets, parameter gradients, checkpoints."""

import numpy as np
import pytest

from helmtrial.jets import JetBatch
from helmtrial.network import (Architecture, MlpParams, forward, forward_jet,
                               forward_jet_with_tape, forward_with_tape,
                               grad_from_jet_tape, grad_from_value_tape,
                               init_params, load_params, save_params)

from conftest import assert_jet_matches_fd, fd_param_gradient


def sin_x_net():
    """One hidden neuron wired so the output is sin(x)."""
    arch = Architecture((2, 1, 1))
    return MlpParams(arch, (np.array([[1.0, 0.0]]), np.array([[1.0]])),
                     (np.array([0.0]), np.array([0.0])))


class TestParams:
    def test_init_deterministic(self):
        arch = Architecture((2, 8, 8, 1))
        a = init_params(arch, 42).to_flat()
        b = init_params(arch, 42).to_flat()
        assert np.array_equal(a, b)
        c = init_params(arch, 43).to_flat()
        assert not np.array_equal(a, c)

    def test_flat_length(self):
        arch = Architecture((2, 3, 1))
        assert arch.n_params == 13
        assert init_params(arch, 0).to_flat().size == 13

    def test_flat_round_trip(self):
        arch = Architecture((2, 5, 4, 1))
        p = init_params(arch, 7)
        flat = p.to_flat()
        q = MlpParams.from_flat(arch, flat)
        assert np.array_equal(q.to_flat(), flat)
        for w1, w2 in zip(p.weights, q.weights):
            assert np.array_equal(w1, w2)

    def test_architecture_validation(self):
        with pytest.raises(ValueError):
            Architecture((2, 1))
        with pytest.raises(ValueError):
            Architecture((3, 5, 1))
        with pytest.raises(ValueError):
            Architecture((2, 5, 2))
        with pytest.raises(ValueError):
            Architecture((2, 5, 1), activation="tanh")

    def test_checkpoint_round_trip(self, tmp_path):
        arch = Architecture((2, 6, 3, 1), input_scale=2.0)
        p = init_params(arch, 11)
        path = tmp_path / "params.txt"
        save_params(path, p)
        q = load_params(path)
        assert q.arch == arch
        assert np.array_equal(q.to_flat(), p.to_flat())

    def test_checkpoint_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("not a checkpoint\n")
        with pytest.raises(ValueError):
            load_params(path)


class TestForward:
    def test_zero_weights_constant_output(self, rng):
        arch = Architecture((2, 4, 1))
        zeros = MlpParams(arch, (np.zeros((4, 2)), np.zeros((1, 4))),
                          (np.zeros(4), np.array([0.75])))
        x = rng.uniform(-1, 1, 20)
        y = rng.uniform(-1, 1, 20)
        np.testing.assert_array_equal(forward(zeros, x, y), np.full(20, 0.75))

    def test_sin_net(self):
        p = sin_x_net()
        assert forward(p, np.pi / 2, 0.0) == pytest.approx(1.0)
        ys = np.linspace(-3, 3, 7)
        np.testing.assert_allclose(forward(p, np.zeros(7), ys), 0.0, atol=1e-16)

    def test_determinism_across_evaluations(self, rng):
        p = init_params(Architecture((2, 16, 16, 1)), 5)
        x = rng.uniform(-1, 1, 64)
        y = rng.uniform(-1, 1, 64)
        assert np.array_equal(forward(p, x, y), forward(p, x, y))


class TestJets:
    def test_sin_net_jet_values(self):
        p = sin_x_net()
        j0 = forward_jet(p, (0.0, 0.0))
        assert j0.dx == pytest.approx(1.0)
        assert j0.dxx == pytest.approx(0.0, abs=1e-15)
        j1 = forward_jet(p, (np.pi / 2, 0.0))
        assert j1.dx == pytest.approx(0.0, abs=1e-15)
        assert j1.dxx == pytest.approx(-1.0)

    def test_zero_net_jet(self):
        arch = Architecture((2, 3, 1))
        p = MlpParams(arch, (np.zeros((3, 2)), np.zeros((1, 3))),
                      (np.zeros(3), np.array([2.0])))
        j = forward_jet(p, (0.3, -0.4))
        assert j.v == 2.0
        assert (j.dx, j.dy, j.dxx, j.dyy) == (0.0, 0.0, 0.0, 0.0)

    def test_jet_value_consistency(self, rng):
        p = init_params(Architecture((2, 12, 12, 1)), 3)
        x = rng.uniform(-1, 1, 50)
        y = rng.uniform(-1, 1, 50)
        jet, _ = forward_jet_with_tape(p, x, y)
        np.testing.assert_allclose(jet.v, forward(p, x, y), rtol=1e-14)

    def test_jets_match_finite_differences(self, rng):
        p = init_params(Architecture((2, 10, 10, 1), input_scale=1.5), 9)
        x = rng.uniform(-1, 1, 200)
        y = rng.uniform(-1, 1, 200)
        jet, _ = forward_jet_with_tape(p, x, y)
        assert_jet_matches_fd(jet, lambda a, b: forward(p, a, b), x, y)


class TestParamGradients:
    def test_output_bias_gradient_is_one(self):
        arch = Architecture((2, 4, 1))
        p = MlpParams(arch, (np.zeros((4, 2)), np.zeros((1, 4))),
                      (np.zeros(4), np.zeros(1)))
        vals, tape = forward_with_tape(p, 0.3, 0.5)
        g = grad_from_value_tape(p, tape, np.ones(1))
        assert g[-1] == 1.0  # output bias is the last flat entry

    def test_square_objective_chain_rule(self, rng):
        arch = Architecture((2, 3, 1))
        p = init_params(arch, 1)
        x, y = 0.2, -0.6

        vals, tape = forward_with_tape(p, x, y)
        g_sq = grad_from_value_tape(p, tape, 2.0 * vals)
        g_lin = grad_from_value_tape(p, tape, np.ones(1))
        np.testing.assert_allclose(g_sq, 2.0 * float(vals[0]) * g_lin, rtol=1e-12)

    def test_value_gradient_matches_fd(self, rng):
        arch = Architecture((2, 16, 1))
        p0 = init_params(arch, 4)
        x = rng.uniform(-1, 1, 30)
        y = rng.uniform(-1, 1, 30)

        def objective(theta):
            params = MlpParams.from_flat(arch, theta)
            return float(np.mean(forward(params, x, y) ** 2))

        theta = p0.to_flat()
        params = MlpParams.from_flat(arch, theta)
        vals, tape = forward_with_tape(params, x, y)
        g = grad_from_value_tape(params, tape, (2.0 / vals.size) * vals)
        gfd = fd_param_gradient(objective, theta)
        rel = np.abs(g - gfd) / np.maximum(1e-6, np.abs(gfd))
        assert rel.max() <= 1e-4

    def test_jet_gradient_matches_fd(self, rng):
        arch = Architecture((2, 16, 1))
        p0 = init_params(arch, 8)
        x = rng.uniform(-1, 1, 25)
        y = rng.uniform(-1, 1, 25)
        k2 = 9.0

        def objective(theta):
            params = MlpParams.from_flat(arch, theta)
            jet, _ = forward_jet_with_tape(params, x, y)
            r = jet.dxx + jet.dyy + k2 * jet.v
            return float(np.mean(r * r))

        theta = p0.to_flat()
        params = MlpParams.from_flat(arch, theta)
        jet, tape = forward_jet_with_tape(params, x, y)
        r = jet.dxx + jet.dyy + k2 * jet.v
        scale = (2.0 / r.size) * r
        zeros = np.zeros_like(r)
        g = grad_from_jet_tape(params, tape,
                               JetBatch(k2 * scale, zeros, zeros, scale, zeros, scale))
        gfd = fd_param_gradient(objective, theta)
        rel = np.abs(g - gfd) / np.maximum(1e-4, np.abs(gfd))
        assert rel.max() <= 1e-4
