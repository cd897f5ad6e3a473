"""Forward/backward correctness, Adam arithmetic, checkpoint round-trips."""

import json

import numpy as np
import pytest

from safecharge.mlp import AdamState, Gradients, Network, adam_step, polyak_update
from safecharge.rng import Rng


def linear_net(w, b):
    """Single affine layer with explicit parameters."""
    w = np.atleast_2d(np.asarray(w, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    return Network([w.shape[1], w.shape[0]], [w], [b])


class TestForward:
    def test_zero_net_zero_output(self):
        net = Network([3, 4, 2], [np.zeros((4, 3)), np.zeros((2, 4))],
                      [np.zeros(4), np.zeros(2)])
        assert np.all(net.forward(np.ones(3)) == 0.0)

    def test_affine_arithmetic(self):
        net = linear_net([[2.0]], [1.0])
        assert net.forward(np.array([3.0]))[0] == 7.0

    def test_batch_matches_single(self):
        rng = Rng(2)
        net = Network.create([4, 128, 128, 1], rng, output_activation="tanh")
        xs = rng.uniform_array((5, 4), -1.0, 1.0)
        batched = net.forward(xs)
        for i in range(5):
            assert np.allclose(net.forward(xs[i]), batched[i], rtol=0, atol=1e-15)

    def test_finite_outputs_over_random_nets(self):
        rng = Rng(123)
        for _ in range(100):
            net = Network.create([4, 128, 128, 1], rng)
            x = rng.uniform_array((4,), -5.0, 5.0)
            assert np.isfinite(net.forward(x)).all()

    def test_forward_is_pure(self):
        rng = Rng(4)
        net = Network.create([5, 128, 128, 1], rng)
        x = rng.uniform_array((5,), -1.0, 1.0)
        a = net.forward(x)
        b = net.forward(x)
        assert np.array_equal(a, b)

    def test_dimension_mismatch_rejected(self):
        net = linear_net([[1.0]], [0.0])
        with pytest.raises(ValueError):
            net.forward(np.ones(3))


class TestBackward:
    def test_linear_case(self):
        net = linear_net([[0.5]], [0.2])
        x = np.array([3.0])
        g = net.backward(x, np.array([1.0]))
        assert g.weights[0][0, 0] == 3.0  # dW = x
        assert g.biases[0][0] == 1.0  # db = 1
        assert g.input[0] == 0.5  # dx = W

    def test_relu_gate_blocks_gradient(self):
        # hidden pre-activation forced negative -> no gradient through it
        net = Network([1, 1, 1], [np.array([[1.0]]), np.array([[1.0]])],
                      [np.array([-5.0]), np.array([0.0])])
        g = net.backward(np.array([1.0]), np.array([1.0]))
        assert g.weights[0][0, 0] == 0.0
        assert g.input[0] == 0.0
        assert g.biases[1][0] == 1.0  # output bias still learns

    def test_param_count_default_actor(self):
        net = Network.create([4, 128, 128, 1], Rng(0))
        assert net.param_count == 17_409

    def test_batch_grad_is_sum_of_singles(self):
        rng = Rng(8)
        net = Network.create([3, 8, 1], rng)
        xs = rng.uniform_array((4, 3), -1.0, 1.0)
        up = np.ones((4, 1))
        batched = net.backward(xs, up)
        acc_w = [np.zeros_like(w) for w in net.weights]
        for i in range(4):
            gi = net.backward(xs[i], np.ones(1))
            for a, g in zip(acc_w, gi.weights):
                a += g
        for a, b in zip(acc_w, batched.weights):
            assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


class TestAdam:
    def test_zero_gradient_no_move(self):
        net = linear_net([[1.5]], [0.5])
        opt = AdamState.for_network(net, lr=0.01)
        zero = Gradients([np.zeros((1, 1))], [np.zeros(1)], np.zeros(1))
        adam_step(net, zero, opt)
        assert net.weights[0][0, 0] == 1.5 and net.biases[0][0] == 0.5

    def test_descent_direction(self):
        net = linear_net([[0.0]], [0.0])
        opt = AdamState.for_network(net, lr=0.01)
        g = Gradients([np.full((1, 1), 2.0)], [np.full(1, 2.0)], np.zeros(1))
        for _ in range(50):
            adam_step(net, g, opt)
        assert net.weights[0][0, 0] < 0.0

    def test_first_step_hand_arithmetic(self):
        # w=0, g=1, lr=1e-3: bias-corrected first step moves by ~lr
        net = linear_net([[0.0]], [0.0])
        opt = AdamState.for_network(net, lr=1e-3)
        g = Gradients([np.ones((1, 1))], [np.zeros(1)], np.zeros(1))
        adam_step(net, g, opt)
        assert net.weights[0][0, 0] == pytest.approx(-1e-3, rel=1e-6)
        assert opt.step == 1


class TestPolyak:
    def test_tau_zero_fixed_point(self):
        rng = Rng(1)
        online = Network.create([3, 8, 1], rng)
        target = Network.create([3, 8, 1], rng)
        before = [w.copy() for w in target.weights]
        polyak_update(target, online, 0.0)
        for b, a in zip(before, target.weights):
            assert np.array_equal(b, a)

    def test_tau_one_full_copy(self):
        rng = Rng(1)
        online = Network.create([3, 8, 1], rng)
        target = Network.create([3, 8, 1], rng)
        polyak_update(target, online, 1.0)
        for wt, wo in zip(target.weights, online.weights):
            assert np.array_equal(wt, wo)

    def test_target_lag_bound(self):
        rng = Rng(2)
        online = Network.create([3, 8, 1], rng)
        target = Network.create([3, 8, 1], rng)
        prev = [w.copy() for w in target.weights]
        tau = 0.006
        polyak_update(target, online, tau)
        for wp, wt, wo in zip(prev, target.weights, online.weights):
            moved = np.abs(wt - wp).max()
            allowed = tau * np.abs(wo - wp).max()
            assert moved <= allowed + 1e-15


class TestSerialization:
    def test_bit_exact_round_trip(self):
        rng = Rng(31)
        net = Network.create([5, 128, 128, 1], rng, output_activation="tanh")
        doc = json.loads(json.dumps(net.to_dict()))
        back = Network.from_dict(doc)
        for a, b in zip(net.weights, back.weights):
            assert np.array_equal(a, b)
        for a, b in zip(net.biases, back.biases):
            assert np.array_equal(a, b)
        assert back.output_activation == "tanh"
        x = rng.uniform_array((5,), -1.0, 1.0)
        assert np.array_equal(net.forward(x), back.forward(x))

    def test_adam_state_round_trip(self):
        rng = Rng(32)
        net = Network.create([3, 8, 1], rng)
        opt = AdamState.for_network(net, lr=0.01)
        g = net.backward(rng.uniform_array((3,), -1, 1), np.ones(1))
        adam_step(net, g, opt)
        doc = json.loads(json.dumps(opt.to_dict()))
        back = AdamState.from_dict(doc, net)
        assert back.step == opt.step
        for a, b in zip(opt.m_w, back.m_w):
            assert np.array_equal(a, b)
