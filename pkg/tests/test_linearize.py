import numpy as np
import pytest

from esnkit import (Activation, ReservoirParams, Trajectory, jacobians_at,
                    linearize_trajectory, remainder_bound, reservoir_step,
                    simulate)

from conftest import make_readout, make_reservoir

TANH_CURVATURE_SUP = 4.0 / (3.0 * np.sqrt(3.0))


def fd_jacobians(params, x_bar, u_bar, step=1e-6):
    """Central finite differences of the reservoir step (the independent
    oracle for the analytic Jacobians)."""
    n, m = params.n, params.m
    a = np.empty((n, n))
    b = np.empty((n, m))
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        a[:, j] = (reservoir_step(params, x_bar + e, u_bar)
                   - reservoir_step(params, x_bar - e, u_bar)) / (2 * step)
    for j in range(m):
        e = np.zeros(m)
        e[j] = step
        b[:, j] = (reservoir_step(params, x_bar, u_bar + e)
                   - reservoir_step(params, x_bar, u_bar - e)) / (2 * step)
    return a, b


class TestJacobians:
    def test_origin_tanh_slope_one(self):
        p = make_reservoir(bias_scale=0.0)
        lti = jacobians_at(p, np.zeros(p.n), np.zeros(p.m))
        lam = p.leak
        np.testing.assert_allclose(lti.A, (1 - lam) * np.eye(p.n) + lam * p.W,
                                   atol=1e-15)
        np.testing.assert_allclose(lti.B, lam * p.U, atol=1e-15)
        assert np.all(lti.D == 0.0)

    def test_identity_activation_point_independent(self):
        p = make_reservoir(activation=Activation.identity(), bias_scale=0.5)
        rng = np.random.default_rng(0)
        l1 = jacobians_at(p, rng.standard_normal(p.n), rng.standard_normal(p.m))
        l2 = jacobians_at(p, rng.standard_normal(p.n), rng.standard_normal(p.m))
        np.testing.assert_array_equal(l1.A, l2.A)
        np.testing.assert_array_equal(l1.B, l2.B)

    def test_saturation_kills_gains(self):
        # preactivation ~ 10 per coordinate: tanh slope below 1e-8
        n, m = 3, 2
        p = ReservoirParams(W=np.zeros((n, n)), U=np.zeros((n, m)),
                            b=10.0 * np.ones(n), leak=0.6)
        lti = jacobians_at(p, np.zeros(n), np.zeros(m))
        np.testing.assert_allclose(lti.A, (1 - 0.6) * np.eye(n), atol=1e-8)
        assert np.abs(lti.B).max() <= 1e-8

    def test_matches_finite_differences_at_random_points(self):
        # validation contract: <= 1e-6 relative against central differences
        p = make_reservoir(n=5, m=3, leak=0.8, w_scale=1.1, seed=21,
                           bias_scale=0.3)
        rng = np.random.default_rng(5)
        for _ in range(100):
            x_bar = rng.standard_normal(p.n)
            u_bar = rng.standard_normal(p.m)
            lti = jacobians_at(p, x_bar, u_bar)
            a_fd, b_fd = fd_jacobians(p, x_bar, u_bar)
            scale = max(np.abs(a_fd).max(), np.abs(b_fd).max(), 1.0)
            assert np.abs(lti.A - a_fd).max() <= 1e-6 * scale
            assert np.abs(lti.B - b_fd).max() <= 1e-6 * scale

    def test_readout_becomes_c(self):
        p = make_reservoir()
        ro = make_readout(n=p.n, p=2)
        lti = jacobians_at(p, np.zeros(p.n), np.zeros(p.m), ro)
        np.testing.assert_array_equal(lti.C, ro.C)
        assert lti.D.shape == (2, p.m)

    def test_norm_bounded_by_lipschitz_constant(self):
        p = make_reservoir(n=6, m=2, leak=0.55, w_scale=1.3, seed=8,
                           bias_scale=0.4)
        bound = (1 - p.leak) + p.leak * np.linalg.norm(p.W, 2)
        rng = np.random.default_rng(9)
        for _ in range(50):
            lti = jacobians_at(p, rng.standard_normal(p.n),
                               rng.standard_normal(p.m))
            assert np.linalg.norm(lti.A, 2) <= bound * (1 + 1e-12)


class TestRemainderBound:
    def test_identity_activation_is_exact(self):
        p = make_reservoir(activation=Activation.identity())
        assert remainder_bound(p, 0.5) == 0.0

    def test_zero_radius(self):
        assert remainder_bound(make_reservoir(), 0.0) == 0.0

    def test_tanh_curvature_constant(self):
        # oracle: numerical maximization of |tanh''| on a fine grid
        x = np.linspace(-4.0, 4.0, 400_001)
        t = np.tanh(x)
        grid_max = np.abs(-2.0 * t * (1.0 - t * t)).max()
        assert grid_max == pytest.approx(TANH_CURVATURE_SUP, abs=1e-9)
        p = make_reservoir(leak=1.0)
        assert remainder_bound(p, 0.1) == pytest.approx(
            0.5 * TANH_CURVATURE_SUP * 0.01, rel=1e-12)

    def test_leaky_has_no_bound(self):
        p = make_reservoir(activation=Activation.leaky_slope(0.5))
        with pytest.raises(ValueError, match="second-derivative"):
            remainder_bound(p, 0.1)

    @pytest.mark.parametrize("radius", [0.01, 0.1, 0.5])
    def test_bound_holds_on_tube_samples(self, radius):
        # measured one-step error of the surrogate never exceeds the bound
        p = make_reservoir(n=5, m=2, leak=0.7, w_scale=0.9, seed=3,
                           bias_scale=0.2)
        rng = np.random.default_rng(17)
        x_bar = rng.standard_normal(p.n) * 0.3
        u_bar = rng.standard_normal(p.m) * 0.3
        lti = jacobians_at(p, x_bar, u_bar)
        f_bar = reservoir_step(p, x_bar, u_bar)
        bound = remainder_bound(p, radius)
        for _ in range(1000):
            dx = rng.standard_normal(p.n)
            du = rng.standard_normal(p.m)
            xi_dev = p.W @ dx + p.U @ du
            scale = radius * rng.uniform(0, 1) / np.linalg.norm(xi_dev)
            dx, du = dx * scale, du * scale
            truth = reservoir_step(p, x_bar + dx, u_bar + du)
            approx = f_bar + lti.A @ dx + lti.B @ du
            assert np.linalg.norm(truth - approx) <= bound * (1 + 1e-9)


class TestLtvLinearization:
    def test_constant_trajectory_gives_constant_lti(self):
        p = make_reservoir(bias_scale=0.0)
        traj = Trajectory(states=np.zeros((6, p.n)), inputs=np.zeros((5, p.m)))
        ltv = linearize_trajectory(p, traj)
        ref = jacobians_at(p, np.zeros(p.n), np.zeros(p.m))
        for a_t, b_t in zip(ltv.A_seq, ltv.B_seq):
            np.testing.assert_array_equal(a_t, ref.A)
            np.testing.assert_array_equal(b_t, ref.B)

    def test_identity_collapses_to_lti(self):
        p = make_reservoir(activation=Activation.identity(), seed=6)
        rng = np.random.default_rng(2)
        traj = simulate(p, rng.standard_normal(p.n),
                        rng.standard_normal((10, p.m)))
        ltv = linearize_trajectory(p, traj)
        for a_t in ltv.A_seq[1:]:
            np.testing.assert_array_equal(a_t, ltv.A_seq[0])

    def test_saturating_trajectory_matches_finite_differences(self):
        # A_t drifts toward (1 - leak) I as |xi| grows; every step must agree
        # with the finite-difference oracle
        p = make_reservoir(n=4, m=2, leak=0.8, w_scale=0.9, seed=12,
                           bias_scale=0.0)
        rng = np.random.default_rng(4)
        inputs = 3.0 * np.ones((8, p.m)) + 0.1 * rng.standard_normal((8, p.m))
        traj = simulate(p, np.zeros(p.n), inputs)
        ltv = linearize_trajectory(p, traj)
        drift = []
        for t, (a_t, b_t) in enumerate(zip(ltv.A_seq, ltv.B_seq)):
            a_fd, b_fd = fd_jacobians(p, traj.states[t], traj.inputs[t])
            assert np.abs(a_t - a_fd).max() <= 1e-6
            assert np.abs(b_t - b_fd).max() <= 1e-6
            drift.append(np.linalg.norm(a_t - (1 - p.leak) * np.eye(p.n)))
        # once the state saturates the Jacobian shrinks toward pure leak
        assert drift[-1] < drift[0]
