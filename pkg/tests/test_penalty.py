"""Tests for the consensus penalty: coefficients, penalized VI, reductions."""

import numpy as np
import pytest

from saddleslide import (
    MATCHING_PENNIES,
    ConfigurationError,
    DegenerateNetworkError,
    NetworkModel,
    ParameterError,
    PenaltyCoefficients,
    build_penalized_vi,
    build_topology,
    deterministic_schedule,
    make_matrix_game,
    mps_run,
    penalty_coefficients,
    sample_operator_bound,
)

rng = np.random.default_rng(1207)


def pennies_stack(m):
    return make_matrix_game([MATCHING_PENNIES.copy() for _ in range(m)], m)


def central_fd_gradient(f, z, h=1e-6):
    g = np.zeros_like(z)
    for i in range(z.size):
        e = np.zeros_like(z)
        e[i] = h
        g[i] = (f(z + e) - f(z - e)) / (2.0 * h)
    return g


class TestPenaltyCoefficients:
    def test_frozen_values(self):
        k3 = build_topology("complete", 3)
        spp = pennies_stack(3)
        coeffs = penalty_coefficients(spp, k3, k3, 0.1, 1.0, 1.0)
        assert coeffs.R_alpha_sq == pytest.approx(1.0 / 3.0, rel=1e-9)
        path2 = build_topology("path", 2)
        spp2 = pennies_stack(2)
        coeffs = penalty_coefficients(spp2, path2, path2, 0.1, 5.0, 1.0)
        assert coeffs.R_alpha_sq == pytest.approx(12.5, rel=1e-9)
        assert coeffs.R_beta_sq == pytest.approx(0.5, rel=1e-9)
        coeffs = penalty_coefficients(spp2, path2, path2, 0.1, 0.0, 0.0)
        assert coeffs.R_alpha_sq == 0.0
        assert coeffs.R_beta_sq == 0.0

    def test_degenerate_network_rejected(self):
        spp = pennies_stack(1)
        single = NetworkModel.single_node()
        with pytest.raises(DegenerateNetworkError):
            penalty_coefficients(spp, single, single, 0.1, 1.0, 1.0)

    def test_node_count_mismatch_rejected(self):
        spp = pennies_stack(3)
        net = build_topology("ring", 4)
        with pytest.raises(Exception):
            penalty_coefficients(spp, net, net, 0.1, 1.0, 1.0)

    def test_invalid_inputs_rejected(self):
        spp = pennies_stack(2)
        net = build_topology("path", 2)
        with pytest.raises(ParameterError):
            penalty_coefficients(spp, net, net, 0.0, 1.0, 1.0)
        with pytest.raises(ParameterError):
            penalty_coefficients(spp, net, net, 0.1, -1.0, 1.0)
        with pytest.raises(ParameterError):
            PenaltyCoefficients(1.0, 1.0, -0.5)


class TestBuildPenalizedVI:
    def _vi(self, m=3, eps=0.1, kind="complete"):
        spp = pennies_stack(m)
        net = build_topology(kind, m)
        coeffs = penalty_coefficients(spp, net, net, eps,
                                      spp.subgrad_bound_x, spp.subgrad_bound_y)
        return spp, net, coeffs, build_penalized_vi(spp, net, net, coeffs, eps)

    def test_smoothness_constant_formula(self):
        spp, net, coeffs, vi = self._vi()
        cx = 2.0 * coeffs.R_alpha_sq / 0.1
        cy = 2.0 * coeffs.R_beta_sq / 0.1
        assert vi.L == pytest.approx(max(cx * net.lambda_max,
                                         cy * net.lambda_max), rel=1e-12)

    def test_oracle_synthesis_constants(self):
        spp, _, _, vi = self._vi(eps=0.05)
        assert vi.L0 == pytest.approx(spp.operator_bound)
        assert vi.M == pytest.approx(vi.L0 ** 2 / (2 * 0.05), rel=1e-12)
        assert vi.delta == pytest.approx(0.1, rel=1e-12)

    def test_gradient_vanishes_on_consensus(self):
        spp, _, _, vi = self._vi()
        x = rng.dirichlet(np.ones(2))
        y = rng.dirichlet(np.ones(2))
        z = spp.join(np.tile(x, (3, 1)), np.tile(y, (3, 1)))
        assert np.max(np.abs(vi.grad_G(z))) <= 1e-12
        assert vi.value_G(z) <= 1e-14

    def test_gradient_matches_central_differences(self):
        spp, _, _, vi = self._vi(kind="ring", m=4)
        for _ in range(10):
            z = spp.stacked_set().sample(rng, 1)[0]
            g = vi.grad_G(z)
            fd = central_fd_gradient(vi.value_G, z)
            denom = max(1.0, float(np.linalg.norm(g)))
            assert np.linalg.norm(g - fd) / denom <= 1e-6

    def test_value_positive_off_consensus(self):
        spp, _, _, vi = self._vi()
        z = spp.stacked_set().sample(rng, 1)[0]
        X, Y = spp.split(z)
        if np.max(np.abs(X - X.mean(axis=0))) > 1e-8:
            assert vi.value_G(z) > 0.0

    def test_rounds_per_grad_shared_vs_distinct(self):
        spp = pennies_stack(3)
        net = build_topology("complete", 3)
        net_y = build_topology("ring", 3)
        coeffs = penalty_coefficients(spp, net, net, 0.1, 1.0, 1.0)
        vi_shared = build_penalized_vi(spp, net, net, coeffs, 0.1)
        assert vi_shared.rounds_per_grad_G == 1
        coeffs2 = penalty_coefficients(spp, net, net_y, 0.1, 1.0, 1.0)
        vi_two = build_penalized_vi(spp, net, net_y, coeffs2, 0.1)
        assert vi_two.rounds_per_grad_G == 2
        # distinct y-network changes the y-block gradient scale
        z = spp.stacked_set().sample(rng, 1)[0]
        assert vi_two.value_G(z) >= 0.0

    def test_single_node_reduces_to_centralized(self):
        spp = pennies_stack(1)
        single = NetworkModel.single_node()
        coeffs = PenaltyCoefficients(0.0, 0.0, 0.1)
        vi = build_penalized_vi(spp, single, single, coeffs, 0.1)
        assert vi.rounds_per_grad_G == 0
        z = spp.stacked_set().sample(rng, 1)[0]
        assert np.max(np.abs(vi.grad_G(z))) == 0.0
        assert vi.value_G(z) == 0.0
        assert vi.L == max(vi.M, 1.0)
        # the penalized VI is exactly the centralized saddle problem; the
        # exact bilinear oracle is 2-Lipschitz <= M so (M, 0) certifies it and
        # the gap obeys 6 L Omega^2 / N^2 (no delta term)
        from saddleslide import exact_gap_matrix_game, omega_sq_bound
        z0 = np.array([0.9, 0.1, 0.2, 0.8])
        omega_sq = omega_sq_bound(vi.set_geometry, z0)
        N = 64
        bound = 6.0 * vi.L * omega_sq / N ** 2
        assert bound <= 0.05
        sched = deterministic_schedule(vi.L, vi.M, N)
        final, _ = mps_run(vi, sched, z0)
        X, Y = spp.split(final)
        gap = exact_gap_matrix_game(spp.meta["A_bar"], X[0], Y[0])
        assert gap <= bound

    def test_epsilon_mismatch_rejected(self):
        spp = pennies_stack(3)
        net = build_topology("complete", 3)
        coeffs = penalty_coefficients(spp, net, net, 0.1, 1.0, 1.0)
        with pytest.raises(ConfigurationError):
            build_penalized_vi(spp, net, net, coeffs, 0.2)

    def test_node_count_mismatch_rejected(self):
        spp = pennies_stack(3)
        net4 = build_topology("ring", 4)
        coeffs = PenaltyCoefficients(1.0, 1.0, 0.1)
        with pytest.raises(ConfigurationError):
            build_penalized_vi(spp, net4, net4, coeffs, 0.1)


class TestStackedSPP:
    def test_split_join_roundtrip(self):
        spp = pennies_stack(4)
        z = spp.stacked_set().sample(rng, 1)[0]
        X, Y = spp.split(z)
        assert X.shape == (4, 2) and Y.shape == (4, 2)
        assert np.array_equal(spp.join(X, Y), z)

    def test_linear_H_fast_path_matches_per_node_oracles(self):
        spp = pennies_stack(3)
        assert spp.linear_H is not None
        for _ in range(5):
            z = spp.stacked_set().sample(rng, 1)[0]
            fast = spp.H(z)
            X, Y = spp.split(z)
            slow = np.concatenate(
                [np.concatenate([loc.h(X[i], Y[i])[0] for i, loc in enumerate(spp.locals)]),
                 np.concatenate([loc.h(X[i], Y[i])[1] for i, loc in enumerate(spp.locals)])])
            assert np.allclose(fast, slow, atol=1e-12)

    def test_center_is_feasible_consensus(self):
        spp = pennies_stack(3)
        z = spp.center()
        assert spp.stacked_set().contains(z)
        X, Y = spp.split(z)
        assert np.max(np.abs(X - X[0])) == 0.0

    def test_sample_operator_bound_dominates_samples(self):
        spp = pennies_stack(2)
        bound = sample_operator_bound(spp, 200, seed=5, inflate=1.0)
        pts = spp.stacked_set().sample(np.random.default_rng(5), 200)
        worst = max(float(np.linalg.norm(spp.H(p))) for p in pts)
        assert bound == pytest.approx(worst)
        assert sample_operator_bound(spp, 200, seed=5) == pytest.approx(1.1 * worst)
