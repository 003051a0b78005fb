import math

import numpy as np
import pytest

from tmlab import (ProblemParams, RadialProfile, at_normalize, functional,
                   grad_norm_pow, norms, weighted_lp_pow)
from tmlab.errors import SupercriticalError, ValidationError
from tmlab.moser import normalized
from tmlab.optimizer import (OptimizerConfig, gradient_check, maximize_A,
                             maximize_B, starting_profiles)

from conftest import assert_rel_close, make_params, random_profile

# single-start config keeps the module tests quick; quality is acceptance's job
LIGHT = OptimizerConfig(moser_starts=(5,), random_starts=0, max_iters=120,
                        polish_rounds=2)


@pytest.fixture(scope="module")
def b_result_2d():
    params = ProblemParams(2, 4 * math.pi, 0.0, 0.0)
    return params, maximize_B(params, LIGHT)


@pytest.fixture(scope="module")
def a_result_2d():
    params = ProblemParams(2, 2 * math.pi, 0.0, 0.0)
    return params, maximize_A(params, LIGHT)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValidationError):
            OptimizerConfig(node_count=2)
        with pytest.raises(ValidationError):
            OptimizerConfig(r_min=1.0, r_max=0.5)
        with pytest.raises(ValidationError):
            OptimizerConfig(backtrack=1.5)
        with pytest.raises(ValidationError):
            OptimizerConfig(grad_tol=2.0, step_init=1.0)

    def test_from_dict_rejects_unknown(self):
        with pytest.raises(ValidationError):
            OptimizerConfig.from_dict({"nodes": 10})
        cfg = OptimizerConfig.from_dict({"node_count": 65, "moser_starts": [1, 2]})
        assert cfg.node_count == 65
        assert cfg.moser_starts == (1, 2)


class TestRefusals:
    def test_b_above_critical(self):
        params = make_params((2, 1.0, 0.5), alpha_ratio=1.05)
        with pytest.raises(SupercriticalError, match="plateau_lower_bound"):
            maximize_B(params, LIGHT)

    def test_b_accepts_critical(self):
        # alpha == critical is allowed for the full-norm problem
        params = make_params((2, 1.0, 1.0), alpha_ratio=1.0)
        res = maximize_B(params, OptimizerConfig(
            moser_starts=(3,), random_starts=0, max_iters=30, polish_rounds=1))
        assert res.value > 0

    def test_a_at_critical_refused(self):
        params = make_params((3, 1.0, 0.5), alpha_ratio=1.0)
        with pytest.raises(SupercriticalError):
            maximize_A(params, LIGHT)


class TestAscentContracts:
    def test_trace_nondecreasing(self, b_result_2d):
        _, res = b_result_2d
        t = np.asarray(res.trace)
        assert np.all(np.diff(t) >= -1e-12 * np.abs(t[1:]))

    def test_feasibility(self, b_result_2d, a_result_2d):
        for _, res in (b_result_2d, a_result_2d):
            for name, r in res.constraint_residuals.items():
                assert r < 1e-8, (name, r)

    def test_value_consistent_with_profile(self, b_result_2d, a_result_2d):
        # reported value must be reproducible from the reported profile
        params, res = b_result_2d
        assert_rel_close(functional(res.profile, params), res.value, 1e-9)
        params_a, res_a = a_result_2d
        n, b, g = params_a.dim, params_a.beta, params_a.gamma
        theta = (n - b) / (n - g)
        w = weighted_lp_pow(res_a.profile, n, g, params_a)
        ratio = functional(res_a.profile, params_a) / w ** theta
        assert_rel_close(ratio, res_a.value, 1e-9)

    def test_dominates_every_start(self, b_result_2d):
        params, res = b_result_2d
        for sid, prof in starting_profiles(params, LIGHT):
            rep = norms(prof, params)
            feas = prof.scaled(rep.full_pow ** (-1.0 / params.dim))
            assert res.value >= functional(feas, params) - 1e-9

    def test_dominates_concentrating_family(self, b_result_2d):
        params, res = b_result_2d
        for n in range(1, 51):
            vn = functional(normalized(n, params).profile, params)
            assert res.value >= vn - 1e-9, n

    def test_diagnostics_present(self, b_result_2d):
        _, res = b_result_2d
        for key in ("half_mass_radius", "support_radius", "iterations"):
            assert key in res.diagnostics
        assert res.diagnostics["half_mass_radius"] > 0


class TestDeterminism:
    def test_bit_identical_repeat(self):
        params = make_params((2, 1.0, 0.5), alpha_ratio=0.6)
        cfg = OptimizerConfig(moser_starts=(2,), random_starts=1, max_iters=25,
                              polish_rounds=1, node_count=65)
        a = maximize_A(params, cfg).to_json()
        b = maximize_A(params, cfg).to_json()
        assert a == b


class TestRatioInvariance:
    def test_at_ratio_equals_slice_value(self, cell):
        # the dilation identity J(dilate(v, lam)) = lam^-(N-beta) J(v) makes
        # the ratio equal to the functional of the weight-normalized profile
        params = make_params(cell, alpha_ratio=0.5)
        n, b, g = params.dim, params.beta, params.gamma
        theta = (n - b) / (n - g)
        rng = np.random.default_rng(71)
        for _ in range(5):
            u = random_profile(rng)
            v = u.scaled(grad_norm_pow(u, params) ** (-1.0 / n))
            w = weighted_lp_pow(v, n, g, params)
            lhs = functional(at_normalize(v, params), params)
            rhs = functional(v, params) / w ** theta
            assert_rel_close(lhs, rhs, 1e-8)

    def test_slice_result_reports_ratio(self, a_result_2d):
        # Lemma-1 equivalence on the reported maximizer: the slice profile's
        # functional equals the unconstrained ratio value
        params, res = a_result_2d
        rep = norms(res.profile, params)
        assert abs(rep.grad_pow - 1.0) < 1e-8
        assert abs(rep.weight_pow - 1.0) < 1e-8
        assert_rel_close(functional(res.profile, params), res.value, 1e-9)


class TestStability:
    def test_a_value_stable_under_grid_doubling(self):
        params = ProblemParams(2, 2 * math.pi, 0.0, 0.0)
        cfg1 = OptimizerConfig(moser_starts=(5,), random_starts=0, node_count=129)
        cfg2 = OptimizerConfig(moser_starts=(5,), random_starts=0, node_count=257)
        v1 = maximize_A(params, cfg1).value
        v2 = maximize_A(params, cfg2).value
        assert abs(v1 - v2) / v1 < 0.02


class TestGradientCheck:
    @pytest.mark.parametrize("cell", [(2, 0.0, 0.0), (3, 1.0, 0.5), (4, 2.0, 1.0)],
                             ids=str)
    def test_worst_error_small(self, cell):
        params = make_params(cell, alpha_ratio=0.5)
        rng = np.random.default_rng(73)
        for _ in range(3):
            p = random_profile(rng, n_nodes=8)
            assert gradient_check(params, p) < 1e-5

    def test_zero_profile(self):
        params = make_params((3, 1.0, 0.5))
        z = RadialProfile([1.0, 2.0], [0.0, 0.0])
        assert gradient_check(params, z) == 0.0


class TestCompositeObjectives:
    @pytest.mark.parametrize("cell", [(2, 0.0, 0.0), (3, 1.0, 0.5)], ids=str)
    def test_objective_gradients_match_fd(self, cell):
        # chain-rule gradients of both scale-invariant composites
        from tmlab.optimizer import _objective_a, _objective_b

        params = make_params(cell, alpha_ratio=0.7)
        rng = np.random.default_rng(79)
        p = random_profile(rng, n_nodes=8)
        for objective in (_objective_a, _objective_b):
            fn = lambda u: objective(u, p.radii, params, 1e-13)
            val, grad = fn(p.values)
            for i in range(p.values.size - 1):
                h = 1e-6 * max(p.values[i], 1.0)
                up, dn = p.values.copy(), p.values.copy()
                up[i] += h
                dn[i] = max(dn[i] - h, 0.0)
                fd = (fn(up)[0] - fn(dn)[0]) / (up[i] - dn[i])
                scale = max(abs(fd), abs(grad[i]), 1e-3 * np.abs(grad).max())
                assert abs(grad[i] - fd) / scale < 1e-5, (objective.__name__, i)


class TestResultSerialization:
    def test_json_roundtrip_fields(self, b_result_2d):
        import json

        _, res = b_result_2d
        data = json.loads(res.to_json())
        assert set(data) == {"profile", "value", "constraint_residuals", "trace",
                             "start_id", "converged", "diagnostics"}
        assert data["value"] == res.value
