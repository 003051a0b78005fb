import math

import numpy as np
import pytest
from scipy.integrate import quad

from tmlab import (critical_alpha_beta, functional, functional_log,
                   grad_norm_pow, norms, weighted_lp_pow)
from tmlab.errors import DomainError
from tmlab.moser import (asymptotic_lower_scan, build, lam, normalized,
                         plateau_lower_bound, select_index,
                         weight_norm_closed_form, weight_norm_limit)

from conftest import assert_rel_close, make_params


class TestBuild:
    def test_unit_gradient_norm_exact(self, cell):
        params = make_params(cell)
        for n in (1, 7, 50, 200):
            elem = build(n, params)
            assert grad_norm_pow(elem.profile, params) == pytest.approx(1.0, abs=1e-12)

    def test_defining_relation(self, cell):
        # (A_n b_n)^(N/(N-1)) = n / critical
        params = make_params(cell)
        crit = critical_alpha_beta(params)
        for n in (1, 10, 100):
            elem = build(n, params)
            lhs = (elem.amplitude * elem.log_depth) ** params.exponent
            assert_rel_close(lhs, n / crit, 1e-12)

    def test_constants_n2_beta0(self):
        params = make_params((2, 0.0, 0.0))
        for n in (1, 4, 9):
            elem = build(n, params)
            assert_rel_close(elem.amplitude,
                             (2 * math.pi) ** -0.5 * (n / 2.0) ** -0.5, 1e-14)
            assert_rel_close(elem.log_depth, n / 2.0, 1e-15)

    def test_profile_shape(self, cell):
        params = make_params(cell)
        elem = build(12, params)
        assert elem.profile.num_nodes == 2
        assert elem.profile.radii[1] == 1.0
        assert_rel_close(elem.profile.radii[0], math.exp(-elem.log_depth), 1e-15)
        assert elem.profile.values[0] == elem.amplitude * elem.log_depth

    def test_rejects_bad_index(self):
        with pytest.raises(DomainError):
            build(0, make_params((2, 0.0, 0.0)))


class TestWeightNormClosedForm:
    def test_matches_quadrature_route(self, cell):
        params = make_params(cell)
        for n in (1, 5, 20, 200):
            elem = build(n, params)
            closed = weight_norm_closed_form(n, params)
            quadded = weighted_lp_pow(elem.profile, params.dim, params.gamma, params)
            assert_rel_close(closed, quadded, 1e-8, f"n={n}")

    def test_matches_scipy_oracle(self):
        # independent quadrature at one awkward cell
        params = make_params((3, 1.0, 0.5))
        n = 20
        elem = build(n, params)
        a, b = elem.amplitude, elem.log_depth

        def f(r):
            return (a * math.log(1.0 / r)) ** 3 * r ** (3 - 1 - 0.5)

        seg, _ = quad(f, math.exp(-b), 1.0, epsabs=0.0, epsrel=1e-12)
        plateau = (a * b) ** 3 * math.exp(-b) ** 2.5 / 2.5
        ref = params.sphere_area * (plateau + seg)
        assert_rel_close(weight_norm_closed_form(n, params), ref, 1e-10)

    def test_large_n_limit(self, cell):
        params = make_params(cell)
        limit = weight_norm_limit(params)
        val = 200 * weight_norm_closed_form(200, params)
        assert abs(val - limit) / limit < 0.05

    def test_n2_unweighted_half_over_n(self):
        # leading term 2*Gamma(3)/2^3 * (1/n) = 1/(2n)
        params = make_params((2, 0.0, 0.0))
        n = 100
        assert_rel_close(weight_norm_closed_form(n, params), 1.0 / (2 * n), 2e-2)
        assert_rel_close(weight_norm_limit(params), 0.5, 1e-15)


class TestNormalized:
    def test_unit_full_norm(self, cell):
        params = make_params(cell)
        for n in (1, 10, 100):
            elem = normalized(n, params)
            rep = norms(elem.profile, params)
            assert abs(rep.full_pow - 1.0) < 1e-10

    def test_lambda_increases_to_one(self, cell):
        # the weight norm peaks near n ~ 2 before its 1/n decay, so lambda is
        # monotone only beyond the hump; it always stays in (0, 1) and tends to 1
        params = make_params(cell)
        lams = [lam(n, params) for n in range(1, 201)]
        assert all(0.0 < v < 1.0 for v in lams)
        assert np.all(np.diff(lams[4:]) > 0)
        assert lams[-1] > 1.0 - 2.0 * weight_norm_limit(params) / (params.dim * 200)

    def test_one_minus_lambda_pow_scales_like_inverse_n(self, cell):
        params = make_params(cell)
        vals = [n * (1.0 - lam(n, params) ** params.dim) for n in range(50, 201, 25)]
        assert max(vals) < 3 * weight_norm_limit(params) + 1.0
        assert min(vals) > 0.0


class TestPlateauLowerBound:
    def test_closed_form_instance(self):
        # alpha = crit/2, n = 10, N = 2, beta = 0
        params = make_params((2, 0.0, 0.0), alpha_ratio=0.5)
        lam10 = lam(10, params)
        expected = (2 * math.pi / 2.0) * math.exp(-10) \
            * (math.exp(5.0 * lam10 ** 2) - 1.0)
        assert_rel_close(plateau_lower_bound(10, params).value, expected, 1e-12)

    def test_is_lower_bound_for_functional(self, cell):
        params = make_params(cell, alpha_ratio=0.8)
        for n in (2, 8, 30):
            elem = normalized(n, params)
            assert plateau_lower_bound(n, params).value \
                <= functional(elem.profile, params) * (1 + 1e-9)

    def test_supercritical_divergence(self, cell):
        params = make_params(cell, alpha_ratio=1.05)
        logs = [plateau_lower_bound(n, params).log for n in range(50, 201)]
        assert np.all(np.diff(logs) > 0)

    def test_critical_boundedness(self, cell):
        params = make_params(cell, alpha_ratio=1.0)
        logs = [plateau_lower_bound(n, params).log for n in range(1, 501)]
        assert np.isfinite(logs).all()
        assert max(logs) < 50.0


class TestAsymptoticScan:
    def test_products_bounded_and_comparable(self, cell):
        params = make_params(cell, alpha_ratio=0.5)
        crit = critical_alpha_beta(params)
        table = asymptotic_lower_scan(params, [r * crit for r in (0.9, 0.99, 0.999)])
        products = table.column("product")
        assert all(p > 0 for p in products)
        assert max(products) / min(products) < 10.0

    def test_selected_index_window(self):
        params = make_params((2, 0.0, 0.0))
        crit = critical_alpha_beta(params)
        for ratio in (0.55, 0.9, 0.99, 0.9999):
            n = select_index(ratio * crit, crit)
            assert 1.0 <= n * (1.0 - ratio) <= 2.0

    def test_far_subcritical_rows_flagged_not_errors(self):
        params = make_params((4, 2.0, 1.0), alpha_ratio=0.5)
        crit = critical_alpha_beta(params)
        table = asymptotic_lower_scan(params, [0.3 * crit])
        assert table.rows[0][table.columns.index("flags")] == "below-window"

    def test_rejects_critical_grid_point(self):
        params = make_params((2, 0.0, 0.0))
        crit = critical_alpha_beta(params)
        with pytest.raises(DomainError):
            asymptotic_lower_scan(params, [crit])

    def test_csv_emission(self):
        params = make_params((2, 1.0, 0.5))
        crit = critical_alpha_beta(params)
        table = asymptotic_lower_scan(params, [0.9 * crit, 0.99 * crit])
        text = table.to_csv()
        assert text.startswith("#")
        assert "alpha,n,ratio,product,flags" in text


class TestFunctionalOnNormalizedFamily:
    def test_plateau_contribution_formula(self):
        # the plateau piece of the functional equals the closed form used in
        # the blow-up computation
        params = make_params((3, 1.0, 0.5), alpha_ratio=0.9)
        n = 12
        elem = normalized(n, params)
        u0 = elem.profile.values[0]
        r0 = elem.profile.radii[0]
        from tmlab import phi

        c = params.dim - params.beta
        plateau = params.sphere_area * phi(params.dim, params.alpha * u0 ** params.exponent) \
            * r0 ** c / c
        assert_rel_close(plateau, plateau_lower_bound(n, params).value, 1e-11)

    def test_no_saturation_at_critical(self, cell):
        params = make_params(cell, alpha_ratio=1.0)
        for n in (1, 50, 200):
            lv = functional_log(normalized(n, params).profile, params)
            assert not lv.saturated
