"""
Tests for the Gaussian limits of linear spectral statistics.

Critical behaviors tested:
1. Identity closed forms for the named bases
2. Contour quadrature (identity and general spectrum) reproduces the closed forms
3. Local bulk/edge kernels: constants, bilinearity, PSD, kappa4-freedom
4. Boundary values and kernels respect conjugate symmetry
"""

import math

import numpy as np
import pytest

from clt_functionals import (
    GaussianLimit,
    alpha_hat_matrix,
    b_terms,
    beta_hat,
    beta_hat_coincident,
    beta_hat_matrix,
    boundary_values,
    check_psd,
    global_limit,
    global_limit_identity,
    identity_chebyshev,
    identity_covariance,
    identity_lss_limit,
    identity_mean,
    kernel_alpha,
    kernel_beta,
    local_limit_bulk,
    local_limit_edge,
    require_converged,
    resolvent_covariance,
)
from errors import CoincidentPointError, ConvergenceError, DomainError, LogDomainError, NonAnalyticError
from lss_functions import TestFunctionSpec, global_function, local_function
from lss_statistics import gram_eigenvalues
from spectral_law import PopulationSpectrum, identity_edges, solve_m, solve_m_many, support

LOG_MEAN_T3 = 0.5 * math.log(1 - 1 / 9)
LOG_VAR_T3 = 2 * (math.log(3) - math.log(3 - 1 / 3))


# =============================================================================
# Closed forms for Sigma = I
# =============================================================================


class TestIdentityClosedForms:
    @pytest.mark.parametrize("kappa4", [0.0, -1.5, 2.0])
    def test_linear(self, kappa4):
        assert identity_mean("linear", kappa4) == 0.0
        assert identity_covariance("linear", "linear", kappa4) == pytest.approx(2 + kappa4)

    def test_quadratic(self):
        assert identity_mean("quadratic", 0.0, c=3) == pytest.approx(1.0)
        assert identity_covariance("quadratic", "quadratic", 0.0, c=3) == pytest.approx(76.0)

    def test_cross_covariance(self):
        assert identity_covariance("linear", "quadratic", 0.0, c=3) == pytest.approx(12.0)

    def test_log(self):
        assert identity_mean("log", 0.0, t=3) == pytest.approx(-0.058891, abs=1e-6)
        assert identity_covariance("log", "log", 0.0, t=3) == pytest.approx(LOG_VAR_T3)
        assert LOG_VAR_T3 == pytest.approx(0.236, abs=1e-3)

    def test_logshift_is_linear_minus_log(self):
        var = identity_covariance("logshift", "logshift", 0.5, t=3)
        expected = (
            identity_covariance("linear", "linear", 0.5)
            - 2 * identity_covariance("linear", "log", 0.5, t=3)
            + identity_covariance("log", "log", 0.5, t=3)
        )
        assert var == pytest.approx(expected)
        assert identity_mean("logshift", 0.5, t=3) == pytest.approx(-identity_mean("log", 0.5, t=3))

    def test_log_needs_t_above_one(self):
        with pytest.raises(LogDomainError):
            identity_mean("log", 0.0, t=1.0)

    def test_closed_route_rejects_callables(self):
        with pytest.raises(DomainError):
            global_limit_identity([lambda x: x], 0.0, phi=100.0, route="closed")


# =============================================================================
# Contour routes
# =============================================================================


class TestIdentityContour:
    @pytest.mark.parametrize("kappa4", [0.0, -1.5])
    def test_matches_closed_forms(self, kappa4):
        bases = ["linear", "quadratic", "log"]
        contour = global_limit_identity(bases, kappa4, c=3, t=3, route="contour")
        closed = global_limit_identity(bases, kappa4, c=3, t=3, route="closed")
        assert np.allclose(contour.means, closed.means, atol=1e-4)
        assert np.allclose(contour.covariance, closed.covariance, atol=1e-4)

    def test_closed_values(self):
        lim = global_limit_identity(["linear", "quadratic", "log"], -1.5, c=3, t=3)
        assert lim.means == pytest.approx([0.0, -0.5, LOG_MEAN_T3 + 1.5 / 18])
        assert np.diag(lim.covariance) == pytest.approx([0.5, 4 + 36 * 0.5, LOG_VAR_T3 - 1.5 / 9])

    def test_custom_callable(self):
        # x -> x - (sqrt(phi) + 1/sqrt(phi) - 3) is the linear base with c = 3
        mid = 10.1
        lim = global_limit_identity([lambda x: x - mid + 3.0], 0.0, phi=100.0)
        assert lim.means[0] == pytest.approx(0.0, abs=1e-6)
        assert lim.covariance[0, 0] == pytest.approx(2.0, abs=1e-4)


class TestIdentityChebyshev:
    MID = 10.1

    def _bases(self):
        mid = self.MID
        return [
            lambda x: x - mid + 3.0,
            lambda x: (x - mid + 3.0) ** 2,
            lambda x: np.log(x - mid + 3.0 + 1.0 / 3.0),
        ]

    @pytest.mark.parametrize("kappa4", [0.0, -1.5, 1.0])
    def test_matches_closed_forms(self, kappa4):
        lim = identity_lss_limit(self._bases(), 100.0, kappa4)
        closed = global_limit_identity(["linear", "quadratic", "log"], kappa4, c=3, t=3, route="closed")
        assert lim.converged
        assert np.allclose(lim.means, closed.means, atol=1e-8)
        assert np.allclose(lim.covariance, closed.covariance, atol=1e-8)

    def test_kappa4_terms_separately(self):
        base = identity_lss_limit(self._bases(), 100.0, 0.0)
        shifted = identity_lss_limit(self._bases(), 100.0, -1.5)
        closed0 = global_limit_identity(["linear", "quadratic", "log"], 0.0, c=3, t=3)
        closed1 = global_limit_identity(["linear", "quadratic", "log"], -1.5, c=3, t=3)
        assert np.allclose(base.covariance, closed0.covariance, atol=1e-8)
        assert np.allclose(shifted.means - base.means, closed1.means - closed0.means, atol=1e-8)
        assert np.allclose(shifted.covariance - base.covariance, closed1.covariance - closed0.covariance, atol=1e-8)

    def test_quadratic_coefficients(self):
        # (3 + 2 cos) ^ 2 = 11 + 12 cos + 2 cos 2
        a = identity_chebyshev(lambda x: (x - self.MID + 3.0) ** 2, 100.0, nodes=64)
        assert a[:4] == pytest.approx([22.0, 12.0, 2.0, 0.0], abs=1e-10)

    def test_symmetric_psd(self):
        _, hi = identity_edges(50.0)
        tfs = [local_function(b, 200, hi) for b in ("linear", "quadratic", "logshift")]
        lim = identity_lss_limit(tfs, 50.0, regime="local-edge")
        assert lim.regime == "local-edge"
        assert np.allclose(lim.covariance, lim.covariance.T)
        assert check_psd(lim.covariance)

    def test_finite_window_mean_tends_to_edge_value(self):
        _, hi = identity_edges(50.0)
        gaps = []
        for eta0 in (0.2, 0.05, 0.0125):
            tf = local_function("logshift", 200, hi, eta0=eta0)
            lim = identity_lss_limit([tf], 50.0, regime="local-edge")
            gaps.append(abs(lim.means[0] - tf.h0() / 4.0))
        assert gaps[0] > gaps[1] > gaps[2]
        assert gaps[2] < 0.4 * gaps[0]

    def test_too_few_nodes(self):
        with pytest.raises(DomainError):
            identity_chebyshev(lambda x: x, 100.0, nodes=4)

    def test_non_finite_rejected(self):
        with pytest.raises(NonAnalyticError):
            identity_chebyshev(lambda x: np.where(x > 9.0, 1.0, np.inf), 100.0)

    def test_random_polynomial_covariances_psd(self, rng):
        for _ in range(500):
            coefs = rng.normal(size=(3, 5))
            fs = [lambda x, c=c: np.polynomial.polynomial.polyval(x - self.MID, c) for c in coefs]
            lim = identity_lss_limit(fs, 100.0, kappa4=rng.uniform(-1.9, 3.0), nodes=64)
            assert check_psd(lim.covariance)
            again = identity_lss_limit(fs, 100.0, kappa4=lim.kappa4, nodes=64)
            assert np.array_equal(lim.covariance, again.covariance)
            assert np.array_equal(lim.means, again.means)


class TestGeneralContour:
    def test_identity_spectrum_matches_closed_forms(self, identity100):
        sup = support(identity100)
        tfs = [
            global_function(b, 100.0, c=3, support_edges=(sup.gamma_minus, sup.gamma_plus))
            for b in ("linear", "quadratic")
        ]
        lim = global_limit(tfs, identity100, 0.0, sup=sup)
        assert lim.converged
        assert lim.means == pytest.approx([0.0, 1.0], abs=1e-3)
        assert lim.covariance == pytest.approx(np.array([[2.0, 12.0], [12.0, 76.0]]), rel=1e-3)

    def test_kappa4_changes_global_limit(self, identity100):
        sup = support(identity100)
        tf = global_function("linear", 100.0, support_edges=(sup.gamma_minus, sup.gamma_plus))
        a = global_limit([tf], identity100, 0.0, sup=sup)
        b = global_limit([tf], identity100, -1.5, sup=sup)
        assert a.variance() == pytest.approx(2.0, rel=1e-3)
        assert b.variance() == pytest.approx(0.5, rel=1e-3)

    def test_two_atom_is_psd(self, two_atom100):
        sup = support(two_atom100)
        tfs = [
            global_function(b, 100.0, support_edges=(sup.gamma_minus, sup.gamma_plus))
            for b in ("linear", "quadratic")
        ]
        lim = global_limit(tfs, two_atom100, 0.0, sup=sup)
        assert lim.converged
        assert check_psd(lim.covariance)

    def test_narrow_window_rejected(self, identity100):
        tf = TestFunctionSpec(base="linear", center=10.1, eta0=1.0, a=1.0, b=1.0)
        with pytest.raises(NonAnalyticError):
            global_limit([tf], identity100, 0.0)

    def test_unconverged_gives_nan(self, identity100):
        sup = support(identity100)
        tf = global_function("quadratic", 100.0, support_edges=(sup.gamma_minus, sup.gamma_plus))
        lim = global_limit([tf], identity100, 0.0, sup=sup, nodes=8, max_nodes=16, tol=1e-300)
        assert not lim.converged
        assert np.isnan(lim.means).all()
        assert lim.diagnostics
        with pytest.raises(ConvergenceError):
            require_converged(lim)


# =============================================================================
# Kernels and boundary values
# =============================================================================


class TestKernels:
    def test_boundary_values_conjugate(self, identity100):
        v = boundary_values(10.1, identity100, kappa4=0.5)
        assert v.m_minus == v.m_plus.conjugate()
        assert v.b1_minus == v.b1_plus.conjugate()
        assert v.m_plus.imag > 0

    def test_b1_matches_finite_difference(self, identity100):
        eta = 1e-4
        v = solve_m(10.1 + 1j * eta, identity100)
        b1, _ = b_terms(v.m, v.m1, v.m2, 0.0)
        bv = boundary_values(10.1, identity100)
        assert complex(bv.b1_plus) == pytest.approx(complex(b1), rel=1e-3)

    def test_beta_kernel_symmetric(self, identity100):
        a = kernel_beta(9.0, 11.0, identity100)
        b = kernel_beta(11.0, 9.0, identity100)
        assert a == pytest.approx(b, rel=1e-8)

    def test_beta_kernel_coincident(self, identity100):
        with pytest.raises(CoincidentPointError):
            kernel_beta(10.0, 10.0, identity100)

    def test_beta_hat_near_diagonal(self, identity100):
        v1 = solve_m(10.1 + 0.5j, identity100)
        v2 = solve_m(10.1 + 0.5j + 1e-4, identity100)
        assert beta_hat(v1, v2) == pytest.approx(beta_hat_coincident(v1), rel=1e-3)

    def test_resolvent_covariance_symmetry(self, identity100):
        z1, z2 = 10.1 + 0.4j, 10.1 + 0.8j
        a = resolvent_covariance(z1, z2, identity100, 0.0)
        b = resolvent_covariance(z2, z1, identity100, 0.0)
        assert a == pytest.approx(b, rel=1e-10)
        with pytest.raises(CoincidentPointError):
            resolvent_covariance(z1, z1, identity100, 0.0)

    def test_kernel_matrices_symmetric_randomized(self, rng, two_atom100):
        za = rng.uniform(40.0, 120.0, size=500) + 1j * 10 ** rng.uniform(-2, 1, size=500)
        zb = rng.uniform(40.0, 120.0, size=500) - 1j * 10 ** rng.uniform(-2, 1, size=500)
        ma, m1a = solve_m_many(za, two_atom100)[:2]
        mb, m1b = solve_m_many(zb, two_atom100)[:2]
        ab = beta_hat_matrix(ma, m1a, za, mb, m1b, zb)
        ba = beta_hat_matrix(mb, m1b, zb, ma, m1a, za)
        assert np.allclose(ab, ba.T, rtol=1e-10)
        ab = alpha_hat_matrix(ma, m1a, mb, m1b, two_atom100, 0.7)
        ba = alpha_hat_matrix(mb, m1b, ma, m1a, two_atom100, 0.7)
        assert np.allclose(ab, ba.T, rtol=1e-10)
        assert not np.any(alpha_hat_matrix(ma, m1a, mb, m1b, two_atom100, 0.0))

    def test_alpha_kernel_vanishes_without_kappa4(self, identity100, two_atom100):
        assert kernel_alpha(9.0, 11.0, identity100, 0.0) == 0.0
        sup = support(two_atom100)
        assert kernel_alpha(70.0, 90.0, two_atom100, 0.0, sup=sup) == 0.0

    def test_alpha_kernel_symmetric_and_linear(self, two_atom100):
        sup = support(two_atom100)
        a = kernel_alpha(70.0, 90.0, two_atom100, 0.5, sup=sup)
        b = kernel_alpha(90.0, 70.0, two_atom100, 0.5, sup=sup)
        assert a != 0.0
        assert a == pytest.approx(b, rel=1e-10)
        assert kernel_alpha(70.0, 90.0, two_atom100, 1.0, sup=sup) == pytest.approx(2.0 * a, rel=1e-10)

    def test_resolvent_covariance_beta_only_without_kappa4(self, identity100):
        z1, z2 = 10.1 + 0.4j, 10.1 - 0.8j
        v1, v2 = solve_m(z1, identity100), solve_m(z2, identity100)
        assert resolvent_covariance(z1, z2, identity100, 0.0) == pytest.approx(beta_hat(v1, v2), rel=1e-12)

    @pytest.mark.slow
    def test_resolvent_covariance_matches_simulation(self, rng):
        n, phi, reps = 100, 25.0, 2000
        p = int(n * phi)
        spec = PopulationSpectrum.identity(phi)
        z1, z2 = 5.2 + 0.4j, 5.2 + 0.8j
        tr = np.empty((reps, 2), dtype=complex)
        for r in range(reps):
            X = rng.standard_normal((p, n)) * (p * n) ** -0.25
            ev = gram_eigenvalues(X)
            tr[r] = [np.sum(1.0 / (ev - z1)), np.sum(1.0 / (ev - z2))]
        y = tr - tr.mean(axis=0)
        prod = y[:, 0] * y[:, 1]
        target = resolvent_covariance(z1, z2, spec, 0.0)
        for part in (np.real, np.imag):
            se = part(prod).std(ddof=1) / math.sqrt(reps)
            assert abs(part(prod).mean() - part(target)) < 4 * se + 0.02 * abs(target)


# =============================================================================
# Local limits
# =============================================================================


def _local_bases(a=1.0, b=4.0):
    return [
        TestFunctionSpec(base="linear", center=0.0, eta0=1.0, a=a, b=b),
        TestFunctionSpec(base="quadratic", center=0.0, eta0=1.0, a=a, b=b),
        TestFunctionSpec(base="logshift", c=b + a + 0.5, center=0.0, eta0=1.0, a=a, b=b),
    ]


class TestLocalLimits:
    def test_constant_function(self):
        const = (lambda x: np.full(np.shape(x), 5.0), lambda x: np.zeros(np.shape(x)), 3.0)
        edge = local_limit_edge([const], side="right", g_inf=5.0)
        bulk = local_limit_bulk([const], g_inf=5.0)
        assert edge.covariance[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert bulk.covariance[0, 0] == pytest.approx(0.0, abs=1e-12)
        assert edge.means[0] == pytest.approx(1.25)
        assert bulk.means[0] == 0.0

    def test_regimes(self):
        assert local_limit_bulk(_local_bases()).regime == "local-bulk"
        assert local_limit_edge(_local_bases(), side="left").regime == "local-edge"
        assert local_limit_edge(_local_bases()).kappa4 is None

    def test_bilinearity(self):
        g = TestFunctionSpec(base="linear", center=0.0, eta0=1.0)
        scaled = (lambda x: 2.5 * g.g(x), lambda x: 2.5 * g.g_prime(x), g.a + g.b)
        other = TestFunctionSpec(base="quadratic", center=0.0, eta0=1.0)
        lim = local_limit_edge([g, scaled, other])
        assert lim.covariance[1, 2] == pytest.approx(2.5 * lim.covariance[0, 2], rel=1e-10)

    @pytest.mark.parametrize("side", ["bulk", "left", "right"])
    def test_psd(self, side):
        gs = _local_bases()
        lim = local_limit_bulk(gs) if side == "bulk" else local_limit_edge(gs, side=side)
        assert check_psd(lim.covariance)
        assert np.all(np.diag(lim.covariance) > 0)
        assert np.allclose(lim.covariance, lim.covariance.T)

    def test_edge_means_are_g0_over_four(self):
        lim = local_limit_edge(_local_bases())
        # linear and quadratic vanish at 0; logshift gives c - log c
        c = 4.0 + 1.0 + 0.5
        assert lim.means == pytest.approx([0.0, 0.0, (c - math.log(c)) / 4.0])

    def test_undefined_edge_mean_is_flagged(self):
        bad = (lambda x: np.where(x == 0, np.nan, 1.0), lambda x: np.zeros(np.shape(x)), 2.0)
        lim = local_limit_edge([bad], g_inf=1.0)
        assert math.isnan(lim.means[0])
        assert lim.diagnostics

    def test_side_validated(self):
        with pytest.raises(DomainError):
            local_limit_edge(_local_bases(), side="middle")


class TestGaussianLimitSerialization:
    def test_json(self):
        lim = GaussianLimit(means=[0.0, 1.0], covariance=[[2.0, 12.0], [12.0, 76.0]], kappa4=0.0, regime="global", labels=["linear", "quadratic"])
        back = GaussianLimit.from_json(lim.to_json())
        assert back.labels == lim.labels
        assert np.array_equal(back.covariance, lim.covariance)
        assert back.to_dict()["cov"][0][1] == 12.0

    def test_regime_validated(self):
        with pytest.raises(DomainError):
            GaussianLimit(means=[0.0], covariance=[[1.0]], kappa4=0.0, regime="nope")
