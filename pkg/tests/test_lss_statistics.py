"""
Tests for the covariance test statistics and their null calibration.

Critical behaviors tested:
1. Gram eigenvalues from the n x n matrix
2. Raw statistics on constructed spectra
3. Standardization, p-values and the decision boundary
4. CSV matrix loading with located format errors
"""

import io
import math

import numpy as np
import pytest

from clt_functionals import identity_lss_limit
from config import ALL_KINDS, GLOBAL_KINDS, LOCAL_KINDS
from errors import CumulantError, DataFormatError, DegenerateStatisticError, DimensionError, DomainError
from lss_statistics import (
    NullModel,
    StatParams,
    _local_tf,
    critical_value,
    decide,
    gram_eigenvalues,
    kinds_from_arg,
    load_matrix,
    null_constants,
    p_value,
    run_test,
    standardize,
    stat_raw,
)
from lss_functions import global_function
from spectral_law import PopulationSpectrum, density, esd_distance, lss_centering, support


# =============================================================================
# Eigenvalues
# =============================================================================


class TestGramEigenvalues:
    def test_rank_one(self):
        X = np.zeros((6, 3))
        X[:, 2] = [1, 2, 3, 0, 0, 1]
        eigs = gram_eigenvalues(X)
        assert eigs == pytest.approx([0.0, 0.0, 15.0], abs=1e-12)

    def test_orthonormal_columns(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((20, 5)))
        assert gram_eigenvalues(Q) == pytest.approx(np.ones(5))

    def test_sigma_weights_rows(self):
        X = np.eye(4)[:, :2]
        eigs = gram_eigenvalues(X, [3.0, 5.0, 1.0, 1.0])
        assert eigs == pytest.approx([3.0, 5.0])

    def test_ascending(self, rng):
        eigs = gram_eigenvalues(rng.standard_normal((50, 10)))
        assert np.all(np.diff(eigs) >= 0)

    @pytest.mark.parametrize(
        "shape, sigma",
        [((3, 5), None), ((5, 1), None), ((5, 3), [1.0, 1.0]), ((5, 3), [1, 1, 1, 1, 0])],
    )
    def test_dimension_errors(self, shape, sigma):
        with pytest.raises(DimensionError):
            gram_eigenvalues(np.ones(shape), sigma)

    def test_non_finite(self):
        X = np.ones((5, 3))
        X[1, 1] = np.nan
        with pytest.raises(DimensionError):
            gram_eigenvalues(X)

    def test_simulated_spectrum_follows_law(self, rng):
        n, p = 200, 20000
        X = rng.standard_normal((p, n)) * (p * n) ** -0.25
        spec = PopulationSpectrum.identity(100.0)
        assert esd_distance(gram_eigenvalues(X), spec, density(spec)) < 0.05


# =============================================================================
# Raw statistics
# =============================================================================


class TestStatRaw:
    def test_t1g_zero_at_shifted_center(self):
        phi, c = 100.0, 3.0
        eigs = np.full(50, 10.1 - c)
        assert stat_raw(eigs, "t1g", phi) == pytest.approx(0.0, abs=1e-10)

    def test_local_zero_at_edge(self):
        eigs = np.full(64, 12.1)
        assert stat_raw(eigs, "t1l", 100.0) == pytest.approx(0.0, abs=1e-12)
        assert stat_raw(eigs, "t2l", 100.0) == pytest.approx(0.0, abs=1e-12)

    def test_t4_degenerate(self):
        center = global_function("linear", 100.0).center
        with pytest.raises(DegenerateStatisticError):
            stat_raw(np.full(50, center), "t4g", 100.0)

    def test_t4_ratio(self, rng):
        eigs = rng.uniform(8.1, 12.1, size=100)
        t1 = stat_raw(eigs, "t1g", 100.0)
        t2 = stat_raw(eigs, "t2g", 100.0)
        assert stat_raw(eigs, "t4g", 100.0) == pytest.approx(100 ** 2 * t2 / t1 ** 2)

    def test_order_irrelevant(self, rng):
        eigs = rng.uniform(8.1, 12.1, size=64)
        for kind in ALL_KINDS:
            assert stat_raw(eigs, kind, 100.0) == pytest.approx(stat_raw(eigs[::-1], kind, 100.0), rel=1e-12)

    def test_mollifier_transparent_near_edge(self, rng):
        n = 256
        eta0 = n ** -0.25
        eigs = 12.1 + eta0 * rng.uniform(-3.9, 3.9, size=n)
        raw = stat_raw(eigs, "t1l", 100.0)
        assert raw == pytest.approx(np.sum((eigs - 12.1) / eta0), rel=1e-12)

    def test_local_window_follows_support(self, two_atom100):
        sup = support(two_atom100)
        eigs = np.full(64, sup.gamma_plus)
        assert stat_raw(eigs, "t1l", 100.0, sup=sup) == pytest.approx(0.0, abs=1e-12)
        assert stat_raw(eigs, "t1l", 100.0) == 0.0
        near = sup.gamma_plus - 0.5 * 64 ** -0.25
        assert stat_raw(np.full(64, near), "t1l", 100.0, sup=sup) == pytest.approx(-32.0, rel=1e-12)

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            stat_raw(np.ones(5), "t5g", 100.0)


# =============================================================================
# Standardization and decisions
# =============================================================================


class TestStandardize:
    def test_t1g_exact_centering(self):
        n, phi = 400, 100.0
        raw = n * (3.0 - 0.1)
        rep = standardize("t1g", raw, n, phi, kappa4=0.0)
        assert rep.z_value == pytest.approx(0.0, abs=1e-12)
        assert rep.p_value == pytest.approx(1.0)
        assert not rep.reject

    def test_t1g_unit_shift(self):
        n, phi = 400, 100.0
        raw = n * (3.0 - 0.1) + math.sqrt(2.0)
        assert standardize("t1g", raw, n, phi, kappa4=0.0).z_value == pytest.approx(1.0)

    def test_t3g_scale(self):
        const = null_constants("t3g", 400, 100.0, 0.0)
        expected = 2 * (1 - 2 / 3) + 2 * (math.log(3) - math.log(8 / 3))
        assert const.scale == pytest.approx(math.sqrt(expected))

    def test_t4g_delta_method_scale(self):
        c, phi = 3.0, 100.0
        mu1 = c - 0.1
        mu2 = 1 + c * c - 2 * c * 0.1 + 0.01
        grad = np.array([-2 * mu2 / mu1 ** 3, 1 / mu1 ** 2])
        V = np.array([[2.0, 12.0], [12.0, 76.0]])
        assert null_constants("t4g", 400, phi, 0.0).scale == pytest.approx(math.sqrt(grad @ V @ grad))

    def test_literal_t4g_constants(self):
        c = 3.0
        d = c - 0.2
        const = null_constants("t4g", 400, 100.0, 0.0, StatParams(literal=True))
        assert const.centering == pytest.approx(400 * (1 + d ** -2) + d * d)
        assert const.scale == pytest.approx(c ** -2 * (4 + 8 / c ** 2))

    def test_local_ignores_kappa4(self):
        a = standardize("t1l", 1.0, 256, 100.0, kappa4=0.0)
        b = standardize("t1l", 1.0, 256, 100.0, kappa4=2.0)
        assert a.z_value == b.z_value
        assert a.kappa4_used is None

    @pytest.mark.parametrize("kappa4", [None, -2.0, -3.0])
    def test_bad_kappa4(self, kappa4):
        with pytest.raises(CumulantError):
            standardize("t1g", 0.0, 100, 100.0, kappa4=kappa4)

    @pytest.mark.parametrize("kind", LOCAL_KINDS)
    def test_local_constants_positive(self, kind):
        const = null_constants(kind, 200, 50.0, None)
        assert const.scale > 0
        assert math.isfinite(const.centering)

    @pytest.mark.parametrize("kind", ["t1l", "t2l", "t3l"])
    def test_local_mean_uses_whole_window(self, kind):
        n, phi = 200, 50.0
        const = null_constants(kind, n, phi, None)
        tf = _local_tf(kind[1], n, phi, StatParams())
        spec = PopulationSpectrum.identity(phi)
        lim = identity_lss_limit([tf], phi)
        assert const.centering == pytest.approx(n * lss_centering(spec, tf) + lim.means[0], rel=1e-12)
        assert const.scale == pytest.approx(math.sqrt(lim.covariance[0, 0]), rel=1e-12)

    def test_local_log_mean_below_edge_value(self):
        default = null_constants("t3l", 200, 50.0, None)
        literal = null_constants("t3l", 200, 50.0, None, StatParams(literal=True))
        tf = _local_tf("3", 200, 50.0, StatParams())
        lim = identity_lss_limit([tf], 50.0)
        gap = tf.h0() / 4.0 - lim.means[0]
        assert gap > 0.1
        assert literal.centering - default.centering == pytest.approx(gap, rel=1e-6)


class TestDecision:
    def test_zero(self):
        assert not decide(0.0, 0.05)

    def test_boundary(self):
        z = critical_value(0.05)
        assert z == pytest.approx(1.959964, abs=1e-6)
        assert not decide(z - 1e-12, 0.05)
        assert decide(z + 1e-9, 0.05)
        assert decide(1.96 + 1e-3, 0.05)

    def test_three(self):
        assert decide(3.0, 0.05)
        assert p_value(3.0) == pytest.approx(0.0027, abs=1e-4)
        assert p_value(-3.0) == p_value(3.0)

    def test_alpha_range(self):
        with pytest.raises(DomainError):
            critical_value(0.0)
        with pytest.raises(DomainError):
            decide(1.0, 1.5)


# =============================================================================
# Dataset pipeline
# =============================================================================


class TestLoadMatrix:
    def test_orientation(self):
        text = "1,2,3\n4,5,6\n"
        assert load_matrix(io.StringIO(text)).shape == (2, 3)
        assert load_matrix(io.StringIO(text), rows="samples").shape == (3, 2)

    def test_header_skipped(self):
        X = load_matrix(io.StringIO("a,b\n1,2\n3,4\n"), header=True)
        assert X.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_bad_cell_located(self):
        with pytest.raises(DataFormatError) as info:
            load_matrix(io.StringIO("1,2\n3,x\n"))
        assert info.value.context == {"row": 2, "column": 2}

    def test_empty(self):
        with pytest.raises(DataFormatError):
            load_matrix(io.StringIO(""))


class TestRunTest:
    def test_null_data(self, rng):
        n, p = 100, 5000
        X = rng.standard_normal((p, n)) * (p * n) ** -0.25
        reports = run_test(X, ALL_KINDS)
        assert [r.kind for r in reports] == list(ALL_KINDS)
        assert all(0.0 <= r.p_value <= 1.0 for r in reports)
        assert all(r.kappa4_used is None for r in reports if r.kind in LOCAL_KINDS)

    def test_null_model_checks_size(self):
        with pytest.raises(DimensionError):
            NullModel(10, 50.0).evaluate(np.ones(9), ["t1g"])

    def test_kinds_from_arg(self):
        assert kinds_from_arg("all") == ALL_KINDS
        assert kinds_from_arg("global") == GLOBAL_KINDS
        assert kinds_from_arg("T1G, t2l") == ("t1g", "t2l")
        with pytest.raises(DomainError):
            kinds_from_arg("t9x")


@pytest.mark.slow
class TestNullMonteCarlo:
    def test_t1g_mean(self, rng):
        n, phi, reps = 200, 50.0, 300
        p = int(n * phi)
        vals = []
        for _ in range(reps):
            X = rng.standard_normal((p, n)) * (p * n) ** -0.25
            vals.append(stat_raw(gram_eigenvalues(X), "t1g", phi))
        vals = np.asarray(vals)
        se = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - n * (3.0 - phi ** -0.5)) < 3 * se + 0.05

    @pytest.mark.parametrize("kind", ["t1l", "t3l"])
    def test_local_raw_moments(self, rng, kind):
        n, phi, reps = 200, 25.0, 400
        p = int(n * phi)
        vals = []
        for _ in range(reps):
            X = rng.standard_normal((p, n)) * (p * n) ** -0.25
            vals.append(stat_raw(gram_eigenvalues(X), kind, phi))
        vals = np.asarray(vals)
        const = null_constants(kind, n, phi, None)
        se = vals.std(ddof=1) / math.sqrt(reps)
        assert abs(vals.mean() - const.centering) < 4 * se
        assert 0.8 < vals.std(ddof=1) / const.scale < 1.25
