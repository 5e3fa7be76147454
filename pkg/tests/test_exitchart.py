import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turboeq.exitchart import (
    CubicModel,
    ExitCurve,
    combined_chart,
    combined_vnd,
    cnd_curve,
    fit_cubic,
    fit_polynomial,
    irregular_vnd_curve,
    j_function,
    j_function_quadrature,
    j_inverse,
    max_check_degree,
    mi_from_llrs,
    optimize_degrees,
    trajectory,
    tunnel_open,
    vnd_curve,
)
from turboeq.ldpc import DVBS2_5_6, DVBS2_9_10, DegreeDistribution, design_rate

# Mutual information of a consistent Gaussian LLR, 50-digit mpmath quadrature.
J_REFERENCE = {
    0.5: 0.04372996294430945,
    1.0: 0.16074721979641687,
    2.0: 0.48594415413293532,
    3.0: 0.75997900777123096,
    5.0: 0.97517900431324406,
}


def gaussian_llrs(bits, sigma, rng):
    return (sigma**2 / 2 + sigma * rng.standard_normal(bits.shape)) * (1 - 2 * bits.astype(float))


def linear_detector(a, b):
    return lambda I: np.clip(a + b * np.asarray(I, dtype=float), 0, 1)


SMALL_TRIPLES = [(2, 3, 16), (2, 4, 20), (2, 9, 30)]


class TestJFunction:
    def test_zero(self):
        assert j_function(0.0) == 0.0

    def test_saturates(self):
        assert j_function(10.0) > 0.999

    @pytest.mark.parametrize("sigma,ref", sorted(J_REFERENCE.items()))
    def test_quadrature_oracle_matches_reference(self, sigma, ref):
        assert j_function_quadrature(sigma) == pytest.approx(ref, abs=1e-8)

    @pytest.mark.parametrize("sigma,ref", sorted(J_REFERENCE.items()))
    def test_closed_form_accuracy(self, sigma, ref):
        assert abs(j_function(sigma) - ref) < 1e-3

    def test_roundtrip_on_99_points(self):
        I = np.arange(1, 100) / 100
        assert np.max(np.abs(j_function(j_inverse(I)) - I)) < 1e-3

    def test_inverse_against_quadrature(self):
        for I in (0.05, 0.3, 0.5, 0.8, 0.95):
            assert abs(j_function_quadrature(float(j_inverse(I))) - I) < 1e-3

    def test_inverse_sentinel(self):
        assert np.isinf(j_inverse(1.0))
        assert j_inverse(0.0) == 0.0

    def test_strictly_increasing(self):
        s = np.linspace(1e-3, 10, 5000)
        assert np.all(np.diff(j_function(s)) > 0)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.0, 0.999))
    def test_inverse_property(self, I):
        assert abs(float(j_function(j_inverse(I))) - I) < 1e-3


class TestMiFromLlrs:
    def test_zero_llrs(self):
        assert mi_from_llrs(np.zeros(100), np.random.default_rng(0).integers(0, 2, 100)) == 0.0

    def test_perfect_llrs(self):
        b = np.random.default_rng(1).integers(0, 2, 1000)
        assert mi_from_llrs(50 * (1 - 2 * b), b) == pytest.approx(1.0, abs=1e-9)

    def test_consistent_with_j(self):
        rng = np.random.default_rng(2)
        b = rng.integers(0, 2, 100_000)
        llr = gaussian_llrs(b, float(j_inverse(0.5)), rng)
        assert mi_from_llrs(llr, b) == pytest.approx(0.5, abs=0.01)

    def test_errors(self):
        with pytest.raises(ValueError):
            mi_from_llrs([], [])
        with pytest.raises(ValueError):
            mi_from_llrs([1.0, 2.0], [0])

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_permutation_and_sign_flip_invariance(self, seed):
        rng = np.random.default_rng(seed)
        b = rng.integers(0, 2, 500)
        llr = gaussian_llrs(b, 1.5, rng)
        base = mi_from_llrs(llr, b)
        p = rng.permutation(500)
        assert mi_from_llrs(llr[p], b[p]) == pytest.approx(base, abs=1e-12)
        assert mi_from_llrs(-llr, 1 - b) == pytest.approx(base, abs=1e-12)


class TestNodeCurves:
    def test_vnd_degree_one(self):
        I_A = np.linspace(0, 1, 11)
        assert np.allclose(vnd_curve(1, I_A, 0.4), 0.4, atol=1e-9)

    def test_cnd_full_input(self):
        assert cnd_curve(7, 1.0) == pytest.approx(1.0)

    @pytest.mark.parametrize("dc", [2, 3, 6, 22, 30])
    def test_cnd_non_decreasing(self, dc):
        assert np.all(np.diff(cnd_curve(dc, np.linspace(0, 1, 201))) >= -1e-12)

    def test_cnd_matches_spc_monte_carlo(self):
        """Extrinsic MI of a degree-4 single parity check decoder on Gaussian inputs."""
        rng = np.random.default_rng(3)
        n, dc = 100_000, 4
        worst = 0.0
        for I_A in (0.2, 0.4, 0.6, 0.8, 0.95):
            sigma = float(j_inverse(I_A))
            b = rng.integers(0, 2, (n, dc - 1))
            llr = gaussian_llrs(b, sigma, rng)
            target = np.bitwise_xor.reduce(b, axis=1)
            prod = np.prod(np.tanh(np.clip(llr, -30, 30) / 2), axis=1)
            ext = 2 * np.arctanh(np.clip(prod, -1 + 1e-15, 1 - 1e-15))
            worst = max(worst, abs(mi_from_llrs(ext, target) - float(cnd_curve(dc, I_A))))
        assert worst < 0.02

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            vnd_curve(0, 0.5, 0.5)
        with pytest.raises(ValueError):
            cnd_curve(0, 0.5)


class TestExitCurve:
    def test_invariants(self):
        with pytest.raises(ValueError):
            ExitCurve([0, 0.5, 0.4], [0.1, 0.2, 0.3])
        with pytest.raises(ValueError):
            ExitCurve([0, 1], [0.1, 1.2])

    def test_csv_roundtrip(self, tmp_path):
        c = ExitCurve(np.linspace(0, 1, 5), [0.5, 0.55, 0.61, 0.7, 0.8], [10] * 5, [3] * 5)
        c.to_csv(tmp_path / "c.csv")
        back = ExitCurve.from_csv(tmp_path / "c.csv")
        assert np.array_equal(back.I_in, c.I_in) and np.array_equal(back.I_out, c.I_out)
        assert np.array_equal(back.seed, c.seed)

    def test_clamped_outside_range_warns(self):
        c = ExitCurve([0.2, 0.8], [0.5, 0.6])
        with pytest.warns(UserWarning):
            assert c(1.0) == pytest.approx(0.6)


class TestCubic:
    def test_exact_cubic_recovered(self):
        coef = np.array([0.51, 0.2, -0.1, 0.05])
        x = np.linspace(0, 1, 11)
        y = np.polynomial.polynomial.polyval(x, coef)
        fit = fit_cubic(ExitCurve(x, y))
        assert np.allclose(fit.coefficients, coef, atol=1e-9)
        assert fit.max_residual < 1e-9

    def test_residual_non_increasing_with_degree(self):
        x = np.linspace(0, 1, 11)
        y = 0.5 + 0.3 * np.sin(2.5 * x) ** 2
        res = [fit_polynomial(ExitCurve(x, y), d).max_residual for d in (1, 2, 3)]
        sq = [np.sum((np.vander(x, d + 1, increasing=True) @ fit_polynomial(ExitCurve(x, y), d).coefficients - y) ** 2)
              for d in (1, 2, 3)]
        assert sq[0] >= sq[1] >= sq[2]
        assert res[2] <= res[0]

    def test_rank_deficiency(self):
        with pytest.raises(np.linalg.LinAlgError):
            fit_cubic(ExitCurve([0, 0.5, 1.0], [0.1, 0.2, 0.3]))

    def test_model_is_clipped(self):
        m = CubicModel(np.array([0.9, 0.5, 0, 0]))
        assert m(1.0) == 1.0


class TestCombinedChart:
    def test_flat_detector_reduces_to_plain_vnd(self):
        x = np.linspace(0, 1, 51)
        got = combined_vnd(0.7, DVBS2_5_6.var_degrees, x)
        ref = irregular_vnd_curve(DVBS2_5_6, x, 0.7)
        assert np.allclose(got, ref, atol=1e-9)

    def test_steeper_detector_is_higher(self):
        x = np.linspace(0, 1, 51)
        low = combined_vnd(linear_detector(0.5, 0.1), DVBS2_5_6.var_degrees, x)
        high = combined_vnd(linear_detector(0.5, 0.3), DVBS2_5_6.var_degrees, x)
        assert np.all(high >= low - 1e-12)
        assert np.any(high > low + 1e-3)

    def test_grid_endpoints_in_unit_interval(self):
        vnd, cnd = combined_chart(linear_detector(0.6, 0.3), DVBS2_5_6)
        for c in (vnd, cnd):
            assert c.I_in[0] == 0 and c.I_in[-1] == 1
            assert np.all((c.I_out >= 0) & (c.I_out <= 1))

    def test_partial_curve_warns(self):
        det = ExitCurve([0.0, 0.5], [0.6, 0.7])
        with pytest.warns(UserWarning):
            combined_chart(det, DVBS2_5_6)


class TestTrajectory:
    def test_open_tunnel_converges(self):
        x = np.linspace(0, 1, 101)
        vnd = ExitCurve(x, np.clip(0.3 + x, 0, 1))
        cnd = ExitCurve(x, x)
        t = trajectory(vnd, cnd)
        assert t.converged and t.final_I >= 1 - 1e-3

    def test_crossing_stalls(self):
        x = np.linspace(0, 1, 101)
        vnd = ExitCurve(x, 0.6 + 0.5 * (x - 0.6))
        cnd = ExitCurve(x, x)
        t = trajectory(vnd, cnd, max_steps=500)
        assert not t.converged
        assert abs(t.final_I - 0.6) <= 0.01

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.0, 0.5), st.floats(0.1, 1.0))
    def test_points_non_decreasing(self, a, b):
        x = np.linspace(0, 1, 101)
        vnd = ExitCurve(x, np.clip(a + b * x, 0, 1))
        cnd = ExitCurve(x, x**1.5)
        t = trajectory(vnd, cnd)
        xs = [p[0] for p in t.points]
        ys = [p[1] for p in t.points]
        assert all(q >= p - 1e-12 for p, q in zip(xs, xs[1:]))
        assert all(q >= p - 1e-12 for p, q in zip(ys, ys[1:]))


class TestOptimizer:
    det = staticmethod(linear_detector(0.55, 0.35))

    def test_contract(self):
        res = optimize_degrees(self.det, degree_triples=SMALL_TRIPLES)
        assert res.feasible and res.verified
        assert sum(f for _, f in res.dist.var_degrees) == pytest.approx(1, abs=1e-9)
        assert sum(f for _, f in res.dist.chk_degrees) == pytest.approx(1, abs=1e-9)
        assert res.rate == pytest.approx(design_rate(res.dist), abs=1e-12)

    def test_dominates_included_baseline(self):
        res = optimize_degrees(self.det, degree_triples=SMALL_TRIPLES, include=[DVBS2_9_10.var_degrees])
        dc = max_check_degree(self.det, DVBS2_9_10.var_degrees)
        assert np.isfinite(dc)
        base = DegreeDistribution.check_concentrated(DVBS2_9_10.var_degrees, dc)
        assert res.rate >= design_rate(base) - 1e-12

    def test_raised_detector_does_not_lower_rate(self):
        x = np.linspace(0, 1, 11)
        curve = ExitCurve(x, self.det(x))
        a = optimize_degrees(curve, degree_triples=SMALL_TRIPLES)
        b = optimize_degrees(curve.shifted(0.05), degree_triples=SMALL_TRIPLES)
        assert b.rate >= a.rate - 1e-12

    def test_infeasible(self):
        res = optimize_degrees(linear_detector(0.01, 0.0), dc_range=(3, 4), degree_triples=[(2, 3, 16)])
        assert not res.feasible and res.dist is None

    @settings(max_examples=6, deadline=None)
    @given(st.floats(0.3, 0.8), st.floats(0.0, 0.2))
    def test_result_keeps_tunnel_open(self, a, b):
        det = linear_detector(a, b)
        res = optimize_degrees(det, degree_triples=[(2, 4, 20)], fraction_step=0.1)
        if res.feasible:
            vnd, cnd = combined_chart(det, res.dist)
            assert tunnel_open(vnd.I_out[None, :], vnd.I_in, np.array([res.dist.mean_chk_degree]))[0]
            assert trajectory(vnd, cnd).converged

    def test_max_check_degree_monotone_in_detector(self):
        lo = max_check_degree(linear_detector(0.5, 0.2), DVBS2_5_6.var_degrees)
        hi = max_check_degree(linear_detector(0.6, 0.2), DVBS2_5_6.var_degrees)
        assert hi >= lo
