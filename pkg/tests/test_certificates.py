"""Tests for the energy-multiplier certificates: closed-form constants,
bulk K-coefficient signs, shock-flux coefficients, and the Hardy-identity
quadrature backbone."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conicshock.background import solve_background
from conicshock.certificates import (
    BoundaryCoeffs,
    MultiplierChoice,
    MuWindow,
    P_coeffs,
    K_coeffs,
    _k_samples,
    admissible_mu,
    boundary_coeffs,
    certify,
    decay_exponent,
    hardy_identity_check,
    multiplier_e,
    shock_flux_betas,
    symbolic_conditions,
)
from conicshock.gas import GasParams

GAS = GasParams(A=1.0, gamma=1.4, rho0=1.0)


@pytest.fixture(scope="module")
def sol80():
    return solve_background(80.0, GAS, n=3, grid_size=1024)


@pytest.fixture(scope="module")
def sol80_n2():
    return solve_background(80.0, GAS, n=2, grid_size=1024)


# ---------------------------------------------------------------------------
# closed-form constants
# ---------------------------------------------------------------------------

class TestClosedForms:
    def test_decay_exponent_values(self):
        assert decay_exponent(3, 1.4) == pytest.approx(0.98765, abs=1e-5)
        assert decay_exponent(2, 1.4) == pytest.approx(0.97613, abs=1e-5)
        # continuity probe toward the upper gamma endpoint
        assert decay_exponent(3, 3.0) == pytest.approx(1.5 - 0.25 * np.sqrt(5.0))

    def test_mu_window_values(self):
        w3 = admissible_mu(3, 1.4)
        assert w3.lo == -4.0
        assert w3.hi == pytest.approx(-2.02470, abs=1e-5)
        w2 = admissible_mu(2, 1.4)
        assert w2.lo == -3.0
        assert w2.hi == pytest.approx(-1.04772, abs=1e-5)

    def test_multiplier_e_values(self):
        assert multiplier_e(3, 1.4) == pytest.approx(0.024695, abs=1e-6)
        assert multiplier_e(2, 1.4) == pytest.approx(0.047722, abs=1e-6)

    @given(st.floats(min_value=1.001, max_value=2.999))
    def test_window_nonempty(self, gamma):
        for n in (2, 3):
            w = admissible_mu(n, gamma)
            assert w.lo < w.hi
            assert w.contains(w.midpoint)

    @given(st.floats(min_value=1.001, max_value=2.999),
           st.floats(min_value=0.0, max_value=3.9))
    def test_symbolic_conditions_hold_inside_window(self, gamma, frac):
        # any mu strictly inside the window satisfies all three inequalities
        for n in (2, 3):
            w = admissible_mu(n, gamma)
            mu = w.hi - (w.hi - w.lo) * min(frac / 4.0, 0.999)
            if not w.contains(mu):
                continue
            conds = symbolic_conditions(n, gamma, mu, multiplier_e(n, gamma))
            for k, v in conds.items():
                assert v > 0.0, (n, gamma, mu, k, v)

    @given(st.floats(min_value=1.001, max_value=2.999))
    def test_monotone_window(self, gamma):
        # if mu2 passes the symbolic conditions, any smaller mu1 still in the
        # window passes too
        for n in (2, 3):
            w = admissible_mu(n, gamma)
            mus = np.linspace(w.lo + 1e-9, w.hi - 1e-9, 9)
            ok = [all(v > 0 for v in
                      symbolic_conditions(n, gamma, m, multiplier_e(n, gamma)).values())
                  for m in mus]
            assert all(ok)

    def test_bad_dimension(self):
        with pytest.raises(ValueError):
            decay_exponent(5, 1.4)
        with pytest.raises(ValueError):
            multiplier_e(1, 1.4)


# ---------------------------------------------------------------------------
# transport coefficients
# ---------------------------------------------------------------------------

class TestPCoeffs:
    def test_p1_is_velocity(self, sol80):
        pc = P_coeffs(sol80)
        assert np.array_equal(pc.P1, sol80.u[sol80.i0:sol80.i1 + 1])

    def test_p2_p3_positive(self, sol80):
        pc = P_coeffs(sol80)
        assert np.all(pc.P2 > 0)
        assert np.all(pc.P3 > 0)

    def test_leading_orders(self, sol80):
        g, b0 = GAS.gamma, sol80.b0
        pc = P_coeffs(sol80)
        assert np.max(np.abs(pc.P2 / ((3 - g) / 2 * b0 ** 2) - 1.0)) < 0.25
        assert np.max(np.abs(pc.P3 / ((g - 1) / 2 * b0 ** 2) - 1.0)) < 0.25
        assert np.all(pc.P5 < 0)
        assert np.max(np.abs(pc.P5 / (-(g - 1) * (sol80.n - 1) * b0 ** 2 / 2) - 1.0)) < 0.25

    def test_derivative_leading_orders(self, sol80):
        b0, n = sol80.b0, sol80.n
        pc = P_coeffs(sol80)
        assert np.max(np.abs(pc.dP1 / (-(n - 1)) - 1.0)) < 0.25
        assert np.max(np.abs(pc.dP2 / (-2 * (n - 1) * b0) - 1.0)) < 0.25

    def test_derivatives_match_finite_differences(self, sol80):
        pc = P_coeffs(sol80)
        s = pc.s
        h = s[1] - s[0]
        for vals, dv in ((pc.P1, pc.dP1), (pc.P2, pc.dP2), (pc.P3, pc.dP3)):
            fd = np.gradient(vals, s)
            # floor accounts for roundoff amplification 1/h on slowly varying
            # samples (P3 changes by less than an ulp across the thin layer)
            floor = 100.0 * np.spacing(np.max(np.abs(vals))) / h
            tol = max(1e-4 * np.max(np.abs(dv)), floor)
            assert np.max(np.abs(fd[2:-2] - dv[2:-2])) < tol


# ---------------------------------------------------------------------------
# multiplier weights
# ---------------------------------------------------------------------------

class TestMultiplierChoice:
    def test_standard_defaults(self):
        ch = MultiplierChoice.standard(3, 1.4, 80.0)
        w = admissible_mu(3, 1.4)
        assert ch.mu == w.midpoint
        assert ch.e == multiplier_e(3, 1.4)
        assert np.all(ch.a(np.linspace(80, 81, 5)) == 1.0)

    def test_weight_derivatives_match_finite_differences(self):
        ch = MultiplierChoice.standard(3, 1.4, 80.0, mu=-2.5)
        rng = np.random.default_rng(7)
        for _ in range(20):
            t = rng.uniform(1.0, 5.0)
            r = rng.uniform(75.0 * t, 85.0 * t)
            ht, hr = 1e-6 * t, 1e-6 * r
            pairs = [
                (ch.dA_dt(t, r), (ch.A_weight(t + ht, r) - ch.A_weight(t - ht, r)) / (2 * ht)),
                (ch.dA_dr(t, r), (ch.A_weight(t, r + hr) - ch.A_weight(t, r - hr)) / (2 * hr)),
                (ch.dB_dt(t, r), (ch.B_weight(t + ht, r) - ch.B_weight(t - ht, r)) / (2 * ht)),
                (ch.dB_dr(t, r), (ch.B_weight(t, r + hr) - ch.B_weight(t, r - hr)) / (2 * hr)),
            ]
            for exact, fd in pairs:
                assert abs(fd - exact) <= 1e-7 * max(1.0, abs(exact))

    def test_time_scaling_exact(self, sol80):
        ch = MultiplierChoice.standard(3, 1.4, 80.0, mu=-2.5)
        pc = P_coeffs(sol80)
        base = _k_samples(pc, ch, t=1.0)
        for t in (2.0, 4.0):
            scaled = _k_samples(pc, ch, t=t)
            for b, sc in zip(base, scaled):
                assert np.array_equal(sc, b * t ** ch.mu)


# ---------------------------------------------------------------------------
# bulk K-coefficients
# ---------------------------------------------------------------------------

class TestKCoeffs:
    def test_signs_at_reference_choice(self, sol80):
        cert = K_coeffs(sol80, MultiplierChoice.standard(3, 1.4, 80.0, mu=-2.5))
        assert cert.k00_positive
        assert cert.disc_negative
        assert cert.knn_positive
        assert cert.symbolic_pass
        assert cert.passed

    def test_leading_order_table_n3(self, sol80):
        # K00 ~ (2+e-mu) b0/2, K0r ~ ((gamma+3)/2+e-mu) b0^2,
        # Knn ~ -(gamma-1)(2+e+mu) b0^3/4 at the piston end
        g, b0 = GAS.gamma, sol80.b0
        ch = MultiplierChoice.standard(3, g, b0, mu=-2.5)
        cert = K_coeffs(sol80, ch)
        assert cert.K00[0] == pytest.approx(0.5 * (2 + ch.e - ch.mu) * b0, rel=5e-2)
        assert cert.K0r[0] == pytest.approx(((g + 3) / 2 + ch.e - ch.mu) * b0 ** 2, rel=5e-2)
        assert cert.Knn[0] == pytest.approx(-(g - 1) / 4 * (2 + ch.e + ch.mu) * b0 ** 3, rel=5e-2)
        # discriminant leading order ~ (gamma-1)/4 (gamma+7-2(e-mu)^2) b0^4
        lead = (g - 1) / 4 * (g + 7 - 2 * (ch.e - ch.mu) ** 2) * b0 ** 4
        assert cert.discriminant[0] == pytest.approx(lead, rel=0.15)

    def test_leading_order_table_n2(self, sol80_n2):
        g, b0 = GAS.gamma, sol80_n2.b0
        ch = MultiplierChoice.standard(2, g, b0, mu=-1.5)
        cert = K_coeffs(sol80_n2, ch)
        assert cert.K00[0] == pytest.approx(0.5 * (1 + ch.e - ch.mu) * b0, rel=5e-2)
        assert cert.K0r[0] == pytest.approx(((g + 1) / 2 + ch.e - ch.mu) * b0 ** 2, rel=5e-2)
        assert cert.Knn[0] == pytest.approx(-(g - 1) / 4 * (1 + ch.e + ch.mu) * b0 ** 3, rel=5e-2)
        assert cert.passed

    def test_near_window_endpoint(self, sol80):
        # just inside the upper endpoint the sign pattern still closes
        w = admissible_mu(3, 1.4)
        cert = K_coeffs(sol80, MultiplierChoice.standard(3, 1.4, 80.0, mu=w.hi - 1e-3))
        assert cert.k00_positive and cert.disc_negative and cert.knn_positive

    def test_summary_roundtrip(self, sol80, tmp_path):
        import json

        cert = K_coeffs(sol80, MultiplierChoice.standard(3, 1.4, 80.0, mu=-2.5))
        path = tmp_path / "cert.json"
        cert.to_json(path)
        data = json.loads(path.read_text())
        assert data["status"] == "pass"
        assert data["mu"] == -2.5
        assert data["K00_min"] > 0


# ---------------------------------------------------------------------------
# boundary coefficients and shock-flux betas
# ---------------------------------------------------------------------------

class TestBoundary:
    def test_signs_and_leading_orders(self, sol80):
        bc = boundary_coeffs(sol80)
        b0 = sol80.b0
        assert bc.B1 > 0
        assert bc.mu1 == pytest.approx(1.0 / (2 * b0), rel=0.3)
        assert bc.mu2 < 0
        assert bc.mu2 == pytest.approx(-(sol80.n - 1) / 2.0, rel=0.05)
        assert bc.mu3 == pytest.approx(-b0, rel=1e-3)

    def test_n2_mu2(self, sol80_n2):
        bc = boundary_coeffs(sol80_n2)
        assert bc.mu2 == pytest.approx(-0.5, rel=0.05)

    @pytest.mark.parametrize("gamma", [1.2, 1.4, 2.0])
    def test_b1_positive_across_gammas(self, gamma):
        gas = GasParams(A=1.0, gamma=gamma, rho0=1.0)
        sol = solve_background(80.0, gas, n=3, grid_size=512)
        bc = boundary_coeffs(sol)
        assert bc.B1 > 0
        assert bc.mu1 > 0 and bc.mu2 < 0

    def test_beta_hats(self, sol80):
        g, b0 = GAS.gamma, sol80.b0
        ch = MultiplierChoice.standard(3, g, b0, mu=-2.5)
        betas = shock_flux_betas(sol80, ch)
        assert betas["beta_hat11"] == pytest.approx((g - 1) * b0 ** 2 / 8, rel=0.05)
        assert betas["beta_hat13"] == pytest.approx(-(g - 1) * b0 ** 4 / 2, rel=0.05)
        assert betas["beta_hat14"] > 0
        # the mixed coefficient nearly cancels after the oblique substitution
        assert abs(betas["beta_hat12"]) < 1e-3 * b0 ** 3

    def test_raw_beta_leading_orders(self, sol80):
        g, b0 = GAS.gamma, sol80.b0
        ch = MultiplierChoice.standard(3, g, b0, mu=-2.5)
        betas = shock_flux_betas(sol80, ch)
        assert betas["beta12"] == pytest.approx(-(g - 1) * b0 ** 3 / 2, rel=0.05)
        assert betas["beta13"] == pytest.approx(-(g - 1) * b0 ** 4 / 2, rel=0.05)
        assert betas["beta14"] == pytest.approx(
            (g - 1) / 4 * ch.e * b0 ** 3 * sol80.delta, rel=0.05)


# ---------------------------------------------------------------------------
# end-to-end certify
# ---------------------------------------------------------------------------

class TestCertify:
    @pytest.mark.parametrize("args,expected", [
        ((3, 1.4, 80.0, -2.5), "pass"),
        ((3, 1.4, 80.0, -5.0), "fail"),
        ((3, 1.4, 80.0, -2.0), "fail"),
        ((2, 1.4, 80.0, -1.5), "pass"),
        ((2, 1.4, 80.0, -1.0), "fail"),
    ])
    def test_reference_cases(self, args, expected):
        cert = certify(*args, grid_size=512)
        assert cert.status == expected

    @pytest.mark.parametrize("A", [0.5, 1.0, 2.0])
    def test_scale_invariance(self, A):
        gas = GasParams(A=A, gamma=1.4, rho0=1.0)
        cert = certify(3, 1.4, 80.0, -2.5, gas=gas, grid_size=512)
        assert cert.passed

    def test_outside_asymptotic_regime(self):
        cert = certify(3, 1.4, 20.0, -2.5, grid_size=512)
        assert not cert.in_asymptotic_regime
        assert any("asymptotic" in nn for nn in cert.notes)
        assert cert.status in ("pass", "outside asymptotic regime")

    def test_gamma_mismatch_rejected(self):
        with pytest.raises(ValueError):
            certify(3, 1.4, 80.0, -2.5, gas=GasParams(A=1.0, gamma=2.0, rho0=1.0))


# ---------------------------------------------------------------------------
# Hardy identity
# ---------------------------------------------------------------------------

class TestHardy:
    def test_power_trace_oracle(self):
        # phi = 1/t: both integrals have closed forms
        mu, T = -2.5, 100.0
        rep = hardy_identity_check(lambda t: 1.0 / t, lambda t: -1.0 / t ** 2, mu, T)
        assert rep.identity_residual < 1e-8
        lhs_exact = (T ** (mu - 2.0) - 1.0) / (mu - 2.0)
        assert rep.lhs == pytest.approx(lhs_exact, abs=1e-10)
        assert rep.inequality_slack >= 0.0

    def test_zero_trace(self):
        rep = hardy_identity_check(lambda t: 0.0 * t, lambda t: 0.0 * t, -2.5, 100.0)
        assert rep.identity_residual == 0.0
        assert rep.lhs == 0.0

    def test_oscillatory_trace_inequality(self):
        rep = hardy_identity_check(
            lambda t: np.sin(t) / t,
            lambda t: (t * np.cos(t) - np.sin(t)) / t ** 2,
            -3.0, 50.0)
        assert rep.identity_residual < 1e-7
        assert rep.inequality_slack >= 0.0

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            hardy_identity_check(lambda t: 1.0 / t, lambda t: -1.0 / t ** 2, -0.5, 10.0)
        with pytest.raises(ValueError):
            hardy_identity_check(lambda t: np.full_like(t, np.nan), lambda t: t, -2.5, 10.0)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(min_value=-4.0, max_value=-1.5),
           st.floats(min_value=0.2, max_value=3.0))
    def test_identity_for_random_exponential_traces(self, mu, k):
        rep = hardy_identity_check(
            lambda t: np.exp(-k * (t - 1.0)),
            lambda t: -k * np.exp(-k * (t - 1.0)),
            mu, 30.0)
        assert rep.identity_residual < 1e-7
        assert rep.inequality_slack >= -1e-12
