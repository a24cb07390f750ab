"""Distribution and sum-BER analysis: link laws, end-to-end CDF reduction
and construction, the quadrature/closed-form pair, and precision paths."""

import math

import numpy as np
import pytest
from scipy import integrate

from twrelay.analysis import (e2e_cdf, link_cdf, link_pdf, min_pair_cdf,
                              sum_ber_closed_form, sum_ber_quadrature)
from twrelay.errors import ConfigurationError
from twrelay.highsnr import high_snr_profile, high_snr_sum_ber
from twrelay.scenario import (AntennaConfig, BALANCED_WEIGHTS, PowerProfile,
                              Protocol, coefficient_set, modulation_constants,
                              protocol_modulation)
from twrelay.simulate import semi_analytic_sum_ber
from twrelay.validate import (check_bessel_moment_identity,
                              check_construction_integral, check_ks_suite)

ANT = AntennaConfig(2, 1, 2)


class TestLinkLaws:
    def test_cdf_at_zero(self):
        assert link_cdf(0.0, 2, 1, 5.0) == 0.0

    def test_erlang_two(self):
        assert link_cdf(1.0, 2, 1, 1.0) == pytest.approx(1.0 - 2.0 * math.exp(-1.0), rel=1e-12)
        assert link_cdf(1.0, 2, 1, 1.0) == pytest.approx(0.26424, abs=5e-6)

    def test_exponential_density(self):
        assert link_pdf(0.0, 1, 1, 2.0) == pytest.approx(0.5, rel=1e-12)

    def test_pdf_is_cdf_derivative(self):
        for x in np.linspace(0.2, 8.0, 20):
            h = 1e-5 * max(1.0, x)
            num = (link_cdf(x + h, 3, 2, 1.3) - link_cdf(x - h, 3, 2, 1.3)) / (2 * h)
            assert link_pdf(float(x), 3, 2, 1.3) == pytest.approx(num, abs=1e-6)

    def test_pdf_normalization(self):
        val, _ = integrate.quad(lambda x: link_pdf(x, 3, 2, 1.0), 0.0, 80.0,
                                epsabs=1e-12, epsrel=1e-10, limit=300)
        assert val == pytest.approx(1.0, abs=1e-8)


class TestEndToEndCdf:
    def test_zero(self):
        pw = PowerProfile.balanced(10.0)
        coeffs = coefficient_set(Protocol.TWO_SLOT, ANT, pw)
        assert e2e_cdf("arb", 0.0, coeffs, ANT, pw) == 0.0

    def test_path_reduction(self):
        pw = PowerProfile.balanced(10.0)
        for p in Protocol:
            w = BALANCED_WEIGHTS if p.uses_weights else None
            coeffs = coefficient_set(p, ANT, pw, w)
            for x in np.geomspace(0.01 * pw.rho_ar, 20 * pw.rho_ar, 40):
                one = e2e_cdf("arb", float(x), coeffs, ANT, pw, path="single_antenna")
                gen = e2e_cdf("arb", float(x), coeffs, ANT, pw, path="general")
                assert gen == pytest.approx(one, abs=1e-12)

    def test_antenna_precondition_names_remedy(self):
        pw = PowerProfile.balanced(10.0)
        bad = AntennaConfig(1, 2, 2)
        coeffs = coefficient_set(Protocol.FIRST_FOUR_SLOT, bad, pw)
        with pytest.raises(ConfigurationError, match="swap"):
            e2e_cdf("arb", 1.0, coeffs, bad, pw)

    def test_construction_integral(self):
        res = check_construction_integral(PowerProfile.balanced(30.0))
        assert res.passed, res.line()

    def test_shape(self):
        pw = PowerProfile.balanced(25.0)
        ant = AntennaConfig(2, 2, 2)
        coeffs = coefficient_set(Protocol.FIRST_FOUR_SLOT, ant, pw)
        grid = np.geomspace(1e-4 * pw.rho_ar, 100 * pw.rho_ar, 300)
        vals = [e2e_cdf("bra", float(x), coeffs, ant, pw) for x in grid]
        assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(1.0, abs=1e-6)


class TestSumBerQuadrature:
    def test_degenerate_unit_cdf(self):
        # with the CDF sum pinned to its x -> inf limit the integral
        # collapses to the zero-SNR ceiling
        mod = modulation_constants("mqam", 16)
        pw = PowerProfile.balanced(10.0)
        coeffs = coefficient_set(Protocol.TWO_SLOT, ANT, pw)
        val = sum_ber_quadrature(coeffs, ANT, pw, mod, _cdf_pair=lambda x: 2.0)
        assert val == pytest.approx(mod.a / mod.bits_per_symbol, rel=1e-9)

    def test_monotone_in_snr(self):
        mod = protocol_modulation(Protocol.TWO_SLOT)
        prev = None
        for rho_db in np.linspace(5.0, 33.0, 20):
            pw = PowerProfile.balanced(float(rho_db))
            coeffs = coefficient_set(Protocol.TWO_SLOT, ANT, pw)
            v = sum_ber_quadrature(coeffs, ANT, pw, mod)
            if prev is not None:
                assert v < prev
            prev = v


class TestSumBerClosedForm:
    def test_matches_quadrature(self):
        for p in (Protocol.TWO_SLOT, Protocol.SECOND_FOUR_SLOT):
            mod = protocol_modulation(p)
            w = BALANCED_WEIGHTS if p.uses_weights else None
            for rho_db in (12.0, 28.0):
                pw = PowerProfile.balanced(rho_db)
                coeffs = coefficient_set(p, ANT, pw, w)
                c = sum_ber_closed_form(coeffs, ANT, pw, mod)
                q = sum_ber_quadrature(coeffs, ANT, pw, mod)
                assert c == pytest.approx(q, rel=1e-6)

    def test_precision_paths_agree(self):
        pw = PowerProfile.balanced(20.0)
        for ant in (ANT, AntennaConfig(2, 2, 2)):
            coeffs = coefficient_set(Protocol.FIRST_FOUR_SLOT, ant, pw)
            mod = protocol_modulation(Protocol.FIRST_FOUR_SLOT)
            f64 = sum_ber_closed_form(coeffs, ant, pw, mod, method="float64")
            mp_ = sum_ber_closed_form(coeffs, ant, pw, mod, method="mp")
            assert f64 == pytest.approx(mp_, rel=1e-9)

    def test_lower_bounds_simulation(self):
        p = Protocol.SECOND_THREE_SLOT
        mod = protocol_modulation(p)
        pw = PowerProfile.balanced(22.0)
        coeffs = coefficient_set(p, ANT, pw)
        closed = sum_ber_closed_form(coeffs, ANT, pw, mod)
        est = semi_analytic_sum_ber(p, ANT, pw, mod=mod, trials=300_000, seed=8,
                                    snr_form="exact")
        assert closed <= est.mean + 3.0 * est.std_error

    def test_asymptote_consistency_at_high_snr(self):
        # closed form approaches the power-law asymptote
        pw = PowerProfile.balanced(60.0)
        coeffs = coefficient_set(Protocol.TWO_SLOT, ANT, pw)
        mod = protocol_modulation(Protocol.TWO_SLOT)
        closed = sum_ber_closed_form(coeffs, ANT, pw, mod)
        prof = high_snr_profile(Protocol.TWO_SLOT, ANT, pw)
        asym = high_snr_sum_ber(prof, pw.rho_ar)
        assert closed / asym == pytest.approx(1.0, abs=0.01)

    def test_bessel_moment_identity_suite(self):
        res = check_bessel_moment_identity()
        assert res.passed, res.line()


class TestDistributionAgreement:
    def test_ks_suite(self):
        results = check_ks_suite(PowerProfile.balanced(30.0), trials=100_000, seed=21)
        for r in results:
            assert r.passed, r.line()

    def test_min_pair_cdf_shape(self):
        pw = PowerProfile.balanced(40.0)
        coeffs = coefficient_set(Protocol.TWO_SLOT, ANT, pw)
        grid = np.geomspace(1.0, 100 * pw.rho_ar, 200)
        vals = [min_pair_cdf("arb", float(x), coeffs, ANT, pw) for x in grid]
        assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(1.0, abs=1e-8)
