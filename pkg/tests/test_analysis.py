"""Tests for capacity estimators, pairwise-error bounds and selection gains."""

import numpy as np
import pytest
from scipy import integrate

from stblab.analysis import (
    capacity_c0,
    capacity_code,
    capacity_code_highsnr,
    code_grammian_eigenvalues,
    golden_gain_2x1_mc,
    golden_gain_2x2_mc,
    golden_gain_analytic,
    golden_moments_mc,
    pep_bound,
)
from stblab.channel import draw_cn
from stblab.codes import get_code, induce_qostbc
from stblab.errors import ContractViolation

GRID = [0.0, 4.0, 8.0, 12.0, 16.0, 20.0]
SAMPLES = 20_000


@pytest.fixture(scope="module")
def paired_channels():
    rng = np.random.default_rng(1001)
    return {
        2: draw_cn(rng, (SAMPLES, 1, 2), 1.0),
        3: draw_cn(rng, (SAMPLES, 1, 3), 1.0),
        4: draw_cn(rng, (SAMPLES, 1, 4), 1.0),
    }


class TestCapacityC0:
    def test_single_antenna_against_quadrature(self):
        # E log2(1 + f |h|^2) with |h|^2 ~ Exp(1), integrated numerically
        rng = np.random.default_rng(7)
        estimates = capacity_c0(1, 1, [0.0, 10.0], 200_000, rng)
        for est in estimates:
            f = 10.0 ** (est.snr_db / 10.0)
            oracle, _ = integrate.quad(
                lambda x: np.log2(1.0 + f * x) * np.exp(-x), 0.0, 300.0
            )
            assert abs(est.bits_per_channel_use - oracle) < 4 * est.std_error

    def test_vanishes_at_low_snr(self):
        est = capacity_c0(2, 1, [-30.0], 10_000, np.random.default_rng(8))[0]
        assert est.bits_per_channel_use < 0.01

    def test_monotone_in_snr(self):
        ests = capacity_c0(2, 2, GRID, 10_000, np.random.default_rng(9))
        values = [e.bits_per_channel_use for e in ests]
        assert values == sorted(values)

    def test_needs_samples(self):
        with pytest.raises(ContractViolation):
            capacity_c0(2, 1, GRID, 0, np.random.default_rng(0))


class TestCapacityCode:
    def test_alamouti_is_information_lossless(self, paired_channels):
        ch = paired_channels[2]
        c0 = capacity_c0(2, 1, GRID, SAMPLES, channels=ch)
        cc = capacity_code(get_code("alamouti"), "none", GRID, SAMPLES, channels=ch)
        for a, b in zip(cc, c0):
            # paired draws make the match realization-exact, not just statistical
            assert a.bits_per_channel_use == pytest.approx(
                b.bits_per_channel_use, abs=1e-12
            )

    @pytest.mark.parametrize("name", ["ostbc34", "qostbc", "circulant3"])
    def test_coding_cannot_create_capacity(self, name, paired_channels):
        code = get_code(name)
        ch = paired_channels[code.m]
        c0 = capacity_c0(code.m, 1, GRID, SAMPLES, channels=ch)
        cc = capacity_code(code, "none", GRID, SAMPLES, channels=ch)
        for a, b in zip(cc, c0):
            combined = np.hypot(a.std_error, b.std_error)
            assert a.bits_per_channel_use <= b.bits_per_channel_use + 2 * combined

    def test_golden_bounded_under_energy_matched_factor(self, paired_channels):
        # the golden basis carries energy 5, so its own SNR convention
        # (factor f/5) is the fair information-losslessness comparison
        ch = paired_channels[2]
        shift = 10.0 * np.log10(5.0)
        c0 = capacity_c0(2, 1, GRID, SAMPLES, channels=ch)
        cc = capacity_code(
            get_code("golden-g1"), "none", [g - shift for g in GRID], SAMPLES, channels=ch
        )
        for a, b in zip(cc, c0):
            combined = np.hypot(a.std_error, b.std_error)
            assert a.bits_per_channel_use <= b.bits_per_channel_use + 2 * combined

    def test_rate_loss_of_ostbc34_is_strict(self, paired_channels):
        ch = paired_channels[4]
        c0 = capacity_c0(4, 1, GRID, SAMPLES, channels=ch)
        cc = capacity_code(get_code("ostbc34"), "none", GRID, SAMPLES, channels=ch)
        assert cc[-1].bits_per_channel_use < 0.8 * c0[-1].bits_per_channel_use

    def test_feedback_improves_qostbc_capacity(self, paired_channels):
        ch = paired_channels[4]
        base = capacity_code(get_code("qostbc"), "none", GRID, SAMPLES, channels=ch)
        fed = capacity_code(
            get_code("qostbc"), "closed-form", GRID, SAMPLES, K=4, channels=ch
        )
        for a, b in zip(fed, base):
            assert a.bits_per_channel_use >= b.bits_per_channel_use

    def test_feedback_shrinks_coupling(self, paired_channels):
        # |b| <= b without feedback per realization, so the smallest
        # eigenvalue (a - |b|) can only move up
        ch = paired_channels[4]
        base = code_grammian_eigenvalues(get_code("qostbc"), "none", ch)
        fed = code_grammian_eigenvalues(get_code("qostbc"), "closed-form", ch, K=8)
        assert np.all(fed.min(axis=1) >= base.min(axis=1) - 1e-9)

    @pytest.mark.parametrize(
        "name,n_rx", [("qostbc", 1), ("circulant3", 1), ("golden-g1", 2)]
    )
    def test_highsnr_approximation(self, name, n_rx):
        exact, approx = capacity_code_highsnr(
            get_code(name), 30.0, SAMPLES, np.random.default_rng(2), n_rx=n_rx
        )
        assert abs(exact - approx) / exact < 0.05


class TestPepBound:
    def test_identity_grammian(self):
        out = pep_bound(np.eye(4), 1.0)
        assert out.bound_value == pytest.approx(1.0 / 16.0)
        assert out.diversity_order == 4
        assert out.coding_gain == pytest.approx(1.0)

    def test_rank_deficient_channel(self):
        out = pep_bound(induce_qostbc([1.0, 0.0, 0.0, 1.0]), 2.0)
        assert out.diversity_order == 2
        assert out.coding_gain == pytest.approx(16.0, rel=1e-9)
        assert out.bound_value == pytest.approx(1.0 / 81.0, rel=1e-9)

    def test_monotone_in_snr_factor(self):
        heff = induce_qostbc([1.0, 0.5j, -0.25, 1.0 + 1.0j])
        values = [pep_bound(heff, f).bound_value for f in (0.1, 1.0, 10.0, 100.0)]
        assert values == sorted(values, reverse=True)

    def test_asymptotic_form(self):
        # bound -> 1 / (gain * f^d) from below as the factor grows
        heff = np.eye(4)
        f = 1000.0
        out = pep_bound(heff, f)
        asymptotic = 1.0 / (out.coding_gain * f**out.diversity_order)
        assert out.bound_value <= asymptotic
        assert asymptotic / out.bound_value - 1.0 < 0.01

    def test_rejects_bad_factor(self):
        with pytest.raises(ContractViolation):
            pep_bound(np.eye(2), 0.0)


class TestGoldenGains:
    def test_analytic_value(self):
        assert round(golden_gain_analytic(), 2) == 0.88

    def test_moments(self):
        mx, mn = golden_moments_mc(1_000_000, np.random.default_rng(1))
        assert mx == pytest.approx(1.5, rel=0.01)
        assert mn == pytest.approx(0.5, rel=0.01)

    def test_moments_scale_with_variance(self):
        mx, mn = golden_moments_mc(200_000, np.random.default_rng(2), sigma2=2.0)
        assert mx == pytest.approx(3.0, rel=0.02)
        assert mn == pytest.approx(1.0, rel=0.02)

    def test_gain_2x1_matches_analytic(self):
        gain = golden_gain_2x1_mc(1_000_000, np.random.default_rng(1))
        assert gain == pytest.approx(golden_gain_analytic(), abs=0.02)

    def test_selection_off_is_exactly_zero(self):
        assert golden_gain_2x1_mc(10_000, np.random.default_rng(3), selection=False) == 0.0
        assert (
            golden_gain_2x2_mc(100_000, np.random.default_rng(3), selection=False) == 0.0
        )

    def test_gain_2x2_band(self):
        gain = golden_gain_2x2_mc(200_000, np.random.default_rng(4))
        assert 0.55 < gain < 0.80

    def test_second_receive_antenna_shrinks_the_gain(self):
        rng = np.random.default_rng(5)
        g21 = golden_gain_2x1_mc(200_000, rng)
        g22 = golden_gain_2x2_mc(200_000, rng)
        assert 0.0 < g22 < g21

    def test_2x2_sample_floor(self):
        with pytest.raises(ContractViolation):
            golden_gain_2x2_mc(50_000, np.random.default_rng(0))
