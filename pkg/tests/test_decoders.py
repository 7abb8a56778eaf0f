"""Tests for ML, zero-forcing, two-user and circulant-Fourier decoders."""

import numpy as np
import pytest

from stblab.channel import draw_cn
from stblab.codes import CirculantWeights, get_code, induce_alamouti, induce_circulant, induce_qostbc
from stblab.constellation import make_constellation
from stblab.decoders import (
    ML_CANDIDATE_GUARD,
    candidate_table,
    circulant_fourier_decode,
    ml_decode,
    mu_decorrelate,
    mu_ml_decode,
    mu_zf_decode,
    zf_decode,
)
from stblab.errors import ContractViolation, IllConditionedError

QAM4 = make_constellation(4)
RNG = np.random.default_rng(1717)


def random_channel(shape, rng=RNG):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_labels(l, rng=RNG):
    return rng.integers(0, 4, size=l)


class TestCandidateTable:
    def test_lexicographic_order(self):
        table = candidate_table(QAM4, 2)
        assert table.shape == (16, 2)
        np.testing.assert_allclose(table[0], [QAM4.points[0], QAM4.points[0]])
        np.testing.assert_allclose(table[1], [QAM4.points[0], QAM4.points[1]])
        np.testing.assert_allclose(table[4], [QAM4.points[1], QAM4.points[0]])


class TestMlDecode:
    def test_noiseless_recovery(self):
        for _ in range(50):
            labels = random_labels(2)
            heff = induce_alamouti(random_channel(2))
            r = 0.7 * (heff @ QAM4.points[labels])
            out = ml_decode(heff, r, QAM4, 2, scale=0.7)
            np.testing.assert_array_equal(out.labels, labels)
            assert out.metric == pytest.approx(0.0, abs=1e-18)

    def test_small_noise_recovery(self):
        heff = np.eye(2, dtype=complex)
        labels = np.array([2, 1])
        r = QAM4.points[labels] + 0.05 * np.array([1 + 1j, -1j])
        out = ml_decode(heff, r, QAM4, 2)
        np.testing.assert_array_equal(out.labels, labels)

    def test_tie_breaks_to_first_label_vector(self):
        # A rank-one channel summing both symbols cannot distinguish (a, b)
        # from (b, a); the lexicographically first label vector must win.
        heff = np.array([[1.0, 1.0]])
        r = np.array([QAM4.points[0] + QAM4.points[3]])
        out = ml_decode(heff, r, QAM4, 2)
        np.testing.assert_array_equal(out.labels, [0, 3])

    def test_complexity_counter(self):
        heff = np.eye(2, dtype=complex)
        out = ml_decode(heff, QAM4.points[:2], QAM4, 2)
        assert out.complexity_counter == 16

    def test_enumeration_guard(self):
        c16 = make_constellation(16)
        with pytest.raises(ContractViolation):
            ml_decode(np.eye(6, dtype=complex), np.zeros(6), c16, 6)
        assert 16**6 > ML_CANDIDATE_GUARD


class TestZfDecode:
    def test_noiseless_recovery(self):
        for _ in range(50):
            labels = random_labels(2)
            heff = induce_alamouti(random_channel(2))
            r = 1.3 * (heff @ QAM4.points[labels])
            out = zf_decode(heff, r, QAM4, 2, scale=1.3)
            np.testing.assert_array_equal(out.labels, labels)

    def test_matches_ml_on_orthogonal_design(self):
        # The Alamouti Grammian is a scaled identity, so slicing the
        # projected point is exactly the exhaustive search.
        for _ in range(200):
            labels = random_labels(2)
            heff = induce_alamouti(random_channel(2))
            r = heff @ QAM4.points[labels] + 0.5 * random_channel(2)
            ml = ml_decode(heff, r, QAM4, 2)
            zf = zf_decode(heff, r, QAM4, 2)
            np.testing.assert_array_equal(ml.labels, zf.labels)
            assert ml.metric == pytest.approx(zf.metric, rel=1e-9)

    def test_ml_metric_never_worse(self):
        for _ in range(100):
            heff = induce_qostbc(random_channel(4))
            r = random_channel(4)
            ml = ml_decode(heff, r, QAM4, 4)
            zf = zf_decode(heff, r, QAM4, 4)
            assert ml.metric <= zf.metric + 1e-9

    def test_singular_channel_still_decodes(self):
        # Rank-deficient induced channel: the pseudo-inverse projects onto
        # the observable subspace and slicing still returns a valid vector.
        heff = induce_qostbc(np.array([1.0, 0.0, 0.0, 1.0]))
        r = heff @ QAM4.points[[0, 1, 2, 3]]
        out = zf_decode(heff, r, QAM4, 4)
        assert out.labels.shape == (4,)
        assert np.all((out.labels >= 0) & (out.labels < 4))

    def test_complexity_counter(self):
        out = zf_decode(np.eye(2, dtype=complex), QAM4.points[:2], QAM4, 2)
        assert out.complexity_counter == 8


class TestTwoUser:
    def draw_system(self, rng, cross_scale=1.0):
        h1 = induce_alamouti(random_channel(2, rng))
        h2 = induce_alamouti(random_channel(2, rng)) * cross_scale
        g1 = induce_alamouti(random_channel(2, rng)) * cross_scale
        g2 = induce_alamouti(random_channel(2, rng))
        return h1, h2, g1, g2

    def test_decorrelation_zeroes_cross_terms(self):
        rng = np.random.default_rng(8)
        h1, h2, g1, g2 = self.draw_system(rng)
        c1 = QAM4.points[random_labels(2, rng)]
        c2 = QAM4.points[random_labels(2, rng)]
        r1 = h1 @ c1 + g1 @ c2
        r2 = h2 @ c1 + g2 @ c2
        r1p, r2p, hp, gp = mu_decorrelate(r1, r2, h1, h2, g1, g2)
        np.testing.assert_allclose(r1p, hp @ c1, atol=1e-10)
        np.testing.assert_allclose(r2p, gp @ c2, atol=1e-10)

    def test_no_interference_is_identity(self):
        rng = np.random.default_rng(9)
        h1, h2, g1, g2 = self.draw_system(rng, cross_scale=0.0)
        # fully decoupled links: G2 owns user 2, H1 owns user 1
        r1 = random_channel(2, rng)
        r2 = random_channel(2, rng)
        r1p, r2p, hp, gp = mu_decorrelate(r1, r2, h1, h2, g1, g2)
        np.testing.assert_array_equal(r1p, r1)
        np.testing.assert_array_equal(r2p, r2)
        np.testing.assert_allclose(hp, h1)
        np.testing.assert_allclose(gp, g2)

    def test_fully_correlated_collapses(self):
        rng = np.random.default_rng(10)
        h1 = induce_alamouti(random_channel(2, rng))
        g2 = induce_alamouti(random_channel(2, rng))
        # user 2 arrives through user 1's own matrix and vice versa
        _, _, hp, gp = mu_decorrelate(
            np.zeros(2), np.zeros(2), h1, h1, g2, g2
        )
        np.testing.assert_allclose(hp, np.zeros((2, 2)), atol=1e-12)
        np.testing.assert_allclose(gp, np.zeros((2, 2)), atol=1e-12)

    def test_singular_block_rejected(self):
        h1 = induce_alamouti(random_channel(2))
        with pytest.raises(ContractViolation, match="singular"):
            mu_decorrelate(
                np.zeros(2), np.zeros(2), h1, h1, np.zeros((2, 2)), np.zeros((2, 2))
            )

    def test_zf_noiseless_recovery(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            h1, h2, g1, g2 = self.draw_system(rng, cross_scale=0.4)
            l1, l2 = random_labels(2, rng), random_labels(2, rng)
            c1, c2 = QAM4.points[l1], QAM4.points[l2]
            r1 = 0.9 * (h1 @ c1 + g1 @ c2)
            r2 = 0.9 * (h2 @ c1 + g2 @ c2)
            u1, u2 = mu_zf_decode(r1, r2, h1, h2, g1, g2, QAM4, scale=0.9)
            np.testing.assert_array_equal(u1.labels, l1)
            np.testing.assert_array_equal(u2.labels, l2)

    def test_ml_noiseless_recovery_and_joint_metric(self):
        rng = np.random.default_rng(12)
        h1, h2, g1, g2 = self.draw_system(rng, cross_scale=0.4)
        l1, l2 = random_labels(2, rng), random_labels(2, rng)
        r1 = h1 @ QAM4.points[l1] + g1 @ QAM4.points[l2]
        r2 = h2 @ QAM4.points[l1] + g2 @ QAM4.points[l2]
        u1, u2 = mu_ml_decode(r1, r2, h1, h2, g1, g2, QAM4)
        np.testing.assert_array_equal(u1.labels, l1)
        np.testing.assert_array_equal(u2.labels, l2)
        assert u1.metric == u2.metric
        assert u1.complexity_counter == 4**4


class TestCirculantFourier:
    def test_noiseless_recovery_weighted(self):
        w = CirculantWeights()
        code = get_code("circulant3")
        rng = np.random.default_rng(13)
        for _ in range(50):
            h = random_channel(3, rng)
            labels = random_labels(3, rng)
            r = induce_circulant(h) @ code.map_symbols(QAM4.points[labels])
            try:
                out = circulant_fourier_decode(h, r, QAM4, weights=w)
            except IllConditionedError:
                continue
            np.testing.assert_array_equal(out.labels, labels)
            assert out.metric == pytest.approx(0.0, abs=1e-16)

    def test_noiseless_recovery_plain(self):
        code = get_code("circulant4")
        rng = np.random.default_rng(14)
        for _ in range(50):
            h = random_channel(4, rng)
            labels = random_labels(4, rng)
            r = induce_circulant(h) @ code.map_symbols(QAM4.points[labels])
            out = circulant_fourier_decode(h, r, QAM4)
            np.testing.assert_array_equal(out.labels, labels)

    @pytest.mark.parametrize("name", ["circulant3", "circulant4"])
    def test_matches_zf_on_matrix_system(self, name):
        # The equivalent matrix system folds the symbol map (weights or time
        # reversal) into the effective channel, so labels compare directly.
        code = get_code(name)
        transform = code.map_symbols(np.eye(code.m, dtype=complex))
        rng = np.random.default_rng(15)
        agree = 0
        trials = 300
        for _ in range(trials):
            h = random_channel(code.m, rng)
            labels = rng.integers(0, 4, size=code.l)
            r = induce_circulant(h) @ code.map_symbols(QAM4.points[labels])
            r = r + 0.3 * random_channel(code.m, rng)
            try:
                fast = circulant_fourier_decode(h, r, QAM4, weights=code.weights)
            except IllConditionedError:
                continue
            zf = zf_decode(induce_circulant(h) @ transform.T, r, QAM4, code.l)
            np.testing.assert_array_equal(fast.labels, zf.labels)
            assert fast.metric == pytest.approx(zf.metric, rel=1e-9, abs=1e-12)
            agree += 1
        assert agree > trials * 0.9

    def test_near_singular_rejected(self):
        with pytest.raises(IllConditionedError):
            circulant_fourier_decode(np.array([1.0, 1.0, 1.0]), np.zeros(3), QAM4)

    def test_weights_require_three_antennas(self):
        with pytest.raises(ContractViolation):
            circulant_fourier_decode(
                np.ones(4, dtype=complex), np.zeros(4), QAM4, weights=CirculantWeights()
            )

    def test_complexity_counter(self):
        out = circulant_fourier_decode(
            np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(4, dtype=complex), QAM4
        )
        assert out.complexity_counter == 16
