import numpy as np
import pytest
from hypothesis import given, strategies as st

from albedobench import colorspace as cs
from albedobench.errors import InputRangeError

# Standard CIEDE2000 verification pairs (Sharma, Wu, Dalal 2005 supplementary
# data): (L1, a1, b1, L2, a2, b2, expected dE00).
CIEDE2000_PAIRS = [
    (50.0, 2.6772, -79.7751, 50.0, 0.0, -82.7485, 2.0425),
    (50.0, 3.1571, -77.2803, 50.0, 0.0, -82.7485, 2.8615),
    (50.0, 2.8361, -74.0200, 50.0, 0.0, -82.7485, 3.4412),
    (50.0, -1.3802, -84.2814, 50.0, 0.0, -82.7485, 1.0000),
    (50.0, -1.1848, -84.8006, 50.0, 0.0, -82.7485, 1.0000),
    (50.0, -0.9009, -85.5211, 50.0, 0.0, -82.7485, 1.0000),
    (50.0, 0.0, 0.0, 50.0, -1.0, 2.0, 2.3669),
    (50.0, -1.0, 2.0, 50.0, 0.0, 0.0, 2.3669),
    (50.0, 2.49, -0.001, 50.0, -2.49, 0.0009, 7.1792),
    (50.0, 2.49, -0.001, 50.0, -2.49, 0.0010, 7.1792),
    (50.0, 2.49, -0.001, 50.0, -2.49, 0.0011, 7.2195),
    (50.0, 2.49, -0.001, 50.0, -2.49, 0.0012, 7.2195),
    (50.0, -0.001, 2.49, 50.0, 0.0009, -2.49, 4.8045),
    (50.0, -0.001, 2.49, 50.0, 0.0010, -2.49, 4.8045),
    (50.0, -0.001, 2.49, 50.0, 0.0011, -2.49, 4.7461),
    (50.0, 2.5, 0.0, 50.0, 0.0, -2.5, 4.3065),
    (50.0, 2.5, 0.0, 73.0, 25.0, -18.0, 27.1492),
    (50.0, 2.5, 0.0, 61.0, -5.0, 29.0, 22.8977),
    (50.0, 2.5, 0.0, 56.0, -27.0, -3.0, 31.9030),
    (50.0, 2.5, 0.0, 58.0, 24.0, 15.0, 19.4535),
    (50.0, 2.5, 0.0, 50.0, 3.1736, 0.5854, 1.0000),
    (50.0, 2.5, 0.0, 50.0, 3.2972, 0.0, 1.0000),
    (50.0, 2.5, 0.0, 50.0, 1.8634, 0.5757, 1.0000),
    (50.0, 2.5, 0.0, 50.0, 3.2592, 0.3350, 1.0000),
    (60.2574, -34.0099, 36.2677, 60.4626, -34.1751, 39.4387, 1.2644),
    (63.0109, -31.0961, -5.8663, 62.8187, -29.7946, -4.0864, 1.2630),
    (61.2901, 3.7196, -5.3901, 61.4292, 2.2480, -4.9620, 1.8731),
    (35.0831, -44.1164, 3.7933, 35.0232, -40.0716, 1.5901, 1.8645),
    (22.7233, 20.0904, -46.6940, 23.0331, 14.9730, -42.5619, 2.0373),
    (36.4612, 47.8580, 18.3852, 36.2715, 50.5065, 21.2231, 1.4146),
    (90.8027, -2.0831, 1.4410, 91.1528, -1.6435, 0.0447, 1.4441),
    (90.9257, -0.5406, -0.9208, 88.6381, -0.8985, -0.7239, 1.5381),
    (6.7747, -0.2908, -2.4247, 5.8714, -0.0985, -2.2286, 0.6377),
    (2.0776, 0.0795, -1.1350, 0.9033, -0.0636, -0.5514, 0.9082),
]

# Linear sRGB -> Lab reference points, frozen from an independent
# colorimetry implementation (tolerance covers matrix-precision variants).
LAB_POINTS = [
    ((1.0, 1.0, 1.0), (100.0, -0.0025, 0.0047)),
    ((0.0, 0.0, 0.0), (0.0, 0.0, 0.0)),
    ((0.18, 0.18, 0.18), (49.4961, -0.0014, 0.0026)),
    ((0.5, 0.25, 0.125), (61.1459, 14.6475, 27.8578)),
    ((0.03, 0.4, 0.8), (65.7626, -12.0895, -40.1330)),
    ((0.7, 0.7, 0.2), (85.1957, -13.2861, 46.2391)),
    ((0.02, 0.02, 0.02), (15.4872, -0.0007, 0.0013)),
    ((0.9, 0.1, 0.3), (60.2994, 63.9971, -0.6393)),
]


class TestTransfers:
    def test_decode_fixed_points(self):
        assert cs.srgb_decode(0.0) == 0.0
        assert cs.srgb_decode(1.0) == pytest.approx(1.0, abs=1e-12)

    def test_decode_midpoint(self):
        assert cs.srgb_decode(0.5) == pytest.approx(0.2140, abs=1e-4)

    def test_encode_clamps(self):
        assert cs.srgb_encode(1.5) == 1.0
        assert cs.srgb_encode(-0.2) == 0.0
        assert cs.srgb_encode(0.0) == 0.0

    def test_round_trip_grid(self):
        x = np.linspace(0.0, 1.0, 256)
        back = cs.srgb_decode(cs.srgb_encode(x))
        assert np.abs(back - x).max() < 1e-6
        fwd = cs.srgb_encode(cs.srgb_decode(x))
        assert np.abs(fwd - x).max() < 1e-6

    def test_decode_rejects_out_of_range(self):
        with pytest.raises(InputRangeError):
            cs.srgb_decode(np.array([0.5, 1.2]))
        with pytest.raises(InputRangeError):
            cs.srgb_decode(np.array([-0.01]))

    def test_decode_monotone(self, rng):
        x = np.sort(rng.uniform(0.0, 1.0, 100))
        y = cs.srgb_decode(x)
        assert np.all(np.diff(y) >= 0.0)


class TestAdobeConversion:
    def test_white_is_shared(self):
        out, n = cs.adobe_linear_to_srgb_linear(np.array([1.0, 1.0, 1.0]))
        assert np.abs(out - 1.0).max() < 1e-4
        assert n == 0

    def test_black(self):
        out, n = cs.adobe_linear_to_srgb_linear(np.zeros(3))
        assert np.all(out == 0.0)
        assert n == 0

    def test_pure_adobe_green_clips(self):
        # Adobe green lies outside the sRGB gamut: the matrix product sends
        # it to a negative red (and blue) channel before clamping.
        m = cs.XYZ_TO_SRGB @ cs.ADOBE_TO_XYZ
        pre = m @ np.array([0.0, 1.0, 0.0])
        assert pre[0] < 0.0
        out, n = cs.adobe_linear_to_srgb_linear(np.array([0.0, 1.0, 0.0]))
        assert out[0] == 0.0
        assert out[1] == pytest.approx(1.0, abs=1e-4)
        assert n == int(np.count_nonzero(pre < 0.0)) and n >= 1

    def test_clip_count_over_image(self, rng):
        img = rng.uniform(0.0, 1.0, (4, 5, 3))
        img[0, 0] = [0.0, 1.0, 0.0]
        out, n = cs.adobe_linear_to_srgb_linear(img)
        assert out.min() >= 0.0
        assert n >= 1


class TestGrayscale:
    def test_mean_example(self):
        assert cs.to_grayscale(np.array([0.2, 0.4, 0.6])) == pytest.approx(0.4)

    def test_neutral_identity(self, rng):
        c = rng.uniform(0.0, 2.0, (6, 7))
        img = np.repeat(c[:, :, None], 3, axis=2)
        assert np.allclose(cs.to_grayscale(img), c)

    def test_matches_pixel_loop(self, rng):
        img = rng.uniform(0.0, 1.0, (8, 8, 3))
        gray = cs.to_grayscale(img)
        for y in range(8):
            for x in range(8):
                assert gray[y, x] == pytest.approx(img[y, x].mean(), abs=1e-15)

    @given(c=st.floats(0.0, 100.0))
    def test_commutes_with_scaling(self, c):
        img = np.array([[[0.2, 0.5, 0.8]]])
        assert cs.to_grayscale(c * img) == pytest.approx(c * cs.to_grayscale(img))


class TestLab:
    @pytest.mark.parametrize("rgb,expected", LAB_POINTS)
    def test_reference_points(self, rgb, expected):
        lab = cs.linear_srgb_to_lab(np.array(rgb))
        assert np.abs(lab - np.array(expected)).max() < 2e-2

    def test_white_neutral(self):
        lab = cs.linear_srgb_to_lab(np.array([1.0, 1.0, 1.0]))
        assert lab[0] == pytest.approx(100.0, abs=1e-3)
        assert abs(lab[1]) < 0.01 and abs(lab[2]) < 0.01

    def test_vectorised_matches_scalar(self, rng):
        pts = rng.uniform(0.0, 1.5, (11, 3))
        batch = cs.linear_srgb_to_lab(pts)
        for i in range(len(pts)):
            assert np.allclose(batch[i], cs.linear_srgb_to_lab(pts[i]))


class TestCiede2000:
    @pytest.mark.parametrize("case", CIEDE2000_PAIRS)
    def test_verification_pairs(self, case):
        l1, a1, b1, l2, a2, b2, expected = case
        got = cs.ciede2000((l1, a1, b1), (l2, a2, b2))
        assert got == pytest.approx(expected, abs=1e-3)

    def test_zero_on_equal(self, rng):
        for _ in range(50):
            lab = rng.uniform([0, -80, -80], [100, 80, 80])
            assert cs.ciede2000(lab, lab) == 0.0

    def test_symmetric(self, rng):
        a = rng.uniform([0, -80, -80], [100, 80, 80], (1000, 3))
        b = rng.uniform([0, -80, -80], [100, 80, 80], (1000, 3))
        assert np.allclose(cs.ciede2000(a, b), cs.ciede2000(b, a), atol=1e-12)

    def test_nonnegative(self, rng):
        a = rng.uniform([0, -80, -80], [100, 80, 80], (500, 3))
        b = rng.uniform([0, -80, -80], [100, 80, 80], (500, 3))
        assert np.all(cs.ciede2000(a, b) >= 0.0)

    @given(
        la=st.floats(0, 100), aa=st.floats(-60, 60), ba=st.floats(-60, 60),
        lb=st.floats(0, 100), ab=st.floats(-60, 60), bb=st.floats(-60, 60),
    )
    def test_symmetry_property(self, la, aa, ba, lb, ab, bb):
        x = (la, aa, ba)
        y = (lb, ab, bb)
        assert cs.ciede2000(x, y) == pytest.approx(cs.ciede2000(y, x), abs=1e-9)
