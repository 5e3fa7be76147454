import itertools
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turboeq.signal import (
    AliasingError,
    DualPolWaveform,
    ModFormat,
    ShapeError,
    SymbolFrame,
    evm_db,
    exact_llr_demap,
    gray_map,
    hard_demap,
    rrc_impulse,
    rrc_shape,
    rrc_taps,
    wdm_demux_center,
    wdm_mux,
)
from turboeq.rxdsp import matched_filter_downsample


def random_frame(n, m=4, seed=0):
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, (n, 2 * m), dtype=np.uint8)
    return bits, gray_map(bits, ModFormat(m))


class TestModFormat:
    @pytest.mark.parametrize("m", [1, 2, 4, 6])
    def test_unit_energy(self, m):
        pts = ModFormat(m).constellation
        assert len(pts) == 2**m
        assert abs(np.mean(np.abs(pts) ** 2) - 1) < 1e-12

    @pytest.mark.parametrize("m", [2, 4, 6])
    def test_labels_are_a_bijection(self, m):
        labels = ModFormat(m).labels
        assert len({tuple(r) for r in labels}) == 2**m

    def test_16qam_axis_neighbours_differ_in_one_bit(self):
        fmt = ModFormat(4)
        pts, labels = fmt.constellation, fmt.labels
        step = np.min(np.abs(np.diff(np.unique(np.round(pts.real, 12)))))
        pairs = 0
        for i, j in itertools.combinations(range(16), 2):
            d = pts[j] - pts[i]
            if np.isclose(abs(d), step) and (np.isclose(d.real, 0) or np.isclose(d.imag, 0)):
                pairs += 1
                assert np.sum(labels[i] != labels[j]) == 1
        assert pairs == 24  # 4x4 grid: 12 horizontal + 12 vertical neighbours

    def test_odd_m_rejected(self):
        with pytest.raises(ValueError):
            ModFormat(3)

    def test_from_name(self):
        assert ModFormat.from_name("16QAM").m == 4
        assert ModFormat.from_name("qpsk").m == 2


class TestGrayMap:
    def test_qpsk_zero_bits(self):
        fr = gray_map(np.zeros(4, np.uint8), ModFormat(2))
        assert fr.x[0] == pytest.approx((1 + 1j) / np.sqrt(2), abs=1e-15)
        assert fr.y[0] == pytest.approx((1 + 1j) / np.sqrt(2), abs=1e-15)

    def test_layout_x_then_y(self):
        bits = np.array([0, 0, 1, 1], np.uint8)
        fr = gray_map(bits, ModFormat(2))
        assert fr.x[0] == pytest.approx((1 + 1j) / np.sqrt(2))
        assert fr.y[0] == pytest.approx((-1 - 1j) / np.sqrt(2))

    def test_length_must_divide(self):
        with pytest.raises(ShapeError):
            gray_map(np.zeros(7, np.uint8), ModFormat(2))

    @pytest.mark.parametrize("m", [1, 2, 4, 6])
    def test_roundtrip_all_patterns(self, m):
        fmt = ModFormat(m)
        n = fmt.bits_per_symbol
        if n <= 12:
            ints = np.arange(2**n)
        else:
            ints = np.random.default_rng(0).integers(0, 2**n, 5000)
        bits = ((ints[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)
        fr = gray_map(bits, fmt)
        assert np.array_equal(hard_demap(fr, fmt), bits.ravel())

    def test_average_energy_per_pol(self):
        _, fr = random_frame(20000)
        assert abs(np.mean(np.abs(fr.x) ** 2) - 1) < 0.02
        assert abs(np.mean(np.abs(fr.y) ** 2) - 1) < 0.02

    def test_frame_requires_equal_lengths(self):
        with pytest.raises(ShapeError):
            SymbolFrame(np.zeros(3, complex), np.zeros(4, complex))


def _direct_llr(r, fmt, nv):
    """High-precision summation over every constellation point."""
    out = []
    for k in range(fmt.m):
        num = mp.fsum(mp.exp(-abs(mp.mpc(r) - mp.mpc(s)) ** 2 / nv) for s, lab in zip(fmt.constellation, fmt.labels) if lab[k] == 0)
        den = mp.fsum(mp.exp(-abs(mp.mpc(r) - mp.mpc(s)) ** 2 / nv) for s, lab in zip(fmt.constellation, fmt.labels) if lab[k] == 1)
        out.append(float(mp.log(num) - mp.log(den)))
    return out


class TestExactLlrDemap:
    def test_origin_is_uninformative_for_qpsk(self):
        llr = exact_llr_demap(SymbolFrame(np.zeros(1, complex), np.zeros(1, complex)), ModFormat(2), 0.3)
        assert np.all(llr == 0)

    def test_on_point_signs_and_growth(self):
        fmt = ModFormat(4)
        bits, fr = random_frame(50)
        small = exact_llr_demap(fr, fmt, 1e-2)
        tiny = exact_llr_demap(fr, fmt, 1e-4)
        assert np.array_equal((small < 0).astype(np.uint8), bits)
        assert np.all(np.abs(tiny) > 10 * np.abs(small) - 1e-9)

    def test_matches_high_precision_summation(self):
        fmt = ModFormat(4)
        rng = np.random.default_rng(5)
        r = rng.normal(size=20) + 1j * rng.normal(size=20)
        llr = exact_llr_demap(SymbolFrame(r, r), fmt, 0.2)
        mp.mp.dps = 30
        for i in range(20):
            ref = _direct_llr(r[i], fmt, 0.2)
            assert np.allclose(llr[i, :4], ref, atol=1e-9, rtol=0)

    @settings(max_examples=25, deadline=None)
    @given(
        st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 3), st.sampled_from([1, 2, 4])
    )
    def test_property_against_direct_sum(self, re, im, nv, m):
        fmt = ModFormat(m)
        r = np.array([re + 1j * im])
        llr = exact_llr_demap(SymbolFrame(r, r), fmt, nv)
        mp.mp.dps = 30
        assert np.allclose(llr[0, : fmt.m], _direct_llr(r[0], fmt, nv), atol=1e-9, rtol=0)

    def test_rejects_nonpositive_noise(self):
        _, fr = random_frame(4)
        with pytest.raises(ValueError):
            exact_llr_demap(fr, ModFormat(4), 0.0)


class TestRrc:
    def test_truncated_taps_unit_energy(self):
        assert np.sum(rrc_taps(0.1, 4, 64) ** 2) == pytest.approx(1, abs=1e-9)

    def test_periodic_impulse_unit_energy(self):
        assert np.sum(rrc_impulse(0.1, 4, 512) ** 2) == pytest.approx(1, abs=1e-9)

    def test_raised_cosine_cascade_is_nyquist(self):
        h = rrc_impulse(0.1, 4, 512)
        rc = np.fft.ifft(np.fft.fft(h) ** 2).real
        at_symbols = rc[::4]
        assert np.max(np.abs(at_symbols[1:])) < 1e-6 * abs(at_symbols[0])

    def test_stopband_below_minus_40_db(self):
        os_, n = 4, 512
        h = rrc_impulse(0.1, os_, n)
        H = np.abs(np.fft.fft(h))
        f = np.abs(np.fft.fftfreq(len(h), d=1 / os_))
        stop = H[f > 0.55 + 1e-9]
        assert 20 * np.log10(stop.max() / H.max()) < -40

    def test_short_span_warns(self):
        _, fr = random_frame(256)
        with pytest.warns(UserWarning):
            rrc_shape(fr, 0.1, 4, span_symbols=4)

    def test_shape_and_matched_filter_is_identity(self):
        _, fr = random_frame(2048, seed=3)
        back = matched_filter_downsample(rrc_shape(fr, 0.1, 4), 0.1, 4)
        assert np.max(np.abs(back.stacked() - fr.stacked())) < 1e-6

    def test_output_power_equals_symbol_power(self):
        _, fr = random_frame(4096, seed=4)
        w = rrc_shape(fr, 0.1, 4)
        sym = np.mean(np.abs(fr.x) ** 2 + np.abs(fr.y) ** 2)
        assert w.power == pytest.approx(sym, rel=0.01)

    @settings(max_examples=15, deadline=None)
    @given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1000))
    def test_linearity(self, a, b, seed):
        _, f1 = random_frame(64, seed=seed)
        _, f2 = random_frame(64, seed=seed + 1)
        comb = SymbolFrame(a * f1.x + b * f2.x, a * f1.y + b * f2.y)
        lhs = rrc_shape(comb, 0.1, 4)
        r1, r2 = rrc_shape(f1, 0.1, 4), rrc_shape(f2, 0.1, 4)
        assert np.allclose(lhs.x, a * r1.x + b * r2.x, atol=1e-9)
        assert np.allclose(lhs.y, a * r1.y + b * r2.y, atol=1e-9)

    def test_invalid_arguments(self):
        _, fr = random_frame(16)
        with pytest.raises(ValueError):
            rrc_shape(fr, 0.0, 4)
        with pytest.raises(ValueError):
            rrc_shape(fr, 0.1, 1)


def _channel(seed, n=2048, power=1.0):
    _, fr = random_frame(n, seed=seed)
    w = rrc_shape(fr, 0.1, 4)
    s = np.sqrt(power / w.power)
    return fr, w.replace(w.x * s, w.y * s)


class TestWdm:
    def test_single_channel_identity(self):
        _, w = _channel(0)
        out = wdm_mux([w], 37.4e9)
        assert np.array_equal(out.x, w.x) and np.array_equal(out.y, w.y)

    def test_power_adds_for_disjoint_spectra(self):
        chans = [_channel(s, power=p)[1] for s, p in zip(range(3), (1.0, 2.0, 0.5))]
        out = wdm_mux(chans, 37.4e9, 34e9 * 1.1)
        total = sum(c.power for c in chans)
        assert abs(10 * np.log10(out.power / total)) < 0.01

    def test_loopback_evm(self):
        fr, centre = _channel(10)
        chans = [_channel(11)[1], centre, _channel(12)[1]]
        out = wdm_demux_center(wdm_mux(chans, 37.4e9, 34e9 * 1.1), 34e9 * 1.1)
        back = matched_filter_downsample(out, 0.1, 4)
        scale = np.sqrt(centre.power / 2)
        assert evm_db(back.stacked() / scale, fr.stacked()) < -30

    def test_aliasing_detected(self):
        chans = [_channel(s)[1] for s in range(3)]
        with pytest.raises(AliasingError):
            wdm_mux(chans, 60e9, 34e9 * 1.1)

    def test_even_count_rejected(self):
        chans = [_channel(s)[1] for s in range(2)]
        with pytest.raises(ValueError):
            wdm_mux(chans, 37.4e9)

    def test_demux_full_band_identity(self):
        _, w = _channel(0)
        out = wdm_demux_center(w, w.fs)
        assert np.array_equal(out.x, w.x)

    def test_demux_removes_out_of_band_tone(self):
        n, fs = 4096, 136e9
        t = np.arange(n) / fs
        tone = np.exp(2j * np.pi * (fs * 1000 / n) * t)  # ~33 GHz, on the DFT grid
        w = DualPolWaveform(tone, tone.copy(), fs)
        out = wdm_demux_center(w, 37.4e9)
        assert out.power < 1e-10 * w.power

    def test_demux_rejects_excess_bandwidth(self):
        _, w = _channel(0)
        with pytest.raises(ValueError):
            wdm_demux_center(w, 2 * w.fs)


def test_no_warnings_on_default_path():
    _, fr = random_frame(128)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        matched_filter_downsample(rrc_shape(fr), 0.1, 4)
