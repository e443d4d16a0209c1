"""Block framing, the zero-forcing equalizers, and bit-error counting."""

import numpy as np
import pytest

from helpers import qfunc, random_stable_pair
from iirofdm.channel import ChannelRealization, compute_coeffs, first_order_dft
from iirofdm.exceptions import FramingError, SingularSubcarrierError
from iirofdm.fdrelay import simulate_fd_link
from iirofdm.numerics import dft, gaussian_complex, idft, make_rng
from iirofdm.receiver import (
    demap_and_count,
    demap_symbols,
    equalize_iir,
    equalize_mixed,
    equalize_truncated,
    equalize_two_tap,
    extract_blocks,
)
from iirofdm.txchain import QPSK, map_bits, precode_frame, standard_cp_frame


def _random_blocks(rng, m, n):
    bits = rng.integers(0, 2, m * n * 2, dtype=np.uint8)
    return map_bits(bits, QPSK, n), bits


def _proposed_rx(ch, beta, m, n, rng, *, noiseless, payload_rng):
    """Minimal guard-designed chain used by the loopback tests here."""
    c = compute_coeffs(ch, beta)
    blocks, bits = _random_blocks(payload_rng, m, n)
    alpha = abs(beta * ch.h_rr) ** 2
    frame = precode_frame(blocks, c.a0, c.a1, alpha)
    x = np.concatenate([frame.stream, [0j]])
    link = simulate_fd_link(x, ch, beta, rng, noiseless=noiseless)
    yb = extract_blocks(link.y, n, link.delay_offset)
    return equalize_iir(yb, c), blocks, bits, frame, c, link


class TestExtractBlocks:
    def test_single_block(self):
        stream = np.array([9, 0, 1, 2, 3], dtype=complex)
        np.testing.assert_array_equal(extract_blocks(stream, 4, 0),
                                      [[0, 1, 2, 3]])

    def test_offset_skips_delay_sample(self):
        stream = np.array([7, 9, 0, 1, 2, 3], dtype=complex)
        np.testing.assert_array_equal(extract_blocks(stream, 4, 1),
                                      [[0, 1, 2, 3]])

    def test_trailing_remainder_ignored(self):
        stream = np.arange(12, dtype=complex)
        assert extract_blocks(stream, 4, 0).shape == (2, 4)

    def test_too_short_stream_rejected(self):
        with pytest.raises(FramingError):
            extract_blocks(np.arange(4, dtype=complex), 4, 0)
        with pytest.raises(FramingError):
            extract_blocks(np.arange(5, dtype=complex), 4, 3)

    def test_round_trip_with_cp_transmitter(self):
        rng = make_rng(1)
        blocks, _ = _random_blocks(rng, 5, 8)
        stream = standard_cp_frame(blocks)
        time_blocks = extract_blocks(stream, 8, 0)
        recovered = dft(time_blocks) / np.sqrt(8)
        np.testing.assert_allclose(recovered, blocks, atol=1e-12)


class TestEqualizeIir:
    def test_single_tap_is_flat_scale(self):
        c = compute_coeffs(
            ChannelRealization(1.0, 1.0, 0.0, 0.0, 0.1, 0.1), beta=2.0)
        y = gaussian_complex(make_rng(2), 1.0, size=16)
        eq = equalize_iir(y, c, 16)
        np.testing.assert_allclose(eq.freq, c.a0 * dft(y), atol=1e-12)

    def test_time_domain_is_circular_two_tap(self):
        # hand check at N = 4: x_hat[0] = a0*y[0] + a1*y[3]
        c = compute_coeffs(
            ChannelRealization(1.0, 1.0, 0.25, 0.0, 0.1, 0.1), beta=2.0)
        y = np.array([1 + 1j, 2.0, -1j, 0.5], dtype=complex)
        eq = equalize_iir(y, c, 4)
        expected = c.a0 * y + c.a1 * np.roll(y, 1)
        np.testing.assert_allclose(eq.time, expected, atol=1e-12)
        np.testing.assert_allclose(eq.time, idft(eq.freq), atol=1e-12)

    def test_noiseless_chain_returns_scaled_symbols(self):
        rng = make_rng(3)
        for _ in range(10):
            ch, beta = random_stable_pair(rng)
            eq, blocks, _, frame, _, _ = _proposed_rx(
                ch, beta, 10, 64, None, noiseless=True, payload_rng=rng)
            err = np.max(np.abs(eq.freq / frame.data_scale - blocks))
            assert err < 1e-9

    def test_linearity(self):
        c = compute_coeffs(
            ChannelRealization(1.0, 1.0, 0.3, 0.0, 0.1, 0.1), beta=1.5)
        rng = make_rng(4)
        y1 = gaussian_complex(rng, 1.0, size=32)
        y2 = gaussian_complex(rng, 1.0, size=32)
        lhs = equalize_iir(y1 + y2, c, 32)
        rhs1 = equalize_iir(y1, c, 32)
        rhs2 = equalize_iir(y2, c, 32)
        np.testing.assert_allclose(lhs.freq, rhs1.freq + rhs2.freq, atol=1e-10)


class TestEqualizeMixed:
    def test_unit_numerator_reduces_to_one_step(self):
        ch = ChannelRealization(1.0, 1.0, 0.3, 0.0, 0.1, 0.1)
        c0 = compute_coeffs(ch, beta=1.5)
        c = type(c0)(a0=c0.a0, a1=c0.a1, b0=1.0, b1=0.0)
        y = gaussian_complex(make_rng(5), 1.0, size=16)
        np.testing.assert_allclose(equalize_mixed(y, c, 16).freq,
                                   equalize_iir(y, c, 16).freq, atol=1e-12)

    def test_two_step_equals_one_shot(self):
        rng = make_rng(6)
        ch, beta = random_stable_pair(rng, var_sd=0.1)
        c = compute_coeffs(ch, beta)
        y = gaussian_complex(rng, 1.0, size=32)
        a = first_order_dft(c.a0, c.a1, 32)
        b = first_order_dft(c.b0, c.b1, 32)
        intermediate = dft(y) / b
        np.testing.assert_allclose(equalize_mixed(y, c, 32).freq,
                                   a * intermediate, atol=1e-12)

    def test_noiseless_direct_chain_loopback(self):
        rng = make_rng(7)
        for _ in range(10):
            ch, beta = random_stable_pair(rng, var_sd=0.1)
            c = compute_coeffs(ch, beta)
            blocks, _ = _random_blocks(rng, 8, 64)
            alpha = abs(beta * ch.h_rr) ** 2
            frame = precode_frame(blocks, c.a0, c.a1, alpha)
            link = simulate_fd_link(frame.stream, ch, beta, None,
                                    with_direct=True, noiseless=True)
            yb = extract_blocks(link.y, 64, link.delay_offset)
            eq = equalize_mixed(yb, c, 64)
            # the literal two-tap cascade leaves the known flat factor a0
            recovered = eq.freq / c.a0 / frame.data_scale
            assert np.max(np.abs(recovered - blocks)) < 1e-9

    def test_singular_numerator_names_subcarrier(self):
        ch = ChannelRealization(1.0, 1.0, 0.1, 0.5, 0.1, 0.1)
        c0 = compute_coeffs(ch, beta=1.0)
        c = type(c0)(a0=c0.a0, a1=c0.a1, b0=0.5, b1=-0.5)  # null at k = 0
        with pytest.raises(SingularSubcarrierError) as err:
            equalize_mixed(np.ones(8, dtype=complex), c, 8)
        assert err.value.k == 0


class TestEqualizeTruncated:
    def test_exact_when_channel_is_two_taps(self):
        rng = make_rng(8)
        ch = ChannelRealization(0.8 + 0.1j, 1.2 - 0.3j, 0.0, 0.0, 0.1, 0.1)
        beta = 1.7
        blocks, _ = _random_blocks(rng, 6, 32)
        stream = standard_cp_frame(blocks)
        link = simulate_fd_link(np.concatenate([stream, [0j]]), ch, beta,
                                None, noiseless=True)
        yb = extract_blocks(link.y, 32, link.delay_offset)
        eq = equalize_truncated(yb, ch, beta, 32)
        np.testing.assert_allclose(eq.freq / np.sqrt(32), blocks, atol=1e-10)

    def _residual_power(self, pole_mag, rng):
        ch = ChannelRealization(1.0, 1.0, pole_mag, 0.0, 0.1, 0.1)
        beta = 1.0
        blocks, _ = _random_blocks(rng, 20, 64)
        stream = standard_cp_frame(blocks)
        link = simulate_fd_link(np.concatenate([stream, [0j]]), ch, beta,
                                None, noiseless=True)
        yb = extract_blocks(link.y, 64, link.delay_offset)
        eq = equalize_truncated(yb, ch, beta, 64)
        return float(np.mean(np.abs(eq.freq / np.sqrt(64) - blocks) ** 2))

    def test_residual_isi_present_and_growing_with_pole(self):
        rng = make_rng(9)
        p_at = {mag: self._residual_power(mag, rng) for mag in (0.3, 0.5, 0.7)}
        assert p_at[0.5] > 1e-6
        assert p_at[0.3] < p_at[0.5] < p_at[0.7]

    def test_residual_tracks_convolution_tail_energy(self):
        # the untreated taps j >= 3 hold energy ~ alpha^2/(1-alpha) relative
        # to the main tap; the measured residual should be within an order
        # of magnitude of that tail estimate
        rng = make_rng(10)
        for mag in (0.4, 0.6):
            measured = self._residual_power(mag, rng)
            alpha = mag ** 2
            tail = alpha ** 2 / (1 - alpha)
            assert tail / 10 < measured < tail * 10


class TestDemap:
    def test_noiseless_symbols_have_zero_errors(self):
        rng = make_rng(11)
        bits = rng.integers(0, 2, 2 * 64 * 4, dtype=np.uint8)
        blocks = map_bits(bits, QPSK, 64)
        rec = demap_and_count(blocks, bits, QPSK, 1.0, scheme="x",
                              sweep_value=1.0)
        assert rec.errors == 0 and rec.bits == bits.size

    def test_all_symbols_flipped_gives_ber_one(self):
        rng = make_rng(12)
        bits = rng.integers(0, 2, 2 * 64, dtype=np.uint8)
        blocks = map_bits(bits, QPSK, 64)
        rec = demap_and_count(-blocks, bits, QPSK)
        assert rec.ber == 1.0

    def test_awgn_ber_matches_q_function(self):
        # QPSK at Es/N0 = 10 dB: BER = Q(sqrt(10))
        rng = make_rng(13)
        n_bits = 256 * 8192
        bits = rng.integers(0, 2, n_bits, dtype=np.uint8)
        sym = map_bits(bits, QPSK, 128).ravel()
        noisy = sym + gaussian_complex(rng, 0.1, size=sym.size)
        rec = demap_and_count(noisy.reshape(-1, 128), bits, QPSK)
        expected = qfunc(np.sqrt(10.0))
        sigma = np.sqrt(expected * n_bits)
        assert abs(rec.errors - expected * n_bits) < 3 * sigma

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            demap_and_count(QPSK.points[:4], np.zeros(6, dtype=np.uint8), QPSK)

    def test_symbol_scale_applied_before_slicing(self):
        bits = np.array([0, 0, 0, 1, 1, 0, 1, 1], dtype=np.uint8)
        blocks = 7.5 * map_bits(bits, QPSK, 4)
        assert demap_and_count(blocks, bits, QPSK, 7.5).errors == 0

    def test_demap_symbols_nearest_point(self):
        noisy = QPSK.points + 0.05 * (1 - 1j)
        np.testing.assert_array_equal(
            demap_symbols(noisy, QPSK), QPSK.bit_table.ravel())


class TestNoiseMapping:
    def test_equalized_relay_noise_is_scaled_raw_noise(self):
        # noise-only run: on block positions 1..N-1 the equalized output is
        # (relay noise)/h_sr plus the equalized destination noise
        rng = make_rng(14)
        ch, beta = random_stable_pair(rng, alpha_range=(0.2, 0.8))
        c = compute_coeffs(ch, beta)
        n, m = 32, 12
        x = np.zeros(m * (n + 1) + 1, dtype=complex)
        link = simulate_fd_link(x, ch, beta, make_rng(15))
        eq = equalize_iir(extract_blocks(link.y, n, 1), c, n)
        relay_blocks = extract_blocks(link.n_relay, n, 0)
        dest_eq = equalize_iir(extract_blocks(link.n_dest, n, 1), c, n)
        expected = relay_blocks / ch.h_sr + dest_eq.time
        assert np.max(np.abs(eq.time[:, 1:] - expected[:, 1:])) < 1e-9


def test_equalize_two_tap_inverts_known_fir():
    rng = make_rng(16)
    blocks, _ = _random_blocks(rng, 4, 16)
    t0, t1 = 0.9 - 0.2j, 0.4 + 0.1j
    h = first_order_dft(t0, t1, 16)
    y = idft(h * dft(blocks))
    eq = equalize_two_tap(y, t0, t1, 16)
    np.testing.assert_allclose(eq.freq, dft(blocks), atol=1e-10)
