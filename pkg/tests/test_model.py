import numpy as np
import pytest

from onebit_mimo.model import (ModelError, constellation_symbols, draw_channel,
                               draw_noise, make_rng, quantize_one_bit)


def test_quantizer_signs():
    assert quantize_one_bit(np.array(0.5 - 0.3j)) == 1 - 1j
    assert quantize_one_bit(np.array(-2.0 + 0.1j)) == -1 + 1j


def test_quantizer_zero_tiebreak():
    assert quantize_one_bit(np.array(0.0 + 0.0j)) == 1 + 1j
    assert quantize_one_bit(np.array(0.0 - 3.0j)) == 1 - 1j


def test_quantizer_idempotent_and_alphabet():
    rng = make_rng(0, 0)
    y = draw_noise((50, 7), rng)
    r = quantize_one_bit(y)
    assert np.array_equal(quantize_one_bit(r), r)
    assert np.all(np.isin(r.real, (-1.0, 1.0)))
    assert np.all(np.isin(r.imag, (-1.0, 1.0)))
    assert np.allclose(np.abs(r) ** 2, 2.0)


@pytest.mark.parametrize("kind,size", [("bpsk", 2), ("qpsk", 4), ("16qam", 16)])
def test_constellation_power_and_size(kind, size):
    for snr in (0.1, 1.0, 10.0):
        c = constellation_symbols(kind, snr)
        assert c.size == size
        assert abs(np.mean(np.abs(c.symbols) ** 2) - snr) < 1e-12
        assert len(np.unique(c.symbols)) == size


def test_qpsk_symbols_explicit():
    c = constellation_symbols("qpsk", 2.0)
    assert sorted(c.symbols, key=lambda z: (z.real, z.imag)) == sorted(
        [1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j], key=lambda z: (z.real, z.imag))


def test_16qam_coordinates():
    c = constellation_symbols("16qam", 10.0)
    coords = np.concatenate([c.symbols.real, c.symbols.imag])
    assert np.allclose(np.unique(np.abs(coords)), [1.0, 3.0])


def test_degenerate_constellation_rejected():
    with pytest.raises(ModelError):
        constellation_symbols("bpsk", 0.0)
    with pytest.raises(ModelError):
        constellation_symbols("qpsk", -1.0)
    with pytest.raises(ModelError):
        constellation_symbols("8psk", 1.0)


def test_channel_unit_variance():
    rng = make_rng(1, 0)
    h = draw_channel(1, 1, "iid", np.random.default_rng(1)) * 0  # shape check
    draws = np.concatenate([draw_channel(100, 100, "iid", rng).ravel()
                            for _ in range(2)])
    assert abs(np.mean(np.abs(draws) ** 2) - 1.0) < 0.05
    assert abs(np.mean(draws)) < 0.02


def test_channel_fully_correlated_rows():
    rng = make_rng(2, 0)
    h = draw_channel(2, 4, "fully_correlated", rng)
    assert np.all(h == h[:, :1])
    assert h[0, 0] != h[1, 0]


def test_channel_iid_cross_correlation():
    rng = make_rng(3, 0)
    h = np.stack([draw_channel(4, 8, "iid", rng) for _ in range(10000)])
    flat = h.reshape(len(h), -1)
    c = flat.conj().T @ flat / len(h)
    off = c - np.diag(np.diag(c))
    assert np.max(np.abs(off)) < 0.05


def test_channel_invalid_dims():
    with pytest.raises(ModelError):
        draw_channel(0, 4, "iid", make_rng(0, 0))
    with pytest.raises(ModelError):
        draw_channel(1, 1, "sparse", make_rng(0, 0))


def test_rng_streams_reproducible_and_distinct():
    a = make_rng(7, 3).standard_normal(5)
    b = make_rng(7, 3).standard_normal(5)
    c = make_rng(7, 4).standard_normal(5)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
