import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqamcr.ber import ber_hp_instant, ber_lp_instant
from hqamcr.channel import ChannelEnv, SensingModel
from hqamcr.modem import (
    WORD_BITS,
    build_constellation,
    bits_to_word,
    map_detect,
    modulate,
    monte_carlo_ber,
    word_bits,
)

alphas = st.floats(0.05, 10.0)
powers = st.floats(1e-3, 1e3)


def test_geometry_examples():
    c = build_constellation(1.0, 1.0)
    assert c.d2 == pytest.approx(np.sqrt(0.1), rel=1e-14)
    assert np.allclose(np.unique(np.abs(c.points.real)), [0.31622776601683794, 0.9486832980505138])
    c = build_constellation(2.0, 1.0)
    assert c.d2 == pytest.approx(np.sqrt(1 / 20), rel=1e-14)
    assert c.d1 == pytest.approx(0.4472135954999579, rel=1e-14)


@given(alphas, powers)
def test_mean_power_and_levels(alpha, power):
    c = build_constellation(alpha, power)
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(power, rel=1e-12)
    mags = np.unique(np.round(np.abs(c.points.real) / c.d2, 9))
    assert np.allclose(mags, sorted({round(alpha, 9), round(alpha + 2, 9)}))
    assert c.d1 == pytest.approx(alpha * c.d2)


def test_domain_errors():
    for a, p in ((0.0, 1.0), (-1.0, 1.0), (1.0, 0.0)):
        with pytest.raises(ValueError):
            build_constellation(a, p)


def test_bijection_and_bit_helpers():
    c = build_constellation(1.5, 2.0)
    pts = modulate(c, np.arange(16))
    assert len(set(np.round(pts, 12))) == 16
    for k in range(16):
        assert bits_to_word(word_bits(k)) == k
        assert int(np.argmin(np.abs(c.points - modulate(c, k)))) == k


@given(alphas)
def test_gray_nearest_neighbours(alpha):
    c = build_constellation(alpha, 1.0)
    lv = c.levels
    for a, b in itertools.combinations(range(16), 2):
        pa, pb = c.points[a], c.points[b]
        same_q = np.isclose(pa.imag, pb.imag)
        same_i = np.isclose(pa.real, pb.real)
        ia = np.argmin(np.abs(lv - pa.real)), np.argmin(np.abs(lv - pa.imag))
        ib = np.argmin(np.abs(lv - pb.real)), np.argmin(np.abs(lv - pb.imag))
        adjacent = (same_q and abs(ia[0] - ib[0]) == 1) or (same_i and abs(ia[1] - ib[1]) == 1)
        if adjacent:
            assert np.sum(WORD_BITS[a] != WORD_BITS[b]) == 1


@given(alphas)
def test_hp_pair_constant_per_quadrant(alpha):
    c = build_constellation(alpha, 1.0)
    for k in range(16):
        quad = (c.points[k].real > 0, c.points[k].imag > 0)
        for k2 in range(16):
            if (c.points[k2].real > 0, c.points[k2].imag > 0) == quad:
                assert tuple(WORD_BITS[k][:2]) == tuple(WORD_BITS[k2][:2])


def test_single_bit_flip_geometry():
    c = build_constellation(1.3, 1.0)
    for k in range(16):
        # b1 flips the quadrant along the quadrature axis
        p, q = c.points[k], c.points[k ^ 0b1000]
        assert p.real == pytest.approx(q.real) and p.imag == pytest.approx(-q.imag)
        # b4 moves within the quadrant by 2 d2 along the in-phase axis
        p, q = c.points[k], c.points[k ^ 0b0001]
        assert p.imag == pytest.approx(q.imag)
        assert abs(p.real - q.real) == pytest.approx(2 * c.d2)


def _brute_force(y, h, decision, c, s, env):
    t = s.joint()[:, decision]
    post = t / t.sum()
    var = env.state_variances
    dens = [sum(post[j] * np.exp(-abs(y - h * pt) ** 2 / var[j]) / (np.pi * var[j]) for j in (0, 1))
            for pt in c.points]
    return int(np.argmax(dens))


def test_map_matches_brute_force_mixture(sensing, env):
    rng = np.random.default_rng(11)
    c = build_constellation(1.5, 1.0)
    n = 10**4
    h = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    y = h * c.points[rng.integers(0, 16, n)] + 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    for decision in (0, 1):
        got = map_detect(y, h, decision, c, sensing, env)
        ref = np.array([_brute_force(y[k], h[k], decision, c, sensing, env) for k in range(n)])
        assert np.array_equal(got, ref)


def test_map_is_nearest_neighbour_without_interference():
    env = ChannelEnv(sigma_w2=0.0)
    s = SensingModel(1.0, 0.0, 0.4)
    rng = np.random.default_rng(5)
    c = build_constellation(2.0, 3.0)
    n = 10**5
    h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y = 3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    nn = np.argmin(np.abs(y[:, None] - h[:, None] * c.points[None, :]), axis=1)
    assert np.array_equal(map_detect(y, h, 0, c, s, env), nn)


def test_map_tie_goes_to_lowest_index():
    env = ChannelEnv(sigma_w2=0.0)
    s = SensingModel(1.0, 0.0, 0.4)
    c = build_constellation(1.0, 1.0)
    for a, b in ((0, 1), (0, 2), (5, 7)):
        mid = 0.5 * (c.points[a] + c.points[b])
        if np.sum(WORD_BITS[a] != WORD_BITS[b]) == 1:
            assert map_detect(mid, 1.0, 0, c, s, env) == min(a, b)


def test_map_rejects_zero_channel(sensing, env):
    with pytest.raises(ValueError):
        map_detect(1.0, 0.0, 0, build_constellation(1.0, 1.0), sensing, env)


def test_monte_carlo_at_hp_one_percent(perfect, env):
    # alpha = 1: BER_HP = (1/2) sum_j Pr_j [Q(sqrt(1.8 P / s_j)) + Q(sqrt(0.2 P / s_j))]; solve for 0.01
    from scipy.optimize import brentq

    f = lambda p: ber_hp_instant(p, p, 1.0, 1.0, 1.0, perfect, env) - 0.01  # noqa: E731
    p = brentq(f, 1e-3, 1e3, xtol=1e-14)
    c = build_constellation(1.0, p)
    n = 10**6
    mc = monte_carlo_ber(c, c, perfect, env, 1.0, n, np.random.default_rng(99))
    sig_hp, sig_lp = mc.binomial_sigma(0.01, ber_lp_instant(p, p, 1.0, 1.0, 1.0, perfect, env))
    assert abs(mc.hp - 0.01) <= 3 * sig_hp
    assert abs(mc.lp - ber_lp_instant(p, p, 1.0, 1.0, 1.0, perfect, env)) <= 3 * sig_lp


def test_monte_carlo_zero_snr(sensing, env):
    c = build_constellation(1.0, 1e-12)
    mc = monte_carlo_ber(c, c, sensing, env, 1.0, 10**5, np.random.default_rng(1))
    sig, _ = mc.binomial_sigma(0.5, 0.5)
    assert abs(mc.hp - 0.5) <= 3 * sig and abs(mc.lp - 0.5) <= 3 * sig


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.1, 0.9), st.floats(0.0, 0.5))
def test_detector_batch_equals_scalar(alpha, pd, pf):
    s = SensingModel(pd, pf, 0.4)
    env = ChannelEnv()
    c = build_constellation(alpha, 1.0)
    rng = np.random.default_rng(0)
    y = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    h = 0.5 + 0.5j
    for d in (0, 1):
        if s.decision_probs()[d] == 0:
            continue
        batch = map_detect(y, h, d, c, s, env)
        assert [map_detect(v, h, d, c, s, env) for v in y] == list(batch)
