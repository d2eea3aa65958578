"""16-point hierarchical QAM with Gray labels and a sensing-aware MAP
detector.

A 4-bit word is stored as an integer ``b1 b2 b3 b4`` with ``b1`` the most
significant bit. ``b1 b2`` are the high-priority (HP) pair and select the
quadrant; ``b3 b4`` are the low-priority (LP) pair. ``b1, b3`` drive the
quadrature axis and ``b2, b4`` the in-phase axis, each pair with the Gray
level sequence 00, 01, 11, 10 from the most negative level up.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .channel import (
    FadingSpec,
    channel_output,
    draw_sensing,
    posterior_state_probs,
    sample_fading,
)

__all__ = [
    "HqamConstellation",
    "MonteCarloBer",
    "build_constellation",
    "word_bits",
    "bits_to_word",
    "modulate",
    "map_detect",
    "monte_carlo_ber",
]

# WORD_BITS[k] = (b1, b2, b3, b4) of word k
WORD_BITS = np.array([[(k >> s) & 1 for s in (3, 2, 1, 0)] for k in range(16)], dtype=np.int8)

# tie tolerance on the log-likelihood, relative
_TIE_RTOL = 1e-11


def _gray_level(msb, lsb):
    return 2 * msb + (msb ^ lsb)


@dataclass(frozen=True, eq=False)
class HqamConstellation:
    alpha: float
    power: float
    d1: float
    d2: float
    points: np.ndarray  # complex, indexed by word

    @property
    def levels(self):
        """Per-axis coordinates from the most negative level up."""
        a = self.alpha
        return np.array([-(a + 2.0), -a, a, a + 2.0]) * self.d2


def build_constellation(alpha, power):
    """Gray-labelled 16-HQAM with ratio ``alpha = d1/d2`` and mean power ``power``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not power > 0:
        raise ValueError(f"power must be positive, got {power}")
    d2 = np.sqrt(power / (2.0 * (alpha + 1.0) ** 2 + 2.0))
    d1 = alpha * d2
    levels = np.array([-(alpha + 2.0), -alpha, alpha, alpha + 2.0]) * d2
    b = WORD_BITS
    q_idx = _gray_level(b[:, 0], b[:, 2])
    i_idx = _gray_level(b[:, 1], b[:, 3])
    points = levels[i_idx] + 1j * levels[q_idx]
    points.setflags(write=False)
    return HqamConstellation(float(alpha), float(power), float(d1), float(d2), points)


def word_bits(words):
    """Bits (b1, b2, b3, b4) of each word, shape ``(..., 4)``."""
    return WORD_BITS[np.asarray(words)]


def bits_to_word(bits):
    bits = np.asarray(bits)
    return (bits[..., 0] << 3) | (bits[..., 1] << 2) | (bits[..., 2] << 1) | bits[..., 3]


def modulate(c, words):
    """Map 4-bit words (integers 0..15) onto constellation points."""
    return c.points[np.asarray(words)]


def _log_metric(y, h, decision, c, s, env):
    post = np.asarray(posterior_state_probs(s, decision))
    var = env.state_variances
    keep = post > 0
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    h = np.broadcast_to(np.asarray(h, dtype=complex), y.shape)
    dist2 = np.abs(y[:, None] - h[:, None] * c.points[None, :]) ** 2
    terms = [
        np.log(p) - np.log(np.pi * v) - dist2 / v
        for p, v in zip(post[keep], var[keep])
    ]
    return logsumexp(np.stack(terms, axis=0), axis=0)


def map_detect(y, h, decision, c, s, env):
    """MAP symbol decision under the two-component Gaussian mixture.

    ``c`` must be the constellation used under ``decision``. Symbols are
    equiprobable, so the prior drops out. Exact ties go to the lowest word.

    Returns the detected word(s).
    """
    if np.any(np.asarray(h) == 0):
        raise ValueError("map_detect needs a non-zero channel coefficient")
    metric = _log_metric(y, h, decision, c, s, env)
    best = metric.max(axis=1, keepdims=True)
    tol = _TIE_RTOL * np.maximum(1.0, np.abs(best))
    words = np.argmax(metric >= best - tol, axis=1)
    return words if np.ndim(y) else int(words[0])


@dataclass(frozen=True)
class MonteCarloBer:
    hp: float
    lp: float
    hp_se: float
    lp_se: float
    n_symbols: int

    def binomial_sigma(self, p_hp, p_lp):
        """Binomial standard deviations of the two rates at reference values."""
        n_bits = 2 * self.n_symbols
        return np.sqrt(p_hp * (1 - p_hp) / n_bits), np.sqrt(p_lp * (1 - p_lp) / n_bits)


def _simulate_block(c0, c1, s, env, h, rng):
    n = h.shape[0]
    words = rng.integers(0, 16, size=n)
    state, decision = draw_sensing(s, rng, size=n)
    consts = (c0, c1)
    tx = np.where(decision == 0, c0.points[words], c1.points[words])
    y = channel_output(env, tx, h, state, rng)
    detected = np.empty(n, dtype=np.int64)
    for i in (0, 1):
        sel = decision == i
        if np.any(sel):
            detected[sel] = map_detect(y[sel], h[sel], i, consts[i], s, env)
    errors = WORD_BITS[words] != WORD_BITS[detected]
    return errors[:, :2].sum(axis=1), errors[:, 2:].sum(axis=1)


def monte_carlo_ber(c0, c1, s, env, h, n_symbols, rng, symbols_per_draw=1000, chunk=1 << 16):
    """Empirical HP and LP bit error rates through the full chain.

    ``h`` is either a fixed complex coefficient or a :class:`FadingSpec`;
    in the latter case a new coefficient is drawn every ``symbols_per_draw``
    symbols and the standard errors are computed across fading blocks.
    """
    fading = isinstance(h, FadingSpec)
    block = symbols_per_draw if fading else 1
    n_blocks = int(np.ceil(n_symbols / block))
    n_symbols = n_blocks * block
    hp_err = np.empty(n_symbols)
    lp_err = np.empty(n_symbols)
    step = max(block, (chunk // block) * block)
    for start in range(0, n_symbols, step):
        n = min(step, n_symbols - start)
        if fading:
            hv = np.repeat(sample_fading(h, rng, size=n // block), block)
        else:
            hv = np.full(n, complex(h))
        e_hp, e_lp = _simulate_block(c0, c1, s, env, hv, rng)
        hp_err[start:start + n] = e_hp / 2.0
        lp_err[start:start + n] = e_lp / 2.0
    hp_blocks = hp_err.reshape(n_blocks, block).mean(axis=1)
    lp_blocks = lp_err.reshape(n_blocks, block).mean(axis=1)
    return MonteCarloBer(
        hp=float(hp_blocks.mean()),
        lp=float(lp_blocks.mean()),
        hp_se=float(hp_blocks.std(ddof=1) / np.sqrt(n_blocks)),
        lp_se=float(lp_blocks.std(ddof=1) / np.sqrt(n_blocks)),
        n_symbols=n_symbols,
    )
