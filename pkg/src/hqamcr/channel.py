"""Spectrum-sensing statistics, Nakagami-m fading and the cognitive
channel input-output model.

State and decision indices follow the usual convention: 0 means the
primary user is idle (H0 / detected idle), 1 means busy (H1 / detected busy).
"""
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "SensingModel",
    "FadingSpec",
    "ChannelEnv",
    "joint_sensing_probs",
    "posterior_state_probs",
    "sample_fading",
    "sample_power_gain",
    "draw_sensing",
    "channel_output",
    "sense_and_transmit",
]


def _check_prob(name, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


@dataclass(frozen=True)
class SensingModel:
    """Detection/false-alarm probabilities and primary-user priors."""

    p_detect: float
    p_false_alarm: float
    prior_busy: float
    prior_idle: float = None

    def __post_init__(self):
        if self.prior_idle is None:
            object.__setattr__(self, "prior_idle", 1.0 - self.prior_busy)
        for name in ("p_detect", "p_false_alarm", "prior_busy", "prior_idle"):
            _check_prob(name, getattr(self, name))
        if abs(self.prior_busy + self.prior_idle - 1.0) > 1e-12:
            raise ValueError("prior_busy + prior_idle must equal 1")

    @property
    def priors(self):
        return np.array([self.prior_idle, self.prior_busy])

    def joint(self):
        return joint_sensing_probs(self)

    def decision_probs(self):
        """Pr{decision = idle}, Pr{decision = busy}."""
        return self.joint().sum(axis=0)


@dataclass(frozen=True)
class FadingSpec:
    """Nakagami-m fading with shape ``m`` and mean power gain ``omega``."""

    m: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if self.m < 0.5:
            raise ValueError(f"Nakagami m must be >= 0.5, got {self.m}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega}")


@dataclass(frozen=True)
class ChannelEnv:
    """Noise and interference variances plus the fading of both links.

    ``h_spec`` describes the secondary transmission link and ``g_spec`` the
    link from the secondary transmitter to the primary receiver.
    ``sigma_e2`` is the variance of the estimation error on ``g``.
    """

    sigma_n2: float = 0.01
    sigma_w2: float = 0.5
    h_spec: FadingSpec = field(default_factory=FadingSpec)
    g_spec: FadingSpec = field(default_factory=FadingSpec)
    sigma_e2: float = 0.0

    def __post_init__(self):
        if self.sigma_n2 <= 0:
            raise ValueError("sigma_n2 must be positive")
        if self.sigma_w2 < 0 or self.sigma_e2 < 0:
            raise ValueError("sigma_w2 and sigma_e2 must be non-negative")

    @property
    def state_variances(self):
        """Total noise variance under H0 and under H1."""
        return np.array([self.sigma_n2, self.sigma_n2 + self.sigma_w2])


def joint_sensing_probs(s):
    """2x2 table ``T[j, i] = Pr{H_j, decision_i}``."""
    return np.array(
        [
            [s.prior_idle * (1.0 - s.p_false_alarm), s.prior_idle * s.p_false_alarm],
            [s.prior_busy * (1.0 - s.p_detect), s.prior_busy * s.p_detect],
        ]
    )


def posterior_state_probs(s, decision):
    """(Pr{H0 | decision}, Pr{H1 | decision}) by Bayes' rule."""
    col = joint_sensing_probs(s)[:, int(decision)]
    total = col.sum()
    if total <= 0.0:
        raise ValueError(f"sensing decision {decision} has zero probability")
    return col[0] / total, col[1] / total


def sample_power_gain(spec, rng, size=None):
    """Draw |h|^2 ~ Gamma(shape=m, scale=omega/m)."""
    return rng.gamma(spec.m, spec.omega / spec.m, size=size)


def sample_fading(spec, rng, size=None):
    """Complex Nakagami-m coefficient with uniform phase."""
    gain = sample_power_gain(spec, rng, size)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=size)
    return np.sqrt(gain) * np.exp(1j * phase)


def _cn(rng, variance, size):
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def draw_sensing(s, rng, size=None):
    """Draw true primary-user states and the sensing decisions."""
    state = np.asarray(rng.random(size) < s.prior_busy, dtype=np.int8)
    p_busy_decision = np.where(state == 1, s.p_detect, s.p_false_alarm)
    decision = np.asarray(rng.random(size) < p_busy_decision, dtype=np.int8)
    if size is None:
        return int(state), int(decision)
    return state, decision


def channel_output(env, symbol, h, state, rng):
    """y = h*s + n, plus the primary signal w when the primary user is active.

    The primary signal is redrawn for every symbol.
    """
    symbol = np.asarray(symbol, dtype=complex)
    size = np.broadcast(symbol, np.asarray(h), np.asarray(state)).shape
    y = h * symbol + _cn(rng, env.sigma_n2, size)
    if env.sigma_w2 > 0:
        y = y + np.where(np.asarray(state) == 1, _cn(rng, env.sigma_w2, size), 0.0)
    return y if np.ndim(y) else complex(y)


def sense_and_transmit(env, s, symbol, h, rng):
    """Draw the channel state and sensing decision, then pass ``symbol``
    through the channel. Returns ``(y, true_state, decision)``."""
    shape = np.shape(symbol)
    state, decision = draw_sensing(s, rng, size=shape if shape else None)
    y = channel_output(env, symbol, h, state, rng)
    return y, state, decision
