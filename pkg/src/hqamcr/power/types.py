"""Problem and result containers shared by the power-control solvers."""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..channel import ChannelEnv, FadingSpec, SensingModel, sample_fading
from .inner import inner_powers

__all__ = [
    "Constraints",
    "DualState",
    "SampleSet",
    "PowerPolicy",
    "TraceRow",
    "NonConvergenceError",
    "InfeasibleError",
]


class NonConvergenceError(RuntimeError):
    """The dual iteration exhausted its budget before the stopping rule held."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class InfeasibleError(ValueError):
    """The constraint region is empty."""


@dataclass(frozen=True)
class Constraints:
    """Linear power limits. Exactly one of ``p_pk`` and ``p_avg`` is set."""

    q_avg: float
    p_pk: Optional[float] = None
    p_avg: Optional[float] = None

    def __post_init__(self):
        if (self.p_pk is None) == (self.p_avg is None):
            raise ValueError("exactly one of p_pk and p_avg must be given")
        for name in ("q_avg", "p_pk", "p_avg"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive, got {v}")

    @property
    def mode(self):
        return "peak" if self.p_pk is not None else "avg"

    @classmethod
    def from_db(cls, q_avg_db, p_pk_db=None, p_avg_db=None):
        lin = lambda v: None if v is None else 10.0 ** (v / 10.0)  # noqa: E731
        return cls(q_avg=lin(q_avg_db), p_pk=lin(p_pk_db), p_avg=lin(p_avg_db))


@dataclass(frozen=True)
class DualState:
    mu1: float = 0.1
    mu2: float = 0.0

    def __post_init__(self):
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValueError("Lagrange multipliers must be non-negative")


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Frozen channel draws standing in for the expectations over fading.

    ``g2`` is the gain the transmitter knows: the true ``|g|^2`` with perfect
    CSI, the estimate ``|g_hat|^2`` otherwise. ``g2_true`` keeps the true
    gain when the two differ.
    """

    h2: np.ndarray
    g2: np.ndarray
    g2_true: Optional[np.ndarray] = None

    def __post_init__(self):
        h2 = np.asarray(self.h2, dtype=float)
        g2 = np.asarray(self.g2, dtype=float)
        if h2.ndim != 1 or h2.shape != g2.shape or h2.size < 1:
            raise ValueError("h2 and g2 must be non-empty 1-D arrays of equal length")
        if np.any(h2 < 0) or np.any(g2 < 0):
            raise ValueError("channel gains must be non-negative")
        object.__setattr__(self, "h2", h2)
        object.__setattr__(self, "g2", g2)
        if self.g2_true is None:
            object.__setattr__(self, "g2_true", g2)

    @property
    def size(self):
        return self.h2.size

    @classmethod
    def draw(cls, env: ChannelEnv, size: int, rng, sigma_e2: float = 0.0):
        """Draw ``size`` independent (h, g) pairs from the fading of ``env``.

        With ``sigma_e2 > 0`` the estimate ``g_hat`` is drawn with mean power
        ``omega_g - sigma_e2`` and the true gain is ``g_hat + e``, with
        ``e ~ CN(0, sigma_e2)`` independent of the estimate.
        """
        if size < 1:
            raise ValueError("sample set size must be at least 1")
        h2 = np.abs(sample_fading(env.h_spec, rng, size)) ** 2
        if sigma_e2 <= 0:
            g2 = np.abs(sample_fading(env.g_spec, rng, size)) ** 2
            return cls(h2, g2)
        if sigma_e2 >= env.g_spec.omega:
            raise ValueError("sigma_e2 must be smaller than the mean interference-link gain")
        g_hat = sample_fading(FadingSpec(env.g_spec.m, env.g_spec.omega - sigma_e2), rng, size)
        e = np.sqrt(sigma_e2 / 2.0) * (rng.standard_normal(size) + 1j * rng.standard_normal(size))
        return cls(h2, np.abs(g_hat) ** 2, np.abs(g_hat + e) ** 2)


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    phase: str
    mu1: float
    mu2: float
    interference: float
    avg_power: float
    cs1: float
    cs2: float


@dataclass(frozen=True, eq=False)
class PowerPolicy:
    """Power allocation rule returned by every optimizer.

    Call :meth:`powers` to apply the rule to channel draws. Statistical
    policies are constant and ignore the gains.
    """

    mode: str  # "instantaneous-perfect-CSI", "instantaneous-imperfect-CSI" or "statistical"
    constraints: Constraints
    lam: float
    alpha0: float
    alpha1: float
    sensing: SensingModel
    env: ChannelEnv
    duals: DualState = field(default_factory=lambda: DualState(0.0, 0.0))
    p_cap: float = np.inf
    silent_threshold: Optional[float] = None
    inner: str = "exact"
    p_const: Optional[tuple] = None
    cap_limited: bool = False
    iterations: int = 0
    method: str = ""
    trace: tuple = ()
    info: dict = field(default_factory=dict)

    def powers(self, h2, g2=None):
        """(P0, P1) for transmission-link gains ``h2`` and interference-link
        gains ``g2`` (the estimate under imperfect CSI)."""
        h2 = np.asarray(h2, dtype=float)
        if self.p_const is not None:
            return np.full(h2.shape, self.p_const[0]), np.full(h2.shape, self.p_const[1])
        if g2 is None:
            raise ValueError("instantaneous policies need the interference-link gain")
        gw = np.asarray(g2, dtype=float)
        if self.mode == "instantaneous-imperfect-CSI":
            gw = gw + self.env.sigma_e2
        return inner_powers(
            self.inner, self.duals.mu1, self.duals.mu2, h2, gw, self.lam,
            self.alpha0, self.alpha1, self.sensing, self.env, self.p_cap,
            self.silent_threshold,
        )
