"""Parameter schedules and event clocks for the continuized iterations.

A schedule fixes the four time functions (eta_t, eta'_t, gamma_t, gamma'_t)
of the coupled dynamics.  All five kinds reduce to two shapes:

* time-varying (merely convex): eta_t = 2/t, eta'_t = 0, constant gamma,
  gamma'_t linear in t;
* constant (strongly convex): eta_t = eta'_t = c with a constant gamma'.

Internally every kind is normalized to a triple (G, K, m): G is the
curvature scale dividing the x-step (L for exact gradients, R^2 under
multiplicative noise), K rescales the z-step (1, or kappa_tilde under
multiplicative noise), and m is the strong convexity (mu, or 0).  Then

    time-varying:  gamma = 1/G,  gamma'_t = t / (2 G K)
    constant:      c = sqrt(m / (G K)),  gamma = 1/G,  gamma' = 1/sqrt(m G K)

which reproduces each kind's published constants.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

KINDS = (
    "convex",
    "strongly_convex",
    "multiplicative_convex",
    "multiplicative_strongly_convex",
    "coordinate",
)


class SingularScheduleError(ValueError):
    """Evaluation of a 2/t schedule at t = 0."""


@dataclass(frozen=True)
class ParamSchedule:
    """One of the five schedule kinds plus the constants it consumes."""

    kind: str
    smoothness: float = 0.0
    mu: float = 0.0
    r_squared: float = 0.0
    kappa_tilde: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def convex(cls, smoothness: float) -> "ParamSchedule":
        _require_positive(smoothness, "smoothness")
        return cls("convex", smoothness=smoothness)

    @classmethod
    def strongly_convex(cls, smoothness: float, mu: float) -> "ParamSchedule":
        _require_positive(smoothness, "smoothness")
        _require_positive(mu, "mu")
        return cls("strongly_convex", smoothness=smoothness, mu=mu)

    @classmethod
    def multiplicative_convex(
        cls, r_squared: float, kappa_tilde: float
    ) -> "ParamSchedule":
        _require_positive(r_squared, "r_squared")
        _require_positive(kappa_tilde, "kappa_tilde")
        return cls(
            "multiplicative_convex", r_squared=r_squared, kappa_tilde=kappa_tilde
        )

    @classmethod
    def multiplicative_strongly_convex(
        cls, r_squared: float, kappa_tilde: float, mu: float
    ) -> "ParamSchedule":
        _require_positive(r_squared, "r_squared")
        _require_positive(kappa_tilde, "kappa_tilde")
        _require_positive(mu, "mu")
        return cls(
            "multiplicative_strongly_convex",
            r_squared=r_squared,
            kappa_tilde=kappa_tilde,
            mu=mu,
        )

    @classmethod
    def coordinate(cls, smoothness: float, mu: float = 0.0) -> "ParamSchedule":
        """Coordinate-descent schedule; ``smoothness`` is the directional
        constant L >= max_e M_ee R_ee / P_e^2, ``mu`` the strong convexity
        with respect to the projector norm."""
        _require_positive(smoothness, "smoothness")
        if mu < 0:
            raise ValueError("mu must be >= 0")
        return cls("coordinate", smoothness=smoothness, mu=mu)

    @property
    def is_multiplicative(self) -> bool:
        return self.kind in (
            "multiplicative_convex",
            "multiplicative_strongly_convex",
        )

    @property
    def scales(self) -> tuple[float, float, float]:
        """The normalized (G, K, m) triple."""
        if self.is_multiplicative:
            return self.r_squared, self.kappa_tilde, self.mu
        return self.smoothness, 1.0, self.mu

    @property
    def is_time_varying(self) -> bool:
        return self.mu == 0.0

    @property
    def mix_rate(self) -> float:
        """The constant rate c = eta = eta' of the strongly convex kinds."""
        g, k, m = self.scales
        if m == 0.0:
            raise ValueError("time-varying schedules have no constant mix rate")
        return math.sqrt(m / (g * k))


def _require_positive(v: float, name: str) -> None:
    if not v > 0:
        raise ValueError(f"{name} must be > 0, got {v}")


def schedule_eval(
    schedule: ParamSchedule, t: float
) -> tuple[float, float, float, float]:
    """Evaluate (eta, eta', gamma, gamma') at time t."""
    g, k, m = schedule.scales
    if schedule.is_time_varying:
        if t <= 0:
            raise SingularScheduleError("2/t schedule is singular at t = 0")
        return 2.0 / t, 0.0, 1.0 / g, t / (2.0 * g * k)
    c = schedule.mix_rate
    return c, c, 1.0 / g, 1.0 / math.sqrt(m * g * k)


def discrete_params(
    schedule: ParamSchedule, t_k: float, t_next: float
) -> tuple[float, float, float, float]:
    """Random Nesterov weights (tau, tau', gamma~, gamma~') for one event gap.

    These are the closed-form coefficients of the three-sequence recursion
    obtained by integrating the mixing ODE over [t_k, t_next) and applying
    the jump at t_next (the z-step uses gamma'_{t_next}).
    """
    if t_k < 0 or t_next <= t_k:
        raise ValueError(f"need 0 <= t_k < t_next, got {t_k}, {t_next}")
    g, k, m = schedule.scales
    if schedule.is_time_varying:
        tau = 1.0 - (t_k / t_next) ** 2
        return tau, 0.0, 1.0 / g, t_next / (2.0 * g * k)
    c = schedule.mix_rate
    gap = t_next - t_k
    tau = 0.5 * (1.0 - math.exp(-2.0 * c * gap))
    tau_p = math.tanh(c * gap)
    return tau, tau_p, 1.0 / g, 1.0 / math.sqrt(m * g * k)


@dataclass(frozen=True)
class EventClock:
    """Inter-arrival law of gradient events.

    ``exponential(rate)`` is the Poisson clock; ``geometric(p, tick)`` waits
    tick * Geometric(p) between events and interpolates toward the Poisson
    clock as p -> 0 with tick = p.
    """

    kind: str
    rate: float = 1.0
    p: float = 1.0
    tick: float = 1.0

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "EventClock":
        _require_positive(rate, "rate")
        return cls("exponential", rate=rate)

    @classmethod
    def geometric(cls, p: float, tick: float) -> "EventClock":
        if not 0 < p <= 1:
            raise ValueError(f"p must be in (0, 1], got {p}")
        _require_positive(tick, "tick")
        return cls("geometric", p=p, tick=tick)


def sample_interarrival(clock: EventClock, rng: np.random.Generator) -> float:
    """Draw one waiting time from the clock.

    Both laws invert one uniform draw, so runs on different clocks but the
    same seed are coupled event by event (the geometric wait converges to
    the exponential one as p -> 0 with tick = p).
    """
    u = rng.random()
    if clock.kind == "exponential":
        return -math.log(1.0 - u) / clock.rate
    if clock.p == 1.0:
        return clock.tick
    trials = 1.0 + math.floor(math.log(1.0 - u) / math.log1p(-clock.p))
    return clock.tick * trials


@dataclass(frozen=True)
class LyapunovCoeffs:
    """Coefficients (A_t, B_t) of the certificate phi_t, plus the norm flag."""

    a_t: float
    b_t: float
    multiplicative: bool


def lyapunov_coeffs(schedule: ParamSchedule, t: float) -> LyapunovCoeffs:
    """A_t and B_t matching the schedule kind, normalized to A_0 = 1 in the
    constant case and B_t = 1 in the time-varying case."""
    g, k, m = schedule.scales
    if schedule.is_time_varying:
        return LyapunovCoeffs(
            a_t=t * t / (4.0 * g * k), b_t=1.0, multiplicative=schedule.is_multiplicative
        )
    a_t = math.exp(schedule.mix_rate * t)
    return LyapunovCoeffs(
        a_t=a_t, b_t=m * a_t, multiplicative=schedule.is_multiplicative
    )
