"""Event loops: the continuized iteration, its discrete twin, and baselines.

The continuized run alternates closed-form mixing of the coupled pair (x, z)
with gradient jumps at clock events.  Because the mixing ODE integrates
exactly, the event-time snapshots coincide (to rounding) with the
three-sequence recursion with random weights, which is also provided here
and used as a cross-check in the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .problems import (
    ConvexProblem,
    DimensionMismatchError,
    LeastSquaresProblem,
    NoiseModel,
    stochastic_gradient,
)
from .schedules import (
    EventClock,
    LyapunovCoeffs,
    ParamSchedule,
    discrete_params,
    lyapunov_coeffs,
    sample_interarrival,
    schedule_eval,
)
from .seeding import RunStreams, as_streams
from .trace import Trace

Array = np.ndarray


@dataclass(frozen=True)
class CoupledState:
    """The coupled pair (x, z) at time t after k gradient events."""

    x: Array
    z: Array
    t: float
    event_count: int

    def __post_init__(self) -> None:
        if self.x.shape != self.z.shape:
            raise DimensionMismatchError(
                f"x and z disagree: {self.x.shape} vs {self.z.shape}"
            )


def initial_state(x0, z0=None) -> CoupledState:
    x0 = np.asarray(x0, dtype=float).copy()
    z0 = x0.copy() if z0 is None else np.asarray(z0, dtype=float).copy()
    return CoupledState(x=x0, z=z0, t=0.0, event_count=0)


def mix_closed_form(
    state: CoupledState, schedule: ParamSchedule, until: float
) -> CoupledState:
    """Advance the mixing ODE from state.t to ``until`` in closed form.

    Time-varying kinds keep z fixed and contract x toward z by (t0/t)^2;
    constant kinds contract both variables toward their midpoint by
    exp(-2c dt).  At t0 = 0 the time-varying flow collapses x onto z, the
    exact limit of the 2/t rate.
    """
    if until < state.t:
        raise ValueError(f"cannot mix backwards: {until} < {state.t}")
    if until == state.t:
        return state
    if schedule.is_time_varying:
        shrink = (state.t / until) ** 2
        x = state.z + shrink * (state.x - state.z)
        return replace(state, x=x, t=until)
    decay = math.exp(-2.0 * schedule.mix_rate * (until - state.t))
    mid = 0.5 * (state.x + state.z)
    return replace(
        state,
        x=mid + (state.x - mid) * decay,
        z=mid + (state.z - mid) * decay,
        t=until,
    )


def gradient_jump(
    state: CoupledState,
    gamma: float,
    gamma_p: float,
    g: Array,
    extra_x_factor: float = 1.0,
) -> CoupledState:
    """Apply one gradient event: x and z step along g, the event count ticks.

    ``extra_x_factor`` is 1 except for the coordinate kind, whose x-step
    carries the additional R_ee / P_e weight.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != state.x.shape:
        raise DimensionMismatchError(
            f"gradient has shape {g.shape}, state has {state.x.shape}"
        )
    return CoupledState(
        x=state.x - gamma * extra_x_factor * g,
        z=state.z - gamma_p * g,
        t=state.t,
        event_count=state.event_count + 1,
    )


def lyapunov_value(
    state: CoupledState, coeffs: LyapunovCoeffs, problem: ConvexProblem
) -> float:
    """The certificate phi_t whose ensemble mean is non-increasing.

    Noiseless kinds: A_t (f(x) - f_*) + B_t/2 |z - x_*|^2.  Multiplicative
    kinds shift the norms: A_t/2 |x - x_*|^2 + B_t/2 |z - x_*|^2_{H^-1}.
    """
    dz = state.z - problem.optimum
    if coeffs.multiplicative:
        if not isinstance(problem, LeastSquaresProblem):
            raise TypeError("multiplicative certificate needs a least-squares problem")
        dx = state.x - problem.optimum
        return 0.5 * coeffs.a_t * float(dx @ dx) + 0.5 * coeffs.b_t * problem.dist_sq_hinv(dz)
    return coeffs.a_t * problem.gap(state.x) + 0.5 * coeffs.b_t * float(dz @ dz)


def _metrics(
    state: CoupledState, problem: ConvexProblem, schedule: ParamSchedule
) -> dict[str, float]:
    dx = state.x - problem.optimum
    gap = problem.gap(state.x)
    dist_sq = float(dx @ dx)
    values = {"gap": gap, "dist_sq": dist_sq}
    coeffs = lyapunov_coeffs(schedule, state.t)
    dz = state.z - problem.optimum
    if not coeffs.multiplicative:
        values["lyapunov"] = coeffs.a_t * gap + 0.5 * coeffs.b_t * float(dz @ dz)
    elif isinstance(problem, LeastSquaresProblem):
        values["lyapunov"] = (
            0.5 * coeffs.a_t * dist_sq + 0.5 * coeffs.b_t * problem.dist_sq_hinv(dz)
        )
    return values


def run_continuized(
    problem: ConvexProblem,
    noise: NoiseModel,
    schedule: ParamSchedule,
    clock: EventClock,
    horizon: float,
    rng: RunStreams | int,
    *,
    x0=None,
    z0=None,
    checkpoints: Sequence[float] = (),
    record_event_states: bool = False,
) -> Trace:
    """Simulate the continuized iteration up to ``horizon``.

    Gradients are evaluated at the left limit x_{T-} of each event.  Metrics
    are recorded at every event and, by mixing a throwaway copy forward, at
    each requested checkpoint time, so ensembles are comparable on a common
    grid.  Time-varying schedules require x0 = z0 (their mixing flow is
    constant before the first event, which sidesteps the t = 0 singularity).
    """
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    streams = as_streams(rng)
    if x0 is None:
        x0 = np.zeros(problem.dimension)
    state = initial_state(x0, z0)
    if state.x.shape != (problem.dimension,):
        raise DimensionMismatchError(
            f"x0 has shape {state.x.shape}, problem dimension is {problem.dimension}"
        )
    if schedule.is_time_varying and not np.array_equal(state.x, state.z):
        raise ValueError("time-varying schedules require x0 == z0")

    grid = sorted(float(t) for t in checkpoints)
    if any(t <= 0 for t in grid):
        raise ValueError("checkpoints must be > 0")
    trace = Trace(event_states=[] if record_event_states else None)
    ci = 0

    def flush_checkpoints(limit: float, inclusive: bool) -> None:
        nonlocal ci
        while ci < len(grid) and (
            grid[ci] < limit or (inclusive and grid[ci] == limit)
        ):
            snap = mix_closed_form(state, schedule, grid[ci])
            trace.add(snap.t, snap.event_count, _metrics(snap, problem, schedule), False)
            ci += 1

    while True:
        t_next = state.t + sample_interarrival(clock, streams.clock)
        if t_next > horizon:
            break
        flush_checkpoints(t_next, inclusive=False)
        pre = mix_closed_form(state, schedule, t_next)
        g = stochastic_gradient(problem, noise, pre.x, streams.noise)
        _, _, gamma, gamma_p = schedule_eval(schedule, t_next)
        state = gradient_jump(pre, gamma, gamma_p, g)
        trace.add(state.t, state.event_count, _metrics(state, problem, schedule), True)
        if record_event_states:
            trace.event_states.append(state)

    flush_checkpoints(horizon, inclusive=True)
    trace.terminal_state = mix_closed_form(state, schedule, horizon)
    return trace


def run_three_sequence(
    problem: ConvexProblem,
    schedule: ParamSchedule,
    event_times: Sequence[float],
    *,
    noise: NoiseModel | None = None,
    noise_rng: np.random.Generator | None = None,
    x0=None,
    z0=None,
) -> tuple[list[Array], list[Array], list[Array]]:
    """The discrete twin: Nesterov recursion with random weights.

    Returns (xs, ys, zs) where xs[k], zs[k] are the snapshots after k events
    (xs[0] = x0) and ys[k] is the point whose gradient drives event k+1.
    The weights come from ``discrete_params`` over the supplied event times.
    """
    noise = noise or NoiseModel.none()
    x = np.zeros(problem.dimension) if x0 is None else np.asarray(x0, dtype=float).copy()
    z = x.copy() if z0 is None else np.asarray(z0, dtype=float).copy()
    xs, ys, zs = [x.copy()], [], [z.copy()]
    t_prev = 0.0
    for t_next in event_times:
        tau, tau_p, gamma, gamma_p = discrete_params(schedule, t_prev, t_next)
        y = x + tau * (z - x)
        if noise.kind == "none":
            g = problem.grad_oracle(y)
        else:
            g = stochastic_gradient(problem, noise, y, noise_rng)
        x = y - gamma * g
        z = z + tau_p * (y - z) - gamma_p * g
        xs.append(x.copy())
        ys.append(y.copy())
        zs.append(z.copy())
        t_prev = t_next
    return xs, ys, zs


def nesterov_weights_convex(iters: int) -> list[tuple[float, float]]:
    """The (A_k, A_{k+1}) pairs of the deterministic convex recursion."""
    pairs = []
    a = 0.0
    for _ in range(iters):
        a_next = a + 0.5 * (1.0 + math.sqrt(4.0 * a + 1.0))
        pairs.append((a, a_next))
        a = a_next
    return pairs


def run_nesterov(
    problem: ConvexProblem,
    variant: str,
    iters: int,
    *,
    x0=None,
    z0=None,
) -> Trace:
    """Classical accelerated baseline, convex or strongly convex variant."""
    if variant not in ("convex", "strongly_convex"):
        raise ValueError(f"unknown variant {variant!r}")
    big_l = problem.smoothness
    mu = problem.strong_convexity
    if variant == "strongly_convex" and mu <= 0:
        raise ValueError("strongly_convex variant needs mu > 0")
    x = np.zeros(problem.dimension) if x0 is None else np.asarray(x0, dtype=float).copy()
    z = x.copy() if z0 is None else np.asarray(z0, dtype=float).copy()

    if variant == "convex":
        weights = nesterov_weights_convex(iters)
    else:
        q = math.sqrt(mu / big_l)
        const = (q / (1.0 + q), q, 1.0 / big_l, 1.0 / math.sqrt(mu * big_l))

    trace = Trace()
    trace.add(0.0, 0, {"gap": problem.gap(x)}, True)
    for k in range(iters):
        if variant == "convex":
            a, a_next = weights[k]
            tau = 1.0 - a / a_next
            tau_p, gamma, gamma_p = 0.0, 1.0 / big_l, (a_next - a) / big_l
        else:
            tau, tau_p, gamma, gamma_p = const
        y = x + tau * (z - x)
        g = problem.grad_oracle(y)
        x = y - gamma * g
        z = z + tau_p * (y - z) - gamma_p * g
        trace.add(float(k + 1), k + 1, {"gap": problem.gap(x)}, True)
    trace.terminal_state = CoupledState(x=x, z=z, t=float(iters), event_count=iters)
    return trace


def run_gd(problem: ConvexProblem, step: float, iters: int, *, x0=None) -> Trace:
    """Plain gradient descent baseline with a fixed step in (0, 1/L]."""
    if not 0 < step <= 1.0 / problem.smoothness:
        raise ValueError(f"step must lie in (0, 1/L], got {step}")
    x = np.zeros(problem.dimension) if x0 is None else np.asarray(x0, dtype=float).copy()
    trace = Trace()
    trace.add(0.0, 0, {"gap": problem.gap(x)}, True)
    for k in range(iters):
        x = x - step * problem.grad_oracle(x)
        trace.add(float(k + 1), k + 1, {"gap": problem.gap(x)}, True)
    trace.terminal_state = CoupledState(x=x, z=x.copy(), t=float(iters), event_count=iters)
    return trace
