"""Event-driven asynchronous gossip on a weighted graph.

Edges activate at Poisson times; naive gossip averages the two endpoint
values, the accelerated variant keeps a second local variable per node and
mixes the pair (x_v, z_v) toward its midpoint between that node's own
events.  Mixing is node-local, so a node's ODE is only advanced lazily when
the node takes part in an event; checkpoints advance a throwaway copy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import Graph, SpectralCache, gossip_rates
from .problems import LeastSquaresProblem, make_least_squares
from .schedules import EventClock, sample_interarrival
from .seeding import RunStreams, as_streams
from .trace import Trace

Array = np.ndarray


@dataclass(frozen=True)
class GossipParams:
    """Mixing rate and z-step of the accelerated pairwise update."""

    mix_rate: float
    z_step: float
    algo: str = "accelerated"

    def __post_init__(self) -> None:
        if self.algo not in ("naive", "accelerated"):
            raise ValueError(f"unknown gossip algo {self.algo!r}")

    @classmethod
    def from_cache(cls, cache: SpectralCache, algo: str = "accelerated") -> "GossipParams":
        _, theta_arg = gossip_rates(cache)
        return cls(
            mix_rate=theta_arg,
            z_step=1.0 / math.sqrt(2.0 * cache.mu_gossip * cache.r_max),
            algo=algo,
        )


@dataclass
class GossipNetworkState:
    """Per-node estimates with per-node clocks for lazy mixing."""

    x: list[float]
    z: list[float]
    last_t: list[float]
    t: float
    target: float


def initial_network_state(x0) -> GossipNetworkState:
    values = [float(v) for v in np.asarray(x0, dtype=float)]
    return GossipNetworkState(
        x=list(values),
        z=list(values),
        last_t=[0.0] * len(values),
        t=0.0,
        target=float(np.mean(values)),
    )


def next_event(
    graph: Graph, rng: RunStreams, t_now: float
) -> tuple[float, tuple[int, int]]:
    """Draw the next activation: Exp(1) waiting time, edge sampled from P."""
    dt = sample_interarrival(EventClock.exponential(1.0), rng.clock)
    i = int(np.searchsorted(graph.cum_probs, rng.noise.random(), side="right"))
    i = min(i, graph.edge_count - 1)
    return t_now + dt, graph.edges[i]


def sample_event_stream(
    graph: Graph, horizon: float, rng: RunStreams, chunk: int = 4096
) -> tuple[Array, Array]:
    """All activations up to ``horizon`` as (times, edge indices) arrays."""
    times = np.empty(0)
    while times.size == 0 or times[-1] <= horizon:
        more = rng.clock.exponential(size=chunk)
        base = times[-1] if times.size else 0.0
        times = np.concatenate([times, base + np.cumsum(more)])
    count = int(np.searchsorted(times, horizon, side="right"))
    times = times[:count]
    picks = np.searchsorted(graph.cum_probs, rng.noise.random(count), side="right")
    return times, np.minimum(picks, graph.edge_count - 1)


def naive_step(state: GossipNetworkState, edge: tuple[int, int]) -> None:
    """Replace both endpoint estimates by their average."""
    v, w = edge
    mean = 0.5 * (state.x[v] + state.x[w])
    state.x[v] = mean
    state.x[w] = mean


def lazy_mix_node(
    state: GossipNetworkState, v: int, to_t: float, mix_rate: float
) -> None:
    """Advance node v's pair (x_v, z_v) to time ``to_t`` in closed form."""
    dt = to_t - state.last_t[v]
    if dt < 0:
        raise ValueError(f"node {v} already past t = {to_t}")
    if dt > 0:
        decay = math.exp(-2.0 * mix_rate * dt)
        mid = 0.5 * (state.x[v] + state.z[v])
        state.x[v] = mid + (state.x[v] - mid) * decay
        state.z[v] = mid + (state.z[v] - mid) * decay
    state.last_t[v] = to_t


def accelerated_step(
    state: GossipNetworkState,
    edge: tuple[int, int],
    params: GossipParams,
    t_event: float,
) -> None:
    """Pairwise accelerated update; endpoints must be mixed to t_event."""
    v, w = edge
    xv, xw = state.x[v], state.x[w]
    mean = 0.5 * (xv + xw)
    state.x[v] = mean
    state.x[w] = mean
    state.z[v] += params.z_step * (xw - xv)
    state.z[w] += params.z_step * (xv - xw)
    state.t = t_event


def synchronized_values(
    state: GossipNetworkState, params: GossipParams, at_t: float
) -> tuple[Array, Array]:
    """Copies of (x, z) with every node mixed forward to ``at_t``."""
    xs = np.array(state.x)
    zs = np.array(state.z)
    if params.algo == "accelerated":
        dt = at_t - np.array(state.last_t)
        if np.any(dt < -1e-12):
            raise ValueError("some node is already past the requested time")
        decay = np.exp(-2.0 * params.mix_rate * np.maximum(dt, 0.0))
        mid = 0.5 * (xs + zs)
        xs = mid + (xs - mid) * decay
        zs = mid + (zs - mid) * decay
    return xs, zs


def energy(values: Array, target: float) -> float:
    """Sum over nodes of half the squared deviation from the average."""
    d = values - target
    return 0.5 * float(d @ d)


def run_gossip(
    graph: Graph,
    params: GossipParams,
    x0,
    horizon: float,
    rng: RunStreams | int,
    *,
    checkpoints=(),
    events: tuple[Array, Array] | None = None,
    record_states: bool = False,
) -> Trace:
    """Simulate one gossip run, recording the energy at checkpoint times.

    ``events`` may carry a precomputed (times, edge indices) stream so that
    several simulators can share one activation sequence.
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.ndim == 2:
        return _run_gossip_vector(
            graph, params, x0, horizon, rng, checkpoints=checkpoints, events=events
        )
    if x0.shape != (graph.node_count,):
        raise ValueError(f"x0 has shape {x0.shape}, graph has {graph.node_count} nodes")
    streams = as_streams(rng)
    if events is None:
        times, edge_idx = sample_event_stream(graph, horizon, streams)
    else:
        times, edge_idx = events

    state = initial_network_state(x0)
    accelerated = params.algo == "accelerated"
    grid = sorted(float(t) for t in checkpoints)
    trace = Trace(event_states=[] if record_states else None)
    ci = 0

    def flush(limit: float, inclusive: bool) -> None:
        nonlocal ci
        while ci < len(grid) and (grid[ci] < limit or (inclusive and grid[ci] == limit)):
            xs, _ = synchronized_values(state, params, grid[ci])
            trace.add(grid[ci], k, {"energy": energy(xs, state.target)}, False)
            ci += 1

    k = 0
    for te, ei in zip(times, edge_idx):
        te = float(te)
        if te > horizon:
            break
        flush(te, inclusive=False)
        edge = graph.edges[ei]
        if accelerated:
            lazy_mix_node(state, edge[0], te, params.mix_rate)
            lazy_mix_node(state, edge[1], te, params.mix_rate)
            accelerated_step(state, edge, params, te)
        else:
            naive_step(state, edge)
            state.t = te
        k += 1
        if record_states:
            xs, zs = synchronized_values(state, params, te)
            trace.event_states.append((te, xs, zs))

    flush(horizon, inclusive=True)
    xs, zs = synchronized_values(state, params, horizon)
    state.x = list(xs)
    state.z = list(zs)
    state.last_t = [horizon] * graph.node_count
    state.t = horizon
    trace.terminal_state = state
    return trace


def _run_gossip_vector(
    graph, params, x0, horizon, rng, *, checkpoints, events
) -> Trace:
    """Vector node values: component-wise runs on one shared event stream."""
    streams = as_streams(rng)
    if events is None:
        events = sample_event_stream(graph, horizon, streams)
    traces = [
        run_gossip(
            graph, params, x0[:, j], horizon, streams,
            checkpoints=checkpoints, events=events,
        )
        for j in range(x0.shape[1])
    ]
    merged = Trace()
    for samples in zip(*(tr.samples for tr in traces)):
        total = sum(s.values["energy"] for s in samples)
        merged.add(samples[0].t, samples[0].k, {"energy": total}, samples[0].at_event)
    merged.terminal_state = [tr.terminal_state for tr in traces]
    return merged


def energy_problem(graph: Graph, x0) -> LeastSquaresProblem:
    """The edge-difference least-squares objective whose stochastic gradient
    descent is naive gossip; its optimum is consensus at the mean of x0."""
    atoms = np.zeros((graph.edge_count, graph.node_count))
    for i, (v, w) in enumerate(graph.edges):
        atoms[i, v] = 1.0
        atoms[i, w] = -1.0
    target = float(np.mean(np.asarray(x0, dtype=float)))
    optimum = np.full(graph.node_count, target)
    return make_least_squares(atoms, optimum, graph.edge_probs)
