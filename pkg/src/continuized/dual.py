"""Asynchronous accelerated decentralized optimization via dual coordinates.

Each node holds a strongly convex local function.  The consensus problem is
solved on its dual, where edge activations become coordinate gradient steps:
the activated pair exchanges conjugate gradients and applies antisymmetric
corrections to the node images (y, z) of the two dual iterates, which mix
node-locally between events exactly as in accelerated gossip.  With
quadratic local terms of unit curvature the whole construction collapses to
the averaging problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphs import Graph, SpectralCache
from .gossip import sample_event_stream
from .seeding import RunStreams, as_streams
from .trace import Trace

Array = np.ndarray


@dataclass(frozen=True)
class LocalFunction:
    """Quadratic local objective f_v(x) = mu_v/2 |x - c_v|^2.

    Quadratics ship with their conjugate gradient in closed form; other
    strongly convex families can plug in by mirroring this interface.
    """

    curvature: float
    center: Array

    def __post_init__(self) -> None:
        if self.curvature <= 0:
            raise ValueError("curvature must be > 0")
        center = np.atleast_1d(np.asarray(self.center, dtype=float)).copy()
        center.setflags(write=False)
        object.__setattr__(self, "center", center)

    def value(self, x: Array) -> float:
        d = np.asarray(x) - self.center
        return 0.5 * self.curvature * float(d @ d)

    def grad(self, x: Array) -> Array:
        return self.curvature * (np.asarray(x) - self.center)


def conjugate_grad(fv: LocalFunction, y: Array) -> Array:
    """Gradient of the Fenchel conjugate: the inverse map of grad f_v."""
    return fv.center + np.asarray(y) / fv.curvature


def random_local_functions(
    node_count: int,
    mu: float,
    smoothness: float,
    dimension: int,
    rng: np.random.Generator,
    center_scale: float = 1.0,
) -> list[LocalFunction]:
    """Quadratics with curvatures uniform in [mu, L] and Gaussian centers."""
    curvatures = rng.uniform(mu, smoothness, size=node_count)
    centers = center_scale * rng.standard_normal((node_count, dimension))
    return [LocalFunction(float(c), centers[v]) for v, c in enumerate(curvatures)]


def optimum_of(local_functions: list[LocalFunction]) -> Array:
    """Minimizer of the sum: curvature-weighted mean of the centers."""
    total = sum(f.curvature for f in local_functions)
    return sum(f.curvature * f.center for f in local_functions) / total


def incidence_r(graph: Graph, cache: SpectralCache) -> Array:
    """Diagonal of the projector A^+ A in edge space: R_e = P_e r_eff(e)."""
    return np.asarray(graph.edge_probs * cache.r_eff)


@dataclass(frozen=True)
class DualParams:
    """Constants of the dual coordinate-descent updates.

    ``l_dual`` bounds the dual directional smoothness-resistance products,
    ``theta_arg_prime`` is the graph rate with the dual resistances, and
    (eta, gamma, gamma_prime) drive mixing, y-jumps, and z-jumps.
    """

    l_dual: float
    theta_arg_prime: float
    eta: float
    gamma: float
    gamma_prime: float

    @classmethod
    def from_graph(
        cls, graph: Graph, cache: SpectralCache, mu: float, smoothness: float
    ) -> "DualParams":
        if not 0 < mu <= smoothness:
            raise ValueError("need 0 < mu <= L")
        r_edge = incidence_r(graph, cache)
        ratio = float(np.max(r_edge / graph.edge_probs))
        l_dual = ratio / mu
        # Directional smoothness bound M_ee = P_e / mu from the conjugate
        # Hessian; l_dual must dominate M_ee R_e / P_e^2 on every edge.
        m_ee = graph.edge_probs / mu
        assert np.all(
            l_dual >= m_ee * r_edge / graph.edge_probs**2 - 1e-12 * l_dual
        )
        theta_arg_prime = math.sqrt(cache.mu_gossip / ratio)
        kappa = smoothness / mu
        return cls(
            l_dual=l_dual,
            theta_arg_prime=theta_arg_prime,
            eta=theta_arg_prime / math.sqrt(kappa),
            gamma=1.0 / l_dual,
            gamma_prime=math.sqrt(smoothness / (cache.mu_gossip * l_dual)),
        )


@dataclass
class DualState:
    """Node images (y, z) of the two dual iterates, with lazy clocks."""

    y: Array
    z: Array
    last_t: Array
    t: float


def initial_dual_state(node_count: int, dimension: int) -> DualState:
    return DualState(
        y=np.zeros((node_count, dimension)),
        z=np.zeros((node_count, dimension)),
        last_t=np.zeros(node_count),
        t=0.0,
    )


def lazy_mix_dual_node(state: DualState, v: int, to_t: float, eta: float) -> None:
    """Advance node v's pair (y_v, z_v) to ``to_t`` in closed form."""
    dt = to_t - state.last_t[v]
    if dt < 0:
        raise ValueError(f"node {v} already past t = {to_t}")
    if dt > 0:
        decay = math.exp(-2.0 * eta * dt)
        mid = 0.5 * (state.y[v] + state.z[v])
        state.y[v] = mid + (state.y[v] - mid) * decay
        state.z[v] = mid + (state.z[v] - mid) * decay
    state.last_t[v] = to_t


def dual_update(
    state: DualState,
    edge: tuple[int, int],
    params: DualParams,
    fv: LocalFunction,
    fw: LocalFunction,
    t_event: float,
    r_e: float,
    p_e: float,
) -> None:
    """Pairwise dual coordinate step; endpoints must be mixed to t_event.

    The edge gradient is g = P_e (grad f_v^*(y_v) - grad f_w^*(y_w)); the
    y-pair moves by -+ gamma (R_e / P_e^2) g and the z-pair by
    -+ gamma' g / P_e.
    """
    v, w = edge
    g = p_e * (conjugate_grad(fv, state.y[v]) - conjugate_grad(fw, state.y[w]))
    y_coef = params.gamma * r_e / (p_e * p_e)
    z_coef = params.gamma_prime / p_e
    state.y[v] -= y_coef * g
    state.y[w] += y_coef * g
    state.z[v] -= z_coef * g
    state.z[w] += z_coef * g
    state.t = t_event


def synchronized_dual(state: DualState, eta: float, at_t: float) -> tuple[Array, Array]:
    """Copies of (y, z) with every node mixed forward to ``at_t``."""
    dt = at_t - state.last_t
    if np.any(dt < -1e-12):
        raise ValueError("some node is already past the requested time")
    decay = np.exp(-2.0 * eta * np.maximum(dt, 0.0))[:, None]
    mid = 0.5 * (state.y + state.z)
    return mid + (state.y - mid) * decay, mid + (state.z - mid) * decay


def primal_recover(state: DualState, local_functions: list[LocalFunction]) -> Array:
    """Per-node primal estimates grad f_v^*(z_v)."""
    return np.stack(
        [conjugate_grad(f, state.z[v]) for v, f in enumerate(local_functions)]
    )


def run_decentralized(
    graph: Graph,
    local_functions: list[LocalFunction],
    mu: float,
    smoothness: float,
    horizon: float,
    rng: RunStreams | int,
    *,
    cache: SpectralCache | None = None,
    params: DualParams | None = None,
    checkpoints=(),
    events: tuple[Array, Array] | None = None,
    record_states: bool = False,
) -> Trace:
    """Simulate the dual coordinate-descent run from y = z = 0.

    Records the primal error sum_v 1/2 |grad f_v^*(z_v) - x_*|^2 at
    checkpoint times, with x_* computed centrally for the quadratics (the
    algorithm itself never reads it).
    """
    if len(local_functions) != graph.node_count:
        raise ValueError("need one local function per node")
    for f in local_functions:
        if not mu - 1e-12 <= f.curvature <= smoothness + 1e-12:
            raise ValueError("a local curvature leaves the declared [mu, L]")
    if cache is None:
        from .graphs import spectral

        cache = spectral(graph)
    if params is None:
        params = DualParams.from_graph(graph, cache, mu, smoothness)
    r_edge = incidence_r(graph, cache)
    x_star = optimum_of(local_functions)
    dimension = x_star.size

    streams = as_streams(rng)
    if events is None:
        times, edge_idx = sample_event_stream(graph, horizon, streams)
    else:
        times, edge_idx = events

    state = initial_dual_state(graph.node_count, dimension)
    grid = sorted(float(t) for t in checkpoints)
    trace = Trace(event_states=[] if record_states else None)
    ci = 0

    def primal_error(at_t: float) -> float:
        _, zs = synchronized_dual(state, params.eta, at_t)
        err = 0.0
        for v, f in enumerate(local_functions):
            d = conjugate_grad(f, zs[v]) - x_star
            err += 0.5 * float(d @ d)
        return err

    def flush(limit: float, inclusive: bool) -> None:
        nonlocal ci
        while ci < len(grid) and (grid[ci] < limit or (inclusive and grid[ci] == limit)):
            trace.add(grid[ci], k, {"primal_dist_sq": primal_error(grid[ci])}, False)
            ci += 1

    k = 0
    for te, ei in zip(times, edge_idx):
        te = float(te)
        if te > horizon:
            break
        flush(te, inclusive=False)
        edge = graph.edges[ei]
        lazy_mix_dual_node(state, edge[0], te, params.eta)
        lazy_mix_dual_node(state, edge[1], te, params.eta)
        dual_update(
            state,
            edge,
            params,
            local_functions[edge[0]],
            local_functions[edge[1]],
            te,
            r_e=float(r_edge[ei]),
            p_e=float(graph.edge_probs[ei]),
        )
        k += 1
        if record_states:
            ys, zs = synchronized_dual(state, params.eta, te)
            trace.event_states.append((te, ys, zs))

    flush(horizon, inclusive=True)
    ys, zs = synchronized_dual(state, params.eta, horizon)
    state.y, state.z = ys, zs
    state.last_t = np.full(graph.node_count, horizon)
    state.t = horizon
    trace.terminal_state = state
    return trace
