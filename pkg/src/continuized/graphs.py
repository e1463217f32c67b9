"""Weighted graphs and the spectral quantities behind gossip rates.

The Laplacian uses the edge activation probabilities as weights, so its
second-smallest eigenvalue mu_gossip is the decay rate of naive randomized
gossip.  Effective resistances come from the Moore-Penrose pseudo-inverse
(the Laplacian is singular on constants; the pseudo-inverse restricted to
mean-zero vectors is the standard electrical-network reading), and their
maximum R_max plays the statistical condition number of the edge-sampling
least-squares objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray

_EIG_REL_TOL = 1e-12


class GraphError(ValueError):
    """Invalid graph description."""


class DisconnectedGraphError(GraphError):
    """The graph does not connect all nodes."""


@dataclass(frozen=True)
class Graph:
    """Connected undirected graph with a probability weight per edge."""

    node_count: int
    edges: tuple[tuple[int, int], ...]
    edge_probs: Array

    def __post_init__(self) -> None:
        object.__setattr__(self, "cum_probs", np.cumsum(self.edge_probs))
        object.__setattr__(
            self, "edge_index", {e: i for i, e in enumerate(self.edges)}
        )

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def prob_of(self, v: int, w: int) -> float:
        return float(self.edge_probs[self.edge_index[(min(v, w), max(v, w))]])


def _validate(node_count: int, edges, probs) -> Graph:
    if node_count < 2:
        raise GraphError("graphs need at least 2 nodes")
    normalized = []
    seen = set()
    for v, w in edges:
        if v == w:
            raise GraphError(f"self-loop at node {v}")
        if not (0 <= v < node_count and 0 <= w < node_count):
            raise GraphError(f"edge ({v}, {w}) leaves the node range")
        e = (min(v, w), max(v, w))
        if e in seen:
            raise GraphError(f"duplicate edge {e}")
        seen.add(e)
        normalized.append(e)
    probs = np.asarray(probs, dtype=float).copy()
    if probs.shape != (len(normalized),):
        raise GraphError("need exactly one weight per edge")
    if np.any(probs <= 0):
        raise GraphError("edge weights must be > 0")
    probs /= probs.sum()
    probs.setflags(write=False)

    # BFS connectivity check.
    adjacency: list[list[int]] = [[] for _ in range(node_count)]
    for v, w in normalized:
        adjacency[v].append(w)
        adjacency[w].append(v)
    seen_nodes = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for v in frontier:
            for w in adjacency[v]:
                if w not in seen_nodes:
                    seen_nodes.add(w)
                    nxt.append(w)
        frontier = nxt
    if len(seen_nodes) != node_count:
        missing = sorted(set(range(node_count)) - seen_nodes)
        raise DisconnectedGraphError(
            f"graph is disconnected; unreachable nodes {missing[:8]}"
        )
    return Graph(node_count=node_count, edges=tuple(normalized), edge_probs=probs)


def line_graph(m: int) -> Graph:
    """Path on m nodes, uniform edge probabilities."""
    if m < 2:
        raise GraphError("graphs need at least 2 nodes")
    edges = [(i, i + 1) for i in range(m - 1)]
    return _validate(m, edges, np.full(len(edges), 1.0 / len(edges)))


def cycle_graph(m: int) -> Graph:
    if m < 3:
        raise GraphError("cycles need at least 3 nodes")
    edges = [(i, (i + 1) % m) for i in range(m)]
    return _validate(m, edges, np.full(m, 1.0 / m))


def grid_graph(rows: int, cols: int) -> Graph:
    """rows x cols 2-D grid, uniform edge probabilities."""
    if rows < 1 or cols < 1 or rows * cols < 2:
        raise GraphError("grid needs at least 2 nodes")
    edges = []
    for r in range(rows):
        for c in range(cols):
            v = r * cols + c
            if c + 1 < cols:
                edges.append((v, v + 1))
            if r + 1 < rows:
                edges.append((v, v + cols))
    return _validate(rows * cols, edges, np.full(len(edges), 1.0 / len(edges)))


def complete_graph(m: int) -> Graph:
    edges = [(v, w) for v in range(m) for w in range(v + 1, m)]
    return _validate(m, edges, np.full(len(edges), 1.0 / len(edges)))


def edge_list_graph(edges, weights=None, node_count=None) -> Graph:
    """Graph from explicit edges; weights (default uniform) are normalized."""
    edges = [(int(v), int(w)) for v, w in edges]
    if node_count is None:
        node_count = 1 + max(max(v, w) for v, w in edges)
    if weights is None:
        weights = np.full(len(edges), 1.0 / len(edges))
    return _validate(int(node_count), edges, weights)


def parse_edge_lines(text: str) -> Graph:
    """Parse an explicit weighted edge list, one ``v w p`` triple per line."""
    edges, weights = [], []
    for line in text.strip().splitlines():
        parts = line.split()
        if len(parts) != 3:
            raise GraphError(f"expected 'v w p', got {line!r}")
        edges.append((int(parts[0]), int(parts[1])))
        weights.append(float(parts[2]))
    if not edges:
        raise GraphError("empty edge list")
    return edge_list_graph(edges, np.array(weights))


def build_graph(topology: str, **kwargs) -> Graph:
    """Dispatch on a topology keyword (harness entry point)."""
    if topology == "line":
        return line_graph(int(kwargs["nodes"]))
    if topology == "cycle":
        return cycle_graph(int(kwargs["nodes"]))
    if topology == "grid":
        return grid_graph(int(kwargs["rows"]), int(kwargs["cols"]))
    if topology == "complete":
        return complete_graph(int(kwargs["nodes"]))
    if topology == "edge_list":
        return parse_edge_lines(kwargs["edges"])
    raise GraphError(f"unknown topology {topology!r}")


@dataclass(frozen=True)
class SpectralCache:
    """Laplacian-derived quantities, computed once per graph."""

    laplacian: Array
    mu_gossip: float
    pinv_laplacian: Array
    r_eff: Array
    r_max: float


def laplacian_matrix(graph: Graph) -> Array:
    lap = np.zeros((graph.node_count, graph.node_count))
    for (v, w), p in zip(graph.edges, graph.edge_probs):
        lap[v, v] += p
        lap[w, w] += p
        lap[v, w] -= p
        lap[w, v] -= p
    return lap


def spectral(graph: Graph) -> SpectralCache:
    """Eigendecompose the Laplacian and cache gossip-relevant quantities."""
    lap = laplacian_matrix(graph)
    eigvals, q = np.linalg.eigh(lap)
    top = float(eigvals[-1])
    if eigvals[1] <= _EIG_REL_TOL * top:
        raise DisconnectedGraphError("Laplacian has a repeated zero eigenvalue")
    mu_gossip = float(eigvals[1])
    basis = q[:, 1:]
    pinv = (basis / eigvals[1:]) @ basis.T
    r_eff = np.array(
        [pinv[v, v] + pinv[w, w] - 2.0 * pinv[v, w] for v, w in graph.edges]
    )
    lap.setflags(write=False)
    pinv.setflags(write=False)
    r_eff.setflags(write=False)
    return SpectralCache(
        laplacian=lap,
        mu_gossip=mu_gossip,
        pinv_laplacian=pinv,
        r_eff=r_eff,
        r_max=float(r_eff.max()),
    )


def gossip_rates(cache: SpectralCache) -> tuple[float, float]:
    """Decay rates (theta_RG, theta_ARG) of naive and accelerated gossip.

    theta_ARG >= theta_RG / 2 always (R_max <= 2 / mu_gossip, the statistical
    condition number bound), with equality on edge-transitive graphs such as
    the complete graph.
    """
    theta_rg = cache.mu_gossip
    theta_arg = float(np.sqrt(cache.mu_gossip / (2.0 * cache.r_max)))
    assert theta_arg >= 0.5 * theta_rg * (1.0 - 1e-12)
    return theta_rg, theta_arg
