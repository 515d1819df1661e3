"""Weighted undirected game graphs: construction, generators, and file IO.

Nodes are dense integer ids 0..n-1. Every graph carries a non-empty set of
terminal nodes where agents end their runs. Weights are non-negative travel
costs; zero-weight edges are legal but reported as warnings.
"""
from __future__ import annotations

import math
from enum import Enum

import numpy as np
from scipy.sparse.csgraph import csgraph_from_dense, dijkstra


class GraphKind(Enum):
    COMPLETE = "complete"
    STAR = "star"
    RANDOM_GEOMETRIC = "random_geometric"
    GRID_WITH_DEADENDS = "grid_with_deadends"
    EXPLICIT = "explicit"


class InvariantError(ValueError):
    """A graph invariant does not hold. The message names the invariant."""


class GraphFormatError(ValueError):
    """A graph file failed to parse. Carries the offending line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class Graph:
    """Undirected weighted graph with terminal nodes.

    Attributes
    ----------
    n_nodes : int
    terminals : frozenset[int]
        Non-empty set of absorbing end nodes.
    kind : GraphKind
    staging : int or None
        Hub node for star graphs, None otherwise.
    coords : ndarray of shape (n_nodes, 2) or None
        Planar positions when the generator provides them.
    warnings : list[str]
        Non-fatal validation notes (currently: zero-weight edges).
    """

    def __init__(self, n_nodes, edge_weights, terminals, kind=GraphKind.EXPLICIT,
                 staging=None, coords=None):
        self.n_nodes = int(n_nodes)
        self.kind = kind
        self.staging = staging
        self.coords = None if coords is None else np.asarray(coords, dtype=float)
        self.terminals = frozenset(int(t) for t in terminals)

        w = np.full((self.n_nodes, self.n_nodes), np.inf)
        for (u, v), wt in edge_weights.items():
            u, v = int(u), int(v)
            if u == v:
                raise InvariantError(f"no self-loops: edge ({u},{v})")
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise InvariantError(f"edge endpoint out of range: ({u},{v})")
            wt = float(wt)
            for a, b in ((u, v), (v, u)):
                if np.isfinite(w[a, b]) and w[a, b] != wt:
                    raise InvariantError(
                        f"symmetric weights: edge ({u},{v}) listed with "
                        f"conflicting weights {w[a, b]} and {wt}")
            w[u, v] = wt
            w[v, u] = wt
        self._weights = w
        self._neighbors = tuple(
            tuple(int(v) for v in np.flatnonzero(np.isfinite(w[u])))
            for u in range(self.n_nodes))
        self._dist = None
        self._pred = None
        self.warnings = self._validate()

    def _validate(self):
        if self.n_nodes < 1:
            raise InvariantError("graph must have at least one node")
        if not self.terminals:
            raise InvariantError("terminals must be non-empty")
        for t in self.terminals:
            if not 0 <= t < self.n_nodes:
                raise InvariantError(f"terminals within node range: {t}")
        warnings = []
        for u in range(self.n_nodes):
            if not self._neighbors[u]:
                raise InvariantError(f"every node has degree >= 1: node {u} isolated")
        for u, v in self.edge_list():
            wt = self._weights[u, v]
            if wt < 0:
                raise InvariantError(f"non-negative weights: edge ({u},{v}) = {wt}")
            if wt == 0:
                warnings.append(f"zero-weight edge ({u},{v})")
        if self.staging is not None and not 0 <= self.staging < self.n_nodes:
            raise InvariantError(f"staging node out of range: {self.staging}")
        if self.coords is not None and self.coords.shape != (self.n_nodes, 2):
            raise InvariantError("coords must have shape (n_nodes, 2)")
        return warnings

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self._neighbors[u]

    def degree(self, u: int) -> int:
        return len(self._neighbors[u])

    def has_edge(self, u: int, v: int) -> bool:
        return u != v and bool(np.isfinite(self._weights[u, v]))

    def weight(self, u: int, v: int) -> float:
        wt = self._weights[u, v]
        if u == v or not np.isfinite(wt):
            raise InvariantError(f"no edge ({u},{v})")
        return float(wt)

    def edge_list(self) -> list[tuple[int, int]]:
        return [(u, v) for u in range(self.n_nodes)
                for v in self._neighbors[u] if u < v]

    @property
    def n_edges(self) -> int:
        return len(self.edge_list())

    def non_terminals(self) -> list[int]:
        return [u for u in range(self.n_nodes) if u not in self.terminals]

    def distances(self) -> np.ndarray:
        """All-pairs shortest path costs (dense matrix, inf if unreachable)."""
        if self._dist is None:
            sparse = csgraph_from_dense(self._weights, null_value=np.inf)
            self._dist, self._pred = dijkstra(sparse, directed=False,
                                              return_predecessors=True)
        return self._dist

    def next_hop(self, u: int, target: int) -> int:
        """First node on a cheapest path from u to target."""
        self.distances()
        if u == target:
            return u
        if not np.isfinite(self._dist[u, target]):
            raise InvariantError(f"no path from {u} to {target}")
        v = target
        while self._pred[u, v] != u:
            v = int(self._pred[u, v])
        return int(v)

    def terminal_distance(self, u: int) -> float:
        """Cheapest cost from u to any terminal."""
        d = self.distances()
        return float(min(d[u, t] for t in self.terminals))

    def nearest_terminal(self, u: int) -> int:
        d = self.distances()
        return min(self.terminals, key=lambda t: (d[u, t], t))

    def is_connected(self) -> bool:
        return bool(np.all(np.isfinite(self.distances()[0])))

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        same_coords = (
            (self.coords is None and other.coords is None)
            or (self.coords is not None and other.coords is not None
                and np.array_equal(self.coords, other.coords)))
        return (self.n_nodes == other.n_nodes
                and self.terminals == other.terminals
                and self.kind == other.kind
                and self.staging == other.staging
                and same_coords
                and np.array_equal(self._weights, other._weights))

    def __repr__(self):
        return (f"Graph(n_nodes={self.n_nodes}, edges={self.n_edges}, "
                f"terminals={sorted(self.terminals)}, kind={self.kind.value})")


def make_complete(n_nodes: int, weight_fn=None, terminals=None) -> Graph:
    """Complete graph on n_nodes >= 2 nodes.

    weight_fn(u, v) supplies each edge weight (default: constant 1.0).
    The last node is the terminal unless `terminals` overrides it.
    """
    if n_nodes < 2:
        raise ValueError("complete graph needs at least 2 nodes")
    if weight_fn is None:
        weight_fn = lambda u, v: 1.0
    weights = {(u, v): float(weight_fn(u, v))
               for u in range(n_nodes) for v in range(u + 1, n_nodes)}
    if terminals is None:
        terminals = {n_nodes - 1}
    return Graph(n_nodes, weights, terminals, kind=GraphKind.COMPLETE)


def make_star(n_leaves: int, leaf_weights, terminal: int | None = None) -> Graph:
    """Star graph: staging hub (node 0) joined to n_leaves leaves (nodes 1..n).

    leaf_weights gives the spoke costs in leaf order. The terminal defaults to
    the last leaf.
    """
    leaf_weights = list(leaf_weights)
    if n_leaves < 1:
        raise ValueError("star graph needs at least one leaf")
    if len(leaf_weights) != n_leaves:
        raise ValueError(f"expected {n_leaves} leaf weights, got {len(leaf_weights)}")
    weights = {(0, k + 1): float(leaf_weights[k]) for k in range(n_leaves)}
    if terminal is None:
        terminal = n_leaves
    if terminal == 0:
        raise ValueError("terminal must be a leaf, not the staging node")
    return Graph(n_leaves + 1, weights, {terminal}, kind=GraphKind.STAR, staging=0)


def _connected_without(n_nodes, adj, drop_edge):
    """BFS connectivity check with one edge ignored."""
    a, b = drop_edge
    seen = {0}
    stack = [0]
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if {u, v} == {a, b}:
                continue
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == n_nodes


def make_grid_with_deadends(rows: int, cols: int, deadend_fraction: float,
                            seed: int) -> Graph:
    """Connected unit-weight grid with randomly pruned edges forming dead-ends.

    Every degree-1 node is a terminal. If pruning produced none (for example
    deadend_fraction = 0), one additional edge is removed to force at least one
    terminal. Node (r, c) has id r*cols + c and coordinates (c, r).

    Parameters
    ----------
    rows, cols : int
        Grid dimensions, rows*cols >= 4.
    deadend_fraction : float
        Target fraction of nodes to turn into dead-ends, in [0, 1].
    seed : int
        Drives all pruning choices; identical seeds give identical graphs.
    """
    n = rows * cols
    if n < 4:
        raise ValueError("grid needs at least 4 nodes")
    if not 0.0 <= deadend_fraction <= 1.0:
        raise ValueError("deadend_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)

    node = lambda r, c: r * cols + c
    adj = {u: set() for u in range(n)}
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                adj[node(r, c)].add(node(r, c + 1))
                adj[node(r, c + 1)].add(node(r, c))
            if r + 1 < rows:
                adj[node(r, c)].add(node(r + 1, c))
                adj[node(r + 1, c)].add(node(r, c))

    target = int(round(deadend_fraction * n))
    victims = [u for u in range(n) if len(adj[u]) >= 2]
    rng.shuffle(victims)
    made = 0
    for v in victims:
        if made >= target:
            break
        if len(adj[v]) < 2:
            continue
        incident = sorted(adj[v])
        rng.shuffle(incident)
        # strip edges until v has degree 1, skipping cuts that disconnect
        for u in incident:
            if len(adj[v]) == 1:
                break
            if _connected_without(n, adj, (v, u)):
                adj[v].discard(u)
                adj[u].discard(v)
        if len(adj[v]) == 1:
            made += 1

    if not any(len(adj[u]) == 1 for u in range(n)):
        # force one terminal: open the cheapest prunable corner-ish edge
        for v in sorted(range(n), key=lambda u: len(adj[u])):
            pruned = False
            for u in sorted(adj[v]):
                if len(adj[v]) > 1 and _connected_without(n, adj, (v, u)):
                    adj[v].discard(u)
                    adj[u].discard(v)
                    pruned = True
                    break
            if pruned and any(len(adj[w]) == 1 for w in range(n)):
                break

    weights = {(u, v): 1.0 for u in range(n) for v in adj[u] if u < v}
    terminals = {u for u in range(n) if len(adj[u]) == 1}
    coords = np.array([[float(u % cols), float(u // cols)] for u in range(n)])
    return Graph(n, weights, terminals, kind=GraphKind.GRID_WITH_DEADENDS,
                 coords=coords)


def make_random_geometric(n_nodes: int, radius: float, seed: int,
                          terminal: int | None = None) -> Graph:
    """Random geometric graph: points in [-10,10]^2, Euclidean edge weights.

    Pairs closer than `radius` are joined; if the result is disconnected the
    closest inter-component pairs are joined until it is. The terminal defaults
    to the node farthest from the centroid (a border node).
    """
    if n_nodes < 2:
        raise ValueError("geometric graph needs at least 2 nodes")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-10.0, 10.0, size=(n_nodes, 2))
    dmat = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    weights = {}
    for u in range(n_nodes):
        for v in range(u + 1, n_nodes):
            if dmat[u, v] <= radius:
                weights[(u, v)] = float(dmat[u, v])

    def components():
        seen, parts = set(), []
        adj = {u: set() for u in range(n_nodes)}
        for (u, v) in weights:
            adj[u].add(v)
            adj[v].add(u)
        for s in range(n_nodes):
            if s in seen:
                continue
            comp, stack = {s}, [s]
            seen.add(s)
            while stack:
                x = stack.pop()
                for y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        comp.add(y)
                        stack.append(y)
            parts.append(comp)
        return parts

    parts = components()
    while len(parts) > 1:
        best = None
        for i in range(len(parts)):
            for j in range(i + 1, len(parts)):
                for u in sorted(parts[i]):
                    for v in sorted(parts[j]):
                        d = dmat[u, v]
                        if best is None or d < best[0]:
                            best = (d, min(u, v), max(u, v))
        weights[(best[1], best[2])] = float(best[0])
        parts = components()

    if terminal is None:
        centroid = pts.mean(axis=0)
        terminal = int(np.argmax(np.linalg.norm(pts - centroid, axis=1)))
    return Graph(n_nodes, weights, {terminal}, kind=GraphKind.RANDOM_GEOMETRIC,
                 coords=pts)


#: Travel budget that makes all three admissible counterexample routes feasible.
COUNTEREXAMPLE_BUDGET = 3.0
#: Terminal payment used by the counterexample (far above every node prize).
COUNTEREXAMPLE_TERMINAL_PRIZE = 100.0


def make_counterexample(alpha: float) -> tuple[Graph, np.ndarray]:
    """Five-node graph on which the two-agent game has no pure equilibrium.

    Node 0 is the shared start (prize 0), nodes 1..3 carry prizes
    (1, 2+alpha, 2-alpha), node 4 is the terminal. All edges cost 1 and the
    intended travel budget is COUNTEREXAMPLE_BUDGET. Requires 0 < alpha < 1.

    Returns the graph and its stationary prize vector.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    edges = {(0, 1): 1.0, (0, 2): 1.0, (0, 3): 1.0,
             (1, 2): 1.0, (2, 4): 1.0, (3, 4): 1.0}
    graph = Graph(5, edges, {4}, kind=GraphKind.EXPLICIT, staging=0)
    prizes = np.array([0.0, 1.0, 2.0 + alpha, 2.0 - alpha,
                       COUNTEREXAMPLE_TERMINAL_PRIZE])
    return graph, prizes


def make_explicit(n_nodes, edge_weights, terminals, staging=None, coords=None) -> Graph:
    """Graph from an explicit edge-weight mapping {(u, v): w}."""
    return Graph(n_nodes, dict(edge_weights), terminals,
                 kind=GraphKind.EXPLICIT, staging=staging, coords=coords)


def save_graph(graph: Graph, path, prize_lines=None) -> None:
    """Write a graph to the line-oriented text format.

    Format: a `nodes N terminals t1,t2,...` header, then one `u v weight` line
    per edge. Optional lines: `kind`, `staging`, `coord u x y`, and
    `prize u mean [sd]` entries supplied via `prize_lines` as tuples.
    All numbers are decimal ASCII.
    """
    lines = ["nodes {} terminals {}".format(
        graph.n_nodes, ",".join(str(t) for t in sorted(graph.terminals)))]
    if graph.kind is not GraphKind.EXPLICIT:
        lines.append(f"kind {graph.kind.value}")
    if graph.staging is not None:
        lines.append(f"staging {graph.staging}")
    if graph.coords is not None:
        for u in range(graph.n_nodes):
            lines.append(f"coord {u} {float(graph.coords[u, 0])!r} "
                         f"{float(graph.coords[u, 1])!r}")
    for u, v in graph.edge_list():
        lines.append(f"{u} {v} {float(graph.weight(u, v))!r}")
    for entry in (prize_lines or []):
        lines.append("prize " + " ".join(
            repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)
            for x in entry))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> Graph:
    """Read a graph written by save_graph (prize lines are skipped here).

    Raises GraphFormatError with a line number on parse failures and
    InvariantError when the parsed graph violates a graph invariant.
    """
    graph, _ = _parse_graph_file(path)
    return graph


def load_prize_lines(path) -> list[tuple]:
    """Return the `prize u mean [sd]` entries of a graph file as tuples."""
    _, prize_lines = _parse_graph_file(path)
    return prize_lines


def _parse_graph_file(path):
    with open(path) as fh:
        raw = fh.readlines()
    n_nodes = None
    terminals = None
    kind = GraphKind.EXPLICIT
    staging = None
    coords = {}
    weights = {}
    prize_lines = []
    header_seen = False
    for line_no, line in enumerate(raw, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if not header_seen:
            if parts[0] != "nodes" or len(parts) != 4 or parts[2] != "terminals":
                raise GraphFormatError(
                    line_no, "expected header 'nodes N terminals t1,t2,...'")
            try:
                n_nodes = int(parts[1])
                terminals = {int(t) for t in parts[3].split(",")}
            except ValueError:
                raise GraphFormatError(line_no, f"bad header numbers: {text!r}")
            header_seen = True
            continue
        if parts[0] == "kind":
            try:
                kind = GraphKind(parts[1])
            except (IndexError, ValueError):
                raise GraphFormatError(line_no, f"unknown graph kind: {text!r}")
        elif parts[0] == "staging":
            try:
                staging = int(parts[1])
            except (IndexError, ValueError):
                raise GraphFormatError(line_no, f"bad staging line: {text!r}")
        elif parts[0] == "coord":
            try:
                coords[int(parts[1])] = (float(parts[2]), float(parts[3]))
            except (IndexError, ValueError):
                raise GraphFormatError(line_no, f"bad coord line: {text!r}")
        elif parts[0] == "prize":
            if len(parts) not in (3, 4):
                raise GraphFormatError(line_no, "prize line needs 'prize u mean [sd]'")
            try:
                entry = (int(parts[1]), *(float(x) for x in parts[2:]))
            except ValueError:
                raise GraphFormatError(line_no, f"bad prize line: {text!r}")
            prize_lines.append(entry)
        else:
            if len(parts) != 3:
                raise GraphFormatError(line_no, f"expected 'u v weight', got {text!r}")
            try:
                u, v, wt = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise GraphFormatError(line_no, f"non-numeric edge line: {text!r}")
            if not (0 <= u < n_nodes and 0 <= v < n_nodes):
                raise GraphFormatError(
                    line_no, f"edge ({u},{v}) references a node outside "
                    f"0..{n_nodes - 1}")
            if (u, v) in weights or (v, u) in weights:
                if weights.get((u, v), weights.get((v, u))) != wt:
                    raise GraphFormatError(
                        line_no, f"edge ({u},{v}) relisted with a different "
                        "weight; symmetric weights are required")
                continue
            weights[(u, v)] = wt
    if not header_seen:
        raise GraphFormatError(1, "missing header line")
    coord_arr = None
    if coords:
        if sorted(coords) != list(range(n_nodes)):
            raise GraphFormatError(1, "coord lines must cover every node exactly once")
        coord_arr = np.array([coords[u] for u in range(n_nodes)])
    graph = Graph(n_nodes, weights, terminals, kind=kind, staging=staging,
                  coords=coord_arr)
    return graph, prize_lines


def euclidean_weight_fn(coords):
    """weight_fn for make_complete: Euclidean distance between listed points."""
    pts = np.asarray(coords, dtype=float)

    def fn(u, v):
        return float(math.dist(pts[u], pts[v]))

    return fn


def validate_graph(graph: Graph) -> list[str]:
    """Re-run invariant checks; returns the warning list (raises on violation)."""
    return graph._validate()
