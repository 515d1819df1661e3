"""Node prize models: per-node distributions, sampling, and repopulation.

A prize vector is a float ndarray of length n_nodes. Terminal entries are
pinned to the model's terminal_value; all entries are non-negative.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Prize vectors are plain float64 arrays, one entry per node.
PrizeVector = np.ndarray

STATIONARY = "stationary"
DYNAMIC = "dynamic"


@dataclass(frozen=True)
class UniformPrize:
    low: float
    high: float

    def __post_init__(self):
        if self.low < 0 or self.high < self.low:
            raise ValueError(f"uniform prize needs 0 <= low <= high, got {self}")

    def sample(self, rng):
        return float(rng.uniform(self.low, self.high))

    def nominal_max(self):
        return self.high


@dataclass(frozen=True)
class NormalPrize:
    """Normal prize clipped below at zero. nominal_max is the mean (the
    distribution is unbounded above, so the terminal-dominance check uses the
    mean as the comparison point)."""
    mean: float
    sd: float

    def __post_init__(self):
        if self.sd < 0:
            raise ValueError(f"normal prize needs sd >= 0, got {self}")

    def sample(self, rng):
        return float(max(0.0, rng.normal(self.mean, self.sd)))

    def nominal_max(self):
        return self.mean


@dataclass(frozen=True)
class FixedPrize:
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"fixed prize must be non-negative, got {self}")

    def sample(self, rng):
        return float(self.value)

    def nominal_max(self):
        return self.value


class PrizeModel:
    """Per-node prize distributions plus the terminal payment level.

    Nodes without an explicit distribution default to Fixed(0). terminal_value
    must strictly dominate every non-terminal distribution's nominal maximum.

    mode is "stationary" (collected prizes stay collected) or "dynamic"
    (zeroed prizes are redrawn, see repopulate). repopulate_on_departure flips
    the redraw trigger from "zero and occupied" to "zero and vacated".
    """

    def __init__(self, n_nodes, terminals, per_node=None, terminal_value=15.0,
                 mode=STATIONARY, repopulate_on_departure=False):
        self.n_nodes = int(n_nodes)
        self.terminals = frozenset(int(t) for t in terminals)
        self.per_node = dict(per_node or {})
        self.terminal_value = float(terminal_value)
        self.mode = mode
        self.repopulate_on_departure = bool(repopulate_on_departure)
        if mode not in (STATIONARY, DYNAMIC):
            raise ValueError(f"mode must be stationary or dynamic, got {mode!r}")
        for u, dist in self.per_node.items():
            if not 0 <= u < self.n_nodes:
                raise ValueError(f"prize node {u} out of range")
            if u in self.terminals:
                raise ValueError(f"node {u} is a terminal; its prize is pinned")
            if dist.nominal_max() >= self.terminal_value:
                raise ValueError(
                    "terminal_value must strictly exceed every non-terminal "
                    f"prize level: node {u} has {dist} vs terminal "
                    f"{self.terminal_value}")

    def distribution(self, u):
        return self.per_node.get(u, FixedPrize(0.0))


def uniform_model(graph, low=0.0, high=10.0, terminal_value=15.0,
                  mode=STATIONARY, skip=()):
    """Uniform(low, high) prizes on every non-terminal node not in `skip`
    (skipped nodes get Fixed(0), the usual treatment for start nodes)."""
    per_node = {u: UniformPrize(low, high) for u in graph.non_terminals()
                if u not in set(skip)}
    return PrizeModel(graph.n_nodes, graph.terminals, per_node, terminal_value, mode)


def fixed_model(graph, values, terminal_value=15.0, mode=STATIONARY):
    """Fixed prizes from a node->value mapping or a full-length sequence."""
    if not isinstance(values, dict):
        values = {u: values[u] for u in graph.non_terminals()}
    per_node = {u: FixedPrize(v) for u, v in values.items() if u not in graph.terminals}
    return PrizeModel(graph.n_nodes, graph.terminals, per_node, terminal_value, mode)


def sample_initial(model: PrizeModel, seed) -> PrizeVector:
    """Draw a fresh prize vector. Identical seeds give identical vectors."""
    return sample_with_rng(model, np.random.default_rng(seed))


def sample_with_rng(model: PrizeModel, rng) -> PrizeVector:
    values = np.empty(model.n_nodes)
    for u in range(model.n_nodes):
        if u in model.terminals:
            values[u] = model.terminal_value
        else:
            values[u] = model.distribution(u).sample(rng)
    return values


def repopulate(model: PrizeModel, prizes: PrizeVector, occupied, rng) -> PrizeVector:
    """Redraw collected prizes according to the model's dynamic rule.

    Default rule: node u is redrawn when prizes[u] == 0 and u is occupied.
    With repopulate_on_departure the trigger is prizes[u] == 0 and u vacated.
    Terminals never change. Stationary models return the input unchanged.
    """
    if model.mode == STATIONARY:
        return prizes
    occupied = set(occupied)
    out = None
    for u in range(model.n_nodes):
        if u in model.terminals or prizes[u] != 0.0:
            continue
        present = u in occupied
        trigger = (not present) if model.repopulate_on_departure else present
        if trigger:
            if out is None:
                out = prizes.copy()
            out[u] = model.distribution(u).sample(rng)
    return prizes if out is None else out


def make_zone_model(graph, center: int, sd: float, terminal_value=15.0,
                    mode=STATIONARY) -> PrizeModel:
    """Normal prizes whose means fall off as 1/distance from a center node.

    Means are scaled so the largest non-center mean is 10; the center itself is
    capped at 10. Requires graph coordinates.
    """
    if graph.coords is None:
        raise ValueError("zone model needs a graph with coordinates")
    if not 0 <= center < graph.n_nodes:
        raise ValueError(f"center node {center} out of range")
    pos = graph.coords
    dist = np.linalg.norm(pos - pos[center], axis=1)
    others = [u for u in graph.non_terminals() if u != center and dist[u] > 0]
    per_node = {}
    if others:
        scale = 10.0 * min(dist[u] for u in others)
        for u in others:
            per_node[u] = NormalPrize(min(10.0, scale / dist[u]), sd)
    if center not in graph.terminals:
        per_node[center] = NormalPrize(10.0, sd)
    return PrizeModel(graph.n_nodes, graph.terminals, per_node, terminal_value, mode)


def model_from_prize_lines(graph, prize_lines, terminal_value=15.0,
                           mode=STATIONARY) -> PrizeModel:
    """Build a model from graph-file prize entries: (u, mean) becomes
    Fixed(mean), (u, mean, sd) becomes Normal(mean, sd)."""
    per_node = {}
    for entry in prize_lines:
        if len(entry) == 2:
            per_node[entry[0]] = FixedPrize(entry[1])
        else:
            per_node[entry[0]] = NormalPrize(entry[1], entry[2])
    return PrizeModel(graph.n_nodes, graph.terminals, per_node, terminal_value, mode)


def validate_prize_vector(model: PrizeModel, values: PrizeVector) -> None:
    values = np.asarray(values)
    if values.shape != (model.n_nodes,):
        raise ValueError(f"prize vector must have length {model.n_nodes}")
    if np.any(values < 0):
        raise ValueError("prizes must be non-negative")
    for t in model.terminals:
        if values[t] != model.terminal_value:
            raise ValueError(
                f"terminal {t} must stay pinned at {model.terminal_value}")
