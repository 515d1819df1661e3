import itertools

import numpy as np
import pytest

import oracles
from spcg import engine, equilibrium, graphs
from spcg import prizes as prize_mod


def counterexample_config():
    return engine.GameConfig(
        l_max=graphs.COUNTEREXAMPLE_BUDGET,
        terminal_prize=graphs.COUNTEREXAMPLE_TERMINAL_PRIZE)


ALPHAS = (0.1, 0.25, 0.5, 0.75, 0.9)


def expected_counterexample_cells(alpha):
    """The nine payoff cells, accumulated stage by stage exactly as play
    does: a reward total starts at 0.0 and adds each stage's collection."""
    mid = 2.0 + alpha        # the larger contested prize
    low = 2.0 - alpha        # the smaller safe prize
    return {
        (0, 0): (0.0 + 1.0 + mid, 0.0),
        (0, 1): (0.0 + 1.0 + 0.0, 0.0 + mid),
        (0, 2): (0.0 + 1.0 + mid, 0.0 + low),
        (1, 0): (0.0 + mid, 0.0 + 1.0 + 0.0),
        (1, 1): (0.0 + mid, 0.0),
        (1, 2): (0.0 + mid, 0.0 + low),
        (2, 0): (0.0 + low, 0.0 + 1.0 + mid),
        (2, 1): (0.0 + low, 0.0 + mid),
        (2, 2): (0.0 + low, 0.0),
    }


def test_counterexample_strategies_are_the_three_routes():
    g, _ = graphs.make_counterexample(0.5)
    routes = equilibrium.enumerate_strategies(g, 0, counterexample_config())
    assert [str(r) for r in routes] == ["(1,2)", "(2)", "(3)"]
    assert [r.cost for r in routes] == [3.0, 2.0, 2.0]


@pytest.mark.parametrize("alpha", ALPHAS)
def test_counterexample_payoff_cells_exact(alpha):
    g, prizes = graphs.make_counterexample(alpha)
    matrix = equilibrium.payoff_matrix(g, prizes, [0, 0],
                                       counterexample_config())
    expected = expected_counterexample_cells(alpha)
    for idx, cell in expected.items():
        got = matrix.cell(idx)
        assert got[0] == cell[0], (idx, got, cell)
        assert got[1] == cell[1], (idx, got, cell)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_counterexample_has_no_pure_equilibrium(alpha):
    g, prizes = graphs.make_counterexample(alpha)
    matrix = equilibrium.payoff_matrix(g, prizes, [0, 0],
                                       counterexample_config())
    result = equilibrium.find_pure_nash(matrix)
    assert result.exists is False
    assert result.equilibria == ()


def test_enumerate_strategies_empty_from_terminal():
    g = graphs.make_complete(4)
    assert equilibrium.enumerate_strategies(
        g, 3, engine.GameConfig(l_max=5.0)) == []


def test_enumerate_strategies_budget_limits():
    g = graphs.make_complete(4)
    short = equilibrium.enumerate_strategies(g, 0, engine.GameConfig(l_max=1.0))
    assert [str(r) for r in short] == ["()"]
    two = equilibrium.enumerate_strategies(g, 0, engine.GameConfig(l_max=2.0))
    assert sorted(str(r) for r in two) == ["()", "(1)", "(2)"]


def test_enumerate_strategies_matches_bfs_oracle():
    rng = np.random.default_rng(5)
    for _ in range(25):
        g = graphs.make_random_geometric(8, 9.0, seed=int(rng.integers(1 << 30)))
        config = engine.GameConfig(l_max=float(rng.uniform(5.0, 25.0)))
        start = int(rng.choice(g.non_terminals()))
        got = {r.full_path
               for r in equilibrium.enumerate_strategies(g, start, config)}
        want = oracles.enumerate_routes_bfs(g, start, config.l_max)
        assert got == want


def test_enumerate_with_revisits_covers_star_returns():
    g = graphs.make_star(3, [1.0, 1.0, 1.0])
    config = engine.GameConfig(l_max=3.0)
    simple = equilibrium.enumerate_strategies(g, 0, config)
    assert [str(r) for r in simple] == ["()"]
    rich = equilibrium.enumerate_strategies(g, 0, config, allow_revisits=True)
    assert "(1,0)" in {str(r) for r in rich}
    assert "(2,0)" in {str(r) for r in rich}


class _ScriptedRoute:
    def __init__(self, graph, targets):
        self.graph = graph
        self.targets = list(targets)
        self.k = 0

    def action_distribution(self, obs):
        dist = np.zeros(self.graph.n_nodes)
        if self.k < len(self.targets):
            dist[self.targets[self.k]] = 1.0
            self.k += 1
        return dist


def test_route_simulator_matches_engine_rollouts():
    """The fast profile evaluator and the engine must price every profile
    identically, bit for bit."""
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 40:
        n_nodes = int(rng.integers(5, 8))
        g = graphs.make_random_geometric(n_nodes, 9.0,
                                         seed=int(rng.integers(1 << 30)))
        config = engine.GameConfig(l_max=float(rng.uniform(8.0, 20.0)),
                                   terminal_prize=15.0)
        n = int(rng.integers(2, 4))
        starts = [int(s) for s in rng.choice(g.non_terminals(), size=n,
                                             replace=True)]
        lists = [equilibrium.enumerate_strategies(g, s, config)
                 for s in starts]
        if any(not routes for routes in lists):
            continue
        model = prize_mod.uniform_model(g)
        values = prize_mod.sample_with_rng(model, rng)
        routes = [routes[int(rng.integers(len(routes)))] for routes in lists]
        prize_tot, term_tot = equilibrium.simulate_route_profile(
            g, values, starts, routes, config)
        policies = [_ScriptedRoute(g, r.nodes + (r.terminal,))
                    for r in routes]
        log = engine.rollout(g, None, config, policies, seed=0, starts=starts,
                             initial_prizes=values)
        assert np.array_equal(prize_tot + term_tot, log.returns)
        assert np.array_equal(term_tot, log.terminal_returns)
        checked += 1


def test_simulate_rejects_budget_overrun():
    g = graphs.make_complete(4)
    config = engine.GameConfig(l_max=1.0)
    bad = equilibrium.RouteStrategy(0, (1, 2), 3, 3.0)
    with pytest.raises(ValueError):
        equilibrium.simulate_route_profile(
            g, np.zeros(4), [0], [bad], config)


def test_simulate_rejects_start_mismatch():
    g = graphs.make_complete(4)
    config = engine.GameConfig(l_max=5.0)
    r = equilibrium.RouteStrategy(0, (), 3, 1.0)
    with pytest.raises(ValueError):
        equilibrium.simulate_route_profile(g, np.zeros(4), [1], [r], config)


def test_payoff_matrix_shape_and_team_reward():
    g, prizes = graphs.make_counterexample(0.5)
    matrix = equilibrium.payoff_matrix(g, prizes, [0, 0],
                                       counterexample_config())
    assert matrix.payoffs.shape == (3, 3, 2)
    assert matrix.team_reward((0, 2)) == pytest.approx(
        (3.5 + 1.5) + 2 * 100.0)
    assert matrix.team_reward((0, 2), include_terminal=False) == \
        pytest.approx(5.0)


def test_payoff_matrix_csv(tmp_path):
    g, prizes = graphs.make_counterexample(0.25)
    matrix = equilibrium.payoff_matrix(g, prizes, [0, 0],
                                       counterexample_config())
    path = tmp_path / "payoffs.csv"
    matrix.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "strategy_1,strategy_2,payoff_1,payoff_2"
    assert len(lines) == 1 + 9
    assert lines[1].startswith('"(1,2)","(1,2)"')


def test_find_pure_nash_on_known_game():
    # prisoner's-dilemma-shaped tensor: single equilibrium at (1, 1)
    payoffs = np.array([[[3.0, 3.0], [0.0, 4.0]],
                        [[4.0, 0.0], [1.0, 1.0]]])
    matrix = equilibrium.PayoffMatrix(
        strategies=[[None, None], [None, None]], payoffs=payoffs,
        config=engine.GameConfig(l_max=1.0))
    result = equilibrium.find_pure_nash(matrix)
    assert result.exists
    assert result.equilibria == ((1, 1),)


def test_find_pure_nash_weak_inequality():
    # indifferent row player: weak deviations do not break equilibrium
    payoffs = np.array([[[1.0, 2.0], [1.0, 0.0]],
                        [[1.0, 2.0], [1.0, 0.0]]])
    matrix = equilibrium.PayoffMatrix(
        strategies=[[None, None], [None, None]], payoffs=payoffs,
        config=engine.GameConfig(l_max=1.0))
    result = equilibrium.find_pure_nash(matrix)
    assert (0, 0) in result.equilibria
    assert (1, 0) in result.equilibria


def certification_instance(rng, n_nodes, n_agents):
    g = graphs.make_complete(n_nodes)
    starts = list(range(n_agents))
    values = np.zeros(n_nodes)
    free = [u for u in g.non_terminals() if u not in starts]
    draw = rng.uniform(0.0, 10.0, size=len(free))
    while len(np.unique(draw)) < len(draw):
        draw = rng.uniform(0.0, 10.0, size=len(free))
    values[free] = draw
    values[n_nodes - 1] = 15.0
    config = engine.GameConfig(l_max=2.0, terminal_prize=15.0)
    return g, values, starts, config


def test_greedy_profile_certified_on_sample():
    rng = np.random.default_rng(21)
    for _ in range(20):
        n_nodes = int(rng.choice([4, 5, 6]))
        n_agents = int(rng.choice([2, 3]))
        if n_nodes <= n_agents + 1:
            n_nodes = n_agents + 2
        g, values, starts, config = certification_instance(rng, n_nodes,
                                                           n_agents)
        routes, _ = equilibrium.greedy_routes(g, values, starts, config)
        assert all(r is not None for r in routes)
        ok, dev = equilibrium.verify_unilateral_deviations(
            g, values, starts, config, routes)
        assert ok, dev
        prize_tot, term_tot = equilibrium.simulate_route_profile(
            g, values, starts, routes, config)
        team = float(prize_tot.sum() + term_tot.sum())
        best, _ = oracles.exhaustive_top(g, values, starts, config.l_max,
                                         config.terminal_prize)
        assert team == pytest.approx(best, abs=1e-9)


def test_greedy_ranks_match_prize_order():
    g = graphs.make_complete(6)
    values = np.array([0.0, 0.0, 9.0, 4.0, 6.0, 15.0])
    config = engine.GameConfig(l_max=2.0, terminal_prize=15.0)
    routes, log = equilibrium.greedy_routes(g, values, [0, 1], config)
    # senior takes the 9, junior the 6; the 4 stays on the board
    assert routes[0].nodes == (2,)
    assert routes[1].nodes == (4,)
    assert log.returns[0] == pytest.approx(9.0 + 15.0)
    assert log.returns[1] == pytest.approx(6.0 + 15.0)


def test_greedy_equal_prizes_tie_break():
    # two equal prizes: the junior of the tie group takes the cheaper one;
    # with unit weights the lower node id breaks the remaining tie
    g = graphs.make_complete(6)
    values = np.array([0.0, 0.0, 7.0, 7.0, 3.0, 15.0])
    config = engine.GameConfig(l_max=2.0, terminal_prize=15.0)
    routes, _ = equilibrium.greedy_routes(g, values, [0, 1], config)
    targets = {routes[0].nodes[0], routes[1].nodes[0]}
    assert targets == {2, 3}
    ok, dev = equilibrium.verify_unilateral_deviations(
        g, values, [0, 1], config, routes)
    assert ok, dev


def test_verify_detects_non_equilibrium():
    g = graphs.make_complete(5)
    values = np.array([0.0, 0.0, 8.0, 2.0, 15.0])
    config = engine.GameConfig(l_max=2.0, terminal_prize=15.0)
    # senior deliberately takes the small prize: deviating to the 8 pays
    bad = [equilibrium.RouteStrategy(0, (3,), 4, 2.0),
           equilibrium.RouteStrategy(1, (), 4, 1.0)]
    ok, dev = equilibrium.verify_unilateral_deviations(
        g, values, [0, 1], config, bad)
    assert not ok
    agent_id, better, gain = dev
    assert agent_id == 1
    assert gain == pytest.approx(6.0)


def test_pne_payoffs_unique_in_single_collection_regime():
    """Multiple PNE profiles may exist (padding through zero-prize nodes),
    but they all pay identically."""
    rng = np.random.default_rng(33)
    for _ in range(15):
        n_nodes = int(rng.choice([4, 5]))
        n_agents = 2
        g, values, starts, config = certification_instance(rng, n_nodes,
                                                           n_agents)
        matrix = equilibrium.payoff_matrix(g, values, starts, config)
        result = equilibrium.find_pure_nash(matrix)
        assert result.exists
        payoff_vectors = {tuple(matrix.cell(eq)) for eq in result.equilibria}
        assert len(payoff_vectors) == 1


def test_greedy_on_star_alternating_stages():
    g = graphs.make_star(4, [1.0, 1.0, 1.0, 1.0])
    values = np.array([0.0, 5.0, 3.0, 2.0, 15.0])
    config = engine.GameConfig(l_max=3.0, terminal_prize=15.0)
    routes, log = equilibrium.greedy_routes(g, values, [0, 0], config)
    assert log.trajectories[0] == [0, 1, 0, 4]
    assert log.trajectories[1] == [0, 2, 0, 4]
    assert log.returns[0] == pytest.approx(5.0 + 15.0)
    assert log.returns[1] == pytest.approx(3.0 + 15.0)
    # deviation search over the revisit-aware strategy space
    lists = [equilibrium.enumerate_strategies(g, 0, config,
                                              allow_revisits=True)
             for _ in range(2)]
    ok, dev = equilibrium.verify_unilateral_deviations(
        g, values, [0, 0], config, routes, strategy_lists=lists)
    assert ok, dev


def test_price_of_anarchy_helpers():
    assert equilibrium.price_of_anarchy(30.0, 40.0) == pytest.approx(0.75)
    with pytest.raises(ValueError):
        equilibrium.price_of_anarchy(1.0, 0.0)


def test_greedy_policy_guards():
    g = graphs.make_random_geometric(6, 9.0, seed=0)
    config = engine.GameConfig(l_max=5.0)
    with pytest.raises(ValueError):
        equilibrium.greedy_pne_policy(g, config, 2)
    k3 = graphs.make_complete(3)
    with pytest.raises(ValueError):
        equilibrium.greedy_pne_policy(k3, config, 3)
    with pytest.raises(ValueError):
        equilibrium.greedy_pne_policy(
            k3, engine.GameConfig(l_max=5.0, prize_mode=prize_mod.DYNAMIC), 2)
