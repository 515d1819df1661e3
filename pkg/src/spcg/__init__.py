"""Stochastic prize-collecting games on weighted graphs.

Simultaneous-move agents spend a travel budget collecting node prizes and
racing to terminal nodes; seniority settles collisions. The package holds
the game engine, ordinal-rank computation on the separating graph, pure-Nash
construction and verification, an exact team-orienteering solver for the
cooperative optimum, rank-ordered sequential training with entropy freezing,
and a scenario harness with a CLI.
"""
from ._version import __version__

from .graphs import (
    Graph, GraphKind, GraphFormatError, InvariantError,
    make_complete, make_star, make_grid_with_deadends, make_random_geometric,
    make_counterexample, make_explicit, load_graph, save_graph,
    validate_graph, euclidean_weight_fn,
    COUNTEREXAMPLE_BUDGET, COUNTEREXAMPLE_TERMINAL_PRIZE,
)
from .prizes import (
    PrizeModel, UniformPrize, NormalPrize, FixedPrize,
    STATIONARY, DYNAMIC,
    uniform_model, fixed_model, make_zone_model, model_from_prize_lines,
    sample_initial, sample_with_rng, repopulate,
)
from .engine import (
    GameConfig, GameState, AgentState, StepOutcome, Observation, EpisodeLog,
    EngineError, InfeasibleActionError, UnaffordableActionError,
    MissingActionError,
    TERMINAL_SHARED, TERMINAL_SENIOR_ONLY,
    initial_state, step, observe_all, action_mask, affordable_moves,
    reachable_set, rollout, default_step_cap,
)
from .ordinal import (
    SeparatingGraph, separating_graph_from_positions, build_separating_graph,
    ors, ordinal_ranks, ranks_for_state, ranks_from_positions,
)
from .equilibrium import (
    RouteStrategy, PayoffMatrix, PneResult,
    enumerate_strategies, simulate_route_profile, payoff_matrix,
    find_pure_nash, worst_equilibrium_team_reward, price_of_anarchy,
    rank_greedy_moves, RankGreedyPolicy, greedy_pne_policy, greedy_routes,
    routes_from_log, verify_unilateral_deviations,
)
from .topsolver import (
    TopInstance, TopSolution, InfeasibleInstanceError, SearchBudgetError,
    solve_exact, solve_bound, profile_prize_mass, count_routes,
    save_instance, load_instance, save_solution,
)
from .forl import (
    Transition, FeatureSpec, LinearSoftmaxPolicy, UniformRandomPolicy,
    EntropySchedule, ForlState, ForlLog, ForlDivergenceError,
    RANK_ORDINAL, RANK_GLOBAL,
    estimate_entropy, default_schedule, forl_train,
    train_independent, train_parameter_shared,
    linear_softmax_learner, save_policy, load_policy_parameters,
)
from .harness import (
    ScenarioError, load_scenario, resolve_scenario, validate_scenario,
    run_scenario, emit_plotdata, explain_config, scenario_hash,
)

__all__ = [name for name in dir() if not name.startswith("_")]
