"""Scenario-driven experiment harness.

A scenario is one YAML file naming a graph, a prize model, the game
parameters, an algorithm, and a seed list. run_scenario executes it and
writes a results table, per-seed artifacts, and a manifest holding the
resolved config and its hash, so a run can be re-executed and compared
byte-for-byte. Nothing here depends on wall-clock time or machine state;
re-running a scenario reproduces identical CSVs.

Seeds run serially in a deterministic order. Every pipeline stage is a pure
function of (resolved scenario, seed), which is what makes the reproduction
guarantee cheap to keep.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np
import yaml

from . import engine, equilibrium, forl, graphs, topsolver
from . import prizes as prize_mod
from ._version import __version__

DEFAULT_OUTPUT_ROOT_ENV = "SPCG_OUTPUT_ROOT"

ALGORITHMS = ("brute_force", "greedy_pne", "topsolver", "forl",
              "independent", "shared")

GRAPH_KINDS = ("complete", "star", "grid_with_deadends", "random_geometric",
               "counterexample", "file")

PRIZE_MODELS = ("uniform", "fixed", "zone", "file")


class ScenarioError(ValueError):
    """Scenario config failed validation; `where` names the offending field."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


# Every default in one place; explain_config() renders this table.
_DEFAULTS = {
    "graph": {
        "kind": None,            # required
        "n_nodes": None,
        "weight": 1.0,
        "leaf_weights": None,
        "rows": None,
        "cols": None,
        "deadend_fraction": 0.3,
        "radius": 8.0,
        "alphas": [0.1, 0.25, 0.5, 0.75, 0.9],
        "path": None,
        "seed": None,            # None: derive the instance from the run seed
        "terminals": None,
    },
    "prizes": {
        "model": "uniform",
        "low": 0.0,
        "high": 10.0,
        "value": 5.0,
        "center": 0,
        "sd": 1.0,
        "path": None,
        "terminal_value": 15.0,
        "mode": "stationary",
        "repopulate_on_departure": False,
        "skip_starts": False,
        "freeze": False,         # sample once per seed, then hold fixed
    },
    "game": {
        "n_agents": None,        # required
        "l_max": None,           # required
        "gamma": 1.0,
        "terminal_conflict": "shared",
        "starts": None,
        "step_cap": None,
    },
    "training": {
        "learning_rate": 0.1,
        "batch_size": 2500,
        "t_max": 200000,
        "rank_mode": "or",
        "global_state": False,
        "h0_fraction": 0.7,
        "rounds": 10,
        "h_stop": 0.05,
        "empirical_h0": False,
    },
    "evaluation": {
        "episodes": 100,
        "argmax": True,
        "top_baseline": False,
        "deviation_check": False,
        "eval_seed_offset": 10000,
    },
    "solver": {
        "node_budget": 100000000,
        "time_limit": None,
    },
}

_TOP_LEVEL = ("name", "algorithm", "seeds", "output_dir",
              "graph", "prizes", "game", "training", "evaluation", "solver")


def _merge_defaults(section: str, given: dict | None) -> dict:
    merged = dict(_DEFAULTS[section])
    for key, value in (given or {}).items():
        if key not in merged:
            raise ScenarioError(f"unknown key {key!r}", where=section)
        merged[key] = value
    return merged


def resolve_scenario(mapping: dict, base_dir=".") -> dict:
    """Fill defaults and validate; returns the fully resolved scenario dict."""
    if not isinstance(mapping, dict):
        raise ScenarioError("scenario file must hold a mapping")
    for key in mapping:
        if key not in _TOP_LEVEL:
            raise ScenarioError(f"unknown top-level key {key!r}")
    out = {
        "name": mapping.get("name"),
        "algorithm": mapping.get("algorithm"),
        "seeds": mapping.get("seeds"),
        "output_dir": mapping.get("output_dir"),
        "base_dir": str(base_dir),
    }
    for section in ("graph", "prizes", "game", "training", "evaluation",
                    "solver"):
        out[section] = _merge_defaults(section, mapping.get(section))
    validate_scenario(out)
    return out


def validate_scenario(sc: dict) -> None:
    if not sc.get("name"):
        raise ScenarioError("missing scenario name", where="name")
    algo = sc.get("algorithm")
    if algo not in ALGORITHMS:
        raise ScenarioError(f"algorithm must be one of {ALGORITHMS}, "
                            f"got {algo!r}", where="algorithm")
    seeds = sc.get("seeds")
    if not isinstance(seeds, list) or not seeds or \
            not all(isinstance(s, int) for s in seeds):
        raise ScenarioError("seeds must be a non-empty list of integers",
                            where="seeds")
    g = sc["graph"]
    if g["kind"] not in GRAPH_KINDS:
        raise ScenarioError(f"kind must be one of {GRAPH_KINDS}, "
                            f"got {g['kind']!r}", where="graph.kind")
    if g["kind"] in ("complete", "star", "random_geometric") \
            and not g["n_nodes"]:
        raise ScenarioError("n_nodes is required for this kind",
                            where="graph.n_nodes")
    if g["kind"] == "grid_with_deadends" and not (g["rows"] and g["cols"]):
        raise ScenarioError("rows and cols are required for grids",
                            where="graph.rows")
    if g["kind"] == "file" and not g["path"]:
        raise ScenarioError("path is required for kind=file",
                            where="graph.path")
    p = sc["prizes"]
    if p["model"] not in PRIZE_MODELS:
        raise ScenarioError(f"model must be one of {PRIZE_MODELS}, "
                            f"got {p['model']!r}", where="prizes.model")
    if p["mode"] not in (prize_mod.STATIONARY, prize_mod.DYNAMIC):
        raise ScenarioError("mode must be 'stationary' or 'dynamic'",
                            where="prizes.mode")
    gm = sc["game"]
    if g["kind"] != "counterexample":
        if not gm["n_agents"] or gm["n_agents"] < 1:
            raise ScenarioError("n_agents must be a positive integer",
                                where="game.n_agents")
        if gm["l_max"] is None or gm["l_max"] <= 0:
            raise ScenarioError("l_max must be positive", where="game.l_max")
    if gm["terminal_conflict"] not in (engine.TERMINAL_SHARED,
                                       engine.TERMINAL_SENIOR_ONLY):
        raise ScenarioError("terminal_conflict must be 'shared' or "
                            "'senior_only'", where="game.terminal_conflict")
    if algo in ("brute_force", "greedy_pne", "topsolver") \
            and g["kind"] != "counterexample" and gm["starts"] is None:
        raise ScenarioError(f"algorithm {algo!r} needs fixed game.starts",
                            where="game.starts")
    if p["skip_starts"] and gm["starts"] is None \
            and g["kind"] != "counterexample":
        raise ScenarioError("skip_starts needs fixed game.starts",
                            where="prizes.skip_starts")
    tr = sc["training"]
    if tr["rank_mode"] not in (forl.RANK_ORDINAL, forl.RANK_GLOBAL):
        raise ScenarioError("rank_mode must be 'or' or 'gr'",
                            where="training.rank_mode")
    if tr["t_max"] <= 0 or tr["batch_size"] <= 0:
        raise ScenarioError("t_max and batch_size must be positive",
                            where="training.t_max")


def load_scenario(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from exc
    try:
        mapping = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"scenario file is not valid YAML: {exc}") from exc
    return resolve_scenario(mapping, base_dir=path.parent)


def scenario_hash(resolved: dict) -> str:
    canon = {k: v for k, v in resolved.items() if k != "base_dir"}
    blob = json.dumps(canon, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def build_graph(sc: dict, seed: int):
    """Instance for one seed. Returns (graph, fixed prize vector or None)."""
    g = sc["graph"]
    gseed = g["seed"] if g["seed"] is not None else seed
    kind = g["kind"]
    if kind == "counterexample":
        raise ScenarioError("counterexample graphs carry their own sweep; "
                            "handled by the brute_force pipeline",
                            where="graph.kind")
    if kind == "complete":
        terminals = set(g["terminals"]) if g["terminals"] else None
        w = float(g["weight"])
        return graphs.make_complete(int(g["n_nodes"]),
                                    weight_fn=lambda u, v: w,
                                    terminals=terminals), None
    if kind == "star":
        n_leaves = int(g["n_nodes"]) - 1
        lw = g["leaf_weights"] or [float(g["weight"])] * n_leaves
        return graphs.make_star(n_leaves, lw), None
    if kind == "grid_with_deadends":
        return graphs.make_grid_with_deadends(
            int(g["rows"]), int(g["cols"]), float(g["deadend_fraction"]),
            seed=gseed), None
    if kind == "random_geometric":
        return graphs.make_random_geometric(
            int(g["n_nodes"]), float(g["radius"]), seed=gseed), None
    if kind == "file":
        path = Path(sc["base_dir"]) / g["path"]
        return graphs.load_graph(path), None
    raise ScenarioError(f"unhandled graph kind {kind!r}", where="graph.kind")


def build_prize_model(sc: dict, graph) -> prize_mod.PrizeModel:
    p = sc["prizes"]
    starts = sc["game"]["starts"] or []
    skip = tuple(starts) if p["skip_starts"] else ()
    if p["model"] == "uniform":
        model = prize_mod.uniform_model(
            graph, low=float(p["low"]), high=float(p["high"]),
            terminal_value=float(p["terminal_value"]), mode=p["mode"],
            skip=skip)
    elif p["model"] == "fixed":
        values = {u: (0.0 if u in skip else float(p["value"]))
                  for u in graph.non_terminals()}
        model = prize_mod.fixed_model(graph, values,
                                      terminal_value=float(p["terminal_value"]),
                                      mode=p["mode"])
    elif p["model"] == "zone":
        model = prize_mod.make_zone_model(
            graph, center=int(p["center"]), sd=float(p["sd"]),
            terminal_value=float(p["terminal_value"]), mode=p["mode"])
    elif p["model"] == "file":
        if not p["path"]:
            raise ScenarioError("path is required for model=file",
                                where="prizes.path")
        lines = graphs.load_prize_lines(Path(sc["base_dir"]) / p["path"])
        model = prize_mod.model_from_prize_lines(
            graph, lines, terminal_value=float(p["terminal_value"]),
            mode=p["mode"])
    else:
        raise ScenarioError(f"unhandled prize model {p['model']!r}",
                            where="prizes.model")
    if p["repopulate_on_departure"]:
        model = prize_mod.PrizeModel(
            model.n_nodes, model.terminals, dict(model.per_node),
            model.terminal_value, model.mode, repopulate_on_departure=True)
    return model


def game_config(sc: dict) -> engine.GameConfig:
    gm, p = sc["game"], sc["prizes"]
    return engine.GameConfig(
        l_max=float(gm["l_max"]),
        terminal_prize=float(p["terminal_value"]),
        prize_mode=p["mode"],
        gamma=float(gm["gamma"]),
        terminal_conflict=gm["terminal_conflict"],
        step_cap=gm["step_cap"])


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return ""
    return str(value)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _frozen_prizes(sc, graph, model, seed) -> np.ndarray | None:
    if not sc["prizes"]["freeze"]:
        return None
    return prize_mod.sample_initial(model, seed)


def _top_optimum(graph, prize_vector, starts, config, node_budget):
    inst = topsolver.TopInstance(graph=graph, prizes=prize_vector,
                                 starts=tuple(starts), l_max=config.l_max,
                                 terminal_prize=config.terminal_prize)
    sol = topsolver.solve_exact(inst, node_budget=node_budget)
    return sol


def _run_brute_force(sc, out_dir):
    rows = []
    if sc["graph"]["kind"] == "counterexample":
        header = ["alpha", "n_strategies", "pne_exists", "n_equilibria",
                  "equilibrium_reward", "optimum", "poa"]
        for alpha in sc["graph"]["alphas"]:
            graph, prize_vector = graphs.make_counterexample(float(alpha))
            config = engine.GameConfig(
                l_max=graphs.COUNTEREXAMPLE_BUDGET,
                terminal_prize=graphs.COUNTEREXAMPLE_TERMINAL_PRIZE,
                prize_mode=prize_mod.STATIONARY)
            starts = [graph.staging, graph.staging]
            matrix = equilibrium.payoff_matrix(graph, prize_vector, starts,
                                               config)
            result = equilibrium.find_pure_nash(matrix)
            sol = _top_optimum(graph, prize_vector, starts, config,
                               sc["solver"]["node_budget"])
            if result.exists:
                worst = equilibrium.worst_equilibrium_team_reward(matrix,
                                                                  result)
                poa = equilibrium.price_of_anarchy(worst, sol.team_reward)
            else:
                worst = float("nan")
                poa = float("nan")
            rows.append([alpha, len(matrix.strategies[0]), result.exists,
                         len(result.equilibria), worst, sol.team_reward, poa])
        _write_csv(out_dir / "results.csv", header, rows)
        return
    header = ["seed", "pne_exists", "n_equilibria", "equilibrium_reward",
              "optimum", "poa"]
    config = game_config(sc)
    starts = list(sc["game"]["starts"])
    for seed in sc["seeds"]:
        graph, _ = build_graph(sc, seed)
        model = build_prize_model(sc, graph)
        prize_vector = prize_mod.sample_initial(model, seed)
        matrix = equilibrium.payoff_matrix(graph, prize_vector, starts, config)
        result = equilibrium.find_pure_nash(matrix)
        sol = _top_optimum(graph, prize_vector, starts, config,
                           sc["solver"]["node_budget"])
        if result.exists:
            worst = equilibrium.worst_equilibrium_team_reward(matrix, result)
            poa = equilibrium.price_of_anarchy(worst, sol.team_reward)
        else:
            worst = float("nan")
            poa = float("nan")
        rows.append([seed, result.exists, len(result.equilibria), worst,
                     sol.team_reward, poa])
    _write_csv(out_dir / "results.csv", header, rows)


def _run_greedy_pne(sc, out_dir):
    config = game_config(sc)
    starts = list(sc["game"]["starts"])
    header = ["seed", "pne_verified", "team_reward", "optimum", "ratio"]
    rows = []
    for seed in sc["seeds"]:
        graph, _ = build_graph(sc, seed)
        model = build_prize_model(sc, graph)
        prize_vector = prize_mod.sample_initial(model, seed)
        routes, _log = equilibrium.greedy_routes(graph, prize_vector, starts,
                                                 config)
        ok, _dev = equilibrium.verify_unilateral_deviations(
            graph, prize_vector, starts, config, routes)
        prize_totals, term_totals = equilibrium.simulate_route_profile(
            graph, prize_vector, starts, routes, config)
        team = float(sum(prize_totals) + sum(term_totals))
        if sc["evaluation"]["top_baseline"]:
            sol = _top_optimum(graph, prize_vector, starts, config,
                               sc["solver"]["node_budget"])
            optimum = sol.team_reward
            ratio = team / optimum if optimum > 0 else float("nan")
        else:
            optimum = float("nan")
            ratio = float("nan")
        rows.append([seed, ok, team, optimum, ratio])
    _write_csv(out_dir / "results.csv", header, rows)


def _run_topsolver(sc, out_dir):
    config = game_config(sc)
    starts = list(sc["game"]["starts"])
    header = ["seed", "n_nodes", "n_agents", "team_reward", "upper_bound",
              "optimal", "nodes_expanded"]
    rows = []
    for seed in sc["seeds"]:
        graph, _ = build_graph(sc, seed)
        model = build_prize_model(sc, graph)
        prize_vector = prize_mod.sample_initial(model, seed)
        inst = topsolver.TopInstance(graph=graph, prizes=prize_vector,
                                     starts=tuple(starts), l_max=config.l_max,
                                     terminal_prize=config.terminal_prize)
        limit = sc["solver"]["time_limit"]
        if limit is not None:
            sol = topsolver.solve_bound(inst, time_limit=float(limit))
        else:
            sol = topsolver.solve_exact(
                inst, node_budget=sc["solver"]["node_budget"])
        rows.append([seed, graph.n_nodes, len(starts), sol.team_reward,
                     sol.upper_bound, sol.optimal, sol.nodes_expanded])
    _write_csv(out_dir / "results.csv", header, rows)


class _ArgmaxPolicy:
    """Deterministic wrapper: all mass on the inner policy's modal action."""

    def __init__(self, inner):
        self.inner = inner

    def action_distribution(self, obs):
        dist = np.asarray(self.inner.action_distribution(obs), dtype=float)
        out = np.zeros_like(dist)
        if dist.sum() > 0:
            out[int(np.argmax(dist))] = 1.0
        return out


def _evaluate(sc, graph, model, config, policies, seed, out_dir, frozen):
    ev = sc["evaluation"]
    n = sc["game"]["n_agents"]
    eval_policies = [
        _ArgmaxPolicy(p) if ev["argmax"] else p for p in policies]
    starts = sc["game"]["starts"]
    stage_rows = []
    team = []
    per_agent = np.zeros(n)
    conflicts = []
    last_log = None
    for episode in range(ev["episodes"]):
        log = engine.rollout(
            graph, model, config, eval_policies,
            seed=ev["eval_seed_offset"] + 1000 * seed + episode,
            starts=list(starts) if starts else None,
            initial_prizes=frozen)
        team.append(log.team_reward)
        per_agent += log.returns
        conflicts.append(log.conflicts)
        for stage, rewards in enumerate(log.stage_rewards):
            for i in range(n):
                stage_rows.append([episode, stage, i + 1, float(rewards[i])])
        last_log = log
    _write_csv(out_dir / f"eval_stage_rewards_seed{seed}.csv",
               ["episode", "stage", "agent", "reward"], stage_rows)
    return {
        "team_mean": float(np.mean(team)),
        "per_agent_mean": per_agent / max(len(team), 1),
        "conflicts_mean": float(np.mean(conflicts)),
        "last_log": last_log,
    }


def _run_training(sc, out_dir):
    algo = sc["algorithm"]
    config = game_config(sc)
    tr = sc["training"]
    ev = sc["evaluation"]
    n = sc["game"]["n_agents"]
    header = (["seed", "t_final", "freezing_point", "updates",
               "eval_team_reward"]
              + [f"eval_return_{i + 1}" for i in range(n)]
              + ["route_reward", "pne_verified", "optimum", "ratio"])
    rows = []
    for seed in sc["seeds"]:
        graph, _ = build_graph(sc, seed)
        model = build_prize_model(sc, graph)
        frozen = _frozen_prizes(sc, graph, model, seed)
        train_model = model
        if frozen is not None:
            values = {u: float(frozen[u]) for u in graph.non_terminals()}
            train_model = prize_mod.fixed_model(
                graph, values, terminal_value=float(
                    sc["prizes"]["terminal_value"]),
                mode=sc["prizes"]["mode"])
        spec = forl.FeatureSpec(graph, config.l_max,
                                rank_mode=tr["rank_mode"],
                                global_state=tr["global_state"])

        def make_learner():
            return forl.LinearSoftmaxPolicy(spec, tr["learning_rate"],
                                            config.gamma)

        starts = sc["game"]["starts"]
        starts = list(starts) if starts else None
        if algo == "forl":
            schedule = forl.default_schedule(
                graph.n_nodes, h0_fraction=tr["h0_fraction"],
                rounds=tr["rounds"], h_stop=tr["h_stop"])
            policies, log = forl.forl_train(
                graph, train_model, config, make_learner, schedule,
                t_max=tr["t_max"], seed=seed, n_agents=n, starts=starts,
                batch_size=tr["batch_size"],
                empirical_h0=tr["empirical_h0"])
        elif algo == "independent":
            policies, log = forl.train_independent(
                graph, train_model, config, make_learner, t_max=tr["t_max"],
                seed=seed, n_agents=n, starts=starts,
                batch_size=tr["batch_size"])
        else:
            learner, log = forl.train_parameter_shared(
                graph, train_model, config, make_learner(), t_max=tr["t_max"],
                seed=seed, n_agents=n, starts=starts,
                batch_size=tr["batch_size"])
            policies = [learner] * n
        log.to_csv(out_dir / f"training_log_seed{seed}.csv")
        names = spec.names()
        saved = policies if algo != "shared" else [policies[0]]
        for i, policy in enumerate(saved):
            forl.save_policy(out_dir / f"policy_seed{seed}_agent{i + 1}.txt",
                             policy, feature_names=names)
        metrics = _evaluate(sc, graph, train_model, config, policies, seed,
                            out_dir, frozen)
        route_reward = float("nan")
        pne_verified = ""
        optimum = float("nan")
        ratio = float("nan")
        if starts is not None and frozen is not None:
            routes = equilibrium.routes_from_log(graph, metrics["last_log"])
            if all(r is not None for r in routes):
                prize_totals, term_totals = equilibrium.simulate_route_profile(
                    graph, frozen, starts, routes, config)
                route_reward = float(sum(prize_totals) + sum(term_totals))
                if ev["deviation_check"]:
                    ok, _ = equilibrium.verify_unilateral_deviations(
                        graph, frozen, starts, config, routes)
                    pne_verified = ok
            if ev["top_baseline"]:
                sol = _top_optimum(graph, frozen, starts, config,
                                   sc["solver"]["node_budget"])
                optimum = sol.team_reward
                if not math.isnan(route_reward) and optimum > 0:
                    ratio = route_reward / optimum
        rows.append([seed, log.final.t, log.final.freezing_point,
                     len(log.entries), metrics["team_mean"]]
                    + list(metrics["per_agent_mean"])
                    + [route_reward, pne_verified, optimum, ratio])
    _write_csv(out_dir / "results.csv", header, rows)


def run_scenario(scenario_file, output_root=None) -> Path:
    """Execute a scenario file; returns the run directory."""
    sc = load_scenario(scenario_file)
    if output_root is None:
        output_root = sc.get("output_dir") or os.environ.get(
            DEFAULT_OUTPUT_ROOT_ENV, "runs")
    out_dir = Path(output_root) / sc["name"]
    out_dir.mkdir(parents=True, exist_ok=True)

    algo = sc["algorithm"]
    if algo == "brute_force":
        _run_brute_force(sc, out_dir)
    elif algo == "greedy_pne":
        _run_greedy_pne(sc, out_dir)
    elif algo == "topsolver":
        _run_topsolver(sc, out_dir)
    else:
        _run_training(sc, out_dir)

    manifest = {
        "record": "manifest",
        "name": sc["name"],
        "algorithm": algo,
        "seeds": sc["seeds"],
        "config_sha256": scenario_hash(sc),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scenario": {k: v for k, v in sc.items() if k != "base_dir"},
        "artifacts": sorted(p.name for p in out_dir.iterdir()
                            if p.name != "manifest.json"),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return out_dir


PLOTDATA_KINDS = ("convergence", "stage_rewards", "poa", "scaling")


def _read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise FileNotFoundError(f"{path} is empty")
    return rows[0], rows[1:]


def emit_plotdata(run_dir, which: str) -> Path:
    """Project run artifacts into one tidy plot-ready CSV per kind."""
    run_dir = Path(run_dir)
    if which not in PLOTDATA_KINDS:
        raise ScenarioError(f"which must be one of {PLOTDATA_KINDS}, "
                            f"got {which!r}")
    if not (run_dir / "manifest.json").exists():
        raise FileNotFoundError(f"no manifest.json under {run_dir}")

    if which == "convergence":
        logs = sorted(run_dir.glob("training_log_seed*.csv"))
        if not logs:
            raise FileNotFoundError("no training logs in this run")
        out_rows = []
        for path in logs:
            seed = int(path.stem.rsplit("seed", 1)[1])
            header, rows = _read_csv(path)
            n = sum(1 for h in header if h.startswith("entropy_"))
            for row in rows:
                rec = dict(zip(header, row))
                for i in range(1, n + 1):
                    out_rows.append([seed, rec["t"], rec["trainee"],
                                     rec["freezing_point"], i,
                                     rec[f"entropy_{i}"],
                                     rec[f"mean_return_{i}"]])
        out = run_dir / "plot_convergence.csv"
        _write_csv(out, ["seed", "t", "trainee", "freezing_point", "agent",
                         "entropy", "mean_return"], out_rows)
        return out

    if which == "stage_rewards":
        files = sorted(run_dir.glob("eval_stage_rewards_seed*.csv"))
        if not files:
            raise FileNotFoundError("no evaluation stage-reward files "
                                    "in this run")
        totals = {}
        counts = {}
        for path in files:
            header, rows = _read_csv(path)
            for row in rows:
                rec = dict(zip(header, row))
                key = (int(rec["stage"]), int(rec["agent"]))
                totals[key] = totals.get(key, 0.0) + float(rec["reward"])
                counts[key] = counts.get(key, 0) + 1
        out_rows = [[stage, agent, totals[(stage, agent)] /
                     counts[(stage, agent)]]
                    for stage, agent in sorted(totals)]
        out = run_dir / "plot_stage_rewards.csv"
        _write_csv(out, ["stage", "agent", "prize"], out_rows)
        return out

    header, rows = _read_csv(run_dir / "results.csv")
    rec_rows = [dict(zip(header, row)) for row in rows]
    if which == "poa":
        needed = {"optimum"}
        if not rec_rows or not needed.issubset(rec_rows[0]):
            raise FileNotFoundError("results.csv has no optimum column; "
                                    "run with top_baseline or brute_force")
        out_rows = []
        for rec in rec_rows:
            instance = rec.get("seed", rec.get("alpha", ""))
            eq = rec.get("equilibrium_reward",
                         rec.get("team_reward", rec.get("route_reward", "")))
            ratio = rec.get("poa", rec.get("ratio", ""))
            out_rows.append([instance, eq, rec["optimum"], ratio])
        out = run_dir / "plot_poa.csv"
        _write_csv(out, ["instance", "equilibrium_reward", "optimum",
                         "ratio"], out_rows)
        return out

    # scaling: solver effort per instance
    if not rec_rows or "nodes_expanded" not in rec_rows[0]:
        raise FileNotFoundError("results.csv has no nodes_expanded column; "
                                "scaling needs a topsolver run")
    out_rows = [[rec.get("seed", ""), rec.get("n_nodes", ""),
                 rec.get("n_agents", ""), rec["nodes_expanded"],
                 rec.get("optimal", "")] for rec in rec_rows]
    out = run_dir / "plot_scaling.csv"
    _write_csv(out, ["instance", "n_nodes", "n_agents", "nodes_expanded",
                     "optimal"], out_rows)
    return out


def explain_config() -> str:
    """Documented scenario template; every default spelled out."""
    lines = [
        "# Scenario file reference. Defaults shown; omitted keys take them.",
        "name: my_experiment        # required; names the output directory",
        "algorithm: brute_force     # brute_force | greedy_pne | topsolver |"
        " forl | independent | shared",
        "seeds: [0, 1, 2]           # required; one pipeline pass per seed",
        "output_dir: null           # default: $SPCG_OUTPUT_ROOT or ./runs",
        "",
        "graph:",
        "  kind: complete           # complete | star | grid_with_deadends |"
        " random_geometric | counterexample | file",
        "  n_nodes: null            # complete/star/random_geometric",
        "  weight: 1.0              # uniform edge weight (complete/star)",
        "  leaf_weights: null       # star spoke costs, overrides weight",
        "  rows: null               # grid",
        "  cols: null               # grid",
        "  deadend_fraction: 0.3    # grid edge-pruning share",
        "  radius: 8.0              # random_geometric join radius",
        "  alphas: [0.1, 0.25, 0.5, 0.75, 0.9]  # counterexample sweep",
        "  path: null               # graph file (kind: file)",
        "  seed: null               # fixed generator seed; null: run seed",
        "  terminals: null          # override terminal set (complete)",
        "",
        "prizes:",
        "  model: uniform           # uniform | fixed | zone | file",
        "  low: 0.0                 # uniform support",
        "  high: 10.0",
        "  value: 5.0               # fixed model value",
        "  center: 0                # zone center node",
        "  sd: 1.0                  # zone / file normal spread",
        "  path: null               # prize lines file (model: file)",
        "  terminal_value: 15.0     # payment per agent reaching a terminal",
        "  mode: stationary         # stationary | dynamic",
        "  repopulate_on_departure: false  # dynamic: redraw when vacated",
        "  skip_starts: false       # zero the start-node prizes",
        "  freeze: false            # sample once per seed, then hold fixed",
        "",
        "game:",
        "  n_agents: null           # required (except counterexample: 2)",
        "  l_max: null              # required travel budget"
        " (counterexample: 3)",
        "  gamma: 1.0               # discount",
        "  terminal_conflict: shared  # shared | senior_only",
        "  starts: null             # fixed start nodes; null: random",
        "  step_cap: null           # episode step limit; null: derived",
        "",
        "training:                  # forl / independent / shared only",
        "  learning_rate: 0.1",
        "  batch_size: 2500         # transitions per policy update",
        "  t_max: 200000            # environment-step budget",
        "  rank_mode: or            # or (ordinal) | gr (global)",
        "  global_state: false      # add contention features",
        "  h0_fraction: 0.7         # first freezing point / ln(n_nodes)",
        "  rounds: 10               # freezing-point steps to h_stop",
        "  h_stop: 0.05             # staircase floor (nats)",
        "  empirical_h0: false      # measure the first freezing point",
        "",
        "evaluation:",
        "  episodes: 100            # evaluation rollouts per seed",
        "  argmax: true             # deterministic greedy evaluation",
        "  top_baseline: false      # compare against the exact optimum",
        "  deviation_check: false   # verify learned routes are a PNE",
        "  eval_seed_offset: 10000  # evaluation rollout seed base",
        "",
        "solver:",
        "  node_budget: 100000000   # exact-solver expansion cap",
        "  time_limit: null         # seconds; set: bound instead of exact",
    ]
    return "\n".join(lines) + "\n"
