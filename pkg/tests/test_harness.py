import json
import math

import numpy as np
import pytest
import yaml

import spcg
from spcg import cli, engine, graphs, harness
from spcg import prizes as prize_mod


def write_scenario(tmp_path, mapping, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(mapping))
    return path


def counterexample_mapping(alphas=(0.25, 0.5)):
    return {
        "name": "ce_scan",
        "algorithm": "brute_force",
        "seeds": [0],
        "graph": {"kind": "counterexample", "alphas": list(alphas)},
    }


def greedy_mapping(seeds=(0, 1, 2)):
    return {
        "name": "complete_greedy",
        "algorithm": "greedy_pne",
        "seeds": list(seeds),
        "graph": {"kind": "complete", "n_nodes": 5},
        "prizes": {"skip_starts": True},
        "game": {"n_agents": 2, "l_max": 2.0, "starts": [0, 1]},
        "evaluation": {"top_baseline": True},
    }


# --- scenario resolution ---


def test_resolve_fills_defaults():
    sc = harness.resolve_scenario(greedy_mapping())
    assert sc["prizes"]["model"] == "uniform"
    assert sc["prizes"]["terminal_value"] == 15.0
    assert sc["game"]["gamma"] == 1.0
    assert sc["training"]["batch_size"] == 2500
    assert sc["evaluation"]["episodes"] == 100
    assert sc["solver"]["node_budget"] == 100_000_000


@pytest.mark.parametrize("mutate,where", [
    (lambda m: m.pop("name"), "name"),
    (lambda m: m.update(algorithm="gradient"), "algorithm"),
    (lambda m: m.update(seeds=[]), "seeds"),
    (lambda m: m.update(seeds=["a"]), "seeds"),
    (lambda m: m["graph"].update(kind="torus"), "graph.kind"),
    (lambda m: m["graph"].pop("n_nodes"), "graph.n_nodes"),
    (lambda m: m["game"].update(l_max=-1.0), "game.l_max"),
    (lambda m: m["game"].update(terminal_conflict="split"),
     "game.terminal_conflict"),
    (lambda m: m["game"].pop("starts"), "game.starts"),
    (lambda m: m["training"].update(rank_mode="ordinal"), "training.rank_mode"),
    (lambda m: m["prizes"].update(mode="drifting"), "prizes.mode"),
])
def test_validation_failures(mutate, where):
    mapping = greedy_mapping()
    mapping.setdefault("training", {})
    mutate(mapping)
    with pytest.raises(harness.ScenarioError) as err:
        harness.resolve_scenario(mapping)
    assert where in str(err.value)


def test_unknown_keys_rejected():
    mapping = greedy_mapping()
    mapping["games"] = {}
    with pytest.raises(harness.ScenarioError):
        harness.resolve_scenario(mapping)
    mapping = greedy_mapping()
    mapping["game"]["lmax"] = 2.0
    with pytest.raises(harness.ScenarioError):
        harness.resolve_scenario(mapping)


def test_load_scenario_errors(tmp_path):
    with pytest.raises(harness.ScenarioError):
        harness.load_scenario(tmp_path / "absent.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: [unclosed\n")
    with pytest.raises(harness.ScenarioError):
        harness.load_scenario(bad)
    nonmap = tmp_path / "list.yaml"
    nonmap.write_text("- 1\n- 2\n")
    with pytest.raises(harness.ScenarioError):
        harness.load_scenario(nonmap)


def test_scenario_hash_ignores_base_dir():
    a = harness.resolve_scenario(greedy_mapping(), base_dir="/x")
    b = harness.resolve_scenario(greedy_mapping(), base_dir="/y")
    assert harness.scenario_hash(a) == harness.scenario_hash(b)
    c = harness.resolve_scenario(greedy_mapping(seeds=(5,)))
    assert harness.scenario_hash(a) != harness.scenario_hash(c)


def test_build_graph_kinds():
    sc = harness.resolve_scenario(greedy_mapping())
    g, _ = harness.build_graph(sc, seed=0)
    assert g.n_nodes == 5
    assert g.kind == graphs.GraphKind.COMPLETE

    grid = harness.resolve_scenario({
        "name": "grid", "algorithm": "forl", "seeds": [0],
        "graph": {"kind": "grid_with_deadends", "rows": 3, "cols": 4},
        "game": {"n_agents": 2, "l_max": 6.0}})
    g, _ = harness.build_graph(grid, seed=1)
    assert g.n_nodes == 12

    geo = harness.resolve_scenario({
        "name": "geo", "algorithm": "forl", "seeds": [0],
        "graph": {"kind": "random_geometric", "n_nodes": 7, "seed": 3},
        "game": {"n_agents": 2, "l_max": 6.0}})
    g1, _ = harness.build_graph(geo, seed=10)
    g2, _ = harness.build_graph(geo, seed=20)
    assert g1.edge_list() == g2.edge_list()   # fixed graph seed wins


def test_build_prize_model_skip_starts():
    sc = harness.resolve_scenario(greedy_mapping())
    g, _ = harness.build_graph(sc, seed=0)
    model = harness.build_prize_model(sc, g)
    values = prize_mod.sample_initial(model, 0)
    assert values[0] == 0.0 and values[1] == 0.0
    assert values[2] > 0.0


def test_game_config_mapping():
    mapping = greedy_mapping()
    mapping["game"]["gamma"] = 0.9
    mapping["prizes"]["terminal_value"] = 20.0
    sc = harness.resolve_scenario(mapping)
    config = harness.game_config(sc)
    assert config.l_max == 2.0
    assert config.gamma == 0.9
    assert config.terminal_prize == 20.0
    assert config.terminal_conflict == engine.TERMINAL_SHARED


# --- pipelines ---


def test_counterexample_scan_pipeline(tmp_path):
    path = write_scenario(tmp_path, counterexample_mapping())
    out = harness.run_scenario(path, output_root=tmp_path / "runs")
    assert out == tmp_path / "runs" / "ce_scan"
    lines = (out / "results.csv").read_text().strip().splitlines()
    assert lines[0] == ("alpha,n_strategies,pne_exists,n_equilibria,"
                       "equilibrium_reward,optimum,poa")
    assert len(lines) == 3
    for line in lines[1:]:
        fields = line.split(",")
        assert fields[1] == "3"
        assert fields[2] == "false"
        assert fields[3] == "0"
        assert fields[5] == "205.0"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["record"] == "manifest"
    assert manifest["package_version"] == spcg.__version__
    assert manifest["numpy_version"] == np.__version__
    assert "results.csv" in manifest["artifacts"]
    assert manifest["config_sha256"] == harness.scenario_hash(
        harness.load_scenario(path))


def test_greedy_pipeline_certifies_and_matches_optimum(tmp_path):
    path = write_scenario(tmp_path, greedy_mapping())
    out = harness.run_scenario(path, output_root=tmp_path / "runs")
    lines = (out / "results.csv").read_text().strip().splitlines()
    assert lines[0] == "seed,pne_verified,team_reward,optimum,ratio"
    assert len(lines) == 4
    for line in lines[1:]:
        fields = line.split(",")
        assert fields[1] == "true"
        assert fields[4] == "1.0"


def test_rerun_is_byte_identical(tmp_path):
    path = write_scenario(tmp_path, greedy_mapping())
    out1 = harness.run_scenario(path, output_root=tmp_path / "a")
    out2 = harness.run_scenario(path, output_root=tmp_path / "b")
    for name in ("results.csv", "manifest.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_topsolver_pipeline_and_scaling_plotdata(tmp_path):
    mapping = {
        "name": "solver_run",
        "algorithm": "topsolver",
        "seeds": [0, 1],
        "graph": {"kind": "complete", "n_nodes": 6},
        "game": {"n_agents": 2, "l_max": 3.0, "starts": [0, 1]},
    }
    path = write_scenario(tmp_path, mapping)
    out = harness.run_scenario(path, output_root=tmp_path / "runs")
    lines = (out / "results.csv").read_text().strip().splitlines()
    assert lines[0] == ("seed,n_nodes,n_agents,team_reward,upper_bound,"
                       "optimal,nodes_expanded")
    assert len(lines) == 3
    assert all(line.split(",")[5] == "true" for line in lines[1:])
    plot = harness.emit_plotdata(out, "scaling")
    assert plot.name == "plot_scaling.csv"
    rows = plot.read_text().strip().splitlines()
    assert rows[0] == "instance,n_nodes,n_agents,nodes_expanded,optimal"
    assert len(rows) == 3


def forl_mapping():
    return {
        "name": "tiny_forl",
        "algorithm": "forl",
        "seeds": [0],
        "graph": {"kind": "complete", "n_nodes": 4},
        "prizes": {"skip_starts": True, "freeze": True},
        "game": {"n_agents": 2, "l_max": 2.0, "starts": [0, 1]},
        "training": {"t_max": 300, "batch_size": 50, "rounds": 3},
        "evaluation": {"episodes": 3, "top_baseline": True,
                       "deviation_check": True},
    }


def test_training_pipeline_artifacts(tmp_path):
    path = write_scenario(tmp_path, forl_mapping())
    out = harness.run_scenario(path, output_root=tmp_path / "runs")
    lines = (out / "results.csv").read_text().strip().splitlines()
    assert lines[0] == ("seed,t_final,freezing_point,updates,eval_team_reward,"
                       "eval_return_1,eval_return_2,route_reward,pne_verified,"
                       "optimum,ratio")
    assert len(lines) == 2
    fields = lines[1].split(",")
    assert float(fields[9]) > 0           # exact optimum was computed
    assert (out / "training_log_seed0.csv").exists()
    assert (out / "policy_seed0_agent1.txt").exists()
    assert (out / "policy_seed0_agent2.txt").exists()
    assert (out / "eval_stage_rewards_seed0.csv").exists()

    conv = harness.emit_plotdata(out, "convergence")
    header, *rows = conv.read_text().strip().splitlines()
    assert header == "seed,t,trainee,freezing_point,agent,entropy,mean_return"
    assert rows

    stage = harness.emit_plotdata(out, "stage_rewards")
    header, *rows = stage.read_text().strip().splitlines()
    assert header == "stage,agent,prize"
    assert rows

    poa = harness.emit_plotdata(out, "poa")
    header, *rows = poa.read_text().strip().splitlines()
    assert header == "instance,equilibrium_reward,optimum,ratio"
    assert len(rows) == 1


def test_shared_training_single_policy_file(tmp_path):
    mapping = forl_mapping()
    mapping["name"] = "tiny_shared"
    mapping["algorithm"] = "shared"
    path = write_scenario(tmp_path, mapping)
    out = harness.run_scenario(path, output_root=tmp_path / "runs")
    assert (out / "policy_seed0_agent1.txt").exists()
    assert not (out / "policy_seed0_agent2.txt").exists()


def test_plotdata_guards(tmp_path):
    with pytest.raises(harness.ScenarioError):
        harness.emit_plotdata(tmp_path, "histogram")
    with pytest.raises(FileNotFoundError):
        harness.emit_plotdata(tmp_path / "nowhere", "convergence")
    path = write_scenario(tmp_path, counterexample_mapping())
    out = harness.run_scenario(path, output_root=tmp_path / "runs")
    with pytest.raises(FileNotFoundError):
        harness.emit_plotdata(out, "convergence")
    with pytest.raises(FileNotFoundError):
        harness.emit_plotdata(out, "scaling")


def test_explain_config_covers_every_section():
    text = harness.explain_config()
    for section in ("graph:", "prizes:", "game:", "training:", "evaluation:",
                    "solver:"):
        assert section in text
    for key in ("l_max", "terminal_value", "batch_size", "h0_fraction",
                "node_budget", "repopulate_on_departure"):
        assert key in text


# --- command-line front end ---


def test_cli_run_and_validate(tmp_path, capsys):
    path = write_scenario(tmp_path, counterexample_mapping())
    code = cli.main(["run", str(path), "--output-root",
                     str(tmp_path / "runs")])
    assert code == 0
    printed = capsys.readouterr().out.strip()
    assert printed.endswith("ce_scan")

    assert cli.main(["validate", str(path)]) == 0
    assert "ok: scenario" in capsys.readouterr().out


def test_cli_validate_graph_file(tmp_path, capsys):
    g, prizes = graphs.make_counterexample(0.5)
    path = tmp_path / "game.graph"
    graphs.save_graph(g, path,
                      prize_lines=[(u, float(prizes[u]))
                                   for u in g.non_terminals()])
    assert cli.main(["validate", str(path)]) == 0
    out = capsys.readouterr().out
    assert "ok: graph with 5 nodes" in out


def test_cli_validation_failure_exit_2(tmp_path, capsys):
    mapping = counterexample_mapping()
    mapping["algorithm"] = "gradient"
    path = write_scenario(tmp_path, mapping)
    code = cli.main(["run", str(path)])
    assert code == 2
    err = capsys.readouterr().err
    rec = json.loads(err.strip())
    assert rec["record"] == "error"
    assert rec["kind"] == "validation"
    assert rec["error"] == "ScenarioError"


def test_cli_bad_graph_file_exit_2(tmp_path, capsys):
    path = tmp_path / "broken.graph"
    path.write_text("nodes 3\nedge 0 9 1.0\nterminal 2\n")
    code = cli.main(["validate", str(path)])
    assert code == 2
    rec = json.loads(capsys.readouterr().err.strip())
    assert rec["kind"] == "validation"


def test_cli_runtime_failure_exit_1(tmp_path, capsys):
    code = cli.main(["plotdata", str(tmp_path / "missing"), "convergence"])
    assert code == 1
    rec = json.loads(capsys.readouterr().err.strip())
    assert rec["kind"] == "runtime"


def test_cli_explain_config(capsys):
    assert cli.main(["explain-config"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("# Scenario file reference")
    assert "algorithm: brute_force" in out
