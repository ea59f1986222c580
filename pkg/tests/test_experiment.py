import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idncsim import PolicyConfig, run_episode_p1
from idncsim.cli import main
from idncsim.engine import make_rng
from idncsim.errors import ConfigError, TraceParseError
from idncsim.experiment import (P1_POLICIES, P2_POLICIES, ExperimentSpec, emit_config, load_config,
                                parse_config)
from idncsim.montecarlo import (CSV_HEADER, SCHEMA, draw_scenario, mean_stderr, paired_difference,
                                run_monte_carlo, trial_seeds)
from idncsim.presets import PRESETS, bundled_trace, gnuplot_script, preset_spec, run_preset
from idncsim.traces import load_trace, write_trace

SMALL = dict(n_values=(3,), m_values=(4,), trials=3, seed=11)


# config files

def test_config_round_trip_defaults():
    spec = ExperimentSpec()
    assert parse_config(emit_config(spec)) == spec


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["P1", "P2"]), st.lists(st.integers(2, 12), min_size=1, max_size=4),
       st.integers(1, 500), st.integers(0, 2**31), st.floats(1, 4), st.booleans(),
       st.one_of(st.none(), st.integers(1, 99)))
def test_config_round_trip(objective, ns, trials, seed, p, greedy, max_rounds):
    constraints = (0.0, 0.25, 1.0) if objective == "P1" else (0, 3)
    spec = ExperimentSpec(objective=objective, policies=P1_POLICIES if objective == "P1" else P2_POLICIES,
                          n_values=tuple(ns), constraints=constraints, trials=trials, seed=seed,
                          p_norm=p, greedy_clique=greedy, max_rounds=max_rounds)
    assert parse_config(emit_config(spec)) == spec


@pytest.mark.parametrize("text", [
    "[experiment]\nobjective = P3\n",
    "[experiment]\npolicies = P2\n",
    "[experiment]\nn_values = 1\n",
    "[experiment]\nconstraints = 1.5\n",
    "[experiment]\nobjective = P2\npolicies = P2\nconstraints = 1.5\n",
    "[experiment]\nd2d_loss = 0.2, 1.0\n",
    "[experiment]\nstage1_loss = 0.5\n",
    "[experiment]\np_norm = 0.5\n",
    "[experiment]\ntrials = ten\n",
    "[experiment]\nbogus = 1\n",
    "[experiment]\nimportance = trace\n",
    "[other]\ntrials = 1\n",
    "not a config",
])
def test_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_overrides(tmp_path):
    path = tmp_path / "c.ini"
    path.write_text("[experiment]\ntrials = 4\nn_values = 3, 5\n")
    spec = load_config(path, {"trials": "7", "seed": 3})
    assert spec.trials == 7 and spec.seed == 3 and spec.n_values == (3, 5)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.ini")


# traces

def test_trace_blocks(tmp_path):
    path = tmp_path / "t.csv"
    write_trace(path, [(i, i * 0.5) for i in range(20)], comment="test")
    trace = load_trace(path, 10)
    assert len(trace) == 2
    assert trace.importances(1)[0] == 5.0
    u = trace.universe(0, 3)
    assert u.device_count == 3 and u.column(2) == u.column(0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=6).map(lambda x: x * 5))
def test_trace_write_load_identity(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("tr") / "t.csv"
    write_trace(path, list(enumerate(values)))
    trace = load_trace(path, 5)
    assert [imp for b in trace.blocks for _, imp in b] == values


@pytest.mark.parametrize("body, line", [
    ("packet_id,importance\n1,1.0\n2,0.5\n3,-1.0\n4,1.0\n", 4),
    ("# c\npacket_id,importance\n1,abc\n", 3),
    ("packet_id,importance\n1,1.0,2\n", 2),
    ("pid,imp\n1,1.0\n", 1),
    ("packet_id,importance\n1,1\n2,1\n3,1\n4,1\n5,1\n", 6),
])
def test_trace_errors_name_the_line(tmp_path, body, line):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(TraceParseError) as exc:
        load_trace(path, 2)
    assert exc.value.line == line and f"bad.csv:{line}:" in str(exc.value)


def test_bundled_trace_loads():
    trace = load_trace(bundled_trace(), 10)
    assert len(trace) == 40 and trace.summary()["packets"] == 400


# Monte Carlo

def test_single_trial_matches_direct_episode():
    spec = ExperimentSpec(**{**SMALL, "trials": 1}, policies=("P1",), constraints=(0.2,))
    result = run_monte_carlo(spec)
    setup, episode = trial_seeds(spec.seed, 3, 4, 0)
    state, totals = draw_scenario(spec, 3, 4, setup)
    direct = run_episode_p1(state, PolicyConfig("P1", d_cons=tuple(0.2 * t for t in totals)),
                            make_rng(episode))
    assert result.sample("P1", 3, 4, 0.2, "completion_time")[0] == direct.completion_time


def test_same_seed_same_table_and_worker_independence():
    spec = ExperimentSpec(**SMALL)
    a = run_monte_carlo(spec).to_csv()
    assert a == run_monte_carlo(spec).to_csv()
    assert a == run_monte_carlo(spec, workers=2).to_csv()
    assert a != run_monte_carlo(spec.replace(seed=12)).to_csv()


def test_lossless_pairing_makes_loss_aware_variants_identical():
    spec = ExperimentSpec(n_values=(4,), m_values=(5,), trials=10, seed=3, d2d_loss=(0.0, 0.0),
                          constraints=(0.0, 0.3))
    result = run_monte_carlo(spec)
    for c in spec.constraints:
        a = result.sample("P1", 4, 5, c, "completion_time")
        b = result.sample("ContentAwareLossUnawareP1", 4, 5, c, "completion_time")
        mean, (lo, hi) = paired_difference(a, b)
        assert np.array_equal(a, b) and mean == 0 and lo == hi == 0


def test_csv_schema(tmp_path):
    spec = ExperimentSpec(**SMALL, objective="P2", policies=P2_POLICIES, constraints=(1, 2))
    path = tmp_path / "out.csv"
    result = run_monte_carlo(spec)
    result.write(path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 4 * 2
    assert all(line.startswith(SCHEMA + ",") for line in lines[1:])
    meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
    assert meta["generator"] == "numpy.random.Philox" and parse_config(meta["config"]) == spec
    assert "yerrorlines" in gnuplot_script(result, str(path))


def test_mean_stderr():
    assert mean_stderr([2.0]) == (2.0, 0.0)
    mean, err = mean_stderr([1.0, 3.0])
    assert mean == 2.0 and err == pytest.approx(1.0)


def test_presets_are_valid_and_reproducible(tmp_path):
    for name in PRESETS:
        preset_spec(name).validate()
    with pytest.raises(ConfigError):
        preset_spec("fig9")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_preset("fig3c", seed=5, trials=2, out=str(a), n_values=(3,), m_values=(4,))
    run_preset("fig3c", seed=5, trials=2, out=str(b), n_values=(3,), m_values=(4,))
    assert a.read_bytes() == b.read_bytes()


# command line

def test_cli_run_and_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[experiment]\nn_values = 3\nm_values = 4\ntrials = 2\n")
    out = tmp_path / "r.csv"
    assert main(["run", str(cfg), "--out", str(out), "--seed", "2", "--d2d-loss", "0, 0.1", "--gnuplot"]) == 0
    assert out.read_text().startswith("schema,")
    assert (tmp_path / "r.csv.gp").exists()
    assert main(["run", str(cfg), "--policies", "P2"]) == 1
    assert main(["run", str(tmp_path / "nope.ini")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 1
    capsys.readouterr()


def test_cli_capacity_error(tmp_path, capsys):
    cfg = tmp_path / "big.ini"
    cfg.write_text("[experiment]\nobjective = P2\npolicies = P2\nconstraints = 1\n"
                   "n_values = 20\nm_values = 20\ntrials = 1\nimportance = uniform\n"
                   "stage1_loss = 0.5, 0.5\n")
    assert main(["run", str(cfg)]) == 2
    assert "greedy" in capsys.readouterr().err
    assert main(["run", str(cfg), "--greedy-clique"]) == 0


def test_cli_invariant_exit_code(monkeypatch, capsys):
    import idncsim.oracles as oracles
    monkeypatch.setattr(oracles, "run_selftest", lambda seed, scale: {"x": (1, 1)})
    assert main(["selftest"]) == 3
    assert "FAIL x" in capsys.readouterr().out


def test_cli_selftest_and_trace_info(capsys):
    assert main(["selftest", "--scale", "0.05"]) == 0
    assert capsys.readouterr().out.count("PASS") == 3
    assert main(["trace-info", bundled_trace()]) == 0
    assert json.loads(capsys.readouterr().out)["blocks"] == 40
    assert main(["trace-info", "/nonexistent.csv"]) == 1


def test_cli_preset_stdout(capsys):
    assert main(["preset", "fig2c", "--trials", "1", "--seed", "1"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 1 + 3 * 4 * 2
