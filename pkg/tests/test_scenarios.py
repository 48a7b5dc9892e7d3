import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import monofo.scenarios as scenarios
from monofo.scenarios import (ScenarioConfig, build_gene_scenario, build_lti_scenario, csv_name,
                              read_trajectory_csv, run_scenario, segment_optima, settling_time)
from monofo.schedule import Schedule


def test_lti_scenario_contents():
    cfg = build_lti_scenario()
    plant = cfg.build_plant([1.0])
    S, s = plant.affine_data()
    np.testing.assert_allclose(S, [[1.0]])
    np.testing.assert_allclose(s, [0.9])
    assert cfg.alphas == [1e-2, 1e-1, 1.0, 1e1, 1e2]
    assert {v["w"][0] for v in cfg.schedule["values"]} == {-1.0, 1.0}
    assert cfg.build_box().upper[0] == 1.0 and cfg.build_box().lower[0] == -0.7
    cost = cfg.build_cost()
    assert cost.value(np.array([0.5]), np.array([1.0])) == pytest.approx(1.1 * 0.25 + 1.0)


def test_gene_scenario_contents():
    cfg = build_gene_scenario()
    plant = cfg.build_plant()
    assert plant.k_y(np.array([0.6]), plant.w)[0] == pytest.approx(1.73535, abs=1e-5)
    assert cfg.x0 == [0.0, 0.0]
    assert cfg.cost["beta_u"] * 2 == 20.0
    assert {v["y_ref"][0] for v in cfg.schedule["values"]} == {0.0, 1.0, 2.0}


@pytest.mark.parametrize("builder", [build_lti_scenario, build_gene_scenario])
def test_config_round_trip(builder, tmp_path):
    cfg = builder()
    assert ScenarioConfig.from_json(cfg.to_json()) == cfg
    cfg.save(tmp_path / "c.json")
    assert ScenarioConfig.load(tmp_path / "c.json") == cfg
    assert json.loads((tmp_path / "c.json").read_text())["name"] == cfg.name


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1e-4, 1e4), min_size=1, max_size=6),
       st.floats(1.0, 1e3), st.floats(0.1, 5.0))
def test_round_trip_with_arbitrary_values(alphas, horizon, beta_u):
    cfg = build_lti_scenario().replace(alphas=alphas, horizon=horizon,
                                       cost={"beta_u": beta_u, "beta_y": 1.0, "y_ref": [2.0]})
    assert ScenarioConfig.from_json(cfg.to_json()) == cfg


def test_config_validation():
    data = build_lti_scenario().to_dict()
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({**data, "unknown": 1})
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({**data, "alphas": []})
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({**data, "alphas": [1.0, -2.0]})
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({**data, "plant": {"family": "nope"}})
    with pytest.raises(ValueError):
        ScenarioConfig.from_dict({**data, "schedule": {"breakpoints": [1.0], "values": [{}]}})


def test_schedule_is_left_continuous():
    s = Schedule((1.0, 2.0), ("a", "b", "c"))
    assert s(1.0) == "a" and s(1.0 + 1e-12) == "b" and s(2.0) == "b" and s(5.0) == "c" and s(-3.0) == "a"
    assert s.segments(0.0, 3.0) == [(0.0, 1.0, "a"), (1.0, 2.0, "b"), (2.0, 3.0, "c")]
    assert s.segments(0.0, 1.5) == [(0.0, 1.0, "a"), (1.0, 1.5, "b")]
    with pytest.raises(ValueError):
        Schedule((2.0, 1.0), ("a", "b", "c"))
    with pytest.raises(ValueError):
        Schedule((1.0,), ("a",))


def test_periodic_schedule():
    s = Schedule.periodic([1, -1], 15.0, 60.0)
    assert s.breakpoints == (15.0, 30.0, 45.0)
    assert s.values == (1, -1, 1, -1)


def test_segment_optima_are_recomputed_per_segment():
    opt = segment_optima(build_gene_scenario())
    assert [o.exogenous["y_ref"][0] for o in opt] == [0.0, 2.0, 1.0]
    assert opt[0].u_star[0] == pytest.approx(0.0, abs=1e-12)
    assert opt[1].u_star[0] == pytest.approx(0.31515, abs=1e-5)
    assert opt[2].u_star[0] != pytest.approx(opt[1].u_star[0], abs=1e-3)
    lti = segment_optima(build_lti_scenario())
    assert [o.u_star[0] for o in lti] == pytest.approx([11 / 21, 1.0, 11 / 21, 1.0], abs=1e-8)
    np.testing.assert_allclose(lti[0].x_star, [2 * (11 / 21 + 0.9), 11 / 21 + 0.9], atol=1e-8)


def test_settling_time():
    t = np.linspace(0, 10, 11)
    u = np.array([[1.0], [0.5], [0.2], [0.001], [0.0], [0.0], [0.0], [0.0], [0.0], [0.0], [0.0]])
    assert settling_time(t, u, np.zeros(1), 0.01) == 3.0
    assert settling_time(t, np.ones((11, 1)), np.zeros(1), 0.01) == float("inf")


def test_lti_sweep_final_errors(lti_sweep):
    for run in lti_sweep.runs.values():
        assert run.ok
        assert all(e < 1e-3 for e in run.segment_errors)
        first = lti_sweep.segments[0]
        assert first.exogenous["w"] == [1.0]
        assert abs(run.segment_final_u[0][0] - 11 / 21) < 1e-3


def test_gene_sweep_examples(gene_sweep):
    for run in gene_sweep.runs.values():
        assert abs(run.segment_final_u[0][0]) < 1e-3
    ya = gene_sweep.runs[0.1].segment_final_y[-1]
    yb = gene_sweep.runs[100.0].segment_final_y[-1]
    assert np.max(np.abs(ya - yb)) < 1e-3


def test_result_files(tmp_path):
    cfg = build_lti_scenario().replace(horizon=300.0)
    result = run_scenario(cfg, alphas=[10.0], run_certification=False, output_dir=tmp_path)
    header, rows = read_trajectory_csv(tmp_path / csv_name(cfg, 10.0))
    traj = result.runs[10.0].trajectory
    assert header == ["t", "x_0", "x_1", "u_0", "y_0", "ustar_0", "ystar_0"]
    assert rows.shape == (len(traj), 7)
    # optimum columns switch after the breakpoint, not at it
    at_switch = rows[np.isclose(rows[:, 0], 250.0)][0]
    after = rows[rows[:, 0] > 250.0][0]
    assert at_switch[5] == pytest.approx(11 / 21, abs=1e-8) and after[5] == pytest.approx(1.0)
    assert (tmp_path / "lti_summary.txt").read_text().startswith("scenario lti")


def test_csv_output_is_deterministic(tmp_path):
    cfg = build_gene_scenario().replace(horizon=30.0)
    run_scenario(cfg, alphas=[1.0], run_certification=False, output_dir=tmp_path / "a")
    run_scenario(cfg, alphas=[1.0], run_certification=False, output_dir=tmp_path / "b")
    name = csv_name(cfg, 1.0)
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_failing_gain_does_not_abort_the_sweep(monkeypatch):
    real = scenarios.simulate_closed_loop

    def flaky(system, *args, **kwargs):
        if system.controller.alpha == 5.0:
            from monofo.integrate import StepSizeUnderflow
            raise StepSizeUnderflow("forced")
        return real(system, *args, **kwargs)

    monkeypatch.setattr(scenarios, "simulate_closed_loop", flaky)
    cfg = build_lti_scenario().replace(horizon=50.0)
    result = run_scenario(cfg, alphas=[1.0, 5.0], run_certification=False)
    assert result.runs[1.0].ok
    assert not result.runs[5.0].ok and "forced" in result.runs[5.0].error
    assert "FAILED" in result.summary()


def test_run_scenario_rejects_bad_gains():
    with pytest.raises(ValueError):
        run_scenario(build_lti_scenario(), alphas=[], run_certification=False)
    with pytest.raises(ValueError):
        run_scenario(build_lti_scenario(), alphas=[0.0], run_certification=False)


def test_plot_is_written(tmp_path):
    pytest.importorskip("matplotlib")
    cfg = build_gene_scenario().replace(horizon=20.0)
    run_scenario(cfg, alphas=[1.0], run_certification=False, output_dir=tmp_path, plot=True)
    assert (tmp_path / "gene.png").stat().st_size > 0
