import numpy as np
import pytest

from continuized.harness.config import (
    ConfigError,
    log_spaced_checkpoints,
    parse_config,
    parse_config_text,
)
from continuized.harness.csvio import emit_csv, load_csv, render_csv
from continuized.harness.presets import get_preset, preset_names
from continuized.harness.runner import (
    RunSet,
    aggregate_values,
    run_experiment,
)

MINIMAL_OPTIMIZE = """
[experiment]
kind = optimize
horizon = 20

[problem]
kind = quadratic
diag = 0.01 0.03 1.0
center = 1 1 1
"""

GOSSIP_CFG = """
[experiment]
kind = gossip
horizon = 30
runs = 5
seed = 7
checkpoints = 1 10 30

[graph]
topology = complete
nodes = 10
"""


class TestParseConfig:
    def test_minimal_defaults(self):
        spec = parse_config_text(MINIMAL_OPTIMIZE)
        assert spec.runs == 1000
        assert spec.checkpoints.shape == (50,)
        assert spec.checkpoints[0] == 1.0
        assert spec.checkpoints[-1] == pytest.approx(20.0)
        assert spec.problem.smoothness == 1.0
        assert spec.noise.kind == "none"

    def test_negative_horizon_named(self):
        bad = MINIMAL_OPTIMIZE.replace("horizon = 20", "horizon = -3")
        with pytest.raises(ConfigError) as err:
            parse_config_text(bad)
        assert any("horizon" in v for v in err.value.violations)

    def test_unknown_key_rejected(self):
        bad = MINIMAL_OPTIMIZE + "\n[algo]\nwarp = 9\n"
        with pytest.raises(ConfigError) as err:
            parse_config_text(bad)
        assert any("warp" in v for v in err.value.violations)

    def test_all_violations_collected(self):
        bad = """
[experiment]
kind = optimize
horizon = -1
runs = 0
"""
        with pytest.raises(ConfigError) as err:
            parse_config_text(bad)
        text = " ".join(err.value.violations)
        assert "horizon" in text and "runs" in text and "[problem]" in text

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            parse_config("/definitely/not/here.cfg")

    def test_preset_expansion(self):
        spec = parse_config_text(
            "[experiment]\npreset = appendix-a1-strongly-convex\nruns = 10\n"
        )
        assert spec.runs == 10
        assert spec.problem.strong_convexity == pytest.approx(0.01)
        assert spec.problem.smoothness == 1.0
        assert spec.kind == "optimize"

    def test_preset_with_foreign_section_rejected(self):
        bad = "[experiment]\npreset = appendix-a1-convex\n\n[graph]\ntopology = line\nnodes = 3\n"
        with pytest.raises(ConfigError):
            parse_config_text(bad)

    def test_explicit_checkpoints_validated(self):
        bad = MINIMAL_OPTIMIZE.replace("horizon = 20", "horizon = 20\ncheckpoints = 5 2")
        with pytest.raises(ConfigError) as err:
            parse_config_text(bad)
        assert any("increasing" in v for v in err.value.violations)

    def test_gossip_config(self):
        spec = parse_config_text(GOSSIP_CFG)
        assert spec.kind == "gossip"
        assert spec.graph.node_count == 10
        assert spec.gossip_algo == "accelerated"

    def test_section_kind_mismatch(self):
        bad = GOSSIP_CFG + "\n[problem]\nkind = quadratic\ndiag = 1\ncenter = 0\n"
        with pytest.raises(ConfigError) as err:
            parse_config_text(bad)
        assert any("does not apply" in v for v in err.value.violations)


class TestPresets:
    def test_each_figure_family_has_a_preset(self):
        names = preset_names()
        assert "appendix-a1-convex" in names
        assert "appendix-a1-strongly-convex" in names
        assert "appendix-b-additive" in names
        for suffix in ("line30", "grid225", "complete10"):
            assert f"appendix-a2-{suffix}" in names

    def test_a1_strongly_convex_expands(self):
        spec = get_preset("appendix-a1-strongly-convex")
        assert spec.runs == 1000
        np.testing.assert_allclose(spec.problem.diag, [0.01, 0.03, 1.0])

    def test_a2_graphs(self):
        assert get_preset("appendix-a2-line30").graph.node_count == 30
        assert get_preset("appendix-a2-grid225").graph.node_count == 225
        assert get_preset("appendix-a2-complete10").graph.edge_count == 45

    def test_b_additive_noise_block(self):
        spec = get_preset("appendix-b-additive")
        assert spec.noise.kind == "additive"
        assert spec.noise.sigma2 == pytest.approx(3e-4)
        assert spec.algo["x0"] == "optimum"

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            get_preset("appendix-z9")


class TestRunner:
    def test_repeat_runs_identical(self):
        spec = parse_config_text(GOSSIP_CFG)
        a = run_experiment(spec)
        b = run_experiment(spec)
        for m in a.metrics:
            np.testing.assert_array_equal(a.values[m], b.values[m])

    def test_single_run_aggregate_is_trace(self):
        spec = parse_config_text(GOSSIP_CFG).with_overrides(runs=1)
        rs = run_experiment(spec)
        np.testing.assert_array_equal(rs.aggregate["energy"]["mean"], rs.values["energy"][0])
        np.testing.assert_array_equal(rs.aggregate["energy"]["q05"], rs.values["energy"][0])

    def test_quantile_order(self):
        spec = parse_config_text(GOSSIP_CFG)
        rs = run_experiment(spec)
        agg = rs.aggregate["energy"]
        med = np.quantile(rs.values["energy"], 0.5, axis=0)
        assert np.all(agg["q05"] <= med + 1e-15)
        assert np.all(med <= agg["q95"] + 1e-15)

    def test_quantiles_linear_interpolation(self):
        values = np.array([[1.0], [2.0], [3.0], [4.0], [5.0]])
        agg = aggregate_values(values)
        assert agg["q05"][0] == pytest.approx(np.quantile([1, 2, 3, 4, 5], 0.05))
        assert agg["mean"][0] == pytest.approx(3.0)

    def test_optimize_runs_and_metrics(self):
        spec = parse_config_text(MINIMAL_OPTIMIZE).with_overrides(runs=3)
        rs = run_experiment(spec)
        assert set(rs.metrics) == {"gap", "dist_sq", "lyapunov"}
        assert rs.values["gap"].shape == (3, 50)

    def test_nesterov_baseline_grid_is_iterations(self):
        cfg = MINIMAL_OPTIMIZE + "\n[algo]\nmethod = nesterov\nvariant = strongly_convex\n"
        spec = parse_config_text(cfg).with_overrides(runs=1)
        rs = run_experiment(spec)
        np.testing.assert_array_equal(rs.checkpoints, np.arange(21.0))
        assert rs.values["gap"][0, -1] < rs.values["gap"][0, 0]

    def test_decentralized_ensemble(self):
        spec = get_preset("decentralized-line10").with_overrides(runs=3, horizon=20.0)
        spec.checkpoints = log_spaced_checkpoints(20.0, 10)
        rs = run_experiment(spec)
        assert rs.values["primal_dist_sq"].shape == (3, 10)

    def test_bounds_attached_when_requested(self):
        spec = parse_config_text(GOSSIP_CFG)
        spec.include_bounds = True
        rs = run_experiment(spec)
        assert "energy" in rs.bounds
        assert rs.bounds["energy"][0] == pytest.approx(2.0 * 0.45 * np.exp(-1.0 / 9.0))

    def test_multiplicative_config_end_to_end(self):
        cfg = """
[experiment]
kind = optimize
horizon = 20
runs = 50
seed = 3
checkpoints = 5 10 20
include_bounds = true

[problem]
kind = least_squares
optimum = 1 -1
samples =
    1.4142135623730951 0 | 1.4142135623730951
    0 1.4142135623730951 | -1.4142135623730951

[noise]
kind = multiplicative

[algo]
method = continuized
schedule = multiplicative_strongly_convex
"""
        spec = parse_config_text(cfg)
        assert spec.problem.r_squared == pytest.approx(2.0)
        rs = run_experiment(spec)
        assert "dist_sq" in rs.bounds
        # coordinate sampling in 2-d: rate 1/sqrt(kappa kappa~) = 1/2
        mean = rs.mean("dist_sq")
        assert mean[-1] < mean[0]
        assert np.all(0.5 * mean <= 1.1 * 0.5 * rs.bounds["dist_sq"] + 1e-12)

    def test_run_failures_carry_run_index(self):
        cfg = """
[experiment]
kind = decentralized
horizon = 5
runs = 2

[graph]
topology = line
nodes = 3

[decentralized]
mu = 0.5
smoothness = 1.0
curvatures = 9.0 0.5 0.5
centers =
    0.1
    0.2
    0.3
"""
        spec = parse_config_text(cfg)
        with pytest.raises(RuntimeError, match="run 0 failed"):
            run_experiment(spec)


class TestCsv:
    def _small_runset(self):
        spec = parse_config_text(GOSSIP_CFG)
        spec.include_bounds = True
        return run_experiment(spec)

    def test_header_and_shape(self, tmp_path):
        rs = self._small_runset()
        path = tmp_path / "out.csv"
        emit_csv(rs, str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "t,metric,mean,q05,q95,bound"
        assert len(lines) == 1 + len(rs.checkpoints)

    def test_round_trip(self, tmp_path):
        rs = self._small_runset()
        path = tmp_path / "out.csv"
        emit_csv(rs, str(path))
        grid, series = load_csv(str(path))
        np.testing.assert_allclose(grid, rs.checkpoints, rtol=1e-11)
        np.testing.assert_allclose(series["energy"]["mean"],
                                   rs.aggregate["energy"]["mean"], rtol=1e-11)
        np.testing.assert_allclose(series["energy"]["bound"], rs.bounds["energy"],
                                   rtol=1e-11)

    def test_reaggregation_matches(self, tmp_path):
        # re-importing the emitted table reproduces the in-memory aggregate
        rs = self._small_runset()
        path = tmp_path / "out.csv"
        emit_csv(rs, str(path))
        _, series = load_csv(str(path))
        fresh = aggregate_values(rs.values["energy"])
        np.testing.assert_allclose(series["energy"]["q05"], fresh["q05"], rtol=1e-11)
        np.testing.assert_allclose(series["energy"]["q95"], fresh["q95"], rtol=1e-11)

    def test_deterministic_bytes(self, tmp_path):
        rs1 = self._small_runset()
        rs2 = self._small_runset()
        assert render_csv(rs1) == render_csv(rs2)

    def test_empty_grid_header_only(self):
        rs = RunSet(checkpoints=np.array([]), metrics=("gap",), traces=[],
                    values={"gap": np.empty((0, 0))}, aggregate={"gap": {}})
        assert render_csv(rs) == "t,metric,mean,q05,q95\n"

    def test_single_cell(self):
        values = {"gap": np.array([[2.0]])}
        rs = RunSet(checkpoints=np.array([1.0]), metrics=("gap",), traces=[],
                    values=values, aggregate={"gap": aggregate_values(values["gap"])})
        lines = render_csv(rs).splitlines()
        assert len(lines) == 2
        assert lines[1].startswith("1,gap,2,")

    def test_twelve_significant_digits(self):
        values = {"gap": np.array([[1.0 / 3.0]])}
        rs = RunSet(checkpoints=np.array([1.0]), metrics=("gap",), traces=[],
                    values=values, aggregate={"gap": aggregate_values(values["gap"])})
        assert "0.333333333333" in render_csv(rs)

    def test_unwritable_path(self):
        rs = self._small_runset()
        with pytest.raises(OSError):
            emit_csv(rs, "/nonexistent-dir/nope/out.csv")
