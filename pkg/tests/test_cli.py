import hashlib
import json
from pathlib import Path

import pytest

from iov_offload.cli import main
from iov_offload.report import read_result_csv
from iov_offload.workload import WorkloadSpec, save_workload_spec


def sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@pytest.fixture()
def tiny_config(tmp_path):
    spec = WorkloadSpec(n_requests=5, n_edges=2, n_clouds=3,
                        latency_max_s=0.3, proc_max_s=1.9, deadline_max_s=2.2)
    path = tmp_path / "spec.json"
    save_workload_spec(spec, path)
    return path


@pytest.fixture()
def oracle_config(tmp_path):
    spec = WorkloadSpec(n_requests=6, n_edges=1, n_clouds=3,
                        edge_models=(2,), cloud_models=(4, 5, 3),
                        latency_max_s=0.3, proc_max_s=1.9, deadline_max_s=2.2)
    path = tmp_path / "oracle_spec.json"
    save_workload_spec(spec, path)
    return path


class TestGenerate:
    def test_writes_scenario(self, tmp_path, tiny_config, capsys):
        out = tmp_path / "out"
        assert main(["generate", "--config", str(tiny_config), "--seed", "4",
                     "--out", str(out)]) == 0
        assert (out / "scenario.json").exists()
        assert "5 requests" in capsys.readouterr().out

    def test_reruns_are_byte_identical(self, tmp_path, tiny_config):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            main(["generate", "--config", str(tiny_config), "--seed", "4",
                  "--out", str(out)])
            outs.append(sha(out / "scenario.json"))
        assert outs[0] == outs[1]

    def test_trajectories_produce_mapping(self, tmp_path, tiny_config):
        traj = tmp_path / "traj.csv"
        traj.write_text("id,x_est,y_est\na,0,0\na,5,0\nb,20,0\nb,22,0\n")
        out = tmp_path / "out"
        assert main(["generate", "--config", str(tiny_config), "--seed", "1",
                     "--out", str(out), "--trajectories", str(traj)]) == 0
        mapping = json.loads((out / "trajectory_mapping.json").read_text())
        assert mapping["agents"] == ["a", "b"]
        doc = json.loads((out / "scenario.json").read_text())
        assert len(doc["requests"]) == 2  # one per ingested vehicle

    def test_error_exit_code(self, tmp_path, capsys):
        assert main(["generate", "--config", str(tmp_path / "missing.json"),
                     "--out", str(tmp_path)]) == 1
        assert "error:" in capsys.readouterr().err


class TestOptimizeAndOracle:
    def test_optimize_writes_trace_and_summary(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        main(["generate", "--config", str(tiny_config), "--seed", "4",
              "--out", str(out)])
        assert main(["optimize", "--scenario", str(out / "scenario.json"),
                     "--mode", "sla-aware", "--seed", "2",
                     "--max-generations", "15", "--out", str(out)]) == 0
        trace = out / "trace_sla-aware_seed2.csv"
        summary = json.loads((out / "summary_sla-aware_seed2.json").read_text())
        provenance, rows = read_result_csv(trace)
        assert provenance["kind"] == "trace"
        assert provenance["mode"] == "sla-aware"
        assert len(rows) == summary["generations_run"]
        assert rows[0]["generation"] == "1"
        assert len(summary["best"]["genes"]) == 5
        assert len(summary["best"]["per_request"]) == 5

    def test_optimize_rerun_byte_identical(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        main(["generate", "--config", str(tiny_config), "--seed", "4",
              "--out", str(out)])
        hashes = []
        for _ in range(2):
            main(["optimize", "--scenario", str(out / "scenario.json"),
                  "--mode", "qos-ga", "--seed", "1",
                  "--max-generations", "10", "--out", str(out)])
            hashes.append((sha(out / "trace_qos-ga_seed1.csv"),
                           sha(out / "summary_qos-ga_seed1.json")))
        assert hashes[0] == hashes[1]

    def test_oracle_then_early_stop_optimize(self, tmp_path, oracle_config):
        out = tmp_path / "out"
        main(["generate", "--config", str(oracle_config), "--seed", "36",
              "--out", str(out)])
        scenario = str(out / "scenario.json")
        assert main(["oracle", "--scenario", scenario, "--out", str(out)]) == 0
        oracle_doc = json.loads((out / "oracle.json").read_text())
        assert oracle_doc["best_feasible"] is not None

        assert main(["optimize", "--scenario", scenario, "--mode", "sla-aware",
                     "--seed", "5", "--known-optimum", str(out / "oracle.json"),
                     "--out", str(out)]) == 0
        summary = json.loads((out / "summary_sla-aware_seed5.json").read_text())
        assert summary["generations_run"] < 1000
        assert summary["best"]["feasible"]
        assert abs(summary["best"]["total_time_s"]
                   - oracle_doc["best_feasible"]["total_time_s"]) <= 1e-9


class TestSweep:
    def test_row_count_latency_grid(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(tiny_config), "--vary",
                     "latency", "--seeds", "2", "--max-generations", "4",
                     "--out", str(out)]) == 0
        provenance, rows = read_result_csv(out / "sweep_latency.csv")
        assert provenance["kind"] == "sweep"
        assert len(rows) == 6 * 3 * 2  # grid x modes x seeds
        assert {r["mode"] for r in rows} == {"sla-aware", "qos-ga", "random"}
        # provenance carries seeds and the grid point sits in each row
        assert provenance["seeds"] == "2"
        assert {r["grid_value"] for r in rows} == \
            {"0.1", "0.3", "0.5", "0.7", "0.9", "1.1"}

    def test_requests_grid_row_count(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        assert main(["sweep", "--config", str(tiny_config), "--vary",
                     "requests", "--seeds", "1", "--modes", "random",
                     "--max-generations", "2", "--out", str(out)]) == 0
        _, rows = read_result_csv(out / "sweep_requests.csv")
        assert len(rows) == 7

    def test_thread_count_does_not_change_bytes(self, tmp_path, tiny_config,
                                                monkeypatch):
        digests = []
        for threads in ("1", "8"):
            monkeypatch.setenv("IOV_OFFLOAD_THREADS", threads)
            out = tmp_path / f"t{threads}"
            main(["sweep", "--config", str(tiny_config), "--vary", "deadline",
                  "--seeds", "1", "--max-generations", "3",
                  "--out", str(out)])
            digests.append(sha(out / "sweep_deadline.csv"))
        assert digests[0] == digests[1]


class TestConverge:
    def test_restricted_mutation_stage(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        assert main(["converge", "--config", str(tiny_config),
                     "--scenario-seed", "3", "--seeds", "2",
                     "--stage", "mutation", "--mutation-grid", "0.01,0.05",
                     "--max-generations", "6", "--out", str(out)]) == 0
        _, rows = read_result_csv(out / "converge_results.csv")
        assert len(rows) == 2 * 2
        assert {r["value"] for r in rows} == {"0.01", "0.05"}
        _, traces = read_result_csv(out / "converge_traces.csv")
        assert len(traces) == 4 * 6
        summary = json.loads((out / "converge_summary.json").read_text())
        assert summary["selected"]["mutation_rate"] in (0.01, 0.05)

    def test_full_protocol_small_grids(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        assert main(["converge", "--config", str(tiny_config),
                     "--scenario-seed", "3", "--seeds", "1", "--stage", "all",
                     "--crossover-grid", "0.6,0.95",
                     "--mutation-grid", "0.01,0.05",
                     "--population-grid", "2,4",
                     "--max-generations", "4", "--out", str(out)]) == 0
        summary = json.loads((out / "converge_summary.json").read_text())
        assert set(summary["selected"]) == {"crossover_rate", "mutation_rate",
                                            "population_multiplier"}
        _, rows = read_result_csv(out / "converge_results.csv")
        assert len(rows) == 3 * 2  # three stages, two values, one seed


class TestReport:
    def test_sweep_figures(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        main(["sweep", "--config", str(tiny_config), "--vary", "latency",
              "--seeds", "1", "--modes", "random", "--max-generations", "2",
              "--out", str(out)])
        assert main(["report", "--csv", str(out / "sweep_latency.csv"),
                     "--out", str(out)]) == 0
        assert (out / "sweep_latency_total_time.png").exists()
        assert (out / "sweep_latency_violations.png").exists()

    def test_trace_figures_via_plots_flag(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        main(["generate", "--config", str(tiny_config), "--seed", "4",
              "--out", str(out)])
        main(["optimize", "--scenario", str(out / "scenario.json"),
              "--mode", "sla-aware", "--seed", "0", "--max-generations", "5",
              "--out", str(out), "--plots"])
        assert (out / "trace_fitness.png").exists()
        assert (out / "trace_time.png").exists()

    def test_converge_figures(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        main(["converge", "--config", str(tiny_config), "--scenario-seed",
              "3", "--seeds", "1", "--stage", "mutation",
              "--mutation-grid", "0.01,0.05", "--max-generations", "3",
              "--out", str(out), "--plots"])
        assert (out / "converge_mutation_rate_fitness.png").exists()
        assert (out / "converge_mutation_rate_time.png").exists()

    def test_figure_bytes_reproducible(self, tmp_path, tiny_config):
        out = tmp_path / "out"
        main(["sweep", "--config", str(tiny_config), "--vary", "latency",
              "--seeds", "1", "--modes", "random", "--max-generations", "2",
              "--out", str(out)])
        digests = []
        for sub in ("f1", "f2"):
            fig_out = tmp_path / sub
            main(["report", "--csv", str(out / "sweep_latency.csv"),
                  "--out", str(fig_out)])
            digests.append(sha(fig_out / "sweep_latency_total_time.png"))
        assert digests[0] == digests[1]

    def test_unknown_kind_rejected(self, tmp_path):
        bad = tmp_path / "x.csv"
        bad.write_text("# kind=nope\na,b\n1,2\n")
        assert main(["report", "--csv", str(bad), "--out", str(tmp_path)]) == 1
