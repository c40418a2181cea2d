from itertools import product

import pytest

from iov_offload.domain import HOME_EDGE
from iov_offload.evaluation import AssignmentEvaluator
from iov_offload.ga import Mode, penalized_from_components
from iov_offload.oracle import (load_oracle, oracle_from_dict, oracle_to_dict,
                                save_oracle, solve_exhaustive)
from iov_offload.workload import WorkloadSpec, generate_scenario

from helpers import build_scenario, make_request, make_vehicle


def small_scenario(n_requests=4, n_clouds=2, seed=3, **sla):
    kw = dict(latency_max_s=0.3, proc_max_s=1.9, deadline_max_s=2.2)
    kw.update(sla)
    spec = WorkloadSpec(n_requests=n_requests, n_edges=1, n_clouds=n_clouds,
                        edge_models=(2,), cloud_models=(4, 5, 3)[:n_clouds],
                        **kw)
    return generate_scenario(spec, seed=seed)


class TestSolveExhaustive:
    def test_single_request_two_choices(self):
        s = build_scenario([make_request(length=9000, size=1000)],
                           [make_vehicle()], edge_speeds=(4500.0,),
                           cloud_speeds=(9000.0,), swap=0.0)
        result = solve_exhaustive(s)
        assert result.enumeration_count == 2
        ev = AssignmentEvaluator(s)
        best = min((ev.evaluate((g,)).total_time_s, (g,))
                   for g in s.gene_alphabet)
        assert result.best_feasible is not None
        assert result.best_feasible[1] == best[0]
        assert result.best_feasible[0].genes == best[1]

    def test_matches_reversed_reenumeration(self):
        s = small_scenario(n_requests=4, n_clouds=2)
        result = solve_exhaustive(s)
        assert result.enumeration_count == 81

        # independent pass, enumerated in reversed order
        ev = AssignmentEvaluator(s)
        best_total, best_genes = None, None
        feasible_count = 0
        for genes in reversed(list(product(s.gene_alphabet, repeat=4))):
            total, comps = ev.evaluate_summary(genes)
            if comps == (0.0, 0.0, 0.0, 0.0, 0.0):
                feasible_count += 1
                if (best_total is None or total < best_total
                        or (total == best_total and genes < best_genes)):
                    best_total, best_genes = total, genes
        assert result.frame.n_f == feasible_count
        if best_total is None:
            assert result.best_feasible is None
        else:
            assert result.best_feasible[1] == best_total
            assert result.best_feasible[0].genes == best_genes

    def test_no_feasible_assignment_reported_absent(self):
        # impossible latency bound: even the uplink alone exceeds it
        s = build_scenario([make_request(size=5000, lat=1e-6)],
                           [make_vehicle()])
        result = solve_exhaustive(s)
        assert result.best_feasible is None
        assert result.frame.n_f == 0

    def test_feasible_optimum_dominates_sampled_feasible_assignments(self):
        s = small_scenario(n_requests=5, n_clouds=3, seed=8)
        result = solve_exhaustive(s)
        assert result.best_feasible is not None
        ev = AssignmentEvaluator(s)
        import numpy as np
        rng = np.random.default_rng(0)
        for _ in range(200):
            genes = tuple(s.gene_alphabet[int(j)]
                          for j in rng.integers(0, len(s.gene_alphabet), 5))
            rep = ev.evaluate(genes)
            if rep.feasible:
                assert result.best_feasible[1] <= rep.total_time_s + 1e-12

    def test_penalized_best_minimizes_frame_score(self):
        s = small_scenario(n_requests=4, n_clouds=2, seed=5)
        result = solve_exhaustive(s)
        ev = AssignmentEvaluator(s)
        best_genes = result.best_overall_penalized[0].genes
        best_fbar = result.best_overall_penalized[1]
        total, comps = ev.evaluate_summary(best_genes)
        assert penalized_from_components(total, comps, result.frame,
                                         Mode.SLA_AWARE)[2] == \
            pytest.approx(best_fbar, abs=0)
        for genes in product(s.gene_alphabet, repeat=4):
            t, c = ev.evaluate_summary(genes)
            fb = penalized_from_components(t, c, result.frame,
                                           Mode.SLA_AWARE)[2]
            assert best_fbar <= fb + 1e-15

    def test_limit_guard(self):
        s = small_scenario(n_requests=4, n_clouds=2)
        with pytest.raises(ValueError, match="81"):
            solve_exhaustive(s, limit=80)


class TestOracleSerialization:
    def test_round_trip(self, tmp_path):
        s = small_scenario()
        result = solve_exhaustive(s)
        path = tmp_path / "oracle.json"
        save_oracle(result, path)
        assert load_oracle(path) == result

    def test_schema_checked(self):
        s = small_scenario()
        doc = oracle_to_dict(solve_exhaustive(s))
        doc["schema"] = 99
        with pytest.raises(ValueError):
            oracle_from_dict(doc)
