import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iov_offload.domain import HOME_EDGE, Assignment, Server
from iov_offload.execmodel import (CASE_ALONE, CASE_FIRST, CASE_LATER,
                                   OverlapCase, OverlapInconsistencyError,
                                   build_schedule, classify_overlap,
                                   evaluate_assignment, io_time, proc_time)

from helpers import (build_scenario, fluid_processor_sharing, make_request,
                     make_vehicle)


def server(mips=9000.0, mem=2e6, swap=0.05):
    return Server(id=1, kind="cloud", speed_mips=mips, mem_kb=mem,
                  swap_s=swap, cpu_threshold_pct=90.0)


class TestClassifyOverlap:
    def test_single_request_is_alone(self):
        cases = classify_overlap([make_request()])
        assert cases[0].case == CASE_ALONE
        assert cases[0].n == 1 and cases[0].n_bar == 0

    def test_two_requests_order_by_length(self):
        short, long = make_request(rid=0, length=9000), make_request(rid=1, length=15000)
        cases = classify_overlap([long, short])
        assert [c.request.id for c in cases] == [0, 1]
        assert [c.case for c in cases] == [CASE_FIRST, CASE_LATER]
        assert [c.n for c in cases] == [2, 2]
        assert cases[1].n_bar == 1

    def test_three_requests_ranks(self):
        reqs = [make_request(rid=i, length=l)
                for i, l in enumerate((15000, 9000, 12000))]
        cases = classify_overlap(reqs)
        assert [c.request.length_mi for c in cases] == [9000, 12000, 15000]
        assert [c.case for c in cases] == [CASE_FIRST, CASE_LATER, CASE_LATER]
        assert [c.n_bar for c in cases] == [0, 1, 2]

    def test_ties_break_by_request_id(self):
        reqs = [make_request(rid=i, length=9000) for i in (2, 0, 1)]
        cases = classify_overlap(reqs)
        assert [c.request.id for c in cases] == [0, 1, 2]


class TestProcTime:
    def test_alone(self):
        case = classify_overlap([make_request(length=9000)])[0]
        proc, _, _ = proc_time(case, server(mips=4500.0))
        assert proc == pytest.approx(2.0, abs=1e-12)

    def test_two_requests_hand_values(self):
        sched = build_schedule(server(mips=9000.0),
                               [make_request(rid=0, length=9000),
                                make_request(rid=1, length=15000)])
        by_id = {e.request_id: e for e in sched.entries}
        assert by_id[0].proc_s == pytest.approx(2.0, abs=1e-12)
        # tau_m = 2.0; tau_a = ((15000 - 2*9000/2)/9000) * (2-1)
        assert by_id[1].tau_m_s == pytest.approx(2.0, abs=1e-12)
        assert by_id[1].tau_a_s == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert by_id[1].proc_s == pytest.approx(2.0 + 2.0 / 3.0, abs=1e-12)

    def test_three_requests_hand_values(self):
        sched = build_schedule(server(mips=9000.0),
                               [make_request(rid=i, length=l) for i, l in
                                enumerate((9000, 12000, 15000))])
        procs = [e.proc_s for e in sched.entries]
        assert procs[0] == pytest.approx(3.0, abs=1e-12)
        assert procs[1] == pytest.approx(11.0 / 3.0, abs=1e-12)
        assert procs[2] == pytest.approx(11.0 / 3.0, abs=1e-12)
        # the shared overlapped phase is the first completion for both laggards
        assert [e.tau_m_s for e in sched.entries[1:]] == [3.0, 3.0]

    def test_two_request_case_matches_fluid_sharing_oracle(self):
        finish = fluid_processor_sharing([9000, 15000], 9000.0)
        sched = build_schedule(server(mips=9000.0),
                               [make_request(rid=0, length=9000),
                                make_request(rid=1, length=15000)])
        assert sched.entries[0].proc_s == pytest.approx(finish[0], rel=1e-12)
        assert sched.entries[1].proc_s == pytest.approx(finish[1], rel=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(st.floats(1000, 50000), st.floats(1000, 50000),
           st.floats(500, 40000))
    def test_any_two_jobs_match_fluid_sharing(self, w1, w2, mu):
        finish = fluid_processor_sharing([w1, w2], mu)
        sched = build_schedule(server(mips=mu),
                               [make_request(rid=0, length=w1),
                                make_request(rid=1, length=w2)])
        by_id = {e.request_id: e.proc_s for e in sched.entries}
        assert by_id[0] == pytest.approx(finish[0], rel=1e-9)
        assert by_id[1] == pytest.approx(finish[1], rel=1e-9)

    def test_three_job_laggard_deviates_from_fluid_sharing(self):
        # The closed-form overlap model intentionally charges the last
        # finisher less than exact staged sharing would.
        finish = fluid_processor_sharing([9000, 12000, 15000], 9000.0)
        sched = build_schedule(server(mips=9000.0),
                               [make_request(rid=i, length=l) for i, l in
                                enumerate((9000, 12000, 15000))])
        assert finish[2] == pytest.approx(4.0, rel=1e-12)
        assert sched.entries[2].proc_s == pytest.approx(11.0 / 3.0, abs=1e-12)

    def test_no_request_finishes_before_the_first_completer(self):
        reqs = [make_request(rid=i, length=l) for i, l in
                enumerate((14000, 9500, 13000, 11000))]
        sched = build_schedule(server(mips=7000.0), reqs)
        procs = [e.proc_s for e in sched.entries]
        assert all(p >= procs[0] - 1e-12 for p in procs[1:])
        # The shared overlapped phase is always the first completion time.
        assert all(e.tau_m_s == pytest.approx(procs[0], abs=1e-12)
                   for e in sched.entries[1:])

    def test_residual_multiplier_can_invert_rank_order_beyond_three(self):
        # The closed-form residual term scales by (n - rank): with four or
        # more co-residents a longer request can be charged *less* than a
        # shorter one. Kept verbatim; this documents the consequence.
        sched = build_schedule(server(mips=7000.0),
                               [make_request(rid=i, length=l) for i, l in
                                enumerate((9500, 11000, 13000, 14000))])
        procs = [e.proc_s for e in sched.entries]
        assert procs[3] < procs[2]

    def test_overlap_inconsistency_raises(self):
        case = OverlapCase(make_request(length=1000), rank=1,
                           case=CASE_LATER, n=2, n_bar=1)
        with pytest.raises(OverlapInconsistencyError):
            proc_time(case, server(mips=9000.0), tau_m_s=10.0)


class TestIoTime:
    def test_ample_memory_no_swaps(self):
        case = classify_overlap([make_request(size=1000)])[0]
        io, chi, rho = io_time(case, server(mem=2e6, swap=0.05))
        assert (io, chi, rho) == (0.0, 0, 1)

    def test_single_overflow_swap(self):
        case = classify_overlap([make_request(size=1.5e6)])[0]
        io, chi, rho = io_time(case, server(mem=1e6, swap=0.05))
        assert rho == 2 and chi == 1
        assert io == pytest.approx(0.05, abs=1e-15)

    def test_later_case_restages_per_earlier_completion(self):
        reqs = [make_request(rid=0, length=9000, size=1000),
                make_request(rid=1, length=15000, size=1000)]
        sched = build_schedule(server(mem=2e6, swap=0.05), reqs)
        later = sched.entries[1]
        assert later.case == CASE_LATER and later.n_bar == 1
        assert later.io_s == pytest.approx(0.05 + 1000 * 0.05 * 1 / 2e6,
                                           abs=1e-15)
        assert later.io_s == pytest.approx(0.050025, abs=1e-15)

    def test_shared_residency_multiplies_footprint(self):
        reqs = [make_request(rid=0, length=9000, size=0.6e6),
                make_request(rid=1, length=15000, size=0.6e6)]
        sched = build_schedule(server(mem=1e6, swap=0.05), reqs)
        first = sched.entries[0]
        assert first.rho == 2 and first.chi == 1  # ceil(1.2e6/1e6)
        assert first.io_s == pytest.approx(0.05, abs=1e-15)


class TestEvaluateAssignment:
    def scenario(self):
        return build_scenario(
            [make_request(rid=0, length=9000, size=1000)],
            [make_vehicle()], edge_speeds=(4500.0,), swap=0.0)

    def test_single_request_composition(self):
        s = self.scenario()
        b = evaluate_assignment(s, Assignment((HOME_EDGE,)))
        rb = b.per_request[0]
        assert rb.comm_s == pytest.approx(0.016, abs=1e-15)
        assert rb.proc_s == pytest.approx(2.0, abs=1e-12)
        assert rb.io_s == 0.0
        assert rb.total_s == pytest.approx(2.016, abs=1e-12)

    def test_untouched_servers_contribute_nothing(self):
        s = self.scenario()
        b = evaluate_assignment(s, Assignment((HOME_EDGE,)))
        assert [sched.server_id for sched in b.schedules] == [0]

    def test_deterministic_repeat(self):
        s = self.scenario()
        a = Assignment((HOME_EDGE,))
        assert evaluate_assignment(s, a) == evaluate_assignment(s, a)

    def test_removal_never_slows_the_rest(self):
        reqs = [make_request(rid=i, length=9000 + 1500 * i, size=1000 + 900 * i)
                for i in range(4)]
        s = build_scenario(reqs, [make_vehicle()], cloud_speeds=(9000.0,))
        full = evaluate_assignment(s, Assignment((1, 1, 1, 1)))
        reduced_scenario = dataclasses.replace(s, requests=tuple(reqs[:3]))
        reduced = evaluate_assignment(reduced_scenario, Assignment((1, 1, 1)))
        for rb_small in reduced.per_request:
            rb_big = next(rb for rb in full.per_request
                          if rb.request_id == rb_small.request_id)
            assert rb_small.proc_s <= rb_big.proc_s + 1e-12
            assert rb_small.io_s <= rb_big.io_s + 1e-12

    def test_uncovered_mark_mode(self):
        v = make_vehicle(x=400.0, dst=1e5, speeds=(200.0,))
        s = build_scenario([make_request(rid=0, length=9000)], [v],
                           edge_speeds=(4500.0,))
        from iov_offload.domain import UncoveredVehicleError
        with pytest.raises(UncoveredVehicleError):
            evaluate_assignment(s, Assignment((HOME_EDGE,)))
        b = evaluate_assignment(s, Assignment((HOME_EDGE,)), on_uncovered="mark")
        rb = b.per_request[0]
        assert rb.uncovered and rb.comm is None
        assert rb.comm_s == pytest.approx(0.008, abs=1e-15)  # uplink only
