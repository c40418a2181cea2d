"""Reusable assignment evaluator with per-server-group memoization.

Population-based search re-evaluates the same server groupings constantly;
everything downstream of the grouping (schedule, communication legs, SLA
excesses) is a pure function of (server, member set), so it is cached. The
straight composition ``evaluate_assignment`` -> ``violations`` ->
``objective`` stays the reference semantics; the evaluator reproduces it
bit for bit (final sums run in scenario request order) and is verified
against it in the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .domain import (HOME_EDGE, Assignment, Scenario, UncoveredVehicleError,
                     home_edge)
from .execmodel import (ExecBreakdown, RequestBreakdown, ServerSchedule,
                        _uplink_time, build_schedule)
from .mobility import comm_time
from .objective import AGGREGATE, PER_REQUEST, ViolationVector, is_feasible


@dataclass(frozen=True)
class EvaluationReport:
    """Everything the optimizer and the reports need about one assignment."""

    assignment: Assignment
    breakdown: ExecBreakdown
    violations: ViolationVector
    total_time_s: float

    @property
    def feasible(self) -> bool:
        return is_feasible(self.violations)


@dataclass(frozen=True)
class _MemberCost:
    breakdown: RequestBreakdown
    lat_excess: float
    proc_excess: float
    deadline_excess: float
    violated: bool


@dataclass(frozen=True)
class _GroupResult:
    schedule: ServerSchedule
    members: tuple[_MemberCost, ...]   # aligned with member indices
    cpu_sum: float
    mem_sum: float
    member_ids: tuple[int, ...]


class AssignmentEvaluator:
    """Evaluates assignments against one fixed scenario.

    Not thread-safe per instance (plain dict cache); create one evaluator
    per worker.
    """

    def __init__(self, scenario: Scenario, on_uncovered: str = "raise",
                 cpu_mem_rule: str = AGGREGATE, cache_limit: int = 1 << 18):
        if on_uncovered not in ("raise", "mark"):
            raise ValueError("on_uncovered must be 'raise' or 'mark'")
        if cpu_mem_rule not in (AGGREGATE, PER_REQUEST):
            raise ValueError(f"unknown cpu_mem_rule {cpu_mem_rule!r}")
        self.scenario = scenario
        self.on_uncovered = on_uncovered
        self.cpu_mem_rule = cpu_mem_rule
        self._cache_limit = cache_limit
        self._cache: dict[tuple[int, tuple[int, ...]], _GroupResult] = {}
        self._homes = tuple(home_edge(scenario, r.vehicle_id)
                            for r in scenario.requests)
        self._servers = scenario.server_by_id

    @property
    def gene_alphabet(self) -> tuple[int, ...]:
        return self.scenario.gene_alphabet

    def resolve(self, genes: Sequence[int]) -> tuple[int, ...]:
        """Concrete executing server id per request."""
        return tuple(self._homes[i] if g == HOME_EDGE else g
                     for i, g in enumerate(genes))

    def evaluate(self, genes: Sequence[int]) -> EvaluationReport:
        groups: dict[int, list[int]] = {}
        for i, g in enumerate(genes):
            sid = self._homes[i] if g == HOME_EDGE else g
            groups.setdefault(sid, []).append(i)

        costs: list[_MemberCost | None] = [None] * len(genes)
        schedules = []
        n_cpu = n_mem = 0
        violators: set[int] = set()

        for sid in sorted(groups):
            members = tuple(groups[sid])
            res = self._cache.get((sid, members))
            if res is None:
                if len(self._cache) >= self._cache_limit:
                    self._cache.clear()
                res = self._compute_group(sid, members)
                self._cache[(sid, members)] = res
            schedules.append(res.schedule)
            for idx, mc in zip(members, res.members):
                costs[idx] = mc
            server = self._servers[sid]
            if self.cpu_mem_rule == AGGREGATE:
                if res.cpu_sum > server.cpu_threshold_pct:
                    n_cpu += len(members)
                    violators.update(res.member_ids)
                if res.mem_sum > server.mem_kb:
                    n_mem += len(members)
                    violators.update(res.member_ids)
            else:
                for rid, idx in zip(res.member_ids, members):
                    r = self.scenario.requests[idx]
                    if r.cpu_util_pct > server.cpu_threshold_pct:
                        n_cpu += 1
                        violators.add(rid)
                    if r.size_kb > server.mem_kb:
                        n_mem += 1
                        violators.add(rid)

        # Final sums in scenario request order, matching the reference path.
        total = lat = proc = deadline = 0.0
        n_lat = n_proc = n_deadline = 0
        for mc in costs:
            total += mc.breakdown.total_s
            if mc.lat_excess > 0:
                lat += mc.lat_excess
                n_lat += 1
            if mc.proc_excess > 0:
                proc += mc.proc_excess
                n_proc += 1
            if mc.deadline_excess > 0:
                deadline += mc.deadline_excess
                n_deadline += 1
            if mc.violated:
                violators.add(mc.breakdown.request_id)

        vv = ViolationVector(
            lat_s=lat, proc_s=proc, deadline_s=deadline, cpu=n_cpu, mem=n_mem,
            n_lat=n_lat, n_proc=n_proc, n_deadline=n_deadline,
            n_cpu=n_cpu, n_mem=n_mem, n_distinct=len(violators))
        breakdown = ExecBreakdown(
            per_request=tuple(mc.breakdown for mc in costs),
            schedules=tuple(schedules))
        return EvaluationReport(assignment=Assignment(tuple(genes)),
                                breakdown=breakdown, violations=vv,
                                total_time_s=total)

    def evaluate_summary(self, genes: Sequence[int]) \
            -> tuple[float, tuple[float, float, float, float, float]]:
        """(objective total, five violation measures) of one assignment.

        Identical arithmetic (and summation order) to ``evaluate``, minus
        the report assembly; meant for exhaustive enumeration.
        """
        groups: dict[int, list[int]] = {}
        for i, g in enumerate(genes):
            sid = self._homes[i] if g == HOME_EDGE else g
            groups.setdefault(sid, []).append(i)

        costs: list[_MemberCost | None] = [None] * len(genes)
        n_cpu = n_mem = 0
        for sid in sorted(groups):
            members = tuple(groups[sid])
            res = self._cache.get((sid, members))
            if res is None:
                if len(self._cache) >= self._cache_limit:
                    self._cache.clear()
                res = self._compute_group(sid, members)
                self._cache[(sid, members)] = res
            for idx, mc in zip(members, res.members):
                costs[idx] = mc
            server = self._servers[sid]
            if self.cpu_mem_rule == AGGREGATE:
                if res.cpu_sum > server.cpu_threshold_pct:
                    n_cpu += len(members)
                if res.mem_sum > server.mem_kb:
                    n_mem += len(members)
            else:
                for idx in members:
                    r = self.scenario.requests[idx]
                    if r.cpu_util_pct > server.cpu_threshold_pct:
                        n_cpu += 1
                    if r.size_kb > server.mem_kb:
                        n_mem += 1

        total = lat = proc = deadline = 0.0
        for mc in costs:
            total += mc.breakdown.total_s
            if mc.lat_excess > 0:
                lat += mc.lat_excess
            if mc.proc_excess > 0:
                proc += mc.proc_excess
            if mc.deadline_excess > 0:
                deadline += mc.deadline_excess
        return total, (lat, proc, deadline, float(n_cpu), float(n_mem))

    def _compute_group(self, sid: int, members: tuple[int, ...]) -> _GroupResult:
        scenario = self.scenario
        server = self._servers[sid]
        requests = [scenario.requests[i] for i in members]
        schedule = build_schedule(server, requests)
        entry_by_id = {e.request_id: e for e in schedule.entries}

        costs = []
        for r in requests:
            e = entry_by_id[r.id]
            proc_plus_io = e.proc_s + e.io_s
            try:
                comm = comm_time(scenario, r, sid, proc_plus_io)
                rb = RequestBreakdown(
                    request_id=r.id, server_id=sid, comm_s=comm.total_s,
                    proc_s=e.proc_s, io_s=e.io_s,
                    total_s=comm.total_s + proc_plus_io, comm=comm)
                dl_excess = rb.total_s - r.max_deadline_s
            except UncoveredVehicleError:
                if self.on_uncovered == "raise":
                    raise
                partial = _uplink_time(scenario, r, sid)
                rb = RequestBreakdown(
                    request_id=r.id, server_id=sid, comm_s=partial,
                    proc_s=e.proc_s, io_s=e.io_s, total_s=partial + proc_plus_io,
                    comm=None, uncovered=True)
                dl_excess = rb.total_s
            lat_excess = rb.comm_s - r.max_latency_s
            proc_excess = rb.proc_s - r.max_proc_s
            violated = lat_excess > 0 or proc_excess > 0 or dl_excess > 0
            costs.append(_MemberCost(
                breakdown=rb,
                lat_excess=max(lat_excess, 0.0),
                proc_excess=max(proc_excess, 0.0),
                deadline_excess=max(dl_excess, 0.0),
                violated=violated))

        return _GroupResult(
            schedule=schedule, members=tuple(costs),
            cpu_sum=sum(r.cpu_util_pct for r in requests),
            mem_sum=sum(r.size_kb for r in requests),
            member_ids=tuple(r.id for r in requests))
