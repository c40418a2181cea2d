"""Objective value and SLA violation measures for one evaluated assignment.

Latency, processing and deadline violations are summed positive excesses in
seconds. CPU and memory violations are request counts under the aggregate
per-server reading: a server whose total claimed CPU share (or total resident
payload) exceeds its threshold puts every request scheduled on it in
violation. The literal per-request reading (compare each request's own claim
against the server threshold) is available via ``cpu_mem_rule="per_request"``
for ablation.
"""
from __future__ import annotations

from dataclasses import dataclass

from .domain import Assignment, Request, Scenario
from .execmodel import ExecBreakdown

AGGREGATE = "aggregate"
PER_REQUEST = "per_request"


@dataclass(frozen=True)
class ViolationVector:
    """Five violation measures plus per-type and distinct violator counts."""

    lat_s: float = 0.0
    proc_s: float = 0.0
    deadline_s: float = 0.0
    cpu: int = 0
    mem: int = 0
    n_lat: int = 0
    n_proc: int = 0
    n_deadline: int = 0
    n_cpu: int = 0
    n_mem: int = 0
    n_distinct: int = 0

    def components(self) -> tuple[float, float, float, float, float]:
        return (self.lat_s, self.proc_s, self.deadline_s,
                float(self.cpu), float(self.mem))


def objective(breakdown: ExecBreakdown) -> float:
    """Total execution time across all requests, in seconds."""
    return sum(r.total_s for r in breakdown.per_request)


def is_feasible(v: ViolationVector) -> bool:
    return all(c == 0 for c in v.components())


def violations(scenario: Scenario, assignment: Assignment,
               breakdown: ExecBreakdown,
               cpu_mem_rule: str = AGGREGATE) -> ViolationVector:
    """Violation measures of an evaluated assignment.

    A request whose reply could not be delivered (vehicle left coverage)
    counts as a deadline violator and its accrued time is charged as the
    deadline excess, so such solutions can never rank as feasible.
    """
    if cpu_mem_rule not in (AGGREGATE, PER_REQUEST):
        raise ValueError(f"unknown cpu_mem_rule {cpu_mem_rule!r}")

    req_by_id = {r.id: r for r in scenario.requests}
    lat = proc = deadline = 0.0
    n_lat = n_proc = n_deadline = 0
    violators: set[int] = set()

    for rb in breakdown.per_request:
        r = req_by_id[rb.request_id]
        if rb.comm_s > r.max_latency_s:
            lat += rb.comm_s - r.max_latency_s
            n_lat += 1
            violators.add(r.id)
        if rb.proc_s > r.max_proc_s:
            proc += rb.proc_s - r.max_proc_s
            n_proc += 1
            violators.add(r.id)
        if rb.uncovered:
            # Reply never reached the vehicle: the deadline is missed by an
            # unbounded margin; charge the accrued time as a finite proxy.
            deadline += rb.total_s
            n_deadline += 1
            violators.add(r.id)
        elif rb.total_s > r.max_deadline_s:
            deadline += rb.total_s - r.max_deadline_s
            n_deadline += 1
            violators.add(r.id)

    cpu = mem = n_cpu = n_mem = 0
    if cpu_mem_rule == AGGREGATE:
        for schedule in breakdown.schedules:
            server = scenario.server_by_id[schedule.server_id]
            members = [req_by_id[e.request_id] for e in schedule.entries]
            if sum(m.cpu_util_pct for m in members) > server.cpu_threshold_pct:
                n_cpu += len(members)
                violators.update(m.id for m in members)
            if sum(m.size_kb for m in members) > server.mem_kb:
                n_mem += len(members)
                violators.update(m.id for m in members)
    else:
        for schedule in breakdown.schedules:
            server = scenario.server_by_id[schedule.server_id]
            for e in schedule.entries:
                r = req_by_id[e.request_id]
                if r.cpu_util_pct > server.cpu_threshold_pct:
                    n_cpu += 1
                    violators.add(r.id)
                if r.size_kb > server.mem_kb:
                    n_mem += 1
                    violators.add(r.id)
    cpu, mem = n_cpu, n_mem

    return ViolationVector(
        lat_s=lat, proc_s=proc, deadline_s=deadline, cpu=cpu, mem=mem,
        n_lat=n_lat, n_proc=n_proc, n_deadline=n_deadline,
        n_cpu=n_cpu, n_mem=n_mem, n_distinct=len(violators))
