"""Per-request processing and I/O times under multi-request overlap.

Requests assigned to one server are assumed to start together. They are
ranked by standalone work (ties by request id), which fixes the completion
order used by the overlap cost model:

* case i   - the request runs alone;
* case ii  - the shortest of n co-resident requests: it finishes first,
  paying the full n-way slowdown;
* case iii - every later-finishing request: an overlapped phase lasting as
  long as the fastest co-resident request, plus a residual phase scaled by
  how many co-resident requests are still running.

I/O time charges one swap cycle per memory overflow; a late-finishing
request additionally pays for re-staging its data once per earlier
completion.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .domain import (HOME_EDGE, Assignment, DomainError, Request, Scenario,
                     Server, UncoveredVehicleError, home_edge,
                     validate_assignment)
from .mobility import CommBreakdown, comm_time, transfer_time

CASE_ALONE = "i"
CASE_FIRST = "ii"
CASE_LATER = "iii"


class OverlapInconsistencyError(RuntimeError):
    """Negative residual work in the overlap model (broken rank order)."""


@dataclass(frozen=True)
class OverlapCase:
    request: Request
    rank: int        # completion order on the server, 0-based
    case: str
    n: int           # co-resident request count (1 when alone)
    n_bar: int       # completions that happen before this request


@dataclass(frozen=True)
class ScheduleEntry:
    request_id: int
    rank: int
    case: str
    n: int
    n_bar: int
    tau_m_s: float
    tau_a_s: float
    chi: int
    rho: int
    proc_s: float
    io_s: float


@dataclass(frozen=True)
class ServerSchedule:
    server_id: int
    entries: tuple[ScheduleEntry, ...]  # in rank order


@dataclass(frozen=True)
class RequestBreakdown:
    request_id: int
    server_id: int
    comm_s: float
    proc_s: float
    io_s: float
    total_s: float
    comm: Optional[CommBreakdown]  # None when the reply could not be routed
    uncovered: bool = False


@dataclass(frozen=True)
class ExecBreakdown:
    """Full time decomposition of one assignment."""

    per_request: tuple[RequestBreakdown, ...]   # in scenario request order
    schedules: tuple[ServerSchedule, ...]       # sorted by server id

    @property
    def total_s(self) -> float:
        return sum(r.total_s for r in self.per_request)


def classify_overlap(requests: Sequence[Request]) -> tuple[OverlapCase, ...]:
    """Assign the overlap case to each request sharing one server."""
    if not requests:
        raise DomainError("classify_overlap needs at least one request")
    if len(requests) == 1:
        return (OverlapCase(requests[0], rank=0, case=CASE_ALONE, n=1, n_bar=0),)
    ordered = sorted(requests, key=lambda r: (r.length_mi, r.id))
    n = len(ordered)
    return tuple(
        OverlapCase(r, rank=k, case=CASE_FIRST if k == 0 else CASE_LATER,
                    n=n, n_bar=k)
        for k, r in enumerate(ordered))


def proc_time(case: OverlapCase, server: Server,
              tau_m_s: float = 0.0) -> tuple[float, float, float]:
    """Processing seconds for one classified request.

    ``tau_m_s`` is the overlapped-phase duration, i.e. the smallest
    processing time among co-resident requests resolved so far; it is only
    consulted for case iii. Returns (proc_s, tau_m_s, tau_a_s).
    """
    psi, mu = case.request.length_mi, server.speed_mips
    if case.case == CASE_ALONE:
        return psi / mu, 0.0, 0.0
    if case.case == CASE_FIRST:
        return psi * case.n / mu, 0.0, 0.0
    residual = psi - tau_m_s * mu / case.n
    if residual < -1e-9 * max(psi, 1.0):
        raise OverlapInconsistencyError(
            f"request {case.request.id}: overlapped phase exceeds its work "
            f"(psi={psi}, tau_m={tau_m_s}, mu={mu}, n={case.n})")
    tau_a = (max(residual, 0.0) / mu) * (case.n - case.n_bar)
    return tau_m_s + tau_a, tau_m_s, tau_a


def io_time(case: OverlapCase, server: Server) -> tuple[float, int, int]:
    """I/O seconds for one classified request; returns (io_s, chi, rho)."""
    sigma, theta, xi = case.request.size_kb, server.mem_kb, server.swap_s
    if case.case == CASE_ALONE:
        rho = math.ceil(sigma / theta)
    else:
        rho = math.ceil(sigma * case.n / theta)
    chi = rho - 1 if rho > 1 else 0
    if case.case == CASE_LATER:
        io = xi + sigma * xi * case.n_bar / theta
    else:
        io = chi * xi
    return io, chi, rho


def build_schedule(server: Server, requests: Sequence[Request]) -> ServerSchedule:
    """Classify and cost all requests sharing a server, in rank order."""
    entries: list[ScheduleEntry] = []
    fastest_proc = math.inf
    for case in classify_overlap(requests):
        tau_m = fastest_proc if case.case == CASE_LATER else 0.0
        proc, tau_m_used, tau_a = proc_time(case, server, tau_m)
        io, chi, rho = io_time(case, server)
        entries.append(ScheduleEntry(
            request_id=case.request.id, rank=case.rank, case=case.case,
            n=case.n, n_bar=case.n_bar, tau_m_s=tau_m_used, tau_a_s=tau_a,
            chi=chi, rho=rho, proc_s=proc, io_s=io))
        fastest_proc = min(fastest_proc, proc)
    return ServerSchedule(server_id=server.id, entries=tuple(entries))


def resolve_server(scenario: Scenario, request: Request, gene: int) -> int:
    """Map a gene to the concrete server id executing the request."""
    if gene == HOME_EDGE:
        return home_edge(scenario, request.vehicle_id)
    return gene


def evaluate_assignment(scenario: Scenario, assignment: Assignment,
                        on_uncovered: str = "raise") -> ExecBreakdown:
    """Full time breakdown of an assignment (communication + processing + I/O).

    ``on_uncovered`` selects what happens when a vehicle leaves the covered
    road span before its reply is ready: ``"raise"`` propagates the error,
    ``"mark"`` keeps the computable uplink legs, drops the reply legs, and
    flags the request so reporting can count it as a deadline violation.
    """
    if on_uncovered not in ("raise", "mark"):
        raise ValueError(f"on_uncovered must be 'raise' or 'mark', got {on_uncovered!r}")
    validate_assignment(scenario, assignment)

    groups: dict[int, list[Request]] = {}
    for request, gene in zip(scenario.requests, assignment.genes):
        groups.setdefault(resolve_server(scenario, request, gene), []).append(request)

    schedules: list[ServerSchedule] = []
    per_request: dict[int, RequestBreakdown] = {}
    for server_id in sorted(groups):
        server = scenario.server_by_id[server_id]
        schedule = build_schedule(server, groups[server_id])
        schedules.append(schedule)
        req_by_id = {r.id: r for r in groups[server_id]}
        for entry in schedule.entries:
            request = req_by_id[entry.request_id]
            proc_plus_io = entry.proc_s + entry.io_s
            try:
                comm = comm_time(scenario, request, server_id, proc_plus_io)
                per_request[request.id] = RequestBreakdown(
                    request_id=request.id, server_id=server_id,
                    comm_s=comm.total_s, proc_s=entry.proc_s, io_s=entry.io_s,
                    total_s=comm.total_s + proc_plus_io, comm=comm)
            except UncoveredVehicleError:
                if on_uncovered == "raise":
                    raise
                partial = _uplink_time(scenario, request, server_id)
                per_request[request.id] = RequestBreakdown(
                    request_id=request.id, server_id=server_id,
                    comm_s=partial, proc_s=entry.proc_s, io_s=entry.io_s,
                    total_s=partial + proc_plus_io, comm=None, uncovered=True)

    ordered = tuple(per_request[r.id] for r in scenario.requests)
    return ExecBreakdown(per_request=ordered, schedules=tuple(schedules))


def _uplink_time(scenario: Scenario, request: Request, server_id: int) -> float:
    """Request-direction legs only, for requests whose reply is unroutable."""
    up = transfer_time(request.size_kb, scenario.network.bw_vehicle_edge_gbps)
    server = scenario.server_by_id[server_id]
    if server.kind == "cloud":
        home = home_edge(scenario, request.vehicle_id)
        up += transfer_time(request.size_kb, scenario.bw_edge_cloud(home, server_id))
    return up
