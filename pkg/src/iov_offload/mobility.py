"""Vehicle motion along the road and per-request communication time.

A request's data always goes up from the vehicle to its home edge. Where
the reply travels depends on the offloading choice and on where the
vehicle is by the time the reply is ready:

* pattern 1 - executed on the home edge, vehicle still under it: the
  reply comes straight back down.
* pattern 2 - executed on the home edge, vehicle moved on: the reply is
  forwarded through the relay cloud to the edge now covering the vehicle
  (edge-to-edge traffic is never sent over multi-hop RSU links).
* pattern 3 - executed on a cloud: the request hops home edge -> cloud,
  and the reply descends via whichever edge covers the vehicle at reply
  time (possibly the home edge again).
"""
from __future__ import annotations

from dataclasses import dataclass

from .domain import (CLOUD, EDGE, DomainError, Request, Scenario,
                     UncoveredVehicleError, Vehicle)

#: (from, to, payload_kb, time_s)
Leg = tuple[str, str, float, float]


@dataclass(frozen=True)
class MobilityOutcome:
    """Where the vehicle got to while its request was being served.

    Distances are measured from submission until the reply leaves the
    executing server (``reply_ready_t_s``), which is also the instant the
    reply route is decided.
    """

    reply_ready_t_s: float
    reply_edge: int            # edge covering the vehicle at reply time
    dist_total_m: float
    dist_outside_m: float      # portion traveled beyond the home edge's range
    dist_before_submit_m: float  # from coverage entry boundary to submit point


@dataclass(frozen=True)
class CommBreakdown:
    scenario: int              # 1 | 2 | 3
    legs: tuple[Leg, ...]
    total_s: float
    mobility: MobilityOutcome


def transfer_time(payload_kb: float, bw_gbps: float) -> float:
    """Seconds to push a payload over a link (1 KB = 1000 bytes, 1 Gbps = 1e9 bit/s)."""
    if payload_kb <= 0:
        raise DomainError(f"payload must be > 0, got {payload_kb}")
    if bw_gbps <= 0:
        raise DomainError(f"bandwidth must be > 0, got {bw_gbps}")
    return payload_kb * 8000.0 / (bw_gbps * 1e9)


def distance_traveled(vehicle: Vehicle, t_s: float) -> float:
    """Path length covered by time t under the piecewise-constant profile.

    The profile is integrated sample by sample; the last speed persists
    beyond the profile's end. The result is capped at the source-to-
    destination distance (the vehicle parks on arrival).
    """
    cap = vehicle.direction * (vehicle.dst_xy[0] - vehicle.src_xy[0])
    if cap <= 0 or t_s <= 0 or not vehicle.speed_profile:
        return 0.0
    period = vehicle.speed_period_s
    dist = 0.0
    full = int(t_s // period)
    n = len(vehicle.speed_profile)
    for k in range(min(full, n)):
        dist += vehicle.speed_profile[k] * period
        if dist >= cap:
            return cap
    if full < n:
        dist += vehicle.speed_profile[full] * (t_s - full * period)
    else:
        dist += vehicle.speed_profile[-1] * (t_s - n * period)
    return min(dist, cap)


def position_at(vehicle: Vehicle, t_s: float) -> float:
    """Road-axis position at time t, clamped to the destination."""
    if t_s < 0:
        raise DomainError("t_s must be >= 0")
    return vehicle.src_xy[0] + vehicle.direction * distance_traveled(vehicle, t_s)


def edge_at(scenario: Scenario, vehicle: Vehicle, t_s: float) -> int:
    """Id of the edge covering the vehicle at time t (same boundary rule
    as ``home_edge``: intervals are half-open [left, right))."""
    x = position_at(vehicle, t_s)
    try:
        return scenario.edge_covering(x).id
    except UncoveredVehicleError as exc:
        raise UncoveredVehicleError(
            f"vehicle {vehicle.id} uncovered at t={t_s}: {exc}",
            vehicle_id=vehicle.id, position_m=x, t_s=t_s) from exc


def comm_time(scenario: Scenario, request: Request, assigned: int,
              proc_plus_io_s: float) -> CommBreakdown:
    """Total communication time of one request executed on ``assigned``.

    ``proc_plus_io_s`` is the already-computed processing + I/O time on the
    assigned server; the reply leaves that server once the uplink leg(s)
    and proc_plus_io_s have elapsed. Raises ``UncoveredVehicleError`` when
    the vehicle has left the covered road span by then.
    """
    if proc_plus_io_s < 0:
        raise DomainError("proc_plus_io_s must be >= 0")
    vehicle = scenario.vehicle_by_id[request.vehicle_id]
    home = scenario.edge_covering(vehicle.src_xy[0])
    server = scenario.server_by_id.get(assigned)
    if server is None:
        raise DomainError(f"assigned server {assigned} does not exist")
    if server.kind == EDGE and server.id != home.id:
        raise DomainError(
            f"request {request.id}: edge {assigned} is not the home edge {home.id}")

    bw_ve = scenario.network.bw_vehicle_edge_gbps
    v_lbl, home_lbl = f"v{vehicle.id}", f"e{home.id}"
    up = transfer_time(request.size_kb, bw_ve)
    legs: list[Leg] = [(v_lbl, home_lbl, request.size_kb, up)]

    if server.kind == CLOUD:
        bw_hc = scenario.bw_edge_cloud(home.id, server.id)
        up2 = transfer_time(request.size_kb, bw_hc)
        legs.append((home_lbl, f"c{server.id}", request.size_kb, up2))
        reply_ready = up + up2 + proc_plus_io_s
    else:
        reply_ready = up + proc_plus_io_s

    reply_edge = edge_at(scenario, vehicle, reply_ready)
    rep = request.reply_size_kb
    rep_edge_lbl = f"e{reply_edge}"

    if server.kind == CLOUD:
        kind = 3
        bw_cr = scenario.bw_edge_cloud(reply_edge, server.id)
        legs.append((f"c{server.id}", rep_edge_lbl, rep, transfer_time(rep, bw_cr)))
        legs.append((rep_edge_lbl, v_lbl, rep, transfer_time(rep, bw_ve)))
    elif reply_edge == home.id:
        kind = 1
        legs.append((home_lbl, v_lbl, rep, transfer_time(rep, bw_ve)))
    else:
        kind = 2
        relay = scenario.network.relay_cloud_id
        bw_hr = scenario.bw_edge_cloud(home.id, relay)
        bw_xr = scenario.bw_edge_cloud(reply_edge, relay)
        legs.append((home_lbl, f"c{relay}", rep, transfer_time(rep, bw_hr)))
        legs.append((f"c{relay}", rep_edge_lbl, rep, transfer_time(rep, bw_xr)))
        legs.append((rep_edge_lbl, v_lbl, rep, transfer_time(rep, bw_ve)))

    dist = distance_traveled(vehicle, reply_ready)
    pos = vehicle.src_xy[0] + vehicle.direction * dist
    left, right = home.coverage
    outside = max(0.0, pos - right) if vehicle.direction > 0 else max(0.0, left - pos)
    before = (vehicle.src_xy[0] - left) if vehicle.direction > 0 \
        else (right - vehicle.src_xy[0])

    mobility = MobilityOutcome(
        reply_ready_t_s=reply_ready,
        reply_edge=reply_edge,
        dist_total_m=dist,
        dist_outside_m=outside,
        dist_before_submit_m=before,
    )
    return CommBreakdown(scenario=kind, legs=tuple(legs),
                         total_s=sum(leg[3] for leg in legs), mobility=mobility)
