"""Hand-construction helpers and independent oracles shared by the tests."""
from __future__ import annotations

from iov_offload.domain import (NetworkModel, Request, Scenario, Server,
                                Vehicle)

GENEROUS = 1e6  # SLA bound that never binds


def make_request(rid=0, length=9000.0, size=1000.0, reply=None, cpu=20.0,
                 lat=GENEROUS, proc=GENEROUS, deadline=GENEROUS, vehicle=0):
    return Request(id=rid, length_mi=length, size_kb=size,
                   reply_size_kb=size if reply is None else reply,
                   cpu_util_pct=cpu, max_latency_s=lat, max_proc_s=proc,
                   max_deadline_s=deadline, vehicle_id=vehicle)


def make_vehicle(vid=0, x=250.0, dst=None, speeds=(0.0,), period=1.0,
                 direction=None):
    dst_x = x if dst is None else dst
    if direction is None:
        direction = 1 if dst_x >= x else -1
    return Vehicle(id=vid, src_xy=(x, 0.0), dst_xy=(dst_x, 0.0),
                   speed_profile=tuple(speeds), speed_period_s=period,
                   direction=direction)


def build_scenario(requests, vehicles, edge_speeds=(4500.0,),
                   cloud_speeds=(9000.0,), edge_mem=2e6, cloud_mem=4e6,
                   swap=0.05, threshold=90.0, bw_ve=1.0, bw_ec=2.0,
                   d_rsu=500.0, origin=0.0, relay=None, seed=0) -> Scenario:
    """Compact scenario builder: edges cover [origin + j*d, ...) in id order;
    cloud ids continue after the edges. ``bw_ec`` may be a scalar or a full
    matrix."""
    servers = []
    for j, mips in enumerate(edge_speeds):
        left = origin + j * d_rsu
        servers.append(Server(id=j, kind="edge", speed_mips=mips,
                              mem_kb=edge_mem, swap_s=swap,
                              cpu_threshold_pct=threshold,
                              coverage=(left, left + d_rsu)))
    n_edges = len(edge_speeds)
    for k, mips in enumerate(cloud_speeds):
        servers.append(Server(id=n_edges + k, kind="cloud", speed_mips=mips,
                              mem_kb=cloud_mem, swap_s=swap,
                              cpu_threshold_pct=threshold))
    if isinstance(bw_ec, (int, float)):
        matrix = tuple(tuple(float(bw_ec) for _ in cloud_speeds)
                       for _ in edge_speeds)
    else:
        matrix = tuple(tuple(row) for row in bw_ec)
    network = NetworkModel(
        bw_vehicle_edge_gbps=bw_ve, bw_edge_cloud_gbps=matrix,
        relay_cloud_id=n_edges if relay is None else relay)
    return Scenario(servers=tuple(servers), network=network,
                    vehicles=tuple(vehicles), requests=tuple(requests),
                    rsu_origin_x=origin, d_rsu_m=d_rsu, seed=seed)


def single_request_scenario(**kwargs):
    """One request from a stationary vehicle under edge 0, plus one cloud."""
    return build_scenario([make_request()], [make_vehicle()], **kwargs)


def fluid_processor_sharing(works, mu):
    """Exact egalitarian processor sharing: every resident job receives an
    equal share of the server's speed; returns per-job finish times.

    Independent reference model, deliberately event-driven rather than
    formula-based.
    """
    n = len(works)
    remaining = [float(w) for w in works]
    finish = [0.0] * n
    active = list(range(n))
    now = 0.0
    while active:
        share = mu / len(active)
        step = min(remaining[i] for i in active)  # work, not time
        now += step / share
        still = []
        for i in active:
            remaining[i] -= step
            if remaining[i] <= 1e-9:
                finish[i] = now
            else:
                still.append(i)
        active = still
    return finish


def riemann_distance(speeds, period, t, dt=1e-4):
    """Brute-force integral of the piecewise-constant speed profile."""
    total = 0.0
    steps = int(t / dt)
    for k in range(steps):
        u = k * dt
        idx = int(u // period)
        s = speeds[idx] if idx < len(speeds) else speeds[-1]
        total += s * dt
    # remainder
    u = steps * dt
    idx = int(u // period)
    s = speeds[idx] if idx < len(speeds) else speeds[-1]
    total += s * (t - u)
    return total
