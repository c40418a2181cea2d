"""Scenario generation and vehicle-trajectory ingestion.

Generated scenarios follow the experiment defaults: a catalogue of real
server models cycled over the edge and cloud pools, uniform request work
and payload sizes, normally distributed CPU shares, and unit-bandwidth
vehicle links with uniformly drawn edge-cloud links. All draws come from
one seeded stream in a fixed documented order (bandwidth matrix, then
vehicles, then requests), so a (spec, seed) pair always produces the same
scenario byte for byte.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .domain import (CLOUD, EDGE, DomainError, NetworkModel, Request,
                     Scenario, Server, Vehicle, validate_scenario)
from .ga import make_rng

SCHEMA_VERSION = 1

#: (kind, model, clock GHz, cores, memory GB). MIPS are derived as
#: clock_ghz * cores * 1000; override per server via WorkloadSpec if needed.
SERVER_CATALOGUE: tuple[tuple[str, str, float, int, float], ...] = (
    (EDGE, "AMD Opteron 252", 2.59, 2, 2.0),
    (CLOUD, "Intel Xeon", 2.80, 2, 4.0),
    (EDGE, "AMD Opteron 6276", 2.30, 16, 32.0),
    (CLOUD, "Intel Xeon E3-1204L v5", 2.10, 4, 16.0),
    (CLOUD, "Intel Xeon E-2176G", 3.70, 6, 16.0),
    (CLOUD, "AMD Opteron 6238", 2.60, 12, 64.0),
)

KB_PER_GB = 1_000_000.0


def mips_from_catalogue(clock_ghz: float, cores: int) -> float:
    return clock_ghz * cores * 1000.0


@dataclass(frozen=True)
class WorkloadSpec:
    """Knobs for scenario generation; defaults match the experiment setup."""

    n_requests: int = 20
    n_edges: int = 10
    n_clouds: int = 20
    d_rsu_m: float = 500.0
    rsu_origin_x: float = 0.0
    latency_max_s: float = 0.1
    proc_max_s: float = 0.9
    deadline_max_s: float = 1.0
    length_mi: tuple[float, float] = (9000.0, 15000.0)
    size_kb: tuple[float, float] = (1000.0, 5000.0)
    cpu_util_mean: float = 20.0
    cpu_util_sd: float = 5.0
    cpu_util_bounds: tuple[float, float] = (1.0, 100.0)
    bw_vehicle_edge_gbps: float = 1.0
    bw_edge_cloud_gbps: tuple[float, float] = (1.0, 2.0)
    swap_s: float = 0.05
    cpu_threshold_pct: float = 90.0
    speed_mps: tuple[float, float] = (10.0, 30.0)
    speed_samples: int = 8
    speed_period_s: float = 1.0
    # Catalogue entries (indices into SERVER_CATALOGUE) cycled over the
    # edge and cloud pools; lets a config pin specific server models.
    edge_models: tuple[int, ...] = (0, 2)
    cloud_models: tuple[int, ...] = (1, 3, 4, 5)

    def __post_init__(self):
        for name in ("length_mi", "size_kb", "cpu_util_bounds",
                     "bw_edge_cloud_gbps", "speed_mps", "edge_models",
                     "cloud_models"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for name, kind in (("edge_models", EDGE), ("cloud_models", CLOUD)):
            indices = getattr(self, name)
            if not indices:
                raise DomainError(f"{name} must not be empty")
            for idx in indices:
                if not (0 <= idx < len(SERVER_CATALOGUE)):
                    raise DomainError(f"{name}: no catalogue entry {idx}")
                if SERVER_CATALOGUE[idx][0] != kind:
                    raise DomainError(
                        f"{name}: catalogue entry {idx} is not a {kind} model")
        if min(self.n_requests, self.n_edges, self.n_clouds) < 1:
            raise DomainError("request, edge and cloud counts must be >= 1")
        if self.d_rsu_m <= 0 or self.speed_period_s <= 0 or self.speed_samples < 1:
            raise DomainError("d_rsu_m, speed_period_s and speed_samples must be > 0")
        if min(self.latency_max_s, self.proc_max_s, self.deadline_max_s) <= 0:
            raise DomainError("SLA bounds must be > 0")
        for name in ("length_mi", "size_kb", "bw_edge_cloud_gbps", "speed_mps"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise DomainError(f"{name} range must satisfy 0 <= lo <= hi")
        if self.length_mi[0] <= 0 or self.size_kb[0] <= 0 \
                or self.bw_edge_cloud_gbps[0] <= 0:
            raise DomainError("length, size and bandwidth ranges must be positive")
        lo, hi = self.cpu_util_bounds
        if not (0 < lo <= hi <= 100):
            raise DomainError("cpu_util_bounds must lie in (0, 100]")

    def to_dict(self) -> dict:
        doc = {k: (list(v) if isinstance(v, tuple) else v)
               for k, v in asdict(self).items()}
        doc["schema"] = SCHEMA_VERSION
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "WorkloadSpec":
        doc = dict(doc)
        schema = doc.pop("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise DomainError(f"unsupported workload schema {schema!r}")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise DomainError(f"unknown workload fields: {sorted(unknown)}")
        return cls(**doc)


def load_workload_spec(path: str | Path) -> WorkloadSpec:
    return WorkloadSpec.from_dict(json.loads(Path(path).read_text()))


def save_workload_spec(spec: WorkloadSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2, sort_keys=True) + "\n")


def build_servers(spec: WorkloadSpec) -> tuple[Server, ...]:
    """Edges then clouds, cycling the configured catalogue entries."""
    edge_models = [SERVER_CATALOGUE[i] for i in spec.edge_models]
    cloud_models = [SERVER_CATALOGUE[i] for i in spec.cloud_models]
    servers = []
    for j in range(spec.n_edges):
        kind, _, clock, cores, mem_gb = edge_models[j % len(edge_models)]
        left = spec.rsu_origin_x + j * spec.d_rsu_m
        servers.append(Server(
            id=j, kind=kind, speed_mips=mips_from_catalogue(clock, cores),
            mem_kb=mem_gb * KB_PER_GB, swap_s=spec.swap_s,
            cpu_threshold_pct=spec.cpu_threshold_pct,
            coverage=(left, left + spec.d_rsu_m)))
    for k in range(spec.n_clouds):
        kind, _, clock, cores, mem_gb = cloud_models[k % len(cloud_models)]
        servers.append(Server(
            id=spec.n_edges + k, kind=kind,
            speed_mips=mips_from_catalogue(clock, cores),
            mem_kb=mem_gb * KB_PER_GB, swap_s=spec.swap_s,
            cpu_threshold_pct=spec.cpu_threshold_pct))
    return tuple(servers)


def generate_scenario(spec: WorkloadSpec, seed: int,
                      vehicles: Optional[Sequence[Vehicle]] = None) -> Scenario:
    """Build a full scenario from the spec and a seed.

    When ``vehicles`` is supplied (e.g. ingested trajectories) they replace
    the random placement and the request count becomes one per vehicle.
    """
    rng = make_rng(seed)
    servers = build_servers(spec)

    bw = rng.uniform(spec.bw_edge_cloud_gbps[0], spec.bw_edge_cloud_gbps[1],
                     size=(spec.n_edges, spec.n_clouds))
    relay_cloud_id = spec.n_edges + int(np.argmax(bw.mean(axis=0)))
    network = NetworkModel(
        bw_vehicle_edge_gbps=spec.bw_vehicle_edge_gbps,
        bw_edge_cloud_gbps=tuple(tuple(float(x) for x in row) for row in bw),
        relay_cloud_id=relay_cloud_id)

    if vehicles is None:
        n = spec.n_requests
        lo, hi = spec.rsu_origin_x, spec.rsu_origin_x + spec.n_edges * spec.d_rsu_m
        src = rng.uniform(lo, hi, n)
        dst = rng.uniform(lo, hi, n)
        speeds = rng.uniform(spec.speed_mps[0], spec.speed_mps[1],
                             size=(n, spec.speed_samples))
        vehicles = tuple(Vehicle(
            id=h, src_xy=(float(src[h]), 0.0), dst_xy=(float(dst[h]), 0.0),
            speed_profile=tuple(float(s) for s in speeds[h]),
            speed_period_s=spec.speed_period_s,
            direction=1 if dst[h] >= src[h] else -1) for h in range(n))
    else:
        vehicles = tuple(vehicles)

    requests = []
    for i, vehicle in enumerate(vehicles):
        length = float(rng.uniform(*spec.length_mi))
        size = float(rng.uniform(*spec.size_kb))
        cpu = _truncated_normal(rng, spec.cpu_util_mean, spec.cpu_util_sd,
                                *spec.cpu_util_bounds)
        requests.append(Request(
            id=i, length_mi=length, size_kb=size, reply_size_kb=size,
            cpu_util_pct=cpu, max_latency_s=spec.latency_max_s,
            max_proc_s=spec.proc_max_s, max_deadline_s=spec.deadline_max_s,
            vehicle_id=vehicle.id))

    scenario = Scenario(servers=servers, network=network, vehicles=vehicles,
                        requests=tuple(requests),
                        rsu_origin_x=spec.rsu_origin_x, d_rsu_m=spec.d_rsu_m,
                        seed=seed)
    check = validate_scenario(scenario)
    if not check.ok:
        raise DomainError("generated scenario is invalid: "
                          + "; ".join(check.errors))
    return scenario


def _truncated_normal(rng: np.random.Generator, mean: float, sd: float,
                      lo: float, hi: float) -> float:
    """Normal draw resampled until it lands inside [lo, hi]."""
    while True:
        x = float(rng.normal(mean, sd))
        if lo <= x <= hi:
            return x


_ID_COLUMN_CANDIDATES = ("id", "agent_id", "track_id", "vehicle_id", "agent")


@dataclass(frozen=True)
class TrajectoryIngest:
    vehicles: tuple[Vehicle, ...]
    mapping: dict  # affine fit applied to the raw coordinates


def ingest_trajectories(path: str | Path, sample_period_s: float = 0.5,
                        id_column: Optional[str] = None, scale: float = 1.0,
                        origin_x: float = 0.0,
                        max_speed_samples: Optional[int] = None) -> TrajectoryIngest:
    """Turn a trajectory CSV (x_est/y_est per agent sample) into vehicles.

    Per agent: source is the first sample, destination the last, and the
    speed profile comes from consecutive displacements over the sample
    period. Raw coordinates are mapped onto the road axis by the affine fit
    ``road_x = origin_x + scale * (x_est - min(x_est))``, which is returned
    in ``mapping`` for provenance.
    """
    if sample_period_s <= 0:
        raise DomainError("sample_period_s must be > 0")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DomainError(f"{path}: no data rows")
    header = rows[0].keys()
    for col in ("x_est", "y_est"):
        if col not in header:
            raise DomainError(f"{path}: missing required column {col!r}")
    if id_column is None:
        id_column = next((c for c in _ID_COLUMN_CANDIDATES if c in header), None)
        if id_column is None:
            raise DomainError(
                f"{path}: no agent id column found (looked for "
                f"{', '.join(_ID_COLUMN_CANDIDATES)}); pass id_column")
    elif id_column not in header:
        raise DomainError(f"{path}: missing id column {id_column!r}")

    tracks: dict[str, list[tuple[float, float]]] = {}
    for line_no, row in enumerate(rows, start=2):
        try:
            x, y = float(row["x_est"]), float(row["y_est"])
        except (TypeError, ValueError):
            raise DomainError(
                f"{path}: non-numeric x_est/y_est at row {line_no}") from None
        tracks.setdefault(row[id_column], []).append((x, y))

    min_x = min(p[0] for pts in tracks.values() for p in pts)
    min_y = min(p[1] for pts in tracks.values() for p in pts)

    vehicles = []
    for vid, (agent, pts) in enumerate(tracks.items()):
        mapped = [(origin_x + scale * (x - min_x), scale * (y - min_y))
                  for x, y in pts]
        speeds = tuple(
            math.dist(mapped[k], mapped[k + 1]) / sample_period_s
            for k in range(len(mapped) - 1)) or (0.0,)
        if max_speed_samples is not None:
            speeds = speeds[:max_speed_samples] or (0.0,)
        src, dst = mapped[0], mapped[-1]
        vehicles.append(Vehicle(
            id=vid, src_xy=src, dst_xy=dst, speed_profile=speeds,
            speed_period_s=sample_period_s,
            direction=1 if dst[0] >= src[0] else -1))

    mapping = {"scale": scale, "offset_x": min_x, "offset_y": min_y,
               "origin_x": origin_x, "sample_period_s": sample_period_s,
               "agents": list(tracks.keys())}
    return TrajectoryIngest(vehicles=tuple(vehicles), mapping=mapping)
