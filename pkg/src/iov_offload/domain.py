"""Core immutable types for the vehicular edge-cloud offloading model.

The world is a straight bi-directional road covered by equidistant RSU
intervals, each backed by one edge server, plus a pool of remote cloud
servers. Vehicles submit one-shot requests; an assignment maps every
request either to the vehicle's home edge or to one cloud.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from functools import cached_property
from pathlib import Path
from typing import Optional

SCHEMA_VERSION = 1

#: Gene value meaning "execute on the submitting vehicle's home edge".
HOME_EDGE = -1

EDGE = "edge"
CLOUD = "cloud"


class DomainError(ValueError):
    """Invalid domain object or reference."""


class UncoveredVehicleError(DomainError):
    """A vehicle position falls outside every RSU coverage interval."""

    def __init__(self, message: str, vehicle_id: int | None = None,
                 position_m: float | None = None, t_s: float | None = None):
        super().__init__(message)
        self.vehicle_id = vehicle_id
        self.position_m = position_m
        self.t_s = t_s


@dataclass(frozen=True)
class Request:
    """One vehicular task: work, payload, CPU share and its SLA bounds."""

    id: int
    length_mi: float          # work in Million Instructions
    size_kb: float            # request payload
    reply_size_kb: float      # reply payload
    cpu_util_pct: float       # CPU share claimed while running, percent
    max_latency_s: float
    max_proc_s: float
    max_deadline_s: float
    vehicle_id: int

    def __post_init__(self):
        if self.length_mi <= 0:
            raise DomainError(f"request {self.id}: length_mi must be > 0")
        if self.size_kb <= 0 or self.reply_size_kb <= 0:
            raise DomainError(f"request {self.id}: payload sizes must be > 0")
        if not (0 < self.cpu_util_pct <= 100):
            raise DomainError(f"request {self.id}: cpu_util_pct must be in (0, 100]")
        if min(self.max_latency_s, self.max_proc_s, self.max_deadline_s) <= 0:
            raise DomainError(f"request {self.id}: SLA bounds must be > 0")


@dataclass(frozen=True)
class Vehicle:
    """A vehicle moving along the road axis from src toward dst.

    ``speed_profile`` holds piecewise-constant speed samples (m/s): sample k
    applies on [k*period, (k+1)*period); past the last sample the final speed
    persists. The vehicle stops on reaching its destination.
    """

    id: int
    src_xy: tuple[float, float]
    dst_xy: tuple[float, float]
    speed_profile: tuple[float, ...]
    speed_period_s: float
    direction: int  # +1 or -1 along the road axis

    def __post_init__(self):
        # Tolerate lists from deserialization.
        object.__setattr__(self, "src_xy", tuple(self.src_xy))
        object.__setattr__(self, "dst_xy", tuple(self.dst_xy))
        object.__setattr__(self, "speed_profile", tuple(self.speed_profile))
        if self.direction not in (1, -1):
            raise DomainError(f"vehicle {self.id}: direction must be +1 or -1")
        if self.speed_period_s <= 0:
            raise DomainError(f"vehicle {self.id}: speed_period_s must be > 0")
        if any(s < 0 for s in self.speed_profile):
            raise DomainError(f"vehicle {self.id}: speeds must be >= 0")


@dataclass(frozen=True)
class Server:
    """An edge or cloud node. Edges carry a road coverage interval."""

    id: int
    kind: str                 # "edge" | "cloud"
    speed_mips: float
    mem_kb: float
    swap_s: float             # disk<->memory transfer time per swap
    cpu_threshold_pct: float
    coverage: Optional[tuple[float, float]] = None  # [left, right) for edges

    def __post_init__(self):
        if self.kind not in (EDGE, CLOUD):
            raise DomainError(f"server {self.id}: kind must be 'edge' or 'cloud'")
        if self.speed_mips <= 0 or self.mem_kb <= 0:
            raise DomainError(f"server {self.id}: speed_mips and mem_kb must be > 0")
        if self.swap_s < 0:
            raise DomainError(f"server {self.id}: swap_s must be >= 0")
        if self.kind == EDGE:
            if self.coverage is None:
                raise DomainError(f"edge {self.id}: coverage interval required")
            object.__setattr__(self, "coverage", tuple(self.coverage))
            left, right = self.coverage
            if not right > left:
                raise DomainError(f"edge {self.id}: coverage must have positive width")
        elif self.coverage is not None:
            raise DomainError(f"cloud {self.id}: coverage not allowed")


@dataclass(frozen=True)
class NetworkModel:
    """Link bandwidths in Gbps.

    ``bw_edge_cloud_gbps[j][k]`` connects the j-th edge (edges ordered by id)
    to the k-th cloud (clouds ordered by id) and is used in both directions.
    Inter-edge reply forwarding is routed through ``relay_cloud_id``.
    """

    bw_vehicle_edge_gbps: float
    bw_edge_cloud_gbps: tuple[tuple[float, ...], ...]
    relay_cloud_id: int

    def __post_init__(self):
        object.__setattr__(
            self, "bw_edge_cloud_gbps",
            tuple(tuple(row) for row in self.bw_edge_cloud_gbps))
        if self.bw_vehicle_edge_gbps <= 0:
            raise DomainError("vehicle-edge bandwidth must be > 0")
        for row in self.bw_edge_cloud_gbps:
            if any(bw <= 0 for bw in row):
                raise DomainError("edge-cloud bandwidths must be > 0")


@dataclass(frozen=True)
class Scenario:
    """Immutable world: servers, links, vehicles, requests, RSU geometry."""

    servers: tuple[Server, ...]
    network: NetworkModel
    vehicles: tuple[Vehicle, ...]
    requests: tuple[Request, ...]
    rsu_origin_x: float
    d_rsu_m: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "servers", tuple(self.servers))
        object.__setattr__(self, "vehicles", tuple(self.vehicles))
        object.__setattr__(self, "requests", tuple(self.requests))
        if self.d_rsu_m <= 0:
            raise DomainError("d_rsu_m must be > 0")

    @cached_property
    def edges(self) -> tuple[Server, ...]:
        return tuple(sorted((s for s in self.servers if s.kind == EDGE),
                            key=lambda s: s.id))

    @cached_property
    def clouds(self) -> tuple[Server, ...]:
        return tuple(sorted((s for s in self.servers if s.kind == CLOUD),
                            key=lambda s: s.id))

    @cached_property
    def server_by_id(self) -> dict[int, Server]:
        return {s.id: s for s in self.servers}

    @cached_property
    def vehicle_by_id(self) -> dict[int, Vehicle]:
        return {v.id: v for v in self.vehicles}

    @cached_property
    def edge_index(self) -> dict[int, int]:
        """Edge server id -> row index in the edge-cloud bandwidth matrix."""
        return {e.id: j for j, e in enumerate(self.edges)}

    @cached_property
    def cloud_index(self) -> dict[int, int]:
        """Cloud server id -> column index in the edge-cloud bandwidth matrix."""
        return {c.id: k for k, c in enumerate(self.clouds)}

    @cached_property
    def gene_alphabet(self) -> tuple[int, ...]:
        """All legal gene values: HOME_EDGE plus every cloud id."""
        return (HOME_EDGE,) + tuple(c.id for c in self.clouds)

    @cached_property
    def covered_span(self) -> tuple[float, float]:
        """Union of all edge coverage, assuming the equidistant layout."""
        return (self.rsu_origin_x,
                self.rsu_origin_x + len(self.edges) * self.d_rsu_m)

    def edge_covering(self, x: float) -> Server:
        """Edge whose half-open coverage interval [left, right) contains x."""
        lo, hi = self.covered_span
        if not (lo <= x < hi):
            raise UncoveredVehicleError(
                f"position {x} m is outside RSU coverage [{lo}, {hi})",
                position_m=x)
        j = int(math.floor((x - self.rsu_origin_x) / self.d_rsu_m))
        j = min(j, len(self.edges) - 1)  # guard float roundoff at the far end
        return self.edges[j]

    def bw_edge_cloud(self, edge_id: int, cloud_id: int) -> float:
        j = self.edge_index[edge_id]
        k = self.cloud_index[cloud_id]
        return self.network.bw_edge_cloud_gbps[j][k]


@dataclass(frozen=True)
class Assignment:
    """A chromosome: one gene per request, in scenario request order.

    Gene i is either ``HOME_EDGE`` or the id of a cloud server.
    """

    genes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "genes", tuple(int(g) for g in self.genes))


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()


def validate_scenario(scenario: Scenario) -> ValidationResult:
    """Check the structural invariants of a scenario.

    Errors break the model (overlapping or gapped coverage, uncovered or
    dangling references, bad bandwidth matrix shape). The edge-vs-cloud
    capability ordering is reported as a warning only: real server
    catalogues routinely violate the idealized ordering and the cost model
    stays well defined without it.
    """
    errors: list[str] = []
    warnings: list[str] = []

    edges, clouds = scenario.edges, scenario.clouds
    if not edges:
        errors.append("scenario has no edge servers")
    if len({s.id for s in scenario.servers}) != len(scenario.servers):
        errors.append("duplicate server ids")

    # Equidistant, disjoint, half-open coverage starting at rsu_origin_x.
    for j, e in enumerate(edges):
        left, right = e.coverage
        want_left = scenario.rsu_origin_x + j * scenario.d_rsu_m
        if not (math.isclose(left, want_left, abs_tol=1e-9)
                and math.isclose(right, want_left + scenario.d_rsu_m, abs_tol=1e-9)):
            if j > 0 and left < edges[j - 1].coverage[1] - 1e-9:
                errors.append(f"coverage overlap between edges {edges[j-1].id} and {e.id}")
            else:
                errors.append(f"edge {e.id}: coverage {e.coverage} breaks the "
                              f"equidistant layout (expected width {scenario.d_rsu_m})")

    mat = scenario.network.bw_edge_cloud_gbps
    if len(mat) != len(edges) or any(len(row) != len(clouds) for row in mat):
        errors.append("edge-cloud bandwidth matrix shape does not match servers")
    if clouds and scenario.network.relay_cloud_id not in {c.id for c in clouds}:
        errors.append(f"relay cloud {scenario.network.relay_cloud_id} does not exist")

    vehicle_ids = {v.id for v in scenario.vehicles}
    if len(vehicle_ids) != len(scenario.vehicles):
        errors.append("duplicate vehicle ids")
    for r in scenario.requests:
        if r.vehicle_id not in vehicle_ids:
            errors.append(f"request {r.id}: vehicle {r.vehicle_id} does not exist")
    if len({r.id for r in scenario.requests}) != len(scenario.requests):
        errors.append("duplicate request ids")

    # Every vehicle must sit inside exactly one coverage interval at t=0,
    # and its direction must point toward the destination.
    if not errors:
        for v in scenario.vehicles:
            lo, hi = scenario.covered_span
            x = v.src_xy[0]
            if not (lo <= x < hi):
                errors.append(f"vehicle {v.id} uncovered at t=0 (x={x})")
            if v.direction * (v.dst_xy[0] - v.src_xy[0]) < 0:
                errors.append(f"vehicle {v.id}: direction points away from destination")

    if edges and clouds:
        slowest_cloud = min(c.speed_mips for c in clouds)
        smallest_cloud = min(c.mem_kb for c in clouds)
        for e in edges:
            if e.speed_mips >= slowest_cloud:
                warnings.append(f"edge {e.id} is at least as fast as some cloud "
                                f"({e.speed_mips} vs {slowest_cloud} MIPS)")
            if e.mem_kb >= smallest_cloud:
                warnings.append(f"edge {e.id} has at least as much memory as some cloud")

    return ValidationResult(ok=not errors, errors=tuple(errors),
                            warnings=tuple(warnings))


def home_edge(scenario: Scenario, vehicle_id: int) -> int:
    """Id of the unique edge covering the vehicle at submission time (t=0)."""
    v = scenario.vehicle_by_id.get(vehicle_id)
    if v is None:
        raise DomainError(f"vehicle {vehicle_id} does not exist")
    try:
        return scenario.edge_covering(v.src_xy[0]).id
    except UncoveredVehicleError as exc:
        raise UncoveredVehicleError(
            f"vehicle {vehicle_id} uncovered at submission: {exc}",
            vehicle_id=vehicle_id, position_m=v.src_xy[0], t_s=0.0) from exc


def validate_assignment(scenario: Scenario, assignment: Assignment) -> None:
    """Raise unless the assignment matches the scenario's requests and clouds."""
    if len(assignment.genes) != len(scenario.requests):
        raise DomainError(
            f"assignment has {len(assignment.genes)} genes for "
            f"{len(scenario.requests)} requests")
    cloud_ids = {c.id for c in scenario.clouds}
    for i, g in enumerate(assignment.genes):
        if g != HOME_EDGE and g not in cloud_ids:
            raise DomainError(f"gene {i}: {g} is neither HOME_EDGE nor a cloud id")


# ---------------------------------------------------------------------------
# Serialization (schema 1): plain JSON documents with the dataclass field
# names. The writer is canonical (sorted keys, fixed indentation) so equal
# scenarios serialize to identical bytes.
# ---------------------------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "servers": [_server_dict(s) for s in scenario.servers],
        "network": {
            "bw_vehicle_edge_gbps": scenario.network.bw_vehicle_edge_gbps,
            "bw_edge_cloud_gbps": [list(row) for row in
                                   scenario.network.bw_edge_cloud_gbps],
            "relay_cloud_id": scenario.network.relay_cloud_id,
        },
        "vehicles": [_plain_dict(v) for v in scenario.vehicles],
        "requests": [_plain_dict(r) for r in scenario.requests],
        "rsu_origin_x": scenario.rsu_origin_x,
        "d_rsu_m": scenario.d_rsu_m,
        "seed": scenario.seed,
    }


def scenario_from_dict(doc: dict) -> Scenario:
    if doc.get("schema") != SCHEMA_VERSION:
        raise DomainError(f"unsupported scenario schema {doc.get('schema')!r}, "
                          f"expected {SCHEMA_VERSION}")
    net = doc["network"]
    return Scenario(
        servers=tuple(Server(**{**d, "coverage": _opt_tuple(d.get("coverage"))})
                      for d in doc["servers"]),
        network=NetworkModel(
            bw_vehicle_edge_gbps=net["bw_vehicle_edge_gbps"],
            bw_edge_cloud_gbps=tuple(tuple(row) for row in net["bw_edge_cloud_gbps"]),
            relay_cloud_id=net["relay_cloud_id"],
        ),
        vehicles=tuple(Vehicle(**d) for d in doc["vehicles"]),
        requests=tuple(Request(**d) for d in doc["requests"]),
        rsu_origin_x=doc["rsu_origin_x"],
        d_rsu_m=doc["d_rsu_m"],
        seed=doc["seed"],
    )


def dumps_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n"


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(dumps_scenario(scenario))


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()))


def _server_dict(s: Server) -> dict:
    d = _plain_dict(s)
    d["coverage"] = list(s.coverage) if s.coverage is not None else None
    return d


def _plain_dict(obj) -> dict:
    out = {}
    for f in fields(obj):
        val = getattr(obj, f.name)
        out[f.name] = list(val) if isinstance(val, tuple) else val
    return out


def _opt_tuple(val):
    return tuple(val) if val is not None else None
