"""Edge-cloud offloading simulator and SLA-constrained genetic optimizer
for vehicular requests."""

__version__ = "0.1.0"

from .domain import (CLOUD, EDGE, HOME_EDGE, Assignment, DomainError,
                     NetworkModel, Request, Scenario, Server,
                     UncoveredVehicleError, ValidationResult, Vehicle,
                     home_edge, load_scenario, save_scenario,
                     validate_assignment, validate_scenario)
from .evaluation import AssignmentEvaluator, EvaluationReport
from .execmodel import (ExecBreakdown, OverlapCase, RequestBreakdown,
                        ScheduleEntry, ServerSchedule, classify_overlap,
                        evaluate_assignment, io_time, proc_time)
from .ga import (GaParams, GaTrace, Mode, PopulationEval, fitness_chain,
                 default_population_size, run)
from .mobility import (CommBreakdown, MobilityOutcome, comm_time, edge_at,
                       position_at, transfer_time)
from .objective import ViolationVector, is_feasible, objective, violations
from .oracle import OracleResult, solve_exhaustive
from .workload import (WorkloadSpec, TrajectoryIngest, generate_scenario,
                       ingest_trajectories)

__all__ = [
    "Assignment", "AssignmentEvaluator", "CommBreakdown", "CLOUD",
    "DomainError", "EDGE", "EvaluationReport", "ExecBreakdown", "GaParams",
    "GaTrace", "HOME_EDGE", "MobilityOutcome", "Mode", "NetworkModel",
    "OracleResult", "OverlapCase", "PopulationEval", "Request",
    "RequestBreakdown", "Scenario", "ScheduleEntry", "Server",
    "ServerSchedule", "TrajectoryIngest", "UncoveredVehicleError",
    "ValidationResult", "Vehicle", "ViolationVector", "WorkloadSpec",
    "classify_overlap", "comm_time", "default_population_size", "edge_at",
    "evaluate_assignment", "fitness_chain", "generate_scenario", "home_edge",
    "ingest_trajectories", "io_time", "is_feasible", "load_scenario",
    "objective", "position_at", "proc_time", "run", "save_scenario",
    "solve_exhaustive", "transfer_time", "validate_assignment",
    "validate_scenario", "violations",
]
