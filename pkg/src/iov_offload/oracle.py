"""Exhaustive ground-truth solver for small offloading instances.

Enumerates every assignment (home edge or one of the clouds per request),
so the search space is (K+1)^I. Returns both the feasible assignment with
the smallest total time and the assignment minimizing the adaptive
penalized score when the whole enumeration is treated as one degenerate
"generation" (its normalization constants are exported so any other
assignment can be scored in the same frame).
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Optional

import numpy as np

from .domain import Assignment, Scenario
from .evaluation import AssignmentEvaluator
from .ga import Mode, PopulationConstants, penalized_from_components

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class OracleResult:
    best_feasible: Optional[tuple[Assignment, float]]   # (genes, total seconds)
    best_overall_penalized: tuple[Assignment, float]    # (genes, fbar in frame)
    enumeration_count: int
    frame: PopulationConstants


def solve_exhaustive(scenario: Scenario, limit: int = 10 ** 6,
                     on_uncovered: str = "raise",
                     cpu_mem_rule: str = "aggregate") -> OracleResult:
    """Enumerate all assignments and return the optima.

    Ties are broken toward lexicographically smaller gene tuples, which is
    the enumeration order itself, so results are independent of how the
    search space would be partitioned. Raises ``ValueError`` when the
    instance exceeds ``limit`` enumerations.
    """
    alphabet = scenario.gene_alphabet
    n_genes = len(scenario.requests)
    count = len(alphabet) ** n_genes
    if count > limit:
        raise ValueError(
            f"instance has {count} assignments; raise limit (>= {count}) to solve")
    if count == 0:
        raise ValueError("scenario has no requests")

    evaluator = AssignmentEvaluator(scenario, on_uncovered=on_uncovered,
                                    cpu_mem_rule=cpu_mem_rule)
    objectives = np.empty(count)
    components = np.empty((count, 5))
    best_feas_total = None
    best_feas_index = -1

    for index, genes in enumerate(product(alphabet, repeat=n_genes)):
        total, comps = evaluator.evaluate_summary(genes)
        objectives[index] = total
        components[index] = comps
        if comps == (0.0, 0.0, 0.0, 0.0, 0.0):
            if best_feas_total is None or total < best_feas_total:
                best_feas_total = total
                best_feas_index = index

    n_f = int(np.count_nonzero((components == 0).all(axis=1)))
    frame = PopulationConstants(
        obj_min=float(objectives.min()), obj_max=float(objectives.max()),
        viol_max=tuple(float(m) for m in components.max(axis=0)),
        n_f=n_f, gamma=n_f / count)

    best_fbar = None
    best_fbar_index = -1
    for index in range(count):
        _, _, fbar = penalized_from_components(
            float(objectives[index]), components[index], frame, Mode.SLA_AWARE)
        if best_fbar is None or fbar < best_fbar:
            best_fbar = fbar
            best_fbar_index = index

    best_feasible = None
    if best_feas_total is not None:
        best_feasible = (Assignment(_genes_at(best_feas_index, alphabet, n_genes)),
                         best_feas_total)
    return OracleResult(
        best_feasible=best_feasible,
        best_overall_penalized=(
            Assignment(_genes_at(best_fbar_index, alphabet, n_genes)),
            float(best_fbar)),
        enumeration_count=count,
        frame=frame)


def _genes_at(index: int, alphabet: tuple[int, ...], n_genes: int) -> tuple[int, ...]:
    """Decode an enumeration index (the last gene varies fastest)."""
    base = len(alphabet)
    digits = [0] * n_genes
    for k in range(n_genes - 1, -1, -1):
        index, d = divmod(index, base)
        digits[k] = alphabet[d]
    return tuple(digits)


def oracle_to_dict(result: OracleResult) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "enumeration_count": result.enumeration_count,
        "best_feasible": None if result.best_feasible is None else {
            "genes": list(result.best_feasible[0].genes),
            "total_time_s": result.best_feasible[1],
        },
        "best_overall_penalized": {
            "genes": list(result.best_overall_penalized[0].genes),
            "fbar": result.best_overall_penalized[1],
        },
        "frame": {
            "obj_min": result.frame.obj_min,
            "obj_max": result.frame.obj_max,
            "viol_max": list(result.frame.viol_max),
            "n_f": result.frame.n_f,
            "gamma": result.frame.gamma,
        },
    }


def oracle_from_dict(doc: dict) -> OracleResult:
    if doc.get("schema") != SCHEMA_VERSION:
        raise ValueError(f"unsupported oracle schema {doc.get('schema')!r}")
    bf = doc["best_feasible"]
    bp = doc["best_overall_penalized"]
    fr = doc["frame"]
    return OracleResult(
        best_feasible=None if bf is None else
        (Assignment(tuple(bf["genes"])), bf["total_time_s"]),
        best_overall_penalized=(Assignment(tuple(bp["genes"])), bp["fbar"]),
        enumeration_count=doc["enumeration_count"],
        frame=PopulationConstants(
            obj_min=fr["obj_min"], obj_max=fr["obj_max"],
            viol_max=tuple(fr["viol_max"]), n_f=fr["n_f"], gamma=fr["gamma"]))


def save_oracle(result: OracleResult, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(oracle_to_dict(result), indent=2, sort_keys=True) + "\n")


def load_oracle(path: str | Path) -> OracleResult:
    return oracle_from_dict(json.loads(Path(path).read_text()))
