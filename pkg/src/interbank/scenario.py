"""Scenario lineage: persistent record of one simulation-intervention-evaluation run.

A scenario chains the four stage snapshots (FN_o always, FN_s after a shock,
FN_i/FN_is after an intervention plus re-shock), together with the shock
spec, the intervention plan, propagation results and the before/after
assessment.  Documents round-trip losslessly through JSON.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from typing import TYPE_CHECKING

import numpy as np

from .network import FinancialNetwork, network_from_document, network_to_document

if TYPE_CHECKING:  # pragma: no cover
    from .contagion import PropagationResult, ShockSpec
    from .intervention import Assessment, InterventionPlan

DOCUMENT_VERSION = 1


@dataclass
class Scenario:
    id: str
    networks: dict[str, FinancialNetwork]
    shock_spec: "ShockSpec | None" = None
    intervention_plan: "InterventionPlan | None" = None
    results: dict[str, "PropagationResult"] = field(default_factory=dict)
    assessment: "Assessment | None" = None
    created_at: str = ""
    events: list[dict] = field(default_factory=list)

    def __post_init__(self) -> None:
        if "FN_o" not in self.networks:
            raise ValueError("scenario requires an FN_o snapshot")
        if "FN_s" in self.networks and self.shock_spec is None:
            raise ValueError("FN_s exists but no shock spec recorded")
        if "FN_is" in self.networks and (
            self.shock_spec is None or self.intervention_plan is None
        ):
            raise ValueError("FN_is exists but the shock/intervention chain is incomplete")

    def stage(self, tag: str) -> FinancialNetwork:
        try:
            return self.networks[tag]
        except KeyError:
            raise KeyError(f"scenario {self.id} has no stage {tag!r}") from None

    def record_event(self, kind: str, data: dict) -> None:
        self.events.append({"event": kind, "data": data})


def shock_spec_to_doc(spec: "ShockSpec") -> dict:
    doc = asdict(spec)
    if doc["targets"] != "all":
        doc["targets"] = list(doc["targets"])
    return doc


def shock_spec_from_doc(doc: dict) -> "ShockSpec":
    from .contagion import ShockSpec

    targets = doc["targets"]
    if targets != "all":
        targets = tuple(targets)
    return ShockSpec(
        model=doc["model"],
        targets=targets,
        magnitude=doc["magnitude"],
        magnitude_kind=doc.get("magnitude_kind", "fraction"),
        lgd=doc.get("lgd", 1.0),
        max_rounds=doc.get("max_rounds", 1000),
        epsilon=doc.get("epsilon", 1e-10),
        seed=doc.get("seed", 0),
    )


def result_to_doc(result: "PropagationResult") -> dict:
    return {
        "model": result.model,
        "rounds": result.rounds,
        "converged": result.converged,
        "lgd": result.lgd,
        "final_stress": [float(v) for v in result.final_stress],
        "losses": [float(v) for v in result.losses],
        "defaulted": [bool(v) for v in result.defaulted],
        "additional_defaults": [int(v) for v in result.additional_defaults],
        "stress_trajectory": [[float(v) for v in row] for row in result.stress_trajectory],
        "warnings": list(result.warnings),
    }


def result_from_doc(doc: dict) -> "PropagationResult":
    from .contagion import PropagationResult

    return PropagationResult(
        rounds=doc["rounds"],
        stress_trajectory=np.array(doc["stress_trajectory"], dtype=float),
        final_stress=np.array(doc["final_stress"], dtype=float),
        losses=np.array(doc["losses"], dtype=float),
        defaulted=np.array(doc["defaulted"], dtype=bool),
        additional_defaults=np.array(doc["additional_defaults"], dtype=np.int_),
        converged=doc["converged"],
        model=doc["model"],
        lgd=doc.get("lgd", 1.0),
        warnings=tuple(doc.get("warnings", [])),
    )


def scenario_to_document(sc: Scenario) -> dict:
    from .intervention import assessment_to_doc, plan_to_doc

    return {
        "version": DOCUMENT_VERSION,
        "id": sc.id,
        "created_at": sc.created_at,
        "networks": {tag: network_to_document(net) for tag, net in sc.networks.items()},
        "shock_spec": shock_spec_to_doc(sc.shock_spec) if sc.shock_spec else None,
        "intervention_plan": plan_to_doc(sc.intervention_plan) if sc.intervention_plan else None,
        "results": {tag: result_to_doc(r) for tag, r in sc.results.items()},
        "assessment": assessment_to_doc(sc.assessment) if sc.assessment else None,
        "events": sc.events,
    }


def scenario_from_document(doc: dict) -> Scenario:
    from .intervention import assessment_from_doc, plan_from_doc

    if doc.get("version") != DOCUMENT_VERSION:
        raise ValueError(f"unsupported scenario document version {doc.get('version')!r}")
    return Scenario(
        id=doc["id"],
        networks={tag: network_from_document(d) for tag, d in doc["networks"].items()},
        shock_spec=shock_spec_from_doc(doc["shock_spec"]) if doc.get("shock_spec") else None,
        intervention_plan=plan_from_doc(doc["intervention_plan"])
        if doc.get("intervention_plan")
        else None,
        results={tag: result_from_doc(d) for tag, d in doc.get("results", {}).items()},
        assessment=assessment_from_doc(doc["assessment"]) if doc.get("assessment") else None,
        created_at=doc.get("created_at", ""),
        events=doc.get("events", []),
    )


def dumps_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_document(sc), indent=2) + "\n"


def loads_scenario(text: str) -> Scenario:
    return scenario_from_document(json.loads(text))


def save_scenario(sc: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_scenario(sc))


def load_scenario(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_scenario(fh.read())
