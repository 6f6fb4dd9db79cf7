"""Surgical network interventions and before/after assessment.

Interventions (node removal with debt clearing, edge cuts) are applied to
the original network, which is then re-shocked with the same spec; the
assessment compares the systemic indicators of the two shock legs and books
the cleared liabilities as the rescue cost.
"""

from __future__ import annotations

import io
import csv
import math
import datetime as _dt
from dataclasses import dataclass, field

import numpy as np

from .contagion import ShockSpec, run_shock
from .metrics import SystemRisk, fragility, systemic_indicators
from .network import FinancialNetwork, make_network
from .scenario import Scenario


@dataclass(frozen=True)
class CutEdge:
    from_id: str
    to_id: str
    kind: str = "cut_edge"


@dataclass(frozen=True)
class RemoveNode:
    bank_id: str
    kind: str = "remove_node"


Operation = CutEdge | RemoveNode


@dataclass(frozen=True)
class InterventionPlan:
    operations: tuple[Operation, ...] = ()
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "operations", tuple(self.operations))

    @property
    def removed_ids(self) -> tuple[str, ...]:
        return tuple(op.bank_id for op in self.operations if isinstance(op, RemoveNode))


@dataclass
class Assessment:
    before: SystemRisk
    after: SystemRisk
    rescue_cost: float
    relief: dict[str, float]
    per_bank_delta: dict[str, dict[str, float]]
    label: str = ""


def plan_to_doc(plan: InterventionPlan) -> dict:
    ops = []
    for op in plan.operations:
        if isinstance(op, RemoveNode):
            ops.append({"kind": "remove_node", "id": op.bank_id})
        else:
            ops.append({"kind": "cut_edge", "from": op.from_id, "to": op.to_id})
    return {"label": plan.label, "operations": ops}


def plan_from_doc(doc: dict) -> InterventionPlan:
    ops: list[Operation] = []
    for op in doc.get("operations", []):
        if op["kind"] == "remove_node":
            ops.append(RemoveNode(bank_id=op["id"]))
        elif op["kind"] == "cut_edge":
            ops.append(CutEdge(from_id=op["from"], to_id=op["to"]))
        else:
            raise ValueError(f"unknown operation kind {op['kind']!r}")
    return InterventionPlan(operations=tuple(ops), label=doc.get("label", ""))


def assessment_to_doc(a: Assessment) -> dict:
    return {
        "label": a.label,
        "before": a.before.as_dict(),
        "after": a.after.as_dict(),
        "rescue_cost": a.rescue_cost,
        "relief": dict(a.relief),
        "per_bank_delta": a.per_bank_delta,
    }


def assessment_from_doc(doc: dict) -> Assessment:
    return Assessment(
        before=SystemRisk(**doc["before"]),
        after=SystemRisk(**doc["after"]),
        rescue_cost=doc["rescue_cost"],
        relief=dict(doc["relief"]),
        per_bank_delta=doc.get("per_bank_delta", {}),
        label=doc.get("label", ""),
    )


# ---------------------------------------------------------------------------
# Surgical operations
# ---------------------------------------------------------------------------

def remove_node(net: FinancialNetwork, bank_id: str) -> tuple[FinancialNetwork, float]:
    """Delete a bank, clearing its debt; creditors lose the matching assets.

    Returns the new network and the cleared liabilities (the rescue cost).
    """
    i = net.index_of(bank_id)
    cleared = float(net.exposures[:, i].sum())
    keep = [j for j in range(net.n) if j != i]
    exposures = net.exposures[np.ix_(keep, keep)]
    banks = [net.banks[j] for j in keep]
    wsum = sum(b.weight for b in banks)
    if wsum > 0:
        weights = [b.weight / wsum for b in banks]
    else:
        weights = [1.0 / len(banks)] * len(banks) if banks else []
    new = make_network(
        ids=[b.id for b in banks],
        exposures=exposures,
        external_assets=[b.external_assets for b in banks],
        capital_buffer=[b.capital_buffer for b in banks],
        weight=weights,
        stage_tag=net.stage_tag,
    )
    return new, cleared


def cut_edge(net: FinancialNetwork, from_id: str, to_id: str) -> tuple[FinancialNetwork, float]:
    """Zero one exposure entry; returns the cleared amount."""
    i = net.index_of(from_id)
    j = net.index_of(to_id)
    amount = float(net.exposures[i, j])
    if amount <= 0:
        raise KeyError(f"no exposure {from_id!r} -> {to_id!r} to cut")
    exposures = np.array(net.exposures)
    exposures[i, j] = 0.0
    banks = list(net.banks)
    new = make_network(
        ids=[b.id for b in banks],
        exposures=exposures,
        external_assets=[b.external_assets for b in banks],
        capital_buffer=[b.capital_buffer for b in banks],
        weight=[b.weight for b in banks],
        stage_tag=net.stage_tag,
    )
    return new, amount


def apply_plan(net: FinancialNetwork, plan: InterventionPlan) -> tuple[FinancialNetwork, float]:
    """Apply operations in order; total cleared amount is the rescue cost."""
    cost = 0.0
    current = net
    for op in plan.operations:
        if isinstance(op, RemoveNode):
            current, cleared = remove_node(current, op.bank_id)
        else:
            current, cleared = cut_edge(current, op.from_id, op.to_id)
        cost += cleared
    return current.with_stage("FN_i"), cost


# ---------------------------------------------------------------------------
# The simulation-intervention-evaluation loop
# ---------------------------------------------------------------------------

RELIEF_FIELDS = SystemRisk.FIELDS


def _relief(before: SystemRisk, after: SystemRisk) -> dict[str, float]:
    out = {}
    for name in RELIEF_FIELDS:
        b = float(getattr(before, name))
        a = float(getattr(after, name))
        out[name] = 100.0 * (b - a) / b if b != 0.0 else 0.0
    return out


def _per_bank_delta(
    fn_o: FinancialNetwork,
    result_before,
    fn_i: FinancialNetwork,
    result_after,
) -> dict[str, dict[str, float]]:
    frag_before = fragility(fn_o, result_before)
    frag_after = fragility(fn_i, result_after)
    before_ids = fn_o.ids
    after_index = {bid: k for k, bid in enumerate(fn_i.ids)}
    out: dict[str, dict[str, float]] = {}
    for i, bid in enumerate(before_ids):
        if bid not in after_index:
            continue
        k = after_index[bid]
        fb = frag_before[i] if math.isfinite(frag_before[i]) else 0.0
        fa = frag_after[k] if math.isfinite(frag_after[k]) else 0.0
        out[bid] = {
            "stress": float(result_after.final_stress[k] - result_before.final_stress[i]),
            "loss": float(result_after.losses[k] - result_before.losses[i]),
            "fragility": float(fa - fb),
        }
    return out


def run_scenario(
    fn_o: FinancialNetwork,
    shock: ShockSpec,
    plan: InterventionPlan,
    scenario_id: str = "scenario",
    reshock_base: str = "FN_o",
    created_at: str | None = None,
) -> Scenario:
    """Shock, intervene, re-shock, assess.

    ``reshock_base`` selects which snapshot the surgery applies to before the
    re-shock: the original network (default) or the already-shocked FN_s.
    Removed banks silently drop out of the re-shock target set.
    """
    if reshock_base not in ("FN_o", "FN_s"):
        raise ValueError(f"reshock_base must be FN_o or FN_s, got {reshock_base!r}")
    result_s, fn_s = run_shock(fn_o, shock, stage_tag="FN_s")
    base = fn_o if reshock_base == "FN_o" else fn_s.with_stage("FN_o")
    fn_i, cost = apply_plan(base, plan)
    reshock = shock.drop_targets(set(plan.removed_ids))
    result_is, fn_is = run_shock(fn_i, reshock, stage_tag="FN_is")
    before = systemic_indicators(fn_o, result_s)
    after = systemic_indicators(fn_i, result_is)
    assessment = Assessment(
        before=before,
        after=after,
        rescue_cost=cost,
        relief=_relief(before, after),
        per_bank_delta=_per_bank_delta(fn_o, result_s, fn_i, result_is),
        label=plan.label,
    )
    if created_at is None:
        created_at = _dt.datetime.now(_dt.timezone.utc).isoformat()
    return Scenario(
        id=scenario_id,
        networks={"FN_o": fn_o, "FN_s": fn_s, "FN_i": fn_i, "FN_is": fn_is},
        shock_spec=shock,
        intervention_plan=plan,
        results={"FN_s": result_s, "FN_is": result_is},
        assessment=assessment,
        created_at=created_at,
    )


def compare_strategies(
    fn_o: FinancialNetwork,
    shock: ShockSpec,
    plans: list[InterventionPlan],
    reshock_base: str = "FN_o",
) -> list[Assessment]:
    """One assessment per plan, ranked by total-loss reduction per unit cost.

    Zero-cost plans rank by whether they reduce anything at all; ties break
    on the plan label so the order is deterministic.
    """
    if not plans:
        raise ValueError("need at least one plan")
    assessments = []
    for plan in plans:
        sc = run_scenario(fn_o, shock, plan, scenario_id=f"compare-{plan.label}",
                          reshock_base=reshock_base, created_at="")
        assessments.append(sc.assessment)

    def key(a: Assessment) -> tuple[float, str]:
        reduction = a.before.total_loss - a.after.total_loss
        if a.rescue_cost > 0:
            score = reduction / a.rescue_cost
        else:
            score = math.inf if reduction > 0 else 0.0
        return (-score, a.label)

    return sorted(assessments, key=key)


def top_systemic_bank(net: FinancialNetwork, result) -> int:
    """Bank contributing the most to system loss; ties break on stress, then index.

    Losses are the per-bank share of total system loss, so the max-loss bank
    is the top systemic-stress contributor.
    """
    order = np.lexsort((np.arange(net.n), -result.final_stress, -result.losses))
    return int(order[0])


def derive_strategies(net: FinancialNetwork, result, matrix) -> list[InterventionPlan]:
    """Build the five candidate removal strategies from one shocked leg.

    S0 removes the top systemic-stress bank; S1 adds the runner-up; S2 adds a
    moderate (median-stress) bank instead; S3 adds the most remotely
    vulnerable (highest impact susceptibility) bank; S4 adds the most
    bankrupt-like bank (lowest remaining-equity ratio, most counterfactual
    defaults on ties).
    """
    n = net.n
    h = result.final_stress
    losses = result.losses
    idx = np.arange(n)
    systemic_order = np.lexsort((idx, -h, -losses))
    top = int(systemic_order[0])
    second = int(systemic_order[1]) if n > 1 else top

    median_h = float(np.median(h))
    moderate_rank = np.lexsort((idx, np.abs(h - median_h)))
    moderate = next(int(i) for i in moderate_rank if i not in (top, second))

    susceptibility = matrix.column("impact_susceptibility")
    susc_rank = np.lexsort((idx, -susceptibility))
    vulnerable = next(int(i) for i in susc_rank if i != top)

    frag = matrix.column("fragility")
    finite = np.where(np.isfinite(frag), frag, np.inf)
    defaults = matrix.column("defaults")
    bankrupt_rank = np.lexsort((idx, -defaults, finite))
    bankrupt = next(int(i) for i in bankrupt_rank if i != top)

    ids = net.ids

    def removal(label: str, banks: list[int]) -> InterventionPlan:
        return InterventionPlan(
            operations=tuple(RemoveNode(bank_id=ids[b]) for b in banks), label=label
        )

    return [
        removal("S0", [top]),
        removal("S1", [top, second]),
        removal("S2", [top, moderate]),
        removal("S3", [top, vulnerable]),
        removal("S4", [top, bankrupt]),
    ]


def relief_table_csv(assessments: list[Assessment]) -> str:
    """Relief table: one row per strategy, cost plus per-indicator relief %."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["strategy", "rescue_cost", *[f"relief_{name}" for name in RELIEF_FIELDS]])
    for a in assessments:
        writer.writerow(
            [a.label, repr(float(a.rescue_cost)), *[repr(float(a.relief[n])) for n in RELIEF_FIELDS]]
        )
    return buf.getvalue()
