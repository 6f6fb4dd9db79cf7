"""Scenario-oriented HTTP/JSON API over the simulation core.

Versioned under ``/v1``; persistence is plain JSON documents written with a
temp-file + atomic-rename so concurrent readers never observe a partial
scenario.  Mutations are serialized per scenario id; request bodies are
parsed strictly (unknown fields rejected).
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import os
import tempfile
import threading
import uuid
from typing import Any, Literal

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, ConfigDict, Field

from .contagion import ShockSpec, result_to_csv
from .generator import GeneratorConfig, InfeasibleMarginals, generate_network
from .intervention import (
    InterventionPlan,
    compare_strategies,
    plan_from_doc,
    relief_table_csv,
    run_scenario,
)
from .layout import LayoutConfig, compute_layout, layout_to_document
from .metrics import risk_matrix, risk_matrix_to_csv, systemic_indicators
from .network import (
    FinancialNetwork,
    loads_network,
    network_from_document,
    network_to_document,
)
from .scenario import (
    Scenario,
    dumps_scenario,
    loads_scenario,
    scenario_to_document,
    shock_spec_to_doc,
)


class ApiError(Exception):
    """Maps a code to one JSON error body and an HTTP status."""

    STATUS = {"not_found": 404, "invalid_input": 400, "infeasible": 422, "conflict": 409}

    def __init__(self, code: str, message: str, detail: Any = None):
        super().__init__(message)
        self.code = code
        self.message = message
        self.detail = detail

    def response(self) -> JSONResponse:
        return JSONResponse(
            status_code=self.STATUS[self.code],
            content={"error": {"code": self.code, "message": self.message, "detail": self.detail}},
        )


# ---------------------------------------------------------------------------
# Request models (strict)
# ---------------------------------------------------------------------------

class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GenerateBody(StrictModel):
    method: Literal["max_entropy", "min_density"] = "min_density"
    n: int = Field(ge=2)
    seed: int = 0
    sampler: Literal["lognormal", "pareto", "explicit"] = "lognormal"
    sampler_params: dict = Field(default_factory=dict)
    external_ratio: float = 3.0
    capital_ratio: float = 0.3


class NetworkBody(StrictModel):
    generate: GenerateBody | None = None
    upload: dict | None = None


class ShockBody(StrictModel):
    model: Literal["threshold", "linear", "hybrid"] = "linear"
    targets: list[str] | Literal["all"] = "all"
    magnitude: float = 1.0
    magnitude_kind: Literal["fraction", "absolute"] = "fraction"
    lgd: float = 1.0
    max_rounds: int = 1000
    epsilon: float = 1e-10
    seed: int = 0

    def to_spec(self) -> ShockSpec:
        targets = self.targets if self.targets == "all" else tuple(self.targets)
        try:
            return ShockSpec(
                model=self.model,
                targets=targets,
                magnitude=self.magnitude,
                magnitude_kind=self.magnitude_kind,
                lgd=self.lgd,
                max_rounds=self.max_rounds,
                epsilon=self.epsilon,
                seed=self.seed,
            )
        except ValueError as exc:
            raise ApiError("invalid_input", str(exc)) from exc


class OperationBody(StrictModel):
    kind: Literal["remove_node", "cut_edge"]
    id: str | None = None
    from_: str | None = Field(default=None, alias="from")
    to: str | None = None

    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class PlanBody(StrictModel):
    label: str = ""
    operations: list[OperationBody] = Field(default_factory=list)
    overwrite: bool = False

    def to_plan(self) -> InterventionPlan:
        try:
            return plan_from_doc(
                {
                    "label": self.label,
                    "operations": [op.model_dump(by_alias=True, exclude_none=True) for op in self.operations],
                }
            )
        except (ValueError, KeyError) as exc:
            raise ApiError("invalid_input", str(exc)) from exc


class CompareBody(StrictModel):
    plans: list[PlanBody]


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ScenarioStore:
    """Disk-backed store of networks and scenarios, reloaded on boot."""

    def __init__(self, root: str):
        self.root = root
        os.makedirs(os.path.join(root, "networks"), exist_ok=True)
        os.makedirs(os.path.join(root, "scenarios"), exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()
        self._layout_cache: dict[tuple, dict] = {}

    def lock_for(self, scenario_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(scenario_id, threading.Lock())

    # networks ---------------------------------------------------------
    def network_path(self, network_id: str) -> str:
        return os.path.join(self.root, "networks", f"{network_id}.json")

    def save_network(self, network_id: str, net: FinancialNetwork) -> None:
        from .network import dumps_network

        _atomic_write(self.network_path(network_id), dumps_network(net))

    def load_network(self, network_id: str) -> FinancialNetwork:
        path = self.network_path(network_id)
        if not os.path.exists(path):
            raise ApiError("not_found", f"network {network_id!r} not found")
        with open(path, encoding="utf-8") as fh:
            return loads_network(fh.read())

    def list_networks(self) -> list[str]:
        files = os.listdir(os.path.join(self.root, "networks"))
        return sorted(f[:-5] for f in files if f.endswith(".json"))

    # scenarios --------------------------------------------------------
    def scenario_path(self, scenario_id: str) -> str:
        return os.path.join(self.root, "scenarios", f"{scenario_id}.json")

    def save_scenario(self, sc: Scenario) -> None:
        _atomic_write(self.scenario_path(sc.id), dumps_scenario(sc))

    def load_scenario(self, scenario_id: str) -> Scenario:
        path = self.scenario_path(scenario_id)
        if not os.path.exists(path):
            raise ApiError("not_found", f"scenario {scenario_id!r} not found")
        with open(path, encoding="utf-8") as fh:
            return loads_scenario(fh.read())

    def list_scenarios(self) -> list[str]:
        files = os.listdir(os.path.join(self.root, "scenarios"))
        return sorted(f[:-5] for f in files if f.endswith(".json"))

    def layout_cached(self, key: tuple, compute) -> dict:
        if key not in self._layout_cache:
            self._layout_cache[key] = compute()
        return self._layout_cache[key]


# ---------------------------------------------------------------------------
# App factory
# ---------------------------------------------------------------------------

def _network_summary(net: FinancialNetwork) -> dict:
    return {
        "n": net.n,
        "edges": int((net.exposures > 0).sum()),
        "total_exposure": float(net.exposures.sum()),
        "total_buffer": float(net.buffers().sum()),
        "stage": net.stage_tag,
    }


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def create_app(store_dir: str, deterministic_ids: bool = False) -> FastAPI:
    """Build the API; ``deterministic_ids`` switches uuid4 to counters for tests."""
    app = FastAPI(title="interbank", version="1")
    store = ScenarioStore(store_dir)
    counter = {"net": 0, "sc": 0}

    def new_id(kind: str) -> str:
        if deterministic_ids:
            counter[kind] += 1
            return f"{kind}-{counter[kind]:04d}"
        return f"{kind}-{uuid.uuid4().hex[:12]}"

    @app.exception_handler(ApiError)
    async def _api_error(_req: Request, exc: ApiError):
        return exc.response()

    @app.exception_handler(RequestValidationError)
    async def _validation_error(_req: Request, exc: RequestValidationError):
        return ApiError("invalid_input", "invalid request body", detail=exc.errors()).response()

    # -- networks ------------------------------------------------------
    @app.post("/v1/networks")
    def post_network(body: NetworkBody):
        if (body.generate is None) == (body.upload is None):
            raise ApiError("invalid_input", "provide exactly one of generate|upload")
        if body.generate is not None:
            g = body.generate
            config = GeneratorConfig(
                method=g.method,
                seed=g.seed,
                sampler=g.sampler,
                sampler_params=g.sampler_params,
                external_ratio=g.external_ratio,
                capital_ratio=g.capital_ratio,
            )
            try:
                net = generate_network(g.n, config)
            except InfeasibleMarginals as exc:
                raise ApiError("infeasible", str(exc)) from exc
            except ValueError as exc:
                raise ApiError("invalid_input", str(exc)) from exc
        else:
            try:
                net = network_from_document(body.upload)
            except (KeyError, ValueError) as exc:
                raise ApiError("invalid_input", f"bad network document: {exc}") from exc
        network_id = new_id("net")
        store.save_network(network_id, net)
        return {"network_id": network_id, "summary": _network_summary(net)}

    @app.get("/v1/networks")
    def list_networks():
        return {"networks": store.list_networks()}

    @app.get("/v1/networks/{network_id}")
    def get_network(network_id: str):
        net = store.load_network(network_id)
        return {"network_id": network_id, "summary": _network_summary(net),
                "document": network_to_document(net)}

    # -- shocks --------------------------------------------------------
    @app.post("/v1/networks/{network_id}/shocks")
    def post_shock(network_id: str, body: ShockBody):
        net = store.load_network(network_id)
        spec = body.to_spec()
        try:
            spec.target_indices(net)
        except KeyError as exc:
            raise ApiError("invalid_input", str(exc)) from exc
        scenario_id = new_id("sc")
        sc = _shock_scenario(net, spec, scenario_id)
        store.save_scenario(sc)
        result = sc.results["FN_s"]
        return {
            "scenario_id": scenario_id,
            "network_id": network_id,
            "fn_s_summary": _network_summary(sc.networks["FN_s"]),
            "result": {
                "rounds": result.rounds,
                "converged": result.converged,
                "final_stress": [float(v) for v in result.final_stress],
                "losses": [float(v) for v in result.losses],
                "defaulted": [bool(v) for v in result.defaulted],
                "additional_defaults": [int(v) for v in result.additional_defaults],
            },
            "system_risk": systemic_indicators(net, result).as_dict(),
        }

    # -- scenarios -----------------------------------------------------
    @app.get("/v1/scenarios")
    def list_scenarios():
        return {"scenarios": store.list_scenarios()}

    @app.get("/v1/scenarios/{scenario_id}")
    def get_scenario(scenario_id: str):
        sc = store.load_scenario(scenario_id)
        return scenario_to_document(sc)

    @app.get("/v1/scenarios/{scenario_id}/metrics")
    def get_metrics(scenario_id: str, stage: str = "FN_s", format: str = "json"):
        sc = store.load_scenario(scenario_id)
        matrix = _stage_matrix(sc, stage)
        if format == "csv":
            return Response(content=risk_matrix_to_csv(matrix), media_type="text/csv")
        return {
            "stage": stage,
            "ids": list(matrix.ids),
            "columns": list(matrix.columns),
            "raw": [[float(v) for v in row] for row in matrix.raw],
            "normalized": [[float(v) for v in row] for row in matrix.normalized],
        }

    @app.get("/v1/scenarios/{scenario_id}/layout")
    def get_layout(scenario_id: str, stage: str = "FN_s", seed: int = 0,
                   iterations: int = 1000, perplexity: float = 15.0,
                   learning_rate: float = 100.0):
        sc = store.load_scenario(scenario_id)
        config = LayoutConfig(seed=seed, iterations=iterations, perplexity=perplexity,
                              learning_rate=learning_rate)
        key_src = json.dumps(config.as_dict(), sort_keys=True)
        key = (scenario_id, stage, hashlib.sha256(key_src.encode()).hexdigest())

        def compute() -> dict:
            net, matrix = _stage_net_and_matrix(sc, stage)
            events: list[dict] = []
            layout = compute_layout(
                net, matrix, config,
                progress=lambda it, kl: events.append(
                    {"event": "layout_progress", "data": {"iteration": it, "kl": kl}}
                ),
            )
            with store.lock_for(scenario_id):
                fresh = store.load_scenario(scenario_id)
                fresh.events.extend(events)
                fresh.record_event("layout_done", {"stage": stage})
                store.save_scenario(fresh)
            return layout_to_document(layout)

        return store.layout_cached(key, compute)

    @app.post("/v1/scenarios/{scenario_id}/interventions")
    def post_intervention(scenario_id: str, body: PlanBody):
        with store.lock_for(scenario_id):
            sc = store.load_scenario(scenario_id)
            if "FN_s" not in sc.networks or sc.shock_spec is None:
                raise ApiError("invalid_input", "scenario has no shock leg to intervene on")
            if sc.intervention_plan is not None and not body.overwrite:
                raise ApiError(
                    "conflict",
                    "an intervention plan is already applied; set overwrite to replace it",
                )
            plan = body.to_plan()
            try:
                updated = run_scenario(
                    sc.networks["FN_o"], sc.shock_spec, plan,
                    scenario_id=scenario_id, created_at=sc.created_at,
                )
            except KeyError as exc:
                raise ApiError("invalid_input", str(exc)) from exc
            updated.events = sc.events
            updated.record_event("intervention", {"label": plan.label})
            store.save_scenario(updated)
        from .intervention import assessment_to_doc

        return {
            "scenario_id": scenario_id,
            "fn_i_summary": _network_summary(updated.networks["FN_i"]),
            "fn_is_summary": _network_summary(updated.networks["FN_is"]),
            "assessment": assessment_to_doc(updated.assessment),
        }

    @app.post("/v1/scenarios/{scenario_id}/compare")
    def post_compare(scenario_id: str, body: CompareBody):
        sc = store.load_scenario(scenario_id)
        if "FN_s" not in sc.networks or sc.shock_spec is None:
            raise ApiError("invalid_input", "scenario has no shock leg to compare against")
        if not body.plans:
            raise ApiError("invalid_input", "need at least one plan")
        plans = [p.to_plan() for p in body.plans]
        try:
            assessments = compare_strategies(sc.networks["FN_o"], sc.shock_spec, plans)
        except KeyError as exc:
            raise ApiError("invalid_input", str(exc)) from exc
        from .intervention import assessment_to_doc

        return {
            "scenario_id": scenario_id,
            "ranked": [assessment_to_doc(a) for a in assessments],
            "relief_table_csv": relief_table_csv(assessments),
        }

    @app.get("/v1/scenarios/{scenario_id}/events")
    def get_events(scenario_id: str):
        sc = store.load_scenario(scenario_id)

        def stream():
            for item in sc.events:
                yield f"event: {item['event']}\ndata: {json.dumps(item['data'])}\n\n"
            yield "event: end\ndata: {}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/v1/scenarios/{scenario_id}/result.csv")
    def get_result_csv(scenario_id: str, stage: str = "FN_s"):
        sc = store.load_scenario(scenario_id)
        if stage not in sc.results:
            raise ApiError("not_found", f"scenario has no propagation result for {stage!r}")
        base = sc.networks["FN_o" if stage == "FN_s" else "FN_i"]
        return Response(content=result_to_csv(base, sc.results[stage]), media_type="text/csv")

    ui_dir = os.environ.get("INTERBANK_UI_DIR", "")
    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    app.state.store = store
    return app


def _shock_scenario(net: FinancialNetwork, spec: ShockSpec, scenario_id: str) -> Scenario:
    from .contagion import run_shock

    result, settled = run_shock(net, spec, stage_tag="FN_s")
    sc = Scenario(
        id=scenario_id,
        networks={"FN_o": net.with_stage("FN_o"), "FN_s": settled},
        shock_spec=spec,
        results={"FN_s": result},
        created_at=_now(),
    )
    sc.record_event("shock", {"spec": shock_spec_to_doc(spec)})
    return sc


def _stage_net_and_matrix(sc: Scenario, stage: str):
    """Display network for the stage plus its leg's risk matrix.

    Outcome indicators are always measured against the leg's pre-shock
    snapshot (FN_o for the first leg, FN_i for the re-shock leg).
    """
    if stage not in sc.networks:
        raise ApiError("not_found", f"scenario has no stage {stage!r}")
    if stage in ("FN_o", "FN_s"):
        base = sc.networks["FN_o"]
        result = sc.results.get("FN_s") if stage == "FN_s" else None
    else:
        base = sc.networks["FN_i"]
        result = sc.results.get("FN_is") if stage == "FN_is" else None
    matrix = risk_matrix(base, result)
    return sc.networks[stage], matrix


def _stage_matrix(sc: Scenario, stage: str):
    _, matrix = _stage_net_and_matrix(sc, stage)
    return matrix


def serve(store_dir: str, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(create_app(store_dir), host=host, port=port)
