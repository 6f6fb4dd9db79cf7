from __future__ import annotations

import numpy as np
import pytest
from fastapi.testclient import TestClient

from interbank.service import create_app

TWO_BANK_DOC = {
    "version": 1,
    "stage": "FN_o",
    "banks": [
        {"id": "b0", "external_assets": 100.0, "capital_buffer": 10.0, "weight": 0.5},
        {"id": "b1", "external_assets": 100.0, "capital_buffer": 100.0, "weight": 0.5},
    ],
    "exposures": [{"from": "b1", "to": "b0", "amount": 50.0}],
}


@pytest.fixture
def client(tmp_path):
    app = create_app(str(tmp_path), deterministic_ids=True)
    with TestClient(app) as c:
        yield c


def upload(client) -> str:
    r = client.post("/v1/networks", json={"upload": TWO_BANK_DOC})
    assert r.status_code == 200
    return r.json()["network_id"]


def shock(client, nid, **kw) -> dict:
    body = {"model": "linear", "targets": ["b0"], "magnitude": 1.0}
    body.update(kw)
    r = client.post(f"/v1/networks/{nid}/shocks", json=body)
    assert r.status_code == 200, r.text
    return r.json()


# -- networks -----------------------------------------------------------------

def test_upload_two_bank_fixture(client):
    r = client.post("/v1/networks", json={"upload": TWO_BANK_DOC})
    assert r.status_code == 200
    summary = r.json()["summary"]
    assert summary["n"] == 2 and summary["edges"] == 1


def test_generate_matches_cli_edge_count(client, tmp_path):
    r = client.post(
        "/v1/networks",
        json={"generate": {"method": "min_density", "n": 30, "seed": 9}},
    )
    assert r.status_code == 200
    api_edges = r.json()["summary"]["edges"]

    from interbank.cli import main

    out = tmp_path / "net.json"
    assert main(["generate", "--method", "min-density", "--n", "30", "--seed", "9",
                 "--out", str(out)]) == 0
    from interbank import load_network

    net = load_network(str(out))
    assert int((net.exposures > 0).sum()) == api_edges


def test_malformed_body_rejected(client):
    r = client.post("/v1/networks", json={"bogus": 1})
    assert r.status_code == 400
    assert r.json()["error"]["code"] == "invalid_input"
    r = client.post("/v1/networks", json={})
    assert r.status_code == 400


def test_both_generate_and_upload_rejected(client):
    r = client.post(
        "/v1/networks",
        json={"upload": TWO_BANK_DOC, "generate": {"n": 5}},
    )
    assert r.status_code == 400


# -- shocks ---------------------------------------------------------------------

def test_shock_two_bank_oracle(client):
    nid = upload(client)
    data = shock(client, nid)
    assert data["result"]["final_stress"] == [1.0, 0.5]
    assert data["system_risk"]["max_stress"] == 1.0


def test_phi_zero_rejected(client):
    nid = upload(client)
    r = client.post(
        f"/v1/networks/{nid}/shocks",
        json={"model": "linear", "targets": ["b0"], "magnitude": 0.0},
    )
    assert r.status_code == 400
    assert r.json()["error"]["code"] == "invalid_input"


def test_unknown_target_rejected(client):
    nid = upload(client)
    r = client.post(
        f"/v1/networks/{nid}/shocks",
        json={"model": "linear", "targets": ["zz"], "magnitude": 1.0},
    )
    assert r.status_code == 400


def test_repost_same_shock_new_scenario_same_numbers(client):
    nid = upload(client)
    a = shock(client, nid)
    b = shock(client, nid)
    assert a["scenario_id"] != b["scenario_id"]
    assert a["result"] == b["result"]
    assert a["system_risk"] == b["system_risk"]


def test_unknown_network_404(client):
    r = client.post("/v1/networks/ghost/shocks", json={"model": "linear", "magnitude": 1.0})
    assert r.status_code == 404
    assert r.json()["error"]["code"] == "not_found"


# -- metrics and layout ----------------------------------------------------------

def test_metrics_row_count(client):
    nid = upload(client)
    sid = shock(client, nid)["scenario_id"]
    r = client.get(f"/v1/scenarios/{sid}/metrics?stage=FN_s")
    assert r.status_code == 200
    body = r.json()
    assert len(body["raw"]) == 2
    assert len(body["columns"]) == len(body["raw"][0])


def test_metrics_missing_scenario_404(client):
    r = client.get("/v1/scenarios/nope/metrics")
    assert r.status_code == 404


def test_layout_cached_identical(client):
    nid = upload(client)
    r = client.post(
        "/v1/networks",
        json={"generate": {"method": "min_density", "n": 12, "seed": 3}},
    )
    gen_id = r.json()["network_id"]
    sid = shock(client, gen_id, targets="all", magnitude=0.3)["scenario_id"]
    q = "stage=FN_s&iterations=120&perplexity=4"
    first = client.get(f"/v1/scenarios/{sid}/layout?{q}").json()
    second = client.get(f"/v1/scenarios/{sid}/layout?{q}").json()
    assert first == second
    assert len(first["positions"]) == 12


def test_layout_changes_after_intervention(client):
    r = client.post(
        "/v1/networks",
        json={"generate": {"method": "min_density", "n": 12, "seed": 3}},
    )
    gen_id = r.json()["network_id"]
    sid = shock(client, gen_id, targets="all", magnitude=0.3)["scenario_id"]
    r = client.post(
        f"/v1/scenarios/{sid}/interventions",
        json={"label": "rm", "operations": [{"kind": "remove_node", "id": "b0"}]},
    )
    assert r.status_code == 200, r.text
    q = "iterations=120&perplexity=4"
    fn_s = client.get(f"/v1/scenarios/{sid}/layout?stage=FN_s&{q}").json()
    fn_is = client.get(f"/v1/scenarios/{sid}/layout?stage=FN_is&{q}").json()
    assert {p["id"] for p in fn_s["positions"]} != {p["id"] for p in fn_is["positions"]}


# -- interventions ----------------------------------------------------------------

def test_empty_plan_zero_relief(client):
    nid = upload(client)
    sid = shock(client, nid)["scenario_id"]
    r = client.post(f"/v1/scenarios/{sid}/interventions", json={"label": "null", "operations": []})
    assert r.status_code == 200
    body = r.json()["assessment"]
    assert body["rescue_cost"] == 0.0
    assert all(v == 0.0 for v in body["relief"].values())


def test_remove_isolated_bank_zero_cost(client):
    doc = dict(TWO_BANK_DOC)
    doc["banks"] = doc["banks"] + [
        {"id": "iso", "external_assets": 1.0, "capital_buffer": 1.0, "weight": 0.0}
    ]
    r = client.post("/v1/networks", json={"upload": doc})
    nid = r.json()["network_id"]
    sid = shock(client, nid)["scenario_id"]
    r = client.post(
        f"/v1/scenarios/{sid}/interventions",
        json={"label": "rm-iso", "operations": [{"kind": "remove_node", "id": "iso"}]},
    )
    assert r.status_code == 200
    assert r.json()["assessment"]["rescue_cost"] == 0.0


def test_intervention_conflict_and_overwrite(client):
    nid = upload(client)
    sid = shock(client, nid)["scenario_id"]
    first = client.post(f"/v1/scenarios/{sid}/interventions", json={"label": "a", "operations": []})
    assert first.status_code == 200
    again = client.post(f"/v1/scenarios/{sid}/interventions", json={"label": "b", "operations": []})
    assert again.status_code == 409
    assert again.json()["error"]["code"] == "conflict"
    forced = client.post(
        f"/v1/scenarios/{sid}/interventions",
        json={"label": "c", "operations": [], "overwrite": True},
    )
    assert forced.status_code == 200


def test_compare_returns_ranked_with_csv(client):
    nid = upload(client)
    sid = shock(client, nid)["scenario_id"]
    r = client.post(
        f"/v1/scenarios/{sid}/compare",
        json={
            "plans": [
                {"label": "S0", "operations": [{"kind": "remove_node", "id": "b0"}]},
                {"label": "null", "operations": []},
            ]
        },
    )
    assert r.status_code == 200
    body = r.json()
    assert [a["label"] for a in body["ranked"]] == ["S0", "null"]
    assert body["relief_table_csv"].splitlines()[0].startswith("strategy,rescue_cost")


# -- persistence and streaming ------------------------------------------------------

def test_store_survives_restart(tmp_path):
    app = create_app(str(tmp_path), deterministic_ids=True)
    with TestClient(app) as client:
        nid = upload(client)
        sid = shock(client, nid)["scenario_id"]
    fresh = create_app(str(tmp_path), deterministic_ids=True)
    with TestClient(fresh) as client:
        r = client.get(f"/v1/scenarios/{sid}")
        assert r.status_code == 200
        assert r.json()["id"] == sid
        r = client.get(f"/v1/networks/{nid}")
        assert r.status_code == 200


def test_events_stream_terminates(client):
    nid = upload(client)
    sid = shock(client, nid)["scenario_id"]
    r = client.get(f"/v1/scenarios/{sid}/events")
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("text/event-stream")
    assert "event: shock" in r.text
    assert r.text.rstrip().endswith("data: {}")


def test_result_csv_endpoint(client):
    nid = upload(client)
    sid = shock(client, nid)["scenario_id"]
    r = client.get(f"/v1/scenarios/{sid}/result.csv")
    assert r.status_code == 200
    assert r.text.splitlines()[0] == "bank_id,h_star,loss,defaulted,additional_defaults"
