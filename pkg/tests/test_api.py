import pytest
from fastapi.testclient import TestClient

from netmisfit.api import create_app


@pytest.fixture
def client(tmp_path):
    return TestClient(create_app(f"sqlite:///{tmp_path / 'api.db'}"))


def test_erg_test_endpoint(client):
    body = {"model": "erg", "n": 4, "edges": [[2, 1], [3, 1], [4, 2], [4, 3]], "mode": "paper"}
    resp = client.post("/tests", json=body)
    assert resp.status_code == 200
    report = resp.json()
    assert report["model"] == "ERG"
    assert report["fit"]["density"] == pytest.approx(2.0 / 3.0)
    assert report["test"]["mode"] == "PaperLiteral"
    assert report["command"]["command"] == "test"


def test_sbm_test_endpoint(client):
    edges = [[2, 1], [5, 4], [6, 5], [4, 1], [5, 2], [6, 3]]
    body = {"model": "sbm", "n": 6, "edges": edges, "labels": [1, 1, 1, 2, 2, 2]}
    resp = client.post("/tests", json=body)
    assert resp.status_code == 200
    assert resp.json()["fit"]["theta_hat"] == [0.5, 0.5]


def test_errors_are_400(client):
    resp = client.post("/tests", json={"model": "sbm", "n": 3, "edges": [[2, 1]]})
    assert resp.status_code == 400
    assert resp.json()["detail"]["reason"] == "usage"
    resp = client.post("/tests", json={"model": "erg", "n": 3, "edges": [[2, 2]]})
    assert resp.json()["detail"]["reason"] == "self_loop"
    resp = client.post("/tests", json={"model": "erg", "n": 3})
    assert resp.json()["detail"]["reason"] == "degenerate_estimate"


def test_validation_is_422(client):
    assert client.post("/tests", json={"model": "erg", "n": 3, "alpha": 2.0}).status_code == 422


def test_sample_endpoint(client):
    body = {"model": "sbm", "n": 20, "m": 2, "seed": 7}
    first = client.post("/samples", json=body).json()
    assert first == client.post("/samples", json=body).json()
    assert len(first["labels"]) == 20
    assert first["summary"]["edges"] == len(first["edges"])
    bad = client.post("/samples", json={"model": "erg", "scenario": "perturbed", "n": 55})
    assert bad.status_code == 400
    assert bad.json()["detail"]["reason"] == "indivisible_n"


def test_simulation_lifecycle(client):
    spec = {"model": "ERG", "n": 30, "replications": 4, "master_seed": 3, "options": {"erg_mode": "PaperLiteral"}}
    resp = client.post("/simulations", json=spec, params={"keep_records": True})
    assert resp.status_code == 200
    created = resp.json()
    run_id = created["id"]
    assert len(created["records"]) == 4
    assert sum(created["counts"].values()) == 4

    listed = client.get("/simulations").json()
    assert [r["id"] for r in listed] == [run_id]

    detail = client.get(f"/simulations/{run_id}").json()
    assert detail["spec"]["n"] == 30
    assert detail["summary"]["counts"] == created["counts"]

    audit = client.get(f"/simulations/{run_id}/audit").json()
    assert [e["event_type"] for e in audit] == ["CREATED", "COMPLETED"]

    metrics = client.get("/metrics").json()
    assert metrics["counters"]["replications_total"] == 4


def test_simulation_spec_validation(client):
    resp = client.post("/simulations", json={"model": "SBM", "n": 30, "replications": 2})
    assert resp.status_code == 422


def test_unknown_simulation_is_404(client):
    assert client.get("/simulations/nope").status_code == 404
    assert client.get("/simulations/nope/audit").status_code == 404
