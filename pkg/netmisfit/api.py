import logging
from typing import List, Optional, Tuple

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .audit import get_audit_timeline, run_as_dict, save_run
from .config import DB_URL, DEFAULT_ALPHA, DEFAULT_SEED, VEM_RESTARTS
from .errors import NetMisfitError
from .graph import Graph
from .metrics import metrics
from .models import SimulationRun
from .montecarlo import ScenarioSpec, run_scenario
from .pipeline import draw_sample, run_test, sample_payload
from .samplers import MultiplierRule

logger = logging.getLogger(__name__)


class TestRequest(BaseModel):
    __test__ = False

    model: str
    n: int = Field(ge=1)
    edges: List[Tuple[int, int]] = Field(default_factory=list)
    labels: Optional[List[int]] = None
    blocks: Optional[int] = Field(default=None, ge=1)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0.0, lt=1.0)
    mode: Optional[str] = None
    size_factor: Optional[str] = None
    clamp: Optional[float] = None
    restarts: int = Field(default=VEM_RESTARTS, ge=1)
    seed: int = Field(default_factory=lambda: DEFAULT_SEED, ge=0)
    drop_isolated: bool = False


class SampleRequest(BaseModel):
    model: str
    scenario: str = "null"
    n: int = Field(ge=2)
    m: Optional[int] = Field(default=None, ge=1)
    alpha: Optional[float] = None
    eta: Optional[List[List[float]]] = None
    variant: MultiplierRule = MultiplierRule.LOWER
    seed: int = Field(default_factory=lambda: DEFAULT_SEED, ge=0)


def _bad_request(exc: NetMisfitError) -> HTTPException:
    return HTTPException(status_code=400, detail=exc.as_dict())


def create_app(db_url: Optional[str] = None) -> FastAPI:
    from .db import init_db

    session_factory = init_db(db_url or DB_URL)
    app = FastAPI(title="netmisfit")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.post("/tests")
    def create_test(body: TestRequest):
        try:
            g = Graph.from_edges(body.n, body.edges, labels=body.labels)
            report, decision = run_test(
                g,
                body.model,
                mode=body.mode,
                size_factor=body.size_factor,
                alpha=body.alpha,
                clamp=body.clamp,
                blocks=body.blocks,
                restarts=body.restarts,
                seed=body.seed,
                drop_isolated=body.drop_isolated,
                command={"command": "test", **body.model_dump(exclude={"edges", "labels"})},
            )
        except NetMisfitError as exc:
            raise _bad_request(exc)
        return report.model_dump()

    @app.post("/samples")
    def create_sample(body: SampleRequest):
        try:
            g = draw_sample(
                body.model, body.scenario, body.n, body.seed,
                m=body.m, alpha=body.alpha, eta=body.eta, variant=body.variant,
            )
        except NetMisfitError as exc:
            raise _bad_request(exc)
        return sample_payload(g)

    @app.post("/simulations")
    def create_simulation(spec: ScenarioSpec, keep_records: bool = False):
        try:
            summary = run_scenario(spec, workers=1, keep_records=keep_records)
        except NetMisfitError as exc:
            raise _bad_request(exc)
        session = session_factory()
        try:
            run_id = save_run(session, summary)
        finally:
            session.close()
        return {"id": run_id, **summary.as_dict()}

    @app.get("/simulations")
    def list_simulations():
        session = session_factory()
        try:
            runs = session.query(SimulationRun).order_by(SimulationRun.created_at.desc()).all()
            return [run_as_dict(r) for r in runs]
        finally:
            session.close()

    @app.get("/simulations/{run_id}")
    def get_simulation(run_id: str):
        session = session_factory()
        try:
            run = session.query(SimulationRun).filter(SimulationRun.id == run_id).first()
            if not run:
                raise HTTPException(status_code=404, detail="Simulation not found")
            return {**run_as_dict(run), "spec": run.spec, "summary": run.summary}
        finally:
            session.close()

    @app.get("/simulations/{run_id}/audit")
    def get_simulation_audit(run_id: str):
        session = session_factory()
        try:
            if not session.query(SimulationRun).filter(SimulationRun.id == run_id).first():
                raise HTTPException(status_code=404, detail="Simulation not found")
            return get_audit_timeline(session, run_id)
        finally:
            session.close()

    @app.get("/metrics")
    def get_metrics():
        return metrics.snapshot()

    return app
