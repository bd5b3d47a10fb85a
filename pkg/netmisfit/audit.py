"""Append-only audit trail and persistence for Monte Carlo runs."""
import uuid

from .models import AuditEvent, SimulationRun, utcnow
from .reports import serialize_for_json


def log_event(session, run_id, event_type, payload):
    event = AuditEvent(
        run_id=run_id,
        event_type=event_type,
        timestamp=utcnow(),
        payload=serialize_for_json(payload, {}),
    )
    session.add(event)
    session.commit()
    return event


def get_audit_timeline(session, run_id):
    events = (
        session.query(AuditEvent)
        .filter(AuditEvent.run_id == run_id)
        .order_by(AuditEvent.timestamp.asc(), AuditEvent.id.asc())
        .all()
    )
    return [
        {
            "timestamp": e.timestamp.isoformat() + "Z",
            "event_type": e.event_type,
            "payload": e.payload,
        }
        for e in events
    ]


def save_run(session, summary) -> str:
    """Store an McSummary; records CREATED then COMPLETED events."""
    run_id = str(uuid.uuid4())
    spec = summary.spec.model_dump(mode="json")
    log_event(session, run_id, "CREATED", {"spec": spec})
    run = SimulationRun(
        id=run_id,
        model=summary.spec.model.value,
        scenario=summary.spec.scenario.value,
        n=summary.spec.n,
        m=summary.spec.m,
        replications=summary.spec.replications,
        master_seed=summary.spec.master_seed,
        proportion_well_specified=summary.proportion_well_specified,
        spec=spec,
        summary=serialize_for_json(summary.as_dict(), {}),
    )
    session.add(run)
    session.commit()
    log_event(session, run_id, "COMPLETED", {"counts": summary.counts, "wall_time": summary.wall_time})
    return run_id


def run_as_dict(run: SimulationRun) -> dict:
    return {
        "id": run.id,
        "created_at": run.created_at.isoformat() + "Z",
        "model": run.model,
        "scenario": run.scenario,
        "n": run.n,
        "m": run.m,
        "replications": run.replications,
        "master_seed": run.master_seed,
        "proportion_well_specified": run.proportion_well_specified,
    }
