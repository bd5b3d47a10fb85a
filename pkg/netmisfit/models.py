import datetime as dt

from sqlalchemy import Column, DateTime, Float, Integer, String
from sqlalchemy.types import JSON

from .db import Base


def utcnow():
    return dt.datetime.now(dt.timezone.utc).replace(tzinfo=None)


class SimulationRun(Base):
    __tablename__ = "simulation_runs"

    id = Column(String, primary_key=True, index=True)
    created_at = Column(DateTime, default=utcnow)
    model = Column(String, index=True)
    scenario = Column(String)
    n = Column(Integer)
    m = Column(Integer, nullable=True)
    replications = Column(Integer)
    master_seed = Column(Integer)
    proportion_well_specified = Column(Float, nullable=True)
    spec = Column(JSON)
    summary = Column(JSON)


class AuditEvent(Base):
    __tablename__ = "audit_events"

    id = Column(Integer, primary_key=True, index=True)
    run_id = Column(String, index=True)
    timestamp = Column(DateTime, default=utcnow)
    event_type = Column(String, index=True)
    payload = Column(JSON)
