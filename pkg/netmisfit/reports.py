"""JSON report schema shared by the cli and the service."""
from __future__ import annotations

import datetime as dt
import math
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np
from pydantic import BaseModel, Field

from . import __version__
from .config import SCHEMA_VERSION

NON_FINITE = "non_finite"
DEGENERATE = "degenerate"
NOT_APPLICABLE = "not_applicable"


def serialize_for_json(obj, reasons: Dict[str, str], path: str = "", null_reason: str = NOT_APPLICABLE):
    """Plain-JSON copy of ``obj``. Every null written is explained in
    ``reasons`` under its dotted path."""
    if isinstance(obj, dict):
        return {
            str(k): serialize_for_json(v, reasons, f"{path}.{k}" if path else str(k), null_reason)
            for k, v in obj.items()
        }
    if isinstance(obj, (list, tuple)):
        return [serialize_for_json(v, reasons, f"{path}[{i}]", null_reason) for i, v in enumerate(obj)]
    if isinstance(obj, np.ndarray):
        return serialize_for_json(obj.tolist(), reasons, path, null_reason)
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dt.datetime):
        return obj.isoformat()
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            reasons[path] = NON_FINITE
            return None
        return value
    if obj is None:
        reasons.setdefault(path, null_reason)
    return obj


class Provenance(BaseModel):
    seed: Optional[int] = None
    version: str = __version__
    timestamp: str = Field(default_factory=lambda: dt.datetime.now(dt.timezone.utc).isoformat())


class JsonReport(BaseModel):
    schema_version: str = SCHEMA_VERSION
    command: Dict[str, Any]
    model: str
    fit: Optional[Dict[str, Any]] = None
    test: Optional[Dict[str, Any]] = None
    summary: Optional[Dict[str, Any]] = None
    error: Optional[Dict[str, Any]] = None
    provenance: Provenance = Field(default_factory=Provenance)
    null_reasons: Dict[str, str] = Field(default_factory=dict)

    @classmethod
    def build(
        cls,
        command: Dict[str, Any],
        model: str,
        fit: Optional[dict] = None,
        test: Optional[dict] = None,
        summary: Optional[dict] = None,
        error: Optional[dict] = None,
        seed: Optional[int] = None,
    ) -> "JsonReport":
        reasons: Dict[str, str] = {}
        test_reason = DEGENERATE if test and test.get("decision") == "Degenerate" else NOT_APPLICABLE
        return cls(
            command=serialize_for_json(command, {}, "command"),
            model=model,
            fit=None if fit is None else serialize_for_json(fit, reasons, "fit"),
            test=None if test is None else serialize_for_json(test, reasons, "test", test_reason),
            summary=None if summary is None else serialize_for_json(summary, reasons, "summary"),
            error=None if error is None else serialize_for_json(error, {}, "error"),
            provenance=Provenance(seed=seed),
            null_reasons=reasons,
        )

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)
