"""Monte Carlo replication of the null and perturbed scenarios.

Replication r draws all of its randomness from stream r of the master seed,
so a summary depends only on the spec, never on the worker count.
"""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import repeat
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .config import DEFAULT_ALPHA, DEFAULT_SEED, SCENARIO2_GROUPS, VEM_RESTARTS
from .ergm import ErgMode, ErgSizeFactor, erg_test
from .errors import InvalidArgument, MismatchedSpecs, NetMisfitError
from .metrics import metrics
from .outcomes import Decision
from .samplers import (
    MultiplierRule,
    SbmParams,
    Seed,
    random_symmetric_eta,
    sample_er,
    sample_erg_scenario2,
    sample_sbm,
    sample_sbm_scenario2,
)
from .sbm import FitMethod, IsolatedPolicy, SbmMode, SbmSizeFactor, sbm_test

logger = logging.getLogger(__name__)

ESTIMATION_FAILED = "EstimationFailed"
OUTCOMES = (Decision.WELL_SPECIFIED.value, Decision.MISSPECIFIED.value, Decision.DEGENERATE.value, ESTIMATION_FAILED)
DENOMINATOR = "replications - EstimationFailed"
CSV_COLUMNS = ["model", "scenario", "reps", "n", "m", "proportion_well_specified", "n_degenerate", "n_failed"]


class ModelKind(str, Enum):
    ERG = "ERG"
    SBM = "SBM"


class ScenarioKind(str, Enum):
    NULL = "Null"
    PERTURBED = "Perturbed"


class TestOptions(BaseModel):
    model_config = ConfigDict(frozen=True)
    __test__ = False  # keep pytest from collecting this as a test class

    erg_mode: ErgMode = ErgMode.GENERAL
    erg_size_factor: ErgSizeFactor = ErgSizeFactor.PAIR_COUNT
    sbm_mode: SbmMode = SbmMode.REDUCED
    sbm_size_factor: SbmSizeFactor = SbmSizeFactor.PAIR_COUNT
    clamp: Optional[float] = Field(default=None, gt=0.0, lt=0.5)
    fit: FitMethod = FitMethod.OBSERVED
    restarts: int = Field(default=VEM_RESTARTS, ge=1)
    isolated: IsolatedPolicy = IsolatedPolicy.ERROR


class ScenarioSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    model: ModelKind
    scenario: ScenarioKind = ScenarioKind.NULL
    n: int = Field(ge=2)
    m: Optional[int] = Field(default=None, ge=1)
    replications: int = Field(ge=1)
    alpha: float = Field(default=DEFAULT_ALPHA, gt=0.0, lt=1.0)
    options: TestOptions = Field(default_factory=TestOptions)
    master_seed: int = Field(default_factory=lambda: DEFAULT_SEED, ge=0)
    variant: MultiplierRule = MultiplierRule.LOWER

    @model_validator(mode="after")
    def _check_shape(self):
        if self.scenario is ScenarioKind.PERTURBED and self.n % SCENARIO2_GROUPS:
            raise ValueError(f"n={self.n} must be divisible by {SCENARIO2_GROUPS} for the perturbed scenario")
        if self.model is ModelKind.SBM:
            if self.m is None:
                raise ValueError("SBM scenarios need a block count m")
            if self.m > self.n:
                raise ValueError(f"m={self.m} exceeds n={self.n}")
        elif self.m is not None:
            raise ValueError("ERG scenarios take no block count")
        return self

    @property
    def mode(self) -> str:
        opts = self.options
        return (opts.erg_mode if self.model is ModelKind.ERG else opts.sbm_mode).value


@dataclass
class McSummary:
    spec: ScenarioSpec
    counts: Dict[str, int]
    wall_time: float = 0.0
    records: Optional[List[Dict[str, Any]]] = None
    failure_reasons: Dict[str, int] = field(default_factory=dict)

    @property
    def n_failed(self) -> int:
        return self.counts.get(ESTIMATION_FAILED, 0)

    @property
    def denominator(self) -> int:
        return self.spec.replications - self.n_failed

    @property
    def proportion_well_specified(self) -> Optional[float]:
        if self.denominator == 0:
            return None
        return self.counts.get(Decision.WELL_SPECIFIED.value, 0) / self.denominator

    @property
    def rejection_rate(self) -> Optional[float]:
        if self.denominator == 0:
            return None
        return self.counts.get(Decision.MISSPECIFIED.value, 0) / self.denominator

    def csv_row(self) -> Dict[str, str]:
        spec = self.spec
        proportion = self.proportion_well_specified
        return {
            "model": spec.model.value,
            "scenario": spec.scenario.value,
            "reps": str(spec.replications),
            "n": str(spec.n),
            "m": "" if spec.m is None else str(spec.m),
            "proportion_well_specified": "" if proportion is None else f"{proportion:.6f}",
            "n_degenerate": str(self.counts.get(Decision.DEGENERATE.value, 0)),
            "n_failed": str(self.n_failed),
        }

    def as_dict(self) -> dict:
        out = {
            "spec": self.spec.model_dump(mode="json"),
            "counts": dict(self.counts),
            "proportion_well_specified": self.proportion_well_specified,
            "denominator": DENOMINATOR,
            "failure_reasons": dict(self.failure_reasons),
            "wall_time": self.wall_time,
        }
        if self.records is not None:
            out["records"] = list(self.records)
        return out


@dataclass
class DirectionalReport:
    model: str
    n: int
    m: Optional[int]
    null_rejection_rate: float
    perturbed_rejection_rate: float
    difference: float
    z: float
    flagged: bool

    def as_dict(self) -> dict:
        return dict(vars(self))


def _draw_graph(spec: ScenarioSpec, rng):
    perturbed = spec.scenario is ScenarioKind.PERTURBED
    if spec.model is ModelKind.ERG:
        alpha = rng.uniform()
        if perturbed:
            return sample_erg_scenario2(spec.n, alpha, rng, rule=spec.variant)
        return sample_er(spec.n, alpha, rng)
    params = SbmParams.uniform(random_symmetric_eta(spec.m, rng))
    if perturbed:
        return sample_sbm_scenario2(spec.n, params, rng, rule=spec.variant)
    return sample_sbm(spec.n, params, rng)


def replicate(spec: ScenarioSpec, index: int) -> Dict[str, Any]:
    """One draw, fit and test; estimation problems become a record, not an error."""
    rng = Seed(spec.master_seed, index).generator()
    opts = spec.options
    try:
        g = _draw_graph(spec, rng)
        if spec.model is ModelKind.ERG:
            report = erg_test(g, spec.alpha, opts.erg_mode, opts.erg_size_factor)
        else:
            report = sbm_test(
                g,
                fit_method=opts.fit,
                alpha=spec.alpha,
                mode=opts.sbm_mode,
                size_factor=opts.sbm_size_factor,
                clamp=opts.clamp,
                isolated=opts.isolated,
                blocks=spec.m,
                restarts=opts.restarts,
                seed=rng,
            )
    except NetMisfitError as exc:
        logger.debug("replication %d failed: %s (%s)", index, exc.reason, exc)
        return {"index": index, "decision": ESTIMATION_FAILED, "reason": exc.reason,
                "statistic": None, "p_value": None, "df": None}
    return {
        "index": index,
        "decision": report.decision.value,
        "reason": None,
        "statistic": report.statistic,
        "p_value": report.p_value,
        "df": report.df,
    }


def _tally(records: Iterable[Dict[str, Any]]):
    counts = Counter({outcome: 0 for outcome in OUTCOMES})
    reasons: Counter = Counter()
    for record in records:
        counts[record["decision"]] += 1
        if record["reason"]:
            reasons[record["reason"]] += 1
    return dict(counts), dict(sorted(reasons.items()))


def run_scenario(spec: ScenarioSpec, workers: int = 1, keep_records: bool = False) -> McSummary:
    if workers < 1:
        raise InvalidArgument(f"workers must be >= 1, got {workers}")
    start = time.perf_counter()
    indices = range(spec.replications)
    if workers == 1:
        records = [replicate(spec, r) for r in indices]
    else:
        chunk = max(1, spec.replications // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(replicate, repeat(spec), indices, chunksize=chunk))
        # Worker processes keep their own metrics; replay their decisions here.
        model = spec.model.value.lower()
        for record in records:
            if record["decision"] != ESTIMATION_FAILED:
                metrics.record_test(model, record["decision"])

    counts, reasons = _tally(records)
    for reason, count in reasons.items():
        metrics.record_failure(reason, count)
    metrics.record_replications(spec.replications)

    summary = McSummary(
        spec=spec,
        counts=counts,
        wall_time=time.perf_counter() - start,
        records=records if keep_records else None,
        failure_reasons=reasons,
    )
    logger.info(
        "%s %s n=%d m=%s reps=%d: proportion well-specified=%s counts=%s (%.2fs)",
        spec.model.value, spec.scenario.value, spec.n, spec.m, spec.replications,
        summary.proportion_well_specified, counts, summary.wall_time,
    )
    return summary


def compare_scenarios(null_summary: McSummary, perturbed_summary: McSummary) -> DirectionalReport:
    a, b = null_summary.spec, perturbed_summary.spec
    for name in ("model", "n", "m", "replications", "alpha", "options"):
        if getattr(a, name) != getattr(b, name):
            raise MismatchedSpecs(f"summaries differ in {name}", field=name)
    n1, n2 = null_summary.denominator, perturbed_summary.denominator
    if n1 == 0 or n2 == 0:
        raise InvalidArgument("a summary has no usable replications")

    x1 = null_summary.counts.get(Decision.MISSPECIFIED.value, 0)
    x2 = perturbed_summary.counts.get(Decision.MISSPECIFIED.value, 0)
    p1, p2 = x1 / n1, x2 / n2
    pooled = (x1 + x2) / (n1 + n2)
    se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2))
    difference = p2 - p1
    return DirectionalReport(
        model=a.model.value,
        n=a.n,
        m=a.m,
        null_rejection_rate=p1,
        perturbed_rejection_rate=p2,
        difference=difference,
        z=difference / se if se > 0 else 0.0,
        flagged=p2 > p1,
    )


def format_csv(summaries: Iterable[McSummary]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for summary in summaries:
        writer.writerow(summary.csv_row())
    return buffer.getvalue()


def write_csv(summaries: Iterable[McSummary], path) -> None:
    Path(path).write_text(format_csv(summaries), encoding="utf-8", newline="")
