"""Test and sampling pipelines shared by the command line and the service.

Option strings follow the command-line vocabulary (general/paper/reduced,
pairs/paper/vertices) and are resolved here per model.
"""
from __future__ import annotations

import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .config import DEFAULT_ALPHA, VEM_RESTARTS
from .ergm import ErgMode, ErgSizeFactor, erg_test
from .errors import InvalidArgument, InvalidLabel, UsageError
from .graph import Graph, graph_summary
from .outcomes import Decision
from .reports import JsonReport
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

MODELS = ("erg", "sbm")
SCENARIOS = ("null", "perturbed")

_ERG_MODES = {"general": ErgMode.GENERAL, "paper": ErgMode.PAPER_LITERAL}
_SBM_MODES = {"paper": SbmMode.PAPER, "reduced": SbmMode.REDUCED}
_ERG_FACTORS = {"pairs": ErgSizeFactor.PAIR_COUNT, "paper": ErgSizeFactor.NONE}
_SBM_FACTORS = {"pairs": SbmSizeFactor.PAIR_COUNT, "paper": SbmSizeFactor.VERTEX_COUNT, "vertices": SbmSizeFactor.VERTEX_COUNT}


def _lookup(table: dict, value: Optional[str], default, model: str, flag: str):
    if value is None:
        return default
    try:
        return table[value]
    except KeyError:
        raise UsageError(f"--{flag} {value} is not available for the {model} model; choose from {sorted(table)}")


def resolve_mode(model: str, mode: Optional[str]):
    if model == "erg":
        return _lookup(_ERG_MODES, mode, ErgMode.GENERAL, model, "mode")
    return _lookup(_SBM_MODES, mode, SbmMode.REDUCED, model, "mode")


def resolve_size_factor(model: str, size_factor: Optional[str]):
    if model == "erg":
        return _lookup(_ERG_FACTORS, size_factor, ErgSizeFactor.PAIR_COUNT, model, "size-factor")
    return _lookup(_SBM_FACTORS, size_factor, SbmSizeFactor.PAIR_COUNT, model, "size-factor")


def _check_model(model: str) -> None:
    if model not in MODELS:
        raise UsageError(f"unknown model {model!r}; choose from {MODELS}")


def run_test(
    g: Graph,
    model: str,
    mode: Optional[str] = None,
    size_factor: Optional[str] = None,
    alpha: float = DEFAULT_ALPHA,
    clamp: Optional[float] = None,
    blocks: Optional[int] = None,
    restarts: int = VEM_RESTARTS,
    seed: int = 0,
    drop_isolated: bool = False,
    command: Optional[Dict[str, Any]] = None,
) -> Tuple[JsonReport, Decision]:
    _check_model(model)
    resolved_mode = resolve_mode(model, mode)
    resolved_factor = resolve_size_factor(model, size_factor)
    echo = dict(command or {})

    if model == "erg":
        report = erg_test(g, alpha=alpha, mode=resolved_mode, size_factor=resolved_factor)
        fit = {
            "method": "MaximumLikelihood",
            "theta_hat": report.diagnostics.theta_hat,
            "density": report.diagnostics.density,
        }
        json_report = JsonReport.build(echo, "ERG", fit=fit, test=report.as_dict(), seed=seed)
        return json_report, report.decision

    if g.labels is None and blocks is None:
        raise UsageError("the sbm model needs --labels or --blocks")
    if g.labels is not None and blocks is not None and int(g.labels.max()) > blocks:
        raise InvalidLabel(f"labels use {int(g.labels.max())} blocks but --blocks is {blocks}")
    fit_method = FitMethod.OBSERVED if g.labels is not None else FitMethod.VEM
    report = sbm_test(
        g,
        fit_method=fit_method,
        alpha=alpha,
        mode=resolved_mode,
        size_factor=resolved_factor,
        clamp=clamp,
        isolated=IsolatedPolicy.DROP if drop_isolated else IsolatedPolicy.ERROR,
        blocks=blocks,
        restarts=restarts,
        seed=Seed(seed),
    )
    fit = report.fit.as_dict()
    fit["labels_used"] = report.fit.labels_used.tolist()
    json_report = JsonReport.build(echo, "SBM", fit=fit, test=report.as_dict(), seed=seed)
    return json_report, report.decision


def draw_sample(
    model: str,
    scenario: str,
    n: int,
    seed: int,
    m: Optional[int] = None,
    alpha: Optional[float] = None,
    eta=None,
    variant: MultiplierRule = MultiplierRule.LOWER,
) -> Graph:
    """Draw one graph; unspecified parameters are drawn from the seed's stream
    the same way the Monte Carlo engine draws them."""
    _check_model(model)
    if scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {scenario!r}; choose from {SCENARIOS}")
    rng = Seed(seed).generator()
    perturbed = scenario == "perturbed"

    if model == "erg":
        p = rng.uniform() if alpha is None else alpha
        if perturbed:
            return sample_erg_scenario2(n, p, rng, rule=variant)
        return sample_er(n, p, rng)

    if eta is None:
        if m is None:
            raise UsageError("the sbm sampler needs --m or --eta-file")
        eta = random_symmetric_eta(m, rng)
    eta = np.asarray(eta, dtype=float)
    if m is not None and eta.shape != (m, m):
        raise InvalidArgument(f"eta has shape {eta.shape}, expected ({m}, {m})")
    params = SbmParams.uniform(eta)
    if perturbed:
        return sample_sbm_scenario2(n, params, rng, rule=variant)
    return sample_sbm(n, params, rng)


def sample_payload(g: Graph) -> Dict[str, Any]:
    return {
        "summary": graph_summary(g),
        "edges": [list(e) for e in g.edges()],
        "labels": None if g.labels is None else g.labels.tolist(),
        "meta": dict(g.meta),
    }
