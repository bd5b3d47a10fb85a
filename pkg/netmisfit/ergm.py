"""One-parameter exponential random graph: estimation and the
information-matrix misspecification test.

With p = e^theta / (1 + e^theta), each pair indicator U_t contributes
log f(U_t; theta) = theta * U_t - log(1 + e^theta).

At the MLE p equals the sample density, and then
    d_1(U) = (1 - 2p)(U - p)        (U binary)
so D_n = 0 exactly and the General-mode residuals vanish pointwise. The test
is therefore reported as Degenerate rather than silently returning 0/0.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy import special

from .config import DEFAULT_ALPHA, ERG_SINGULAR_ATOL, ERG_SINGULAR_RTOL
from .errors import DegenerateEstimate, InvalidArgument
from .graph import Graph, pair_count
from .metrics import metrics, timed
from .numerics import chi2_quantile, chi2_sf
from .outcomes import Decision, decide

logger = logging.getLogger(__name__)


class ErgMode(str, Enum):
    GENERAL = "General"
    PAPER_LITERAL = "PaperLiteral"


class ErgSizeFactor(str, Enum):
    PAIR_COUNT = "PairCount"
    NONE = "PaperLiteralNone"


@dataclass(frozen=True)
class ErgObservations:
    u: np.ndarray
    n: int

    def __post_init__(self):
        u = np.asarray(self.u, dtype=np.float64)
        if u.shape != (pair_count(self.n),):
            raise InvalidArgument(f"expected {pair_count(self.n)} observations, got {u.size}")
        if np.any((u != 0.0) & (u != 1.0)):
            raise InvalidArgument("observations must be binary")
        object.__setattr__(self, "u", u)

    def __len__(self) -> int:
        return int(self.u.size)


@dataclass(frozen=True)
class FittedErg:
    theta_hat: float
    density: float

    @property
    def p(self) -> float:
        return float(special.expit(self.theta_hat))


@dataclass(frozen=True)
class ErgMatrices:
    a_n: float
    b_n: float
    c_n: float
    d_n: float
    grad_d_n: float


@dataclass
class ErgDiagnostics:
    d_n: float
    v_n: float
    a_n: float
    b_n: float
    c_n: float
    grad_d_n: float
    max_residual: float
    mean_d1_squared: float
    tolerance: float
    size_factor: float
    theta_hat: float
    density: float


@dataclass
class ErgTestReport:
    statistic: Optional[float]
    p_value: Optional[float]
    decision: Decision
    mode: ErgMode
    size_factor: ErgSizeFactor
    alpha: float
    critical_value: float
    diagnostics: ErgDiagnostics
    df: int = 1

    def as_dict(self) -> dict:
        out = asdict(self)
        out["decision"] = self.decision.value
        out["mode"] = self.mode.value
        out["size_factor"] = self.size_factor.value
        return out


# Per-observation analytic pieces; all broadcast over arrays.

def erg_log_density(u, theta):
    return theta * np.asarray(u, dtype=float) - np.logaddexp(0.0, theta)


def erg_score(u, theta):
    return np.asarray(u, dtype=float) - special.expit(theta)


def erg_hessian(theta):
    p = special.expit(theta)
    return -p * (1.0 - p)


def erg_d1(u, theta):
    """U^2 - 2Up + p(2p - 1): score squared plus second derivative."""
    u = np.asarray(u, dtype=float)
    p = special.expit(theta)
    return u * u - 2.0 * u * p + p * (2.0 * p - 1.0)


def erg_d1_derivative(u, theta):
    """d/dtheta of d_1: p(1-p)(4p - 1 - 2U)."""
    u = np.asarray(u, dtype=float)
    p = special.expit(theta)
    return p * (1.0 - p) * (4.0 * p - 1.0 - 2.0 * u)


def erg_observations(g: Graph) -> ErgObservations:
    if g.n < 2:
        raise InvalidArgument("need at least 2 vertices")
    return ErgObservations(u=g.pair_bits().astype(np.float64), n=g.n)


def erg_mle(obs: ErgObservations) -> FittedErg:
    density = float(np.mean(obs.u))
    if density <= 0.0 or density >= 1.0:
        raise DegenerateEstimate(
            f"edge density {density} is on the boundary; theta_hat is infinite",
            density=density,
        )
    return FittedErg(theta_hat=float(special.logit(density)), density=density)


def erg_matrices(obs: ErgObservations, fit: FittedErg) -> ErgMatrices:
    return _matrices_at(obs, fit.theta_hat)


def _matrices_at(obs: ErgObservations, theta: float) -> ErgMatrices:
    a_n = float(erg_hessian(theta))
    b_n = float(np.mean(erg_score(obs.u, theta) ** 2))
    return ErgMatrices(
        a_n=a_n,
        b_n=b_n,
        c_n=b_n / (a_n * a_n),
        d_n=float(np.mean(erg_d1(obs.u, theta))),
        grad_d_n=float(np.mean(erg_d1_derivative(obs.u, theta))),
    )


def _residuals(obs: ErgObservations, theta: float, mats: ErgMatrices, mode: ErgMode) -> np.ndarray:
    # General: d_1 - gradD A^-1 score. PaperLiteral puts D_n where gradD belongs.
    mode = ErgMode(mode)
    coefficient = mats.grad_d_n if mode is ErgMode.GENERAL else mats.d_n
    return erg_d1(obs.u, theta) - coefficient / mats.a_n * erg_score(obs.u, theta)


def erg_vn(obs: ErgObservations, fit: FittedErg, mode: ErgMode = ErgMode.GENERAL) -> float:
    mats = erg_matrices(obs, fit)
    return float(np.mean(_residuals(obs, fit.theta_hat, mats, mode) ** 2))


@timed
def erg_test(
    g: Graph,
    alpha: float = DEFAULT_ALPHA,
    mode: ErgMode = ErgMode.GENERAL,
    size_factor: ErgSizeFactor = ErgSizeFactor.PAIR_COUNT,
) -> ErgTestReport:
    if not (0.0 < alpha < 1.0):
        raise InvalidArgument(f"alpha must lie in (0, 1), got {alpha!r}")
    mode = ErgMode(mode)
    size_factor = ErgSizeFactor(size_factor)

    obs = erg_observations(g)
    fit = erg_mle(obs)
    theta = fit.theta_hat
    mats = erg_matrices(obs, fit)
    residuals = _residuals(obs, theta, mats, mode)
    v_n = float(np.mean(residuals ** 2))
    mean_d1_sq = float(np.mean(erg_d1(obs.u, theta) ** 2))
    tolerance = ERG_SINGULAR_RTOL * mean_d1_sq + ERG_SINGULAR_ATOL
    factor = float(len(obs)) if size_factor is ErgSizeFactor.PAIR_COUNT else 1.0
    critical = chi2_quantile(1.0 - alpha, 1)

    diagnostics = ErgDiagnostics(
        d_n=mats.d_n,
        v_n=v_n,
        a_n=mats.a_n,
        b_n=mats.b_n,
        c_n=mats.c_n,
        grad_d_n=mats.grad_d_n,
        max_residual=float(np.max(np.abs(residuals))),
        mean_d1_squared=mean_d1_sq,
        tolerance=tolerance,
        size_factor=factor,
        theta_hat=theta,
        density=fit.density,
    )

    if v_n < tolerance:
        logger.info("ERG test degenerate: V_n=%.3e below tolerance %.3e (mode=%s)", v_n, tolerance, mode.value)
        report = ErgTestReport(
            statistic=None,
            p_value=None,
            decision=Decision.DEGENERATE,
            mode=mode,
            size_factor=size_factor,
            alpha=alpha,
            critical_value=critical,
            diagnostics=diagnostics,
        )
    else:
        statistic = factor * mats.d_n ** 2 / v_n
        decision = decide(statistic, critical)
        report = ErgTestReport(
            statistic=statistic,
            p_value=chi2_sf(statistic, 1),
            decision=decision,
            mode=mode,
            size_factor=size_factor,
            alpha=alpha,
            critical_value=critical,
            diagnostics=diagnostics,
        )
    metrics.record_test("erg", report.decision.value)
    return report
