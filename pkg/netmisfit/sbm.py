"""Stochastic block model: observed-label estimation and the six-coordinate
information-matrix misspecification test.

Each pair (i, j), i > j, contributes an observation (k, l, n_i, n_j, y) with
k, l the blocks of i and j, n_i, n_j their degrees and y the edge bit. Its log
density in the parameter slots (theta_k, theta_l, eta_kl) is

    log f = log(theta_k) / n_i + log(theta_l) / n_j
            + y log(eta_kl) + (1 - y) log(1 - eta_kl)

When k == l the two theta slots are evaluated separately, as written.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from .config import (
    A_DIAG_FLOOR,
    COND_LIMIT,
    DEFAULT_ALPHA,
    DEFAULT_SEED,
    SBM_DROP_RTOL,
    VEM_RESTARTS,
)
from .errors import (
    DegenerateEstimate,
    EmptyBlock,
    InvalidArgument,
    InvalidLabel,
    IsolatedVertex,
    MissingLabels,
    SingularAn,
)
from .graph import Graph, canonical_pairs
from .metrics import metrics, timed
from .numerics import SingularityReport, chi2_quantile, chi2_sf, guarded_inverse, pivot_condition
from .outcomes import Decision, decide
from .samplers import Seed

logger = logging.getLogger(__name__)

N_COORDS = 6
ETA_COORD = 5  # 0-based index of the eta-eta coordinate
COORD_NAMES = ("theta_k.theta_k", "theta_k.theta_l", "theta_k.eta", "theta_l.theta_l", "theta_l.eta", "eta.eta")


class SbmMode(str, Enum):
    PAPER = "Paper"
    REDUCED = "Reduced"


class SbmSizeFactor(str, Enum):
    PAIR_COUNT = "PairCount"
    VERTEX_COUNT = "VertexCount"


class FitMethod(str, Enum):
    OBSERVED = "ObservedLabels"
    VEM = "VariationalEM"


class IsolatedPolicy(str, Enum):
    ERROR = "error"
    DROP = "drop"


@dataclass(frozen=True)
class SbmObservation:
    k: int
    l: int
    n_i: int
    n_j: int
    y: int


@dataclass(frozen=True)
class SbmObservations:
    """Column storage of the observations, in canonical pair order."""

    k: np.ndarray
    l: np.ndarray
    n_i: np.ndarray
    n_j: np.ndarray
    y: np.ndarray
    n_vertices: int
    dropped_pairs: int = 0
    isolated: Tuple[int, ...] = ()

    def __len__(self) -> int:
        return int(self.k.size)

    def __getitem__(self, t: int) -> SbmObservation:
        return SbmObservation(
            k=int(self.k[t]), l=int(self.l[t]), n_i=int(self.n_i[t]), n_j=int(self.n_j[t]), y=int(self.y[t])
        )

    def __iter__(self):
        return (self[t] for t in range(len(self)))

    @classmethod
    def of(cls, items) -> "SbmObservations":
        rows = np.array([(o.k, o.l, o.n_i, o.n_j, o.y) for o in items], dtype=np.int64).reshape(-1, 5)
        return cls(k=rows[:, 0], l=rows[:, 1], n_i=rows[:, 2], n_j=rows[:, 3], y=rows[:, 4], n_vertices=0)


@dataclass
class FittedSbm:
    theta_hat: np.ndarray
    eta_hat: np.ndarray
    method: FitMethod
    labels_used: np.ndarray
    em_meta: Dict[str, Any] = field(default_factory=dict)
    unobserved: List[Tuple[int, int]] = field(default_factory=list)
    clamped: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def m(self) -> int:
        return int(self.theta_hat.size)

    def as_dict(self) -> dict:
        return {
            "method": FitMethod(self.method).value,
            "m": self.m,
            "theta_hat": self.theta_hat.tolist(),
            "eta_hat": self.eta_hat.tolist(),
            "unobserved_cells": [list(c) for c in self.unobserved],
            "clamped_cells": [list(c) for c in self.clamped],
            "em_meta": dict(self.em_meta),
        }


@dataclass(frozen=True)
class SbmMatrices:
    a_n: np.ndarray
    d_n: np.ndarray
    grad_d_n: np.ndarray


@dataclass
class SbmPath:
    """Outcome of one decision path (Paper or Reduced)."""

    mode: SbmMode
    decision: Decision
    statistic: Optional[float] = None
    df: Optional[int] = None
    p_value: Optional[float] = None
    critical_value: Optional[float] = None
    condition: Optional[float] = None
    retained: List[int] = field(default_factory=list)
    dropped: List[int] = field(default_factory=list)
    singularity: Optional[SingularityReport] = None

    def as_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "decision": self.decision.value,
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "critical_value": self.critical_value,
            "condition": self.condition,
            "retained": list(self.retained),
            "dropped": list(self.dropped),
            "singularity": None if self.singularity is None else self.singularity.as_dict(),
        }


@dataclass
class SbmDiagnostics:
    d_n: List[float]
    v_n: List[List[float]]
    a_n: List[float]
    grad_d_n: List[List[float]]
    condition: Optional[float]
    dropped: List[int]
    size_factor: float
    n_observations: int
    n_dropped_pairs: int
    isolated_vertices: List[int]
    alternate: Dict[str, Any]


@dataclass
class SbmTestReport:
    statistic: Optional[float]
    df: Optional[int]
    p_value: Optional[float]
    decision: Decision
    mode: SbmMode
    size_factor: SbmSizeFactor
    alpha: float
    critical_value: Optional[float]
    diagnostics: SbmDiagnostics
    fit: FittedSbm

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "decision": self.decision.value,
            "mode": self.mode.value,
            "size_factor": self.size_factor.value,
            "alpha": self.alpha,
            "critical_value": self.critical_value,
            "diagnostics": dict(vars(self.diagnostics)),
        }


# ---------------------------------------------------------------------------
# Observations and closed-form estimation
# ---------------------------------------------------------------------------

def sbm_observations(g: Graph, isolated: IsolatedPolicy = IsolatedPolicy.ERROR) -> SbmObservations:
    if g.labels is None:
        raise MissingLabels("the SBM observations need block labels")
    isolated = IsolatedPolicy(isolated)
    deg = g.degrees
    lonely = tuple(int(v) + 1 for v in np.flatnonzero(deg == 0))
    if lonely and isolated is IsolatedPolicy.ERROR:
        raise IsolatedVertex(
            f"{len(lonely)} isolated vertices; the 1/n_i exponent is undefined",
            vertices=list(lonely),
        )

    i_idx, j_idx = canonical_pairs(g.n)
    keep = slice(None)
    dropped = 0
    if lonely:
        mask = (deg[i_idx] > 0) & (deg[j_idx] > 0)
        dropped = int(mask.size - mask.sum())
        if not mask.any():
            raise IsolatedVertex("no pair has two non-isolated endpoints", vertices=list(lonely))
        keep = mask
        logger.info("dropping %d pairs incident to %d isolated vertices", dropped, len(lonely))

    i_idx, j_idx = i_idx[keep], j_idx[keep]
    return SbmObservations(
        k=g.labels[i_idx],
        l=g.labels[j_idx],
        n_i=deg[i_idx],
        n_j=deg[j_idx],
        y=g.adj[i_idx, j_idx].astype(np.int64),
        n_vertices=g.n,
        dropped_pairs=dropped,
        isolated=lonely,
    )


def _check_clamp(clamp: Optional[float]) -> None:
    if clamp is not None and not (0.0 < clamp < 0.5):
        raise InvalidArgument(f"clamp epsilon must lie in (0, 0.5), got {clamp!r}")


def finish_eta(eta: np.ndarray, observed: np.ndarray, clamp: Optional[float]) -> Tuple[np.ndarray, List[Tuple[int, int]]]:
    """Apply the boundary policy to observed cells.

    Strict (clamp=None) raises on any 0/1 cell; otherwise such cells are
    clipped into [clamp, 1 - clamp]. Returns the matrix and the clamped cells.
    """
    _check_clamp(clamp)
    boundary = observed & ((eta <= 0.0) | (eta >= 1.0))
    cells = [(int(k) + 1, int(l) + 1) for k, l in zip(*np.nonzero(np.triu(boundary)))]
    if not cells:
        return eta, []
    if clamp is None:
        raise DegenerateEstimate(f"edge probability on the boundary in cells {cells}", cells=cells)
    clipped = np.where(boundary, np.clip(eta, clamp, 1.0 - clamp), eta)
    return clipped, cells


def sbm_mle_observed(g: Graph, clamp: Optional[float] = None, blocks: Optional[int] = None) -> FittedSbm:
    """theta_k = n_k / n and eta_kl = e_kl / n_kl from the observed labels."""
    if g.labels is None:
        raise MissingLabels("observed-label estimation needs block labels")
    _check_clamp(clamp)
    labels = g.labels
    m = int(labels.max()) if blocks is None else int(blocks)
    if labels.max() > m:
        raise InvalidLabel(f"label {int(labels.max())} exceeds the block count {m}")

    n_k = np.bincount(labels - 1, minlength=m).astype(np.float64)
    if np.any(n_k == 0):
        empty = [int(k) + 1 for k in np.flatnonzero(n_k == 0)]
        raise EmptyBlock(f"blocks {empty} have no vertices", blocks=empty)

    z = np.zeros((g.n, m))
    z[np.arange(g.n), labels - 1] = 1.0
    e_kl = z.T @ (g.adj @ z)
    e_kl[np.diag_indices(m)] /= 2.0  # within-block edges appear twice in Z'AZ

    n_kl = np.outer(n_k, n_k)
    n_kl[np.diag_indices(m)] = n_k * (n_k - 1.0) / 2.0
    observed = n_kl > 0
    eta = np.full((m, m), 0.5)
    eta[observed] = e_kl[observed] / n_kl[observed]
    unobserved = [(int(k) + 1, int(l) + 1) for k, l in zip(*np.nonzero(np.triu(~observed)))]

    eta, clamped = finish_eta(eta, observed, clamp)
    fit = FittedSbm(
        theta_hat=n_k / g.n,
        eta_hat=eta,
        method=FitMethod.OBSERVED,
        labels_used=labels.copy(),
        unobserved=unobserved,
        clamped=clamped,
    )
    logger.debug("observed-label fit: m=%d, unobserved=%s, clamped=%s", m, unobserved, clamped)
    return fit


# ---------------------------------------------------------------------------
# Per-observation kernels. Arguments broadcast; slot parameters are the
# observation-specific (theta_k, theta_l, eta_kl).
# ---------------------------------------------------------------------------

def _bernoulli_terms(y, eta):
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    return y / eta, (1.0 - y) / (1.0 - eta)


def log_density(y, n_i, n_j, theta_k, theta_l, eta):
    y = np.asarray(y, dtype=float)
    return (
        np.log(theta_k) / np.asarray(n_i, dtype=float)
        + np.log(theta_l) / np.asarray(n_j, dtype=float)
        + y * np.log(eta)
        + (1.0 - y) * np.log1p(-np.asarray(eta, dtype=float))
    )


def score_components(y, n_i, n_j, theta_k, theta_l, eta):
    a = 1.0 / np.asarray(n_i, dtype=float)
    b = 1.0 / np.asarray(n_j, dtype=float)
    t1, t2 = _bernoulli_terms(y, eta)
    return np.stack(np.broadcast_arrays(a / theta_k, b / theta_l, t1 - t2), axis=-1)


def hessian_diagonal(y, n_i, n_j, theta_k, theta_l, eta):
    a = 1.0 / np.asarray(n_i, dtype=float)
    b = 1.0 / np.asarray(n_j, dtype=float)
    t1, t2 = _bernoulli_terms(y, eta)
    # For binary y, -y/eta^2 - (1-y)/(1-eta)^2 is -(t1^2) - (t2^2).
    h = -(t1 * t1) - (t2 * t2)
    return np.stack(np.broadcast_arrays(-a / theta_k ** 2, -b / theta_l ** 2, h), axis=-1)


def d_components(y, n_i, n_j, theta_k, theta_l, eta):
    a = 1.0 / np.asarray(n_i, dtype=float)
    b = 1.0 / np.asarray(n_j, dtype=float)
    t1, t2 = _bernoulli_terms(y, eta)
    s = t1 - t2
    h = -(t1 * t1) - (t2 * t2)
    parts = (
        (a * a - a) / theta_k ** 2,
        a * b / (theta_k * theta_l),
        (a / theta_k) * s,
        (b * b - b) / theta_l ** 2,
        (b / theta_l) * s,
        s * s + h,
    )
    return np.stack(np.broadcast_arrays(*parts), axis=-1)


def d_jacobian(y, n_i, n_j, theta_k, theta_l, eta):
    """Derivatives of the six d_l with respect to (theta_k, theta_l, eta)."""
    a = 1.0 / np.asarray(n_i, dtype=float)
    b = 1.0 / np.asarray(n_j, dtype=float)
    t1, t2 = _bernoulli_terms(y, eta)
    s = t1 - t2
    h = -(t1 * t1) - (t2 * t2)
    dh = 2.0 * (t1 * t1) * t1 - 2.0 * (t2 * t2) * t2
    a, b, tk, tl, s, h, dh = np.broadcast_arrays(a, b, theta_k, theta_l, s, h, dh)
    jac = np.zeros(a.shape + (N_COORDS, 3))
    jac[..., 0, 0] = 2.0 * (a - a * a) / tk ** 3
    jac[..., 1, 0] = -a * b / (tk ** 2 * tl)
    jac[..., 1, 1] = -a * b / (tk * tl ** 2)
    jac[..., 2, 0] = -(a / tk ** 2) * s
    jac[..., 2, 2] = (a / tk) * h
    jac[..., 3, 1] = 2.0 * (b - b * b) / tl ** 3
    jac[..., 4, 1] = -(b / tl ** 2) * s
    jac[..., 4, 2] = (b / tl) * h
    jac[..., 5, 2] = 2.0 * s * h + dh
    return jac


def _slots(obs, fit: FittedSbm):
    if isinstance(obs, SbmObservation):
        obs = SbmObservations.of([obs])
        single = True
    else:
        single = False
    k = np.asarray(obs.k) - 1
    l = np.asarray(obs.l) - 1
    args = (obs.y, obs.n_i, obs.n_j, fit.theta_hat[k], fit.theta_hat[l], fit.eta_hat[k, l])
    return args, single


def _evaluate(kernel, obs, fit: FittedSbm) -> np.ndarray:
    args, single = _slots(obs, fit)
    out = kernel(*args)
    return out[0] if single else out


def sbm_score(obs, fit: FittedSbm) -> np.ndarray:
    return _evaluate(score_components, obs, fit)


def sbm_hessian_diagonal(obs, fit: FittedSbm) -> np.ndarray:
    return _evaluate(hessian_diagonal, obs, fit)


def sbm_d_vector(obs, fit: FittedSbm) -> np.ndarray:
    return _evaluate(d_components, obs, fit)


def sbm_d_jacobian(obs, fit: FittedSbm) -> np.ndarray:
    return _evaluate(d_jacobian, obs, fit)


# ---------------------------------------------------------------------------
# Averaged matrices and the statistic
# ---------------------------------------------------------------------------

def _as_observations(obs) -> SbmObservations:
    if isinstance(obs, SbmObservations):
        return obs
    return SbmObservations.of(list(obs))


def sbm_matrices(obs, fit: FittedSbm) -> SbmMatrices:
    obs = _as_observations(obs)
    if len(obs) == 0:
        raise InvalidArgument("no observations")
    args, _ = _slots(obs, fit)
    return SbmMatrices(
        a_n=np.diag(hessian_diagonal(*args).mean(axis=0)),
        d_n=d_components(*args).mean(axis=0),
        grad_d_n=d_jacobian(*args).mean(axis=0),
    )


def sbm_vn(obs, fit: FittedSbm, mats: Optional[SbmMatrices] = None) -> np.ndarray:
    """Mean of r_t r_t^T with r_t = d(U_t) - gradD_n A_n^-1 score(U_t)."""
    obs = _as_observations(obs)
    mats = mats if mats is not None else sbm_matrices(obs, fit)
    a_diag = np.diag(mats.a_n)
    small = np.flatnonzero(np.abs(a_diag) < A_DIAG_FLOOR)
    if small.size:
        raise SingularAn(f"A_n diagonal below {A_DIAG_FLOOR} at {small.tolist()}", coordinates=(small + 1).tolist())
    args, _ = _slots(obs, fit)
    projection = mats.grad_d_n / a_diag  # gradD_n A_n^-1, A_n diagonal
    residuals = d_components(*args) - score_components(*args) @ projection.T
    v = residuals.T @ residuals / len(obs)
    return 0.5 * (v + v.T)


def evaluate_statistic(
    d_n,
    v_n,
    size_factor: float,
    alpha: float = DEFAULT_ALPHA,
    mode: SbmMode = SbmMode.REDUCED,
    cond_limit: float = COND_LIMIT,
) -> SbmPath:
    """F * D' V^-1 D on the full vector (Paper) or on the coordinates that
    survive the variance screen (Reduced)."""
    mode = SbmMode(mode)
    d_n = np.asarray(d_n, dtype=float)
    v_n = np.asarray(v_n, dtype=float)

    if mode is SbmMode.PAPER:
        retained = list(range(N_COORDS))
        dropped: List[int] = []
    else:
        diag = np.diag(v_n)
        scale = diag.max()
        drop = diag < SBM_DROP_RTOL * scale if scale > 0 else np.ones(N_COORDS, dtype=bool)
        drop[ETA_COORD] = True
        retained = [int(c) for c in np.flatnonzero(~drop)]
        dropped = [int(c) + 1 for c in np.flatnonzero(drop)]
        if not retained:
            return SbmPath(mode=mode, decision=Decision.DEGENERATE, dropped=dropped)

    block = v_n[np.ix_(retained, retained)]
    inverse = guarded_inverse(block, cond_limit=cond_limit)
    if isinstance(inverse, SingularityReport):
        return SbmPath(
            mode=mode,
            decision=Decision.DEGENERATE,
            condition=inverse.condition,
            retained=[c + 1 for c in retained],
            dropped=dropped,
            singularity=inverse,
        )

    d_r = d_n[retained]
    statistic = max(float(size_factor * d_r @ inverse @ d_r), 0.0)
    df = len(retained)
    critical = chi2_quantile(1.0 - alpha, df)
    return SbmPath(
        mode=mode,
        decision=decide(statistic, critical),
        statistic=statistic,
        df=df,
        p_value=chi2_sf(statistic, df),
        critical_value=critical,
        condition=pivot_condition(block),
        retained=[c + 1 for c in retained],
        dropped=dropped,
    )


def fit_sbm(
    g: Graph,
    fit_method: FitMethod = FitMethod.OBSERVED,
    clamp: Optional[float] = None,
    blocks: Optional[int] = None,
    restarts: int = VEM_RESTARTS,
    seed=None,
) -> FittedSbm:
    """Observed labels, or variational EM labels followed by the same
    closed-form estimate on the recovered partition."""
    fit_method = FitMethod(fit_method)
    if fit_method is FitMethod.OBSERVED:
        return sbm_mle_observed(g, clamp=clamp, blocks=blocks)

    from .vem import sbm_vem_fit

    if blocks is None:
        raise InvalidArgument("variational EM needs the block count")
    seed = Seed(DEFAULT_SEED) if seed is None else seed
    vem_fit = sbm_vem_fit(g, blocks, restarts=restarts, seed=seed, clamp=clamp)
    fit = sbm_mle_observed(g.with_labels(vem_fit.labels_used), clamp=clamp, blocks=blocks)
    fit.method = FitMethod.VEM
    fit.em_meta = dict(vem_fit.em_meta)
    return fit


@timed
def sbm_test(
    g: Graph,
    fit_method: FitMethod = FitMethod.OBSERVED,
    alpha: float = DEFAULT_ALPHA,
    mode: SbmMode = SbmMode.REDUCED,
    size_factor: SbmSizeFactor = SbmSizeFactor.PAIR_COUNT,
    clamp: Optional[float] = None,
    isolated: IsolatedPolicy = IsolatedPolicy.ERROR,
    blocks: Optional[int] = None,
    restarts: int = VEM_RESTARTS,
    seed=None,
    fit: Optional[FittedSbm] = None,
) -> SbmTestReport:
    if not (0.0 < alpha < 1.0):
        raise InvalidArgument(f"alpha must lie in (0, 1), got {alpha!r}")
    mode = SbmMode(mode)
    size_factor = SbmSizeFactor(size_factor)

    if fit is None:
        fit = fit_sbm(g, fit_method, clamp=clamp, blocks=blocks, restarts=restarts, seed=seed)
    obs = sbm_observations(g.with_labels(fit.labels_used), isolated=isolated)
    mats = sbm_matrices(obs, fit)
    v_n = sbm_vn(obs, fit, mats)
    factor = float(len(obs)) if size_factor is SbmSizeFactor.PAIR_COUNT else float(g.n)

    paths = {m: evaluate_statistic(mats.d_n, v_n, factor, alpha, m) for m in SbmMode}
    chosen = paths[mode]
    other = paths[SbmMode.PAPER if mode is SbmMode.REDUCED else SbmMode.REDUCED]
    if chosen.decision is Decision.DEGENERATE:
        logger.info("SBM test degenerate in %s mode (dropped=%s, condition=%s)", mode.value, chosen.dropped, chosen.condition)

    diagnostics = SbmDiagnostics(
        d_n=mats.d_n.tolist(),
        v_n=v_n.tolist(),
        a_n=np.diag(mats.a_n).tolist(),
        grad_d_n=mats.grad_d_n.tolist(),
        condition=chosen.condition,
        dropped=chosen.dropped,
        size_factor=factor,
        n_observations=len(obs),
        n_dropped_pairs=obs.dropped_pairs,
        isolated_vertices=list(obs.isolated),
        alternate=other.as_dict(),
    )
    report = SbmTestReport(
        statistic=chosen.statistic,
        df=chosen.df,
        p_value=chosen.p_value,
        decision=chosen.decision,
        mode=mode,
        size_factor=size_factor,
        alpha=alpha,
        critical_value=chosen.critical_value,
        diagnostics=diagnostics,
        fit=fit,
    )
    metrics.record_test("sbm", report.decision.value)
    return report
