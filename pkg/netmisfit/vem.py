"""Mean-field variational EM for the stochastic block model.

Responsibilities tau (n x m) are updated one vertex at a time with the block
parameters held fixed, then (theta, eta) are re-estimated in closed form.
Both steps maximise the same evidence lower bound, so its trace is
non-decreasing.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import permutations
from typing import List, Optional

import numpy as np
from scipy import special
from scipy.cluster.vq import ClusterError, kmeans2

from .config import DEFAULT_SEED, EMPTY_BLOCK_MASS, VEM_MAX_ITER, VEM_RESTARTS, VEM_TOL
from .errors import EmptyBlock, InvalidArgument
from .graph import Graph
from .samplers import Seed, SeedLike, as_generator
from .sbm import FitMethod, FittedSbm, finish_eta, sbm_mle_observed

logger = logging.getLogger(__name__)

# Working bounds for eta inside the iterations; the returned estimate is unclipped.
_ETA_FLOOR = 1e-12
MAX_ALIGN_BLOCKS = 8


@dataclass
class _Run:
    tau: np.ndarray
    theta: np.ndarray
    eta: np.ndarray
    elbo_trace: List[float]
    converged: bool
    init: str

    @property
    def elbo(self) -> float:
        return self.elbo_trace[-1]


def _m_step(adj: np.ndarray, tau: np.ndarray):
    mass = tau.sum(axis=0)
    if np.any(mass < EMPTY_BLOCK_MASS):
        empty = [int(k) + 1 for k in np.flatnonzero(mass < EMPTY_BLOCK_MASS)]
        raise EmptyBlock(f"blocks {empty} lost all responsibility", blocks=empty)
    theta = mass / tau.shape[0]
    # Ordered-pair counts: both edges and pairs count (i, j) and (j, i).
    edges = tau.T @ adj @ tau
    pairs = np.outer(mass, mass) - tau.T @ tau
    eta = np.divide(edges, pairs, out=np.full_like(edges, 0.5), where=pairs > 0)
    return theta, eta, edges, pairs


def _elbo(tau, theta, eta, edges, pairs) -> float:
    log_eta = np.log(eta)
    log_miss = np.log1p(-eta)
    pair_term = 0.5 * np.sum(edges * log_eta + (pairs - edges) * log_miss)
    return float(pair_term + tau.sum(axis=0) @ np.log(theta) + special.entr(tau).sum())


def _e_step(adj: np.ndarray, tau: np.ndarray, theta: np.ndarray, eta: np.ndarray) -> None:
    log_theta = np.log(theta)
    log_eta = np.log(eta)
    log_miss = np.log1p(-eta)
    colsum = tau.sum(axis=0)
    for i in range(tau.shape[0]):
        linked = adj[i] @ tau
        unlinked = colsum - tau[i] - linked
        new = special.softmax(log_theta + log_eta @ linked + log_miss @ unlinked)
        colsum += new - tau[i]
        tau[i] = new


def _spectral_init(adj: np.ndarray, m: int, rng: np.random.Generator) -> Optional[np.ndarray]:
    values, vectors = np.linalg.eigh(adj)
    lead = vectors[:, np.argsort(-np.abs(values))[:m]]
    try:
        _, assignment = kmeans2(lead, m, minit="++", missing="raise", seed=rng)
    except ClusterError:
        return None
    tau = np.full((adj.shape[0], m), 0.1 / m)
    tau[np.arange(adj.shape[0]), assignment] += 0.9
    return tau


def _run(adj: np.ndarray, tau: np.ndarray, init: str, tol: float, max_iter: int) -> _Run:
    theta, eta, edges, pairs = _m_step(adj, tau)
    work = np.clip(eta, _ETA_FLOOR, 1.0 - _ETA_FLOOR)
    trace = [_elbo(tau, theta, work, edges, pairs)]
    converged = False
    for _ in range(max_iter):
        _e_step(adj, tau, theta, work)
        theta, eta, edges, pairs = _m_step(adj, tau)
        work = np.clip(eta, _ETA_FLOOR, 1.0 - _ETA_FLOOR)
        trace.append(_elbo(tau, theta, work, edges, pairs))
        if abs(trace[-1] - trace[-2]) < tol * abs(trace[-2]):
            converged = True
            break
    return _Run(tau=tau, theta=theta, eta=eta, elbo_trace=trace, converged=converged, init=init)


def sbm_vem_fit(
    g: Graph,
    m: int,
    restarts: int = VEM_RESTARTS,
    seed: SeedLike = Seed(DEFAULT_SEED),
    clamp: Optional[float] = None,
    tol: float = VEM_TOL,
    max_iter: int = VEM_MAX_ITER,
) -> FittedSbm:
    """Best-of-``restarts`` variational fit; restart 0 starts from a spectral
    partition, the others from Dirichlet responsibilities."""
    if m < 1:
        raise InvalidArgument(f"block count must be >= 1, got {m}")
    if g.n < m:
        raise InvalidArgument(f"cannot place {g.n} vertices in {m} non-empty blocks")
    if restarts < 1:
        raise InvalidArgument(f"restarts must be >= 1, got {restarts}")

    if m == 1:
        fit = sbm_mle_observed(g.with_labels(np.ones(g.n, dtype=np.int64)), clamp=clamp)
        fit.method = FitMethod.VEM
        fit.em_meta = {"iterations": 0, "elbo": None, "restarts": restarts, "converged": True, "elbo_trace": []}
        return fit

    rng = as_generator(seed)
    adj = g.adj.astype(np.float64)
    runs: List[_Run] = []
    failures = 0
    for r in range(restarts):
        tau = _spectral_init(adj, m, rng) if r == 0 else None
        init = "spectral"
        if tau is None:
            tau = rng.dirichlet(np.ones(m), size=g.n)
            init = "dirichlet"
        try:
            run = _run(adj, tau, init, tol, max_iter)
        except EmptyBlock as exc:
            failures += 1
            logger.debug("restart %d discarded: %s", r, exc)
            continue
        logger.debug("restart %d (%s): elbo=%.6f after %d iterations", r, init, run.elbo, len(run.elbo_trace) - 1)
        runs.append(run)

    if not runs:
        raise EmptyBlock(f"every one of {restarts} restarts emptied a block", restarts=restarts)

    best = max(runs, key=lambda run: run.elbo)
    eta, clamped = finish_eta(best.eta, np.ones((m, m), dtype=bool), clamp)
    labels = best.tau.argmax(axis=1).astype(np.int64) + 1
    logger.info("variational EM: m=%d, best elbo=%.6f (%s init), %d/%d restarts usable",
                m, best.elbo, best.init, len(runs), restarts)
    return FittedSbm(
        theta_hat=best.theta,
        eta_hat=eta,
        method=FitMethod.VEM,
        labels_used=labels,
        em_meta={
            "iterations": len(best.elbo_trace) - 1,
            "elbo": best.elbo,
            "restarts": restarts,
            "failed_restarts": failures,
            "converged": best.converged,
            "init": best.init,
            "elbo_trace": list(best.elbo_trace),
        },
        clamped=clamped,
    )


def label_accuracy(true_labels, estimated_labels, m: int) -> float:
    """Fraction of vertices whose estimated block matches the truth under the
    best relabelling of the estimated blocks."""
    true_labels = np.asarray(true_labels, dtype=np.int64)
    estimated_labels = np.asarray(estimated_labels, dtype=np.int64)
    if true_labels.shape != estimated_labels.shape or true_labels.size == 0:
        raise InvalidArgument("label vectors must be non-empty and of equal length")
    if m > MAX_ALIGN_BLOCKS:
        raise InvalidArgument(f"exhaustive alignment supports at most {MAX_ALIGN_BLOCKS} blocks")
    confusion = np.zeros((m, m), dtype=np.int64)
    np.add.at(confusion, (estimated_labels - 1, true_labels - 1), 1)
    rows = np.arange(m)
    best = max(confusion[rows, list(perm)].sum() for perm in permutations(range(m)))
    return float(best) / true_labels.size
