"""Graph generators for the null and perturbed data-generating processes.

Every sampler takes a Seed (or an already-derived numpy Generator) and draws
the pair indicators in canonical order, so a given (master, stream) always
produces the same graph.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence, Union

import numpy as np

from .config import SCENARIO2_GROUPS
from .errors import IndivisibleN, InvalidArgument, InvalidLabel, InvalidProbability
from .graph import Graph, canonical_pairs, pair_count

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Seed:
    master: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        # Philox is counter-based; the spawn key separates replication streams.
        seq = np.random.SeedSequence(entropy=self.master, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(seq))


SeedLike = Union[Seed, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, Seed):
        return seed.generator()
    raise InvalidArgument(f"expected a Seed or numpy Generator, got {type(seed).__name__}")


class MultiplierRule(str, Enum):
    """How a perturbed pair combines the two endpoint group multipliers."""

    LOWER = "lower"
    PRODUCT = "product"
    MAX = "max"
    MEAN = "mean"


@dataclass(frozen=True)
class SbmParams:
    theta: np.ndarray
    eta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        eta = np.asarray(self.eta, dtype=float)
        m = theta.size
        if theta.ndim != 1 or m < 1:
            raise InvalidProbability("theta must be a non-empty vector")
        if eta.shape != (m, m):
            raise InvalidProbability(f"eta must be {m}x{m}, got shape {eta.shape}")
        if not np.all(np.isfinite(theta)) or np.any(theta <= 0) or np.any(theta > 1):
            raise InvalidProbability("block probabilities must lie in (0, 1]")
        if abs(theta.sum() - 1.0) > 1e-12:
            raise InvalidProbability(f"block probabilities sum to {theta.sum()!r}, not 1")
        if not np.all(np.isfinite(eta)) or np.any(eta < 0) or np.any(eta > 1):
            raise InvalidProbability("edge probabilities must lie in [0, 1]")
        if not np.array_equal(eta, eta.T):
            raise InvalidProbability("eta must be symmetric")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "eta", eta)

    @property
    def m(self) -> int:
        return int(self.theta.size)

    @classmethod
    def uniform(cls, eta) -> "SbmParams":
        eta = np.asarray(eta, dtype=float)
        m = eta.shape[0]
        return cls(theta=np.full(m, 1.0 / m), eta=eta)

    def as_dict(self) -> dict:
        return {"m": self.m, "theta": self.theta.tolist(), "eta": self.eta.tolist()}


def _check_probability(name: str, p: float, open_interval: bool = False) -> None:
    if not np.isfinite(p):
        raise InvalidProbability(f"{name} must be finite, got {p!r}")
    if open_interval and not (0.0 < p < 1.0):
        raise InvalidProbability(f"{name} must lie in (0, 1), got {p!r}")
    if not (0.0 <= p <= 1.0):
        raise InvalidProbability(f"{name} must lie in [0, 1], got {p!r}")


def _check_n(n: int, perturbed: bool = False) -> None:
    if n < 2:
        raise InvalidArgument(f"need at least 2 vertices, got {n}")
    if perturbed and n % SCENARIO2_GROUPS:
        raise IndivisibleN(f"n={n} is not divisible by {SCENARIO2_GROUPS}", n=n)


def _draw_labels(n: int, params: SbmParams, rng: np.random.Generator, fixed_labels=None) -> np.ndarray:
    if fixed_labels is not None:
        labels = np.asarray(fixed_labels)
        if labels.shape != (n,):
            raise InvalidLabel(f"expected {n} labels, got {labels.size}")
        if not np.issubdtype(labels.dtype, np.integer) or labels.min() < 1 or labels.max() > params.m:
            raise InvalidLabel(f"labels must be block ids in 1..{params.m}")
        return labels.astype(np.int64)
    return rng.choice(params.m, size=n, p=params.theta).astype(np.int64) + 1


def _bernoulli_pairs(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # One uniform per pair in canonical order; p=1 always fires, p=0 never does.
    return rng.random(probs.size) < probs


def group_of(vertices: np.ndarray, n: int) -> np.ndarray:
    """0-based scenario group of 0-based vertex indices."""
    return vertices // (n // SCENARIO2_GROUPS)


def _draw_multipliers(rng: np.random.Generator, multipliers: Optional[Sequence[float]]) -> np.ndarray:
    if multipliers is None:
        return rng.random(SCENARIO2_GROUPS)
    mult = np.asarray(multipliers, dtype=float)
    if mult.shape != (SCENARIO2_GROUPS,) or np.any(mult < 0) or np.any(mult > 1):
        raise InvalidProbability(f"expected {SCENARIO2_GROUPS} multipliers in [0, 1]")
    return mult


def _pair_multipliers(n: int, mult: np.ndarray, rule: MultiplierRule) -> np.ndarray:
    i_idx, j_idx = canonical_pairs(n)
    p_i = mult[group_of(i_idx, n)]
    p_j = mult[group_of(j_idx, n)]
    rule = MultiplierRule(rule)
    if rule is MultiplierRule.LOWER:
        return p_j
    if rule is MultiplierRule.PRODUCT:
        return p_i * p_j
    if rule is MultiplierRule.MAX:
        return np.maximum(p_i, p_j)
    return 0.5 * (p_i + p_j)


def sample_er(n: int, p: float, seed: SeedLike) -> Graph:
    _check_n(n)
    _check_probability("p", p)
    rng = as_generator(seed)
    bits = rng.random(pair_count(n)) < p
    return Graph.from_pair_bits(n, bits, meta={"sampler": "er", "p": float(p)})


def sample_sbm(n: int, params: SbmParams, seed: SeedLike, fixed_labels=None) -> Graph:
    _check_n(n)
    rng = as_generator(seed)
    labels = _draw_labels(n, params, rng, fixed_labels)
    i_idx, j_idx = canonical_pairs(n)
    probs = params.eta[labels[i_idx] - 1, labels[j_idx] - 1]
    bits = _bernoulli_pairs(probs, rng)
    meta = {"sampler": "sbm", **params.as_dict(), "labels": labels.tolist()}
    return Graph.from_pair_bits(n, bits, labels=labels, meta=meta)


def sample_erg_scenario2(
    n: int,
    alpha: float,
    seed: SeedLike,
    rule: MultiplierRule = MultiplierRule.LOWER,
    multipliers: Optional[Sequence[float]] = None,
) -> Graph:
    """Edge probability alpha * p_g with p_g drawn per group of n/10 vertices.

    ``multipliers`` replaces the ten uniform draws (test hook).
    """
    _check_n(n, perturbed=True)
    _check_probability("alpha", alpha, open_interval=multipliers is None)
    rng = as_generator(seed)
    mult = _draw_multipliers(rng, multipliers)
    probs = alpha * _pair_multipliers(n, mult, rule)
    bits = _bernoulli_pairs(probs, rng)
    meta = {
        "sampler": "erg_scenario2",
        "alpha": float(alpha),
        "multipliers": mult.tolist(),
        "rule": MultiplierRule(rule).value,
    }
    return Graph.from_pair_bits(n, bits, meta=meta)


def sample_sbm_scenario2(
    n: int,
    params: SbmParams,
    seed: SeedLike,
    rule: MultiplierRule = MultiplierRule.LOWER,
    multipliers: Optional[Sequence[float]] = None,
    fixed_labels=None,
) -> Graph:
    _check_n(n, perturbed=True)
    rng = as_generator(seed)
    labels = _draw_labels(n, params, rng, fixed_labels)
    mult = _draw_multipliers(rng, multipliers)
    i_idx, j_idx = canonical_pairs(n)
    probs = params.eta[labels[i_idx] - 1, labels[j_idx] - 1] * _pair_multipliers(n, mult, rule)
    bits = _bernoulli_pairs(probs, rng)
    meta = {
        "sampler": "sbm_scenario2",
        **params.as_dict(),
        "labels": labels.tolist(),
        "multipliers": mult.tolist(),
        "rule": MultiplierRule(rule).value,
    }
    return Graph.from_pair_bits(n, bits, labels=labels, meta=meta)


def random_symmetric_eta(m: int, rng: np.random.Generator) -> np.ndarray:
    """Symmetric m x m matrix with independent U(0,1) upper-triangle entries."""
    upper = np.triu(rng.random((m, m)))
    return upper + np.triu(upper, k=1).T
