"""Numerical kernels: chi-square distribution, guarded small-matrix inversion
and the central-difference derivative oracle."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Union

import numpy as np
from scipy import linalg, special

from .config import COND_LIMIT
from .errors import InvalidArgument, NonFiniteEvaluation

MAX_SMALL_DIM = 8


def _check_df(df: int) -> None:
    if int(df) != df or df < 1:
        raise InvalidArgument(f"degrees of freedom must be a positive integer, got {df!r}")


def chi2_cdf(x: float, df: int) -> float:
    """P(df/2, x/2), the regularized lower incomplete gamma."""
    _check_df(df)
    if not np.isfinite(x) or x < 0:
        raise InvalidArgument(f"chi-square argument must be finite and >= 0, got {x!r}")
    return float(special.gammainc(df / 2.0, x / 2.0))


def chi2_sf(x: float, df: int) -> float:
    _check_df(df)
    if np.isnan(x) or x < 0:
        raise InvalidArgument(f"chi-square argument must be >= 0, got {x!r}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def chi2_quantile(p: float, df: int) -> float:
    _check_df(df)
    if not (0.0 < p < 1.0):
        raise InvalidArgument(f"quantile level must lie in (0, 1), got {p!r}")
    return float(2.0 * special.gammaincinv(df / 2.0, p))


@dataclass
class SingularityReport:
    condition: float
    near_null: List[int] = field(default_factory=list)  # 1-based

    def as_dict(self) -> dict:
        return {"condition": self.condition, "near_null": list(self.near_null)}


def _small_square(m) -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] > MAX_SMALL_DIM or a.shape[0] == 0:
        raise InvalidArgument(f"expected a square matrix of dimension 1..{MAX_SMALL_DIM}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument("matrix has non-finite entries")
    return a


def _factor(a: np.ndarray):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    smallest = pivots.min()
    condition = float("inf") if smallest == 0.0 else float(pivots.max() / smallest)
    return lu, piv, pivots, condition


def pivot_condition(m) -> float:
    """Max/min absolute pivot ratio of the partially pivoted LU factorisation."""
    return _factor(_small_square(m))[3]


def guarded_inverse(m, cond_limit: float = COND_LIMIT) -> Union[np.ndarray, SingularityReport]:
    """Inverse via LU with partial pivoting, or a SingularityReport when the
    max/min absolute pivot ratio exceeds ``cond_limit``."""
    a = _small_square(m)
    dim = a.shape[0]
    diag = np.abs(np.diag(a))
    diag_scale = diag.max()
    lu, piv, pivots, condition = _factor(a)
    largest = pivots.max()

    if condition > cond_limit:
        small_pivot = pivots <= largest / cond_limit
        small_diag = diag <= diag_scale / cond_limit
        near_null = sorted({int(k) + 1 for k in np.flatnonzero(small_pivot | small_diag)})
        return SingularityReport(condition=condition, near_null=near_null)

    return linalg.lu_solve((lu, piv), np.eye(dim), check_finite=False)


def finite_diff_gradient(f: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grad = np.empty_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        hi = float(f(x + step))
        lo = float(f(x - step))
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise NonFiniteEvaluation(f"non-finite evaluation around coordinate {i}", coordinate=i)
        grad[i] = (hi - lo) / (2.0 * h)
    return grad
