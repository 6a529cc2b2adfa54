"""Linear readout: NARMA10 targets, ridge regression and NRMSE."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (ContractError, DomainError, DomainWarning, InstabilityError,
                     RankDeficiencyError)


@dataclass(frozen=True)
class StateMatrix:
    """Design matrix: one row per input step, node samples then a bias column."""

    data: np.ndarray

    def __post_init__(self):
        data = np.atleast_2d(np.asarray(self.data, dtype=float))
        if data.shape[0] < 1 or data.shape[1] < 2:
            raise ContractError(f"state matrix needs >= 1 row and >= 2 columns, got {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ContractError("state matrix has non-finite entries")
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    def __getitem__(self, rows) -> "StateMatrix":
        return StateMatrix(self.data[rows])


@dataclass(frozen=True)
class RidgeModel:
    weights: np.ndarray
    lam: float
    bias_col: int | None = -1


def _matrix(X) -> np.ndarray:
    return X.data if isinstance(X, StateMatrix) else np.atleast_2d(np.asarray(X, dtype=float))


def narma10(u, n: int, warmup: int = 0) -> np.ndarray:
    """NARMA10 targets ``y_0 .. y_{n+warmup-1}`` with the first ``warmup`` dropped.

    ``y_{k+1} = 0.3 y_k + 0.05 y_k sum_{i=0}^{9} y_{k-i} + 1.5 u_{k-9} u_k + 0.1``,
    with ``y_j = 0`` for ``j < 10``.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    total = n + warmup
    if n < 0 or warmup < 0:
        raise ContractError("n and warmup must be non-negative")
    if len(u) < total:
        raise ContractError(f"need at least {total} inputs, got {len(u)}")
    if np.any(u[:total] < 0) or np.any(u[:total] > 0.5):
        warnings.warn("NARMA10 input outside [0, 0.5]", DomainWarning, stacklevel=2)
    y = np.zeros(total)
    for k in range(9, total - 1):
        y[k + 1] = (0.3 * y[k] + 0.05 * y[k] * y[k - 9:k + 1].sum()
                    + 1.5 * u[k - 9] * u[k] + 0.1)
        if abs(y[k + 1]) > 1e3:
            raise InstabilityError(f"NARMA10 recursion diverged at index {k + 1}")
    return y[warmup:]


def ridge_fit(X, y, lam: float = 1e-6, bias_col: int | None = -1) -> RidgeModel:
    """Solve ``(X'X + lam*I) w = X'y`` with no penalty on the bias column."""
    A = _matrix(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if A.shape[0] != len(y):
        raise ContractError(f"X has {A.shape[0]} rows but y has {len(y)} entries")
    if lam < 0:
        raise ContractError(f"lambda must be >= 0, got {lam}")
    penalty = np.full(A.shape[1], float(lam))
    if bias_col is not None:
        penalty[bias_col] = 0.0
    gram = A.T @ A + np.diag(penalty)
    if lam == 0 and np.linalg.matrix_rank(A) < A.shape[1]:
        raise RankDeficiencyError("normal equations are singular at lambda=0; use lambda > 0")
    try:
        w = np.linalg.solve(gram, A.T @ y)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError(
            "normal equations are singular; increase lambda"
        ) from exc
    return RidgeModel(w, float(lam), bias_col)


def predict(X, model: RidgeModel) -> np.ndarray:
    A = _matrix(X)
    if A.shape[1] != len(model.weights):
        raise ContractError(
            f"X has {A.shape[1]} columns, model expects {len(model.weights)}"
        )
    return A @ model.weights


def nrmse(y, y_hat) -> float:
    """``sqrt(mean((y - y_hat)^2) / var(y))`` with the population variance."""
    y = np.asarray(y, dtype=float).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=float).reshape(-1)
    if len(y) != len(y_hat) or len(y) < 2:
        raise ContractError("y and y_hat need equal lengths of at least 2")
    var = np.var(y)
    if var <= 0:
        raise DomainError("target has zero variance")
    return float(np.sqrt(np.mean((y - y_hat) ** 2) / var))
