"""Estimation-quality metrics."""

from __future__ import annotations

import numpy as np

__all__ = [
    "factor_error",
    "subspace_error",
    "component_recovery",
    "nrmse",
    "relative_bias",
]

_ORTHO_ATOL = 1e-8


def _check_basis(U: np.ndarray, name: str) -> np.ndarray:
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] < U.shape[1] or U.shape[1] < 1:
        raise ValueError(f"{name} must be a tall d x k matrix")
    if not np.allclose(U.T @ U, np.eye(U.shape[1]), atol=_ORTHO_ATOL):
        raise ValueError(f"{name} does not have orthonormal columns")
    return U


def factor_error(F_hat: np.ndarray, F_true: np.ndarray) -> float:
    """Squared relative factor-covariance error.

    ``||F_hat F_hat' - F_true F_true'||_F^2 / ||F_true F_true'||_F^2``,
    evaluated through k x k Gram products so no d x d matrix is formed.
    Invariant to right-rotations of either argument.
    """
    F_hat = np.asarray(F_hat, dtype=float)
    F_true = np.asarray(F_true, dtype=float)
    if F_hat.shape[0] != F_true.shape[0]:
        raise ValueError("factor matrices must share the ambient dimension")
    a = float(np.sum((F_hat.T @ F_hat) ** 2))
    b = float(np.sum((F_true.T @ F_true) ** 2))
    if b == 0.0:
        raise ValueError("reference factor matrix is zero")
    cross = float(np.sum((F_hat.T @ F_true) ** 2))
    return max(a - 2.0 * cross + b, 0.0) / b


def subspace_error(U_hat: np.ndarray, U_true: np.ndarray) -> float:
    """Squared projector distance ``||P_hat - P_true||_F^2 / k`` in [0, 2]."""
    U_hat = _check_basis(U_hat, "U_hat")
    U_true = _check_basis(U_true, "U_true")
    if U_hat.shape != U_true.shape:
        raise ValueError("bases must have matching shapes")
    k = U_hat.shape[1]
    cross = float(np.sum((U_hat.T @ U_true) ** 2))
    return max(2.0 * (k - cross), 0.0) / k


def component_recovery(U_hat: np.ndarray, U_true: np.ndarray) -> np.ndarray:
    """Index-matched squared column alignments ``|u_hat_j' u_true_j|^2``."""
    U_hat = _check_basis(U_hat, "U_hat")
    U_true = _check_basis(U_true, "U_true")
    if U_hat.shape != U_true.shape:
        raise ValueError("bases must have matching shapes")
    return np.einsum("ij,ij->j", U_hat, U_true) ** 2


def nrmse(Y: np.ndarray, U_hat: np.ndarray) -> float:
    """Normalized reconstruction error ``||Y - U U' Y||_F / ||Y||_F`` in [0, 1]."""
    U_hat = _check_basis(U_hat, "U_hat")
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] != U_hat.shape[0]:
        raise ValueError("Y rows must match the basis dimension")
    total = float(np.linalg.norm(Y))
    if total == 0.0:
        raise ValueError("Y is zero")
    R = Y - U_hat @ (U_hat.T @ Y)
    return float(np.linalg.norm(R)) / total


def relative_bias(estimates, truth: float) -> float:
    """Signed relative bias ``mean(estimates - truth) / truth``."""
    estimates = np.atleast_1d(np.asarray(estimates, dtype=float))
    truth = float(truth)
    if truth == 0.0:
        raise ValueError("truth must be nonzero")
    return float(np.mean(estimates - truth) / truth)
