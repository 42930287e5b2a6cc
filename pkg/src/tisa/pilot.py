"""Linear 2-D projection whose coordinates reconstruct both the features and
the outcome as well as possible (PILOT-style reduced-rank fit).

Data are rows: ``X`` is (i, n) standardized features, ``y`` (i,) outcomes.
With ``Z = X A^T`` the objective is ``||X - Z B^T||^2 + ||y - Z C^T||^2``.
Stacking targets ``T = [X, y]`` and loadings ``W = [B^T, C^T]`` gives
``||T - X A^T W||^2``, solved by alternating exact least-squares steps.
"""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import standardize

log = logging.getLogger(__name__)


class ProjectionError(RuntimeError):
    def __init__(self, message: str, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


@dataclass(frozen=True, eq=False)
class ProjectionModel:
    """Fitted projection. ``A`` maps standardized features to 2-D."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    Z: np.ndarray = field(repr=False)
    objective: float
    mean: np.ndarray
    scale: np.ndarray
    seed: int = 0
    restarts: int = 1
    trace: list = field(default_factory=list, repr=False)

    @property
    def n_features(self) -> int:
        return len(self.mean)

    def standardized(self, raw_features) -> np.ndarray:
        raw = np.asarray(raw_features, dtype=float)
        if raw.ndim == 1:
            raw = raw[None, :]
        if raw.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} feature columns, got {raw.shape[1]}")
        return (raw - self.mean) / self.scale

    def to_json(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "C": self.C.tolist(),
            "objective": self.objective,
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "seed": self.seed,
            "restarts": self.restarts,
            "Z": self.Z.tolist(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc: dict) -> "ProjectionModel":
        return cls(
            A=np.array(doc["A"], dtype=float),
            B=np.array(doc["B"], dtype=float),
            C=np.array(doc["C"], dtype=float),
            Z=np.array(doc["Z"], dtype=float).reshape(-1, 2),
            objective=float(doc["objective"]),
            mean=np.array(doc["mean"], dtype=float),
            scale=np.array(doc["scale"], dtype=float),
            seed=int(doc.get("seed", 0)),
            restarts=int(doc.get("restarts", 1)),
        )


def project(model: ProjectionModel, raw_features) -> np.ndarray:
    """Standardize with the stored statistics, then apply ``A``."""
    return model.standardized(raw_features) @ model.A.T


def pilot_objective(model: ProjectionModel, features, outcomes) -> float:
    """``||F - B Z||^2 + ||Y - C Z||^2`` with ``Z = A F`` on standardized ``features``."""
    X = model.standardized(features)
    y = np.asarray(outcomes, dtype=float).reshape(-1)
    if len(y) != len(X):
        raise ValueError(f"{len(X)} feature rows but {len(y)} outcomes")
    return objective_value(X, y, model.A, model.B, model.C)


def objective_value(X, y, A, B, C) -> float:
    Z = X @ A.T
    rf = X - Z @ B.T
    ry = y.reshape(-1, 1) - Z @ C.T
    return float(np.sum(rf * rf) + np.sum(ry * ry))


def _als(X, T, M0, P, max_iter, tol):
    """Alternate W = argmin ||T - Z W|| and M = argmin ||T - X M W|| from M0.

    ``P = pinv(X) @ T`` is shared across restarts. The objective can only
    decrease because each half-step is an exact minimiser.
    """
    M = M0
    trace: list[float] = []
    prev = np.inf
    W = None
    for _ in range(max_iter):
        Z = X @ M
        W = np.linalg.lstsq(Z, T, rcond=None)[0]
        M = P @ np.linalg.pinv(W)
        R = T - (X @ M) @ W
        obj = float(np.sum(R * R))
        trace.append(obj)
        if not np.isfinite(obj):
            break
        if obj <= 1e-300 or (np.isfinite(prev) and prev - obj <= tol * prev):
            break
        prev = obj
    return M, W, trace


def _gauge(M, W):
    """Fix the 2x2 gauge: rows of W become orthonormal, Z = X M keeps the
    objective. Signs are set so each row of W has a positive largest entry."""
    U, s, Vt = np.linalg.svd(W, full_matrices=False)
    M = M @ U @ np.diag(s)
    W = Vt
    for r in range(2):
        j = int(np.argmax(np.abs(W[r])))
        if W[r, j] < 0:
            W[r] *= -1
            M[:, r] *= -1
    return M, W


def fit_pilot(
    features,
    outcomes,
    restarts: int = 5,
    seed: int = 0,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> ProjectionModel:
    """Fit ``A, B, C`` by alternating least squares over seeded restarts.

    Features are z-scored; constant columns are dropped from the fit (their
    ``A`` columns are zero). The best restart by final objective wins, ties
    to the lowest restart index. The result is gauge-normalised so that the
    stacked loadings ``[B; C]`` have orthonormal columns; areas in the 2-D
    space are then comparable between fits up to rotation/reflection.
    """
    raw = np.asarray(features, dtype=float)
    y = np.asarray(outcomes, dtype=float).reshape(-1)
    if raw.ndim != 2 or raw.shape[0] < 3:
        raise ValueError("fit_pilot needs at least 3 instances")
    if raw.shape[1] < 2:
        raise ValueError("fit_pilot needs at least 2 features")
    if len(y) != raw.shape[0]:
        raise ValueError(f"{raw.shape[0]} feature rows but {len(y)} outcomes")

    _, mean, scale = standardize(raw)
    mask = raw.std(axis=0) > 0
    if not mask.all():
        warnings.warn(f"dropping {int((~mask).sum())} constant feature(s) from the projection fit", stacklevel=2)
    if mask.sum() < 1:
        raise ProjectionError("every feature is constant")
    X = ((raw - mean) / scale)[:, mask]
    n = X.shape[1]
    T = np.column_stack([X, y])
    P = np.linalg.pinv(X) @ T

    rng = np.random.default_rng(seed)
    best = None
    traces = []
    for r in range(max(1, restarts)):
        A0 = rng.standard_normal((2, n)) / np.sqrt(n)
        M, W, trace = _als(X, T, A0.T, P, max_iter, tol)
        traces.append(trace)
        final = trace[-1] if trace else np.inf
        if np.isfinite(final) and (best is None or final < best[0]):
            best = (final, M, W, r)
    if best is None:
        raise ProjectionError("every restart diverged", traces)

    _, M, W, _ = best
    M, W = _gauge(M, W)
    A_fit = M.T
    B_fit = W[:, :n].T
    C_fit = W[:, n:].T
    A = np.zeros((2, raw.shape[1]))
    B = np.zeros((raw.shape[1], 2))
    A[:, mask] = A_fit
    B[mask, :] = B_fit
    Xfull = (raw - mean) / scale
    model = ProjectionModel(
        A=A,
        B=B,
        C=C_fit,
        Z=np.empty((0, 2)),
        objective=objective_value(Xfull, y, A, B, C_fit),
        mean=mean,
        scale=scale,
        seed=seed,
        restarts=restarts,
        trace=traces,
    )
    object.__setattr__(model, "Z", project(model, raw))
    log.debug("pilot objective %.6g after %d restarts", model.objective, restarts)
    return model
