"""Linear composition model: ordinary least squares over shape features.

Fitting uses the normal equations with a symmetric positive-definite
(Cholesky) factorization. Columns are equilibrated to unit RMS before
forming the Gram matrix — this changes nothing mathematically but keeps the
solve stable when volume features (~1e5 px^3) meet width features (~1e1 px).
Rank deficiency is reported, never silently repaired.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import FeatureMismatch, InsufficientData, SingularSystem
from .volumetry import FEATURE_NAMES, ShapeFeatures

# condition estimate above this (after equilibration) counts as rank-deficient
_COND_LIMIT = 1e12


@dataclass
class CompositionModel:
    coefficients: list[float]
    intercept: float
    feature_order: list[str]

    def __post_init__(self):
        if len(self.coefficients) != len(self.feature_order):
            raise FeatureMismatch(
                f"{len(self.coefficients)} coefficients for "
                f"{len(self.feature_order)} feature names"
            )

    def to_dict(self) -> dict:
        return {
            "feature_order": list(self.feature_order),
            "coefficients": [float(c) for c in self.coefficients],
            "intercept": float(self.intercept),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CompositionModel":
        return cls(
            coefficients=list(d["coefficients"]),
            intercept=float(d["intercept"]),
            feature_order=list(d["feature_order"]),
        )


@dataclass
class FitReport:
    r_squared: float
    rmse: float
    n_samples: int


def fit_linear(
    features: np.ndarray,
    targets: np.ndarray,
    feature_names: list[str] | None = None,
) -> tuple[CompositionModel, FitReport]:
    """OLS with intercept via normal equations.

    Raises InsufficientData when n < k+1 and SingularSystem (with a condition
    estimate) when the Gram matrix is rank-deficient.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if y.shape != (n,):
        raise FeatureMismatch(f"targets shape {y.shape} does not match {n} samples")
    if feature_names is None:
        feature_names = list(FEATURE_NAMES[:k]) if k <= len(FEATURE_NAMES) else [
            f"f{i}" for i in range(k)
        ]
    if len(feature_names) != k:
        raise FeatureMismatch(f"{len(feature_names)} names for {k} feature columns")
    if n < k + 1:
        raise InsufficientData(f"need at least {k + 1} samples for {k} features, got {n}")

    A = np.hstack([np.ones((n, 1)), X])
    col_scale = np.sqrt(np.mean(A * A, axis=0))
    col_scale[col_scale == 0] = 1.0
    As = A / col_scale
    G = As.T @ As
    rhs = As.T @ y
    try:
        cf = linalg.cho_factor(G)
    except linalg.LinAlgError as exc:
        raise SingularSystem(
            f"Gram matrix is not positive definite (cond ~ {np.linalg.cond(G):.3e})",
            condition_estimate=float(np.linalg.cond(G)),
        ) from exc
    cond = float(np.linalg.cond(G))
    if cond > _COND_LIMIT:
        raise SingularSystem(
            f"Gram matrix is numerically rank-deficient (cond ~ {cond:.3e})",
            condition_estimate=cond,
        )
    beta = linalg.cho_solve(cf, rhs) / col_scale

    fitted = A @ beta
    model = CompositionModel(
        coefficients=beta[1:].tolist(),
        intercept=float(beta[0]),
        feature_order=list(feature_names),
    )
    return model, _report(y, fitted)


def predict(model: CompositionModel, features) -> float:
    """intercept + coefficients . features for one sample."""
    if isinstance(features, ShapeFeatures):
        vec = [getattr(features, name, None) for name in model.feature_order]
        if any(v is None for v in vec):
            missing = [n for n, v in zip(model.feature_order, vec) if v is None]
            raise FeatureMismatch(f"features lack {missing}")
    else:
        vec = list(np.asarray(features, dtype=float).ravel())
        if len(vec) != len(model.coefficients):
            raise FeatureMismatch(
                f"got {len(vec)} features, model expects {len(model.coefficients)}"
            )
    return float(model.intercept + np.dot(model.coefficients, vec))


def evaluate(model: CompositionModel, features: np.ndarray, targets: np.ndarray) -> FitReport:
    """R^2 and RMSE of the model on a (possibly held-out) sample set.

    Out-of-sample R^2 may be negative; it is reported as computed.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[1] != len(model.coefficients):
        raise FeatureMismatch(
            f"{X.shape[1]} feature columns, model expects {len(model.coefficients)}"
        )
    if y.shape != (X.shape[0],):
        raise FeatureMismatch(f"targets shape {y.shape} does not match {X.shape[0]} samples")
    fitted = model.intercept + X @ np.asarray(model.coefficients)
    return _report(y, fitted)


def _report(y: np.ndarray, fitted: np.ndarray) -> FitReport:
    resid = y - fitted
    ss_res = float(resid @ resid)
    dev = y - y.mean()
    ss_tot = float(dev @ dev)
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 * max(1.0, float(y @ y)) else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return FitReport(
        r_squared=r2,
        rmse=float(np.sqrt(ss_res / y.size)),
        n_samples=int(y.size),
    )


def save_model(model: CompositionModel, path: str | os.PathLike, metadata: dict | None = None) -> None:
    doc = model.to_dict()
    if metadata:
        doc["fit"] = metadata
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


def load_model(path: str | os.PathLike) -> CompositionModel:
    with open(path) as f:
        return CompositionModel.from_dict(json.load(f))
