"""Gaussian mixtures, log-space density evaluation and mixture complexity.

Mixture complexity (MC) is the empirical mutual information between the
latent component index and the observation,

    MC = sum_n w_n sum_k r_nk * log(g_k(x_n) / f(x_n)) / sum_n w_n,

with r_nk = pi_k g_k(x_n) / f(x_n) the responsibilities.  Everything is
evaluated in log space; all values are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg

from .errors import DegenerateModelError, InvalidInputError, NumericalDomainError

#: Ridge added to a covariance whose Cholesky factorization fails.
COVARIANCE_EPS = 1e-6

#: log f(x) below this is treated as f(x) == 0 (exp underflows in float64).
LOG_UNDERFLOW = -745.0

_LOG_2PI = np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    """Multivariate normal distribution N(mean, covariance)."""

    mean: np.ndarray
    covariance: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise InvalidInputError(
                f"covariance shape {cov.shape} does not match mean dimension {d}"
            )
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise InvalidInputError("component parameters must be finite")
        if not np.allclose(cov, cov.T, rtol=1e-8, atol=1e-10):
            raise InvalidInputError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", _regularized_cholesky(cov))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def log_pdf(self, points: np.ndarray) -> np.ndarray:
        """Log density at each row of ``points`` (shape (N, d))."""
        diff = np.asarray(points, dtype=float) - self.mean
        sol = linalg.solve_triangular(self._chol, diff.T, lower=True, check_finite=False)
        maha = np.einsum("ij,ij->j", sol, sol)
        log_det = 2.0 * np.sum(np.log(np.diag(self._chol)))
        return -0.5 * (self.dim * _LOG_2PI + log_det + maha)


def _regularized_cholesky(cov: np.ndarray) -> np.ndarray:
    try:
        return linalg.cholesky(cov, lower=True)
    except linalg.LinAlgError:
        pass
    try:
        return linalg.cholesky(cov + COVARIANCE_EPS * np.eye(cov.shape[0]), lower=True)
    except linalg.LinAlgError as exc:
        raise InvalidInputError("covariance is not positive definite") from exc


@dataclass(frozen=True, eq=False)
class MixtureModel:
    """Finite Gaussian mixture sum_k weights[k] * components[k].

    Zero-weight components are allowed; they never receive responsibility.
    """

    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        components = tuple(self.components)
        if len(components) == 0:
            raise InvalidInputError("a mixture needs at least one component")
        if weights.shape != (len(components),):
            raise InvalidInputError(
                f"{weights.shape[0]} weights for {len(components)} components"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidInputError("weights must be finite and non-negative")
        total = weights.sum()
        if total == 0:
            raise DegenerateModelError("all mixture weights are zero")
        if abs(total - 1.0) > 1e-9:
            raise InvalidInputError(f"weights sum to {total!r}, expected 1")
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise InvalidInputError(f"components have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "components", components)

    @classmethod
    def from_arrays(cls, weights, means, covariances) -> "MixtureModel":
        means = np.asarray(means, dtype=float)
        if means.ndim == 1:
            means = means[:, None]
        covariances = np.asarray(covariances, dtype=float)
        if covariances.ndim == 1:
            covariances = covariances[:, None, None]
        comps = tuple(GaussianComponent(m, c) for m, c in zip(means, covariances))
        return cls(weights, comps)

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def means(self) -> np.ndarray:
        return np.stack([c.mean for c in self.components])

    @property
    def covariances(self) -> np.ndarray:
        return np.stack([c.covariance for c in self.components])


@dataclass(frozen=True, eq=False)
class WeightedDataset:
    """N points in R^d with optional non-negative per-point weights."""

    points: np.ndarray
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise InvalidInputError("points must be a non-empty (N, d) array")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("points must be finite")
        object.__setattr__(self, "points", pts)
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != (pts.shape[0],):
                raise InvalidInputError("weights must have one entry per point")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InvalidInputError("weights must be finite and non-negative")
            if w.sum() <= 0:
                raise InvalidInputError("weights must have a positive sum")
            object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def effective_weights(self) -> np.ndarray:
        """Weights scaled so the largest is exactly 1 (all ones if absent)."""
        if self.weights is None:
            return np.ones(len(self))
        return self.weights / self.weights.max()


DataLike = Union[WeightedDataset, np.ndarray, Sequence]


def as_dataset(data: DataLike) -> WeightedDataset:
    if isinstance(data, WeightedDataset):
        return data
    return WeightedDataset(np.asarray(data, dtype=float))


def _check_point(model: MixtureModel, x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.dim,):
        raise InvalidInputError(f"point has shape {x.shape}, model dimension is {model.dim}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError("point coordinates must be finite")
    return x


def component_log_densities(model: MixtureModel, points: np.ndarray) -> np.ndarray:
    """(N, K) matrix of log g_k(x_n)."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[1] != model.dim:
        raise InvalidInputError(
            f"points have dimension {points.shape[1]}, model dimension is {model.dim}"
        )
    return np.column_stack([c.log_pdf(points) for c in model.components])


def _log_weights(weights: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(weights)


def log_joint(model: MixtureModel, points: np.ndarray):
    """Return (log g, log f): per-component and mixture log densities."""
    log_g = component_log_densities(model, points)
    return log_g, _log_mixture(log_g, model.weights)


def _log_mixture(log_g: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """log sum_k pi_k g_k, shifted by the largest live log g_k.

    Multiplying by pi_k directly (rather than adding log pi_k) keeps the
    shift exact, so identical components cancel to a ratio of exactly 1.
    """
    live = weights > 0
    top = log_g[:, live].max(axis=1)
    top = np.where(np.isfinite(top), top, 0.0)
    with np.errstate(divide="ignore", under="ignore"):
        s = np.exp(log_g[:, live] - top[:, None]) @ weights[live]
        return top + np.log(s)


def log_density(model: MixtureModel, x) -> float:
    """log f(x) for a single point."""
    x = _check_point(model, x)
    _, log_f = log_joint(model, x[None, :])
    return float(log_f[0])


def responsibility_matrix(model: MixtureModel, points: np.ndarray) -> np.ndarray:
    log_g, log_f = log_joint(model, points)
    log_r = log_g + _log_weights(model.weights) - log_f[:, None]
    return np.exp(log_r)


def responsibilities(model: MixtureModel, x) -> np.ndarray:
    """Posterior p(Z = k | X = x), normalized in log space."""
    x = _check_point(model, x)
    log_g, log_f = log_joint(model, x[None, :])
    if not np.isfinite(log_f[0]):
        raise NumericalDomainError("mixture density is zero at x", index=0)
    r = model.weights * np.exp(log_g[0] - log_f[0])
    return r / r.sum()


def _check_underflow(log_f: np.ndarray) -> None:
    bad = np.flatnonzero(~(log_f >= LOG_UNDERFLOW))
    if bad.size:
        i = int(bad[0])
        raise NumericalDomainError(
            f"mixture density underflows to zero at point index {i} (log f = {log_f[i]})",
            index=i,
        )


def pointwise_mc_terms(log_g: np.ndarray, log_f: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_k r_nk log(g_k / f) for every n, with 0 log 0 := 0."""
    log_ratio = log_g - log_f[:, None]
    resp = np.exp(log_ratio + _log_weights(weights))
    with np.errstate(invalid="ignore"):
        terms = np.where(resp > 0, resp * log_ratio, 0.0)
    return terms.sum(axis=1)


def mc(model: MixtureModel, data: DataLike) -> float:
    """Mixture complexity of ``model`` evaluated on (optionally weighted) data."""
    data = as_dataset(data)
    log_g, log_f = log_joint(model, data.points)
    _check_underflow(log_f)
    terms = pointwise_mc_terms(log_g, log_f, model.weights)
    w = data.effective_weights()
    return float(np.dot(w, terms) / w.sum())


def latent_entropy(weights) -> float:
    """Shannon entropy (nats) of a probability vector; 0 log 0 := 0."""
    weights = np.atleast_1d(np.asarray(weights, dtype=float))
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise InvalidInputError("weights must be finite and non-negative")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise InvalidInputError("weights must sum to 1")
    nz = weights[weights > 0]
    return float(-np.sum(nz * np.log(nz)))
