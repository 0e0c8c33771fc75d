"""EM fitting of full-covariance Gaussian mixtures and model-selection scores.

All restarts of one fit are advanced together as a batch of shape
(restarts, K, ...); each restart still follows its own EM trajectory and
stops independently once converged.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import FitFailureError, InsufficientDataError, InvalidInputError
from .mixture import (
    DataLike,
    MixtureModel,
    _check_underflow,
    as_dataset,
    component_log_densities,
    log_joint,
)

_LOG_2PI = np.log(2.0 * np.pi)


class Criterion(enum.Enum):
    AIC_OBSERVED = "AIC"
    AIC_COMPLETE = "AIC+comp"
    BIC_OBSERVED = "BIC"
    BIC_COMPLETE = "BIC+comp"

    @classmethod
    def parse(cls, label: str) -> "Criterion":
        for member in cls:
            if member.value.lower() == label.lower() or member.name.lower() == label.lower():
                return member
        choices = "|".join(m.value for m in cls)
        raise InvalidInputError(f"unknown criterion {label!r}; expected one of {choices}")

    @property
    def uses_complete_likelihood(self) -> bool:
        return self in (Criterion.AIC_COMPLETE, Criterion.BIC_COMPLETE)

    @property
    def is_bic(self) -> bool:
        return self in (Criterion.BIC_OBSERVED, Criterion.BIC_COMPLETE)


PARAM_COUNTS = ("shared", "standard")


@dataclass(frozen=True)
class FitConfig:
    restarts: int = 10
    max_iterations: int = 200
    log_likelihood_tolerance: float = 1e-4
    regularization: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise InvalidInputError("restarts must be >= 1")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")
        if not self.log_likelihood_tolerance > 0:
            raise InvalidInputError("log_likelihood_tolerance must be > 0")
        if self.regularization < 0:
            raise InvalidInputError("regularization must be >= 0")


@dataclass(frozen=True, eq=False)
class FittedModel:
    model: MixtureModel
    observed_log_likelihood: float
    hard_assignments: np.ndarray  # 0-based component index per point
    criterion_score: Optional[float] = None
    n_iterations: int = 0
    log_likelihood_trace: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    @property
    def k(self) -> int:
        return self.model.n_components


# ---------------------------------------------------------------------------
# likelihoods and scores


def _frequency_weights(data) -> np.ndarray:
    return np.ones(len(data)) if data.weights is None else data.weights


def observed_log_likelihood(model: MixtureModel, data: DataLike) -> float:
    """sum_n log f(x_n)."""
    data = as_dataset(data)
    _, log_f = log_joint(model, data.points)
    _check_underflow(log_f)
    return float(np.dot(_frequency_weights(data), log_f))


def complete_log_likelihood(model: MixtureModel, data: DataLike, assignments) -> float:
    """sum_n log(pi_{z_n} g_{z_n}(x_n)) for 0-based assignments z_n."""
    data = as_dataset(data)
    z = np.asarray(assignments)
    if z.shape != (len(data),) or not np.issubdtype(z.dtype, np.integer):
        raise InvalidInputError("assignments must be one integer per data point")
    if np.any(z < 0) or np.any(z >= model.n_components):
        raise InvalidInputError("assignment outside the component range")
    if np.any(model.weights[z] == 0):
        n = int(np.flatnonzero(model.weights[z] == 0)[0])
        raise InvalidInputError(f"point {n} is assigned to a zero-weight component")
    log_g = component_log_densities(model, data.points)
    terms = np.log(model.weights[z]) + log_g[np.arange(len(data)), z]
    return float(np.dot(_frequency_weights(data), terms))


def hard_assignments(model: MixtureModel, data: DataLike) -> np.ndarray:
    """argmax_k p(Z = k | x_n); ties go to the lowest index."""
    data = as_dataset(data)
    log_g = component_log_densities(model, data.points)
    with np.errstate(divide="ignore"):
        return np.argmax(log_g + np.log(model.weights), axis=1)


def param_count(k: int, d: int, method: str = "standard") -> float:
    """Free-parameter count D of a K-component, d-dimensional Gaussian mixture.

    ``"shared"`` is (K - 1) + d(d + 3)/2; ``"standard"`` counts every
    component's mean and covariance: (K - 1) + K d(d + 3)/2.
    """
    if method == "shared":
        return (k - 1) + d * (d + 3) / 2
    if method == "standard":
        return (k - 1) + k * d * (d + 3) / 2
    raise InvalidInputError(f"unknown parameter count {method!r}; expected shared|standard")


def penalty(criterion: Criterion, k: int, d: int, n: int, method: str = "standard") -> float:
    dof = param_count(k, d, method)
    if criterion.is_bic:
        return dof / 2 * np.log(n)
    return dof


def score(criterion: Criterion, fitted: FittedModel, data: DataLike, param_count: str = "standard") -> float:
    """Code length of the model under ``criterion``; lower is better."""
    data = as_dataset(data)
    if criterion.uses_complete_likelihood:
        ll = complete_log_likelihood(fitted.model, data, fitted.hard_assignments)
    else:
        ll = observed_log_likelihood(fitted.model, data)
    return -ll + penalty(criterion, fitted.k, data.dim, len(data), param_count)


# ---------------------------------------------------------------------------
# EM


def _weighted_choice(rng: np.random.Generator, p: np.ndarray) -> int:
    total = p.sum()
    if not total > 0:
        return int(rng.integers(p.shape[0]))
    return int(rng.choice(p.shape[0], p=p / total))


def kmeans_plusplus(points: np.ndarray, k: int, rng: np.random.Generator, weights=None) -> np.ndarray:
    """k-means++ seeding: D^2-weighted sampling of k distinct-ish seeds."""
    n = points.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[_weighted_choice(rng, w)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for j in range(1, k):
        centers[j] = points[_weighted_choice(rng, w * d2)]
        d2 = np.minimum(d2, np.sum((points - centers[j]) ** 2, axis=1))
    return centers


def _restart_rng(seed: int, key: tuple) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed & (2**64 - 1), spawn_key=key))


def _outer_rows(points):
    """(N, d*d) matrix whose rows are vec(x_n x_n^T)."""
    return (points[:, :, None] * points[:, None, :]).reshape(points.shape[0], -1)


def _batched_log_gauss(points, outer, means, covs):
    """log N(x_n | means[j], covs[j]) for a flat batch j, shape (J, N).

    Quadratic forms are expanded into matrix products; callers pass
    centered points to keep the cancellation harmless.
    """
    j_count, d = means.shape
    chol = np.linalg.cholesky(covs)
    log_det = 2.0 * np.log(np.diagonal(chol, axis1=-2, axis2=-1)).sum(-1)
    prec = np.linalg.inv(covs)
    prec = 0.5 * (prec + np.swapaxes(prec, -1, -2))
    p_mu = np.einsum("jab,jb->ja", prec, means)
    mu_p_mu = np.einsum("ja,ja->j", p_mu, means)
    maha = prec.reshape(j_count, -1) @ outer.T - 2.0 * (p_mu @ points.T) + mu_p_mu[:, None]
    np.maximum(maha, 0.0, out=maha)
    return -0.5 * (d * _LOG_2PI + log_det[:, None] + maha)


def _logsumexp0(a):
    top = a.max(axis=0)
    top = np.where(np.isfinite(top), top, 0.0)
    return top + np.log(np.exp(a - top).sum(axis=0))


@dataclass
class _Batch:
    weights: np.ndarray  # (R, K)
    means: np.ndarray  # (R, K, d)
    covs: np.ndarray  # (R, K, d, d)
    active: np.ndarray  # (R,) still iterating
    alive: np.ndarray  # (R,) not discarded
    failures: np.ndarray  # (R,) collapse count
    ll: np.ndarray  # (R,) last observed log-likelihood
    n_iter: np.ndarray
    traces: list


def _e_step(points, outer, w, weights, means, covs):
    """Responsibilities (R, K, N) and observed log-likelihoods (R,)."""
    r_count, k, d = means.shape
    log_g = _batched_log_gauss(points, outer, means.reshape(-1, d), covs.reshape(-1, d, d))
    with np.errstate(divide="ignore"):
        lj = log_g.reshape(r_count, k, -1) + np.log(weights)[:, :, None]
    log_f = np.stack([_logsumexp0(lj[r]) for r in range(r_count)])
    resp = np.exp(lj - log_f[:, None, :])
    return resp, log_f @ w


def _m_step(points, outer, w, resp, reg, eps):
    """Weighted M-step. Returns parameters plus a (R, K) collapse mask."""
    r_count, k, n = resp.shape
    d = points.shape[1]
    rw = (resp * w).reshape(-1, n)
    nk = rw.sum(-1)
    total = w.sum()
    safe_nk = np.where(nk > 0, nk, 1.0)
    means = (rw @ points) / safe_nk[:, None]
    second = ((rw @ outer) / safe_nk[:, None]).reshape(-1, d, d)
    covs = second - means[:, :, None] * means[:, None, :]
    covs = 0.5 * (covs + np.swapaxes(covs, -1, -2))
    min_eig = np.linalg.eigvalsh(covs)[..., 0]
    collapsed = (nk <= 1e-10 * total) | ~(min_eig >= eps)
    covs = covs + reg * np.eye(d)
    return (
        (nk / total).reshape(r_count, k),
        means.reshape(r_count, k, d),
        covs.reshape(r_count, k, d, d),
        collapsed.reshape(r_count, k),
    )


def _run_em(points, w, k, config, key):
    n, d = points.shape
    r_count = config.restarts
    total = w.sum()
    origin = w @ points / total
    points = points - origin
    outer = _outer_rows(points)
    global_cov = (points * w[:, None]).T @ points / total
    global_cov = 0.5 * (global_cov + global_cov.T) + max(config.regularization, 1e-6) * np.eye(d)

    rngs = [_restart_rng(config.rng_seed, (*key, k, r)) for r in range(r_count)]
    means = np.stack([kmeans_plusplus(points, k, rng, w) for rng in rngs])
    batch = _Batch(
        weights=np.full((r_count, k), 1.0 / k),
        means=means,
        covs=np.broadcast_to(global_cov, (r_count, k, d, d)).copy(),
        active=np.ones(r_count, dtype=bool),
        alive=np.ones(r_count, dtype=bool),
        failures=np.zeros(r_count, dtype=int),
        ll=np.full(r_count, -np.inf),
        n_iter=np.zeros(r_count, dtype=int),
        traces=[[] for _ in range(r_count)],
    )
    eps = max(config.regularization, 1e-12)
    tol = config.log_likelihood_tolerance * total

    resp, ll = _e_step(points, outer, w, batch.weights, batch.means, batch.covs)
    for r in range(r_count):
        batch.traces[r].append(float(ll[r]))
    batch.ll = ll
    for _ in range(config.max_iterations):
        act = np.flatnonzero(batch.active)
        if act.size == 0:
            break
        weights, means, covs, collapsed = _m_step(points, outer, w, resp[act], config.regularization, eps)
        batch.weights[act] = weights
        batch.means[act] = means
        batch.covs[act] = covs
        batch.n_iter[act] += 1
        for i, r in enumerate(act):
            if not collapsed[i].any():
                continue
            batch.failures[r] += 1
            if batch.failures[r] >= 2:
                batch.alive[r] = batch.active[r] = False
                continue
            # re-seed every collapsed component from a random data point
            for j in np.flatnonzero(collapsed[i]):
                batch.means[r, j] = points[_weighted_choice(rngs[r], w)]
                batch.covs[r, j] = global_cov
                batch.weights[r, j] = 1.0 / k
            batch.weights[r] /= batch.weights[r].sum()
            batch.traces[r].append(np.nan)  # monotonicity restarts here
            batch.ll[r] = -np.inf  # a re-seeded run cannot converge on this step
        act = np.flatnonzero(batch.active)
        if act.size == 0:
            break
        new_resp, new_ll = _e_step(points, outer, w, batch.weights[act], batch.means[act], batch.covs[act])
        resp[act] = new_resp
        for i, r in enumerate(act):
            batch.traces[r].append(float(new_ll[i]))
            gain = new_ll[i] - batch.ll[r]
            batch.ll[r] = new_ll[i]
            if abs(gain) < tol:
                batch.active[r] = False
    batch.means = batch.means + origin
    return batch


def _batch_member(batch, r) -> MixtureModel:
    weights = batch.weights[r] / batch.weights[r].sum()
    return MixtureModel.from_arrays(weights, batch.means[r], batch.covs[r])


def em_fit(
    data: DataLike,
    k: int,
    config: FitConfig = FitConfig(),
    criterion: Optional[Criterion] = None,
    param_count: str = "standard",
    stream_key: tuple = (),
) -> FittedModel:
    """Fit a k-component mixture by EM with ``config.restarts`` seeded restarts.

    Without ``criterion`` the restart with the highest observed
    log-likelihood wins; with one, the restart minimizing that score wins
    and ``criterion_score`` is filled in.  ``stream_key`` picks an
    independent random substream (e.g. the time index of a window).
    """
    data = as_dataset(data)
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if len(data) < k:
        raise InsufficientDataError(f"{len(data)} points cannot support {k} components")
    points = data.points
    w = _frequency_weights(data)
    batch = _run_em(points, w, k, config, tuple(int(s) for s in stream_key))

    candidates = []
    for r in np.flatnonzero(batch.alive):
        try:
            model = _batch_member(batch, r)
            ll = observed_log_likelihood(model, data)
        except (InvalidInputError, ArithmeticError):
            continue
        if not np.isfinite(ll):
            continue
        z = hard_assignments(model, data)
        fitted = FittedModel(
            model=model,
            observed_log_likelihood=ll,
            hard_assignments=z,
            n_iterations=int(batch.n_iter[r]),
            log_likelihood_trace=np.asarray(batch.traces[r]),
        )
        if criterion is not None:
            s = score(criterion, fitted, data, param_count)
            fitted = FittedModel(
                model=model,
                observed_log_likelihood=ll,
                hard_assignments=z,
                criterion_score=s,
                n_iterations=fitted.n_iterations,
                log_likelihood_trace=fitted.log_likelihood_trace,
            )
        candidates.append(fitted)
    if not candidates:
        raise FitFailureError(f"all {config.restarts} EM restarts collapsed for k={k}")
    if criterion is None:
        # max by likelihood; first index wins ties
        return max(candidates, key=lambda f: f.observed_log_likelihood)
    return min(candidates, key=lambda f: f.criterion_score)


def fit_weights(components, data: DataLike, max_iterations: int = 10000, tolerance: float = 1e-14) -> MixtureModel:
    """Maximize the observed likelihood over the mixing weights only.

    The components stay fixed; this is EM restricted to the weights, whose
    fixed point satisfies pi_k = mean_n r_nk.
    """
    data = as_dataset(data)
    components = tuple(components)
    k = len(components)
    uniform = MixtureModel(np.full(k, 1.0 / k), components)
    log_g = component_log_densities(uniform, data.points)
    w = _frequency_weights(data)
    w = w / w.sum()
    # scaling each row by its largest density leaves responsibilities unchanged
    scaled = np.exp(log_g - log_g.max(axis=1, keepdims=True))
    pi = np.full(k, 1.0 / k)
    for _ in range(max_iterations):
        mix = np.maximum(scaled @ pi, np.finfo(float).tiny)
        new_pi = pi * (scaled.T @ (w / mix))
        new_pi /= new_pi.sum()
        done = np.max(np.abs(new_pi - pi)) < tolerance
        pi = new_pi
        if done:
            break
    return MixtureModel(pi, components)
