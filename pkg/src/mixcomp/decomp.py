"""Hierarchical decomposition of mixture complexity and its tracking over time.

Lower components g_k are softly grouped into L upper components through a
row-stochastic matrix Q (K x L).  The MC of the full mixture splits exactly
into the MC between upper components (interaction) plus, per upper
component, its data mass W_l times its own weighted MC.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .em import _restart_rng, kmeans_plusplus
from .errors import InvalidInputError
from .mixture import (
    DataLike,
    MixtureModel,
    _check_underflow,
    _log_mixture,
    _log_weights,
    as_dataset,
    log_joint,
    pointwise_mc_terms,
)
from .sdms import SdmsConfig, TrackResult, track_mc


@dataclass(frozen=True, eq=False)
class Hierarchy:
    q: np.ndarray  # (K, L), rows sum to one

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q, dtype=float))
        if q.ndim != 2 or q.shape[1] < 1:
            raise InvalidInputError("hierarchy matrix must be K x L")
        if not np.all(np.isfinite(q)) or np.any(q < 0):
            raise InvalidInputError("hierarchy entries must be finite and non-negative")
        if np.any(np.abs(q.sum(axis=1) - 1.0) > 1e-9):
            raise InvalidInputError("every row of the hierarchy must sum to 1")
        object.__setattr__(self, "q", q)

    @classmethod
    def from_labels(cls, labels, n_upper: int) -> "Hierarchy":
        """Hard partition: lower component k belongs to upper labels[k]."""
        labels = np.asarray(labels, dtype=int)
        q = np.zeros((labels.shape[0], n_upper))
        q[np.arange(labels.shape[0]), labels] = 1.0
        return cls(q)

    @property
    def n_lower(self) -> int:
        return self.q.shape[0]

    @property
    def n_upper(self) -> int:
        return self.q.shape[1]


def upper_model(model: MixtureModel, hierarchy: Hierarchy):
    """Upper weights rho (L,) and within-group weights phi (L, K)."""
    if hierarchy.n_lower != model.n_components:
        raise InvalidInputError(
            f"hierarchy has {hierarchy.n_lower} rows for {model.n_components} components"
        )
    joint = hierarchy.q.T * model.weights[None, :]  # (L, K): Q_kl pi_k
    rho = joint.sum(axis=1)
    phi = np.zeros_like(joint)
    live = rho > 0
    phi[live] = joint[live] / rho[live, None]
    return rho, phi


@dataclass(frozen=True, eq=False)
class McDecomposition:
    mc_total: float
    mc_interaction: float
    weight_w: np.ndarray
    mc_component: np.ndarray
    contribution: np.ndarray
    rho: np.ndarray = field(repr=False, default=None)

    @property
    def n_upper(self) -> int:
        return self.weight_w.shape[0]

    def residual(self) -> float:
        """mc_total - mc_interaction - sum(contribution); zero up to rounding."""
        return self.mc_total - self.mc_interaction - float(self.contribution.sum())


def _mc_terms(log_comp, log_mix, log_mix_weights):
    """Per-point sum_k r_nk log(comp_k / mix) with 0 log 0 := 0.

    Rows where the mixture density is zero contribute nothing.
    """
    finite = np.isfinite(log_mix)
    safe_mix = np.where(finite, log_mix, 0.0)
    log_ratio = log_comp - safe_mix[:, None]
    with np.errstate(invalid="ignore", over="ignore"):
        resp = np.exp(log_ratio + log_mix_weights[None, :])
        terms = np.where((resp > 0) & finite[:, None], resp * log_ratio, 0.0)
    return terms.sum(axis=1)


def decompose(model: MixtureModel, data: DataLike, hierarchy: Hierarchy) -> McDecomposition:
    """Split MC(total) into MC(interaction) and per-upper-component contributions."""
    data = as_dataset(data)
    rho, phi = upper_model(model, hierarchy)
    log_g, log_f = log_joint(model, data.points)  # (N, K), (N,)
    _check_underflow(log_f)
    v = data.effective_weights()
    v_sum = v.sum()

    mc_total = float(np.dot(v, pointwise_mc_terms(log_g, log_f, model.weights)) / v_sum)

    n_upper = hierarchy.n_upper
    joint = hierarchy.q.T * model.weights[None, :]  # (L, K): Q_kl pi_k
    # log(rho_l h_l(x_n)) = log sum_k Q_kl pi_k g_k(x_n)
    log_rho_h = np.full((log_g.shape[0], n_upper), -np.inf)
    for l in range(n_upper):
        if np.any(joint[l] > 0):
            log_rho_h[:, l] = _log_mixture(log_g, joint[l])
    log_rho = _log_weights(rho)
    live = rho > 0
    log_h = np.full_like(log_rho_h, -np.inf)
    log_h[:, live] = log_rho_h[:, live] - log_rho[live]
    mc_interaction = float(np.dot(v, _mc_terms(log_h, log_f, log_rho)) / v_sum)

    resp_upper = np.exp(log_rho_h - log_f[:, None])  # w_n^(l)
    weight_w = np.zeros(n_upper)
    mc_component = np.zeros(n_upper)
    for l in np.flatnonzero(live):
        vw = v * resp_upper[:, l]
        mass = vw.sum()
        weight_w[l] = mass / v_sum
        if mass > 0:
            terms = _mc_terms(log_g, log_h[:, l], _log_weights(phi[l]))
            mc_component[l] = float(np.dot(vw, terms) / mass)
    contribution = weight_w * mc_component
    return McDecomposition(mc_total, mc_interaction, weight_w, mc_component, contribution, rho)


# ---------------------------------------------------------------------------
# weighted fuzzy c-means


@dataclass(frozen=True)
class FuzzyCMeansConfig:
    l: int = 4
    m: float = 1.5
    max_iterations: int = 300
    tolerance: float = 1e-6
    rng_seed: int = 0

    def __post_init__(self):
        if self.l < 1:
            raise InvalidInputError("l must be >= 1")
        if not self.m > 1:
            raise InvalidInputError("fuzziness m must be > 1")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")
        if not self.tolerance > 0:
            raise InvalidInputError("tolerance must be > 0")


@dataclass(frozen=True, eq=False)
class FuzzyResult:
    centers: np.ndarray  # (L, d)
    memberships: np.ndarray  # (M, L)
    loss_trace: np.ndarray
    n_iterations: int


def fcm_memberships(points: np.ndarray, centers: np.ndarray, m: float) -> np.ndarray:
    """Q_il proportional to ||x_i - c_l||^(-2/(m-1)); coinciding centers share mass."""
    d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    q = np.empty_like(d2)
    zero = d2 == 0
    hit = zero.any(axis=1)
    if np.any(hit):
        q[hit] = zero[hit] / zero[hit].sum(axis=1, keepdims=True)
    rest = ~hit
    if np.any(rest):
        # work relative to the nearest center to avoid overflow of the powers
        rel = d2[rest] / d2[rest].min(axis=1, keepdims=True)
        inv = rel ** (-1.0 / (m - 1.0))
        q[rest] = inv / inv.sum(axis=1, keepdims=True)
    return q


def fcm_loss(points, weights, centers, memberships, m) -> float:
    d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    return float(np.sum(weights[:, None] * memberships**m * d2))


def _fcm_centers(points, weights, memberships, m):
    coef = weights[:, None] * memberships**m  # (M, L)
    mass = coef.sum(axis=0)
    return (coef.T @ points) / mass[:, None], mass


def fuzzy_cmeans(points, weights=None, config: FuzzyCMeansConfig = FuzzyCMeansConfig()) -> FuzzyResult:
    """Weighted fuzzy c-means minimizing sum_i w_i sum_l Q_il^m ||x_i - c_l||^2."""
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    weights = np.ones(points.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if weights.shape != (points.shape[0],) or np.any(weights < 0) or not weights.sum() > 0:
        raise InvalidInputError("weights must be non-negative, one per point, with positive sum")
    usable = points[weights > 0]
    n_distinct = np.unique(usable, axis=0).shape[0]
    if n_distinct < config.l:
        raise InvalidInputError(f"{n_distinct} distinct points cannot support {config.l} centers")

    rng = _restart_rng(config.rng_seed, ())
    centers = kmeans_plusplus(points, config.l, rng, weights)
    memberships = fcm_memberships(points, centers, config.m)
    losses = [fcm_loss(points, weights, centers, memberships, config.m)]
    n_iter = 0
    for n_iter in range(1, config.max_iterations + 1):
        new_centers, mass = _fcm_centers(points, weights, memberships, config.m)
        # a center that lost all mass keeps its position
        dead = ~(mass > 0)
        new_centers[dead] = centers[dead]
        shift = np.max(np.linalg.norm(new_centers - centers, axis=1))
        centers = new_centers
        memberships = fcm_memberships(points, centers, config.m)
        losses.append(fcm_loss(points, weights, centers, memberships, config.m))
        if shift < config.tolerance:
            break
    return FuzzyResult(centers, memberships, np.asarray(losses), n_iter)


# ---------------------------------------------------------------------------
# Algorithm: tracking the decomposition


@dataclass(frozen=True, eq=False)
class DecompositionTrack:
    track: TrackResult
    centers: np.ndarray  # (L, d)
    hierarchies: List[Hierarchy]
    decompositions: List[McDecomposition]
    fcm: FuzzyResult = field(repr=False, default=None)


def track_decomposition(
    stream: Sequence[DataLike],
    sdms_config: SdmsConfig = SdmsConfig(),
    fcm_config: FuzzyCMeansConfig = FuzzyCMeansConfig(),
) -> DecompositionTrack:
    """Track MC, group all fitted component means into L common upper
    components with weighted fuzzy c-means, then decompose every window."""
    windows = [as_dataset(w) for w in stream]
    track = track_mc(windows, sdms_config)

    means = [f.model.means for f in track.fitted]
    weights = [f.model.weights for f in track.fitted]
    pool_x = np.concatenate(means)
    pool_w = np.concatenate(weights)
    keep = pool_w > 0
    fcm = fuzzy_cmeans(pool_x[keep], pool_w[keep], fcm_config)

    hierarchies, decompositions = [], []
    for window, fitted in zip(windows, track.fitted):
        q = fcm_memberships(fitted.model.means, fcm.centers, fcm_config.m)
        h = Hierarchy(q)
        hierarchies.append(h)
        decompositions.append(decompose(fitted.model, window, h))
    return DecompositionTrack(track, fcm.centers, hierarchies, decompositions, fcm)
