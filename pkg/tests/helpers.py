"""Shared fixtures-by-function for the test suite (kept import-light)."""

import math

import numpy as np

from mixcomp.mixture import GaussianComponent, MixtureModel


def random_spd(rng, d, lo=0.3, hi=2.0):
    a = rng.normal(size=(d, d))
    q, _ = np.linalg.qr(a)
    return q @ np.diag(rng.uniform(lo, hi, size=d)) @ q.T


def random_mixture(rng, k, d, spread=3.0, zero_weights=False, concentration=1.0):
    w = rng.dirichlet(np.full(k, concentration))
    if zero_weights and k > 1:
        w[rng.integers(k)] = 0.0
        w /= w.sum()
    comps = [GaussianComponent(rng.normal(scale=spread, size=d), random_spd(rng, d)) for _ in range(k)]
    return MixtureModel(w, comps)


def sample(model, n, rng):
    z = rng.choice(model.n_components, size=n, p=model.weights)
    out = np.empty((n, model.dim))
    for k, comp in enumerate(model.components):
        idx = np.flatnonzero(z == k)
        out[idx] = rng.multivariate_normal(comp.mean, comp.covariance, size=idx.size)
    return out, z


def naive_gauss(x, mean, cov):
    """Direct density with no log-space tricks."""
    x, mean, cov = np.asarray(x, float), np.asarray(mean, float), np.asarray(cov, float)
    d = mean.shape[0]
    diff = x - mean
    quad = diff @ np.linalg.solve(cov, diff)
    return math.exp(-0.5 * quad) / math.sqrt((2 * math.pi) ** d * np.linalg.det(cov))


def naive_mc(model, points, weights=None):
    """Plain double loop over points and components."""
    points = np.atleast_2d(np.asarray(points, float))
    if points.shape[0] == 1 and model.dim == 1 and points.shape[1] != 1:
        points = points.T
    weights = np.ones(points.shape[0]) if weights is None else np.asarray(weights, float)
    total = 0.0
    for x, w in zip(points, weights):
        g = [naive_gauss(x, c.mean, c.covariance) for c in model.components]
        f = sum(p * gk for p, gk in zip(model.weights, g))
        s = 0.0
        for p, gk in zip(model.weights, g):
            if p * gk > 0:
                s += p * gk / f * math.log(gk / f)
        total += w * s
    return total / weights.sum()
