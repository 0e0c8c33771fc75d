"""Structural properties of mixture complexity on randomized mixtures."""

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from mixcomp import GaussianComponent, MixtureModel, WeightedDataset, fit_weights, latent_entropy, mc
from helpers import random_mixture, random_spd, sample

seeds = st.integers(0, 2**32 - 1)


def identical_components(rng, k, d):
    comp = GaussianComponent(rng.normal(size=d), random_spd(rng, d))
    return MixtureModel(rng.dirichlet(np.ones(k)), [comp] * k)


def separated_instance(rng, k, d, n):
    """Components 1000 apart with exact empirical fractions equal to pi."""
    counts = rng.multinomial(n - k, np.ones(k) / k) + 1
    weights = counts / n
    means = [np.r_[1000.0 * j, np.zeros(d - 1)] for j in range(k)]
    comps = [GaussianComponent(mu, random_spd(rng, d, 0.5, 1.5)) for mu in means]
    x = np.vstack([rng.multivariate_normal(c.mean, c.covariance, size=c_n) for c, c_n in zip(comps, counts)])
    return MixtureModel(weights, comps), x


@settings(max_examples=50, deadline=None)
@given(seed=seeds, k=st.integers(1, 5), d=st.integers(1, 3), n=st.integers(1, 50))
def test_identical_components_zero(seed, k, d, n):
    rng = np.random.default_rng(seed)
    m = identical_components(rng, k, d)
    x = rng.normal(scale=3, size=(n, d))
    assert abs(mc(m, x)) <= 1e-12
    assert abs(mc(m, WeightedDataset(x, rng.uniform(0.1, 5, size=n)))) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seed=seeds, k=st.integers(1, 5), d=st.integers(1, 3))
def test_separated_equals_entropy(seed, k, d):
    rng = np.random.default_rng(seed)
    m, x = separated_instance(rng, k, d, 50)
    assert abs(mc(m, x) - latent_entropy(m.weights)) <= 1e-6


@settings(max_examples=50, deadline=None)
@given(seed=seeds, k=st.integers(1, 5))
def test_separated_balanced_is_log_k(seed, k):
    rng = np.random.default_rng(seed)
    comps = [GaussianComponent([60.0 * j], [[1.0]]) for j in range(k)]
    x = np.concatenate([rng.normal(size=10) + 60.0 * j for j in range(k)])
    assert abs(mc(MixtureModel(np.full(k, 1 / k), comps), x) - math.log(k)) <= 1e-6


@settings(max_examples=50, deadline=None)
@given(seed=seeds, k=st.integers(1, 5), d=st.integers(1, 3), n=st.integers(5, 50))
def test_optimized_weights_bounded(seed, k, d, n):
    rng = np.random.default_rng(seed)
    truth = random_mixture(rng, k, d, spread=2.0)
    x, _ = sample(truth, n, rng)
    m = fit_weights(truth.components, x)
    value = mc(m, x)
    assert -1e-9 <= value <= math.log(k) + 1e-9


@settings(max_examples=50, deadline=None)
@given(seed=seeds, k=st.integers(1, 5), d=st.integers(1, 3), frac=st.floats(0.0, 1.0))
def test_split_and_zero_append_invariance(seed, k, d, frac):
    rng = np.random.default_rng(seed)
    m = random_mixture(rng, k, d)
    x, _ = sample(m, 30, rng)
    base = mc(m, x)
    j = int(rng.integers(k))
    w = list(m.weights)
    comps = list(m.components)
    split_w = w[:j] + [w[j] * frac, w[j] * (1 - frac)] + w[j + 1 :]
    split = MixtureModel(np.array(split_w), comps[:j] + [comps[j], comps[j]] + comps[j + 1 :])
    assert abs(mc(split, x) - base) <= 1e-12
    extra = GaussianComponent(rng.normal(size=d), random_spd(rng, d))
    appended = MixtureModel(np.r_[m.weights, 0.0], comps + [extra])
    assert abs(mc(appended, x) - base) <= 1e-12
