import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from antsel.annealing import (
    NoNeighbourError,
    PtParams,
    QuboSaParams,
    SaParams,
    acceptance_probability,
    metropolis_accept,
    neighbour,
    pt_select,
    pt_swap_accept,
    qubo_anneal,
    sa_select,
    swap_probability,
)
from antsel.channel import Configuration, FullChannel, SystemDims, capacity_objective, sample_channel
from antsel.heuristics import es_select
from antsel.ising import brute_force_qubo, qubo_for_channel


class CountingObjective:
    def __init__(self, ch, rho):
        self.ch, self.rho, self.calls = ch, rho, 0

    def __call__(self, cfg):
        self.calls += 1
        return capacity_objective(self.ch, cfg, self.rho)


# --- neighbourhood --------------------------------------------------------------


def test_neighbour_uniform_small():
    dims = SystemDims(1, 1, 2)
    rng = np.random.default_rng(0)
    start = Configuration((0,), (0,))
    counts = Counter(neighbour(start, dims, rng) for _ in range(10_000))
    assert set(counts) == {Configuration((1,), (0,)), Configuration((0,), (1,))}
    assert stats.chisquare(list(counts.values())).pvalue > 0.001


def test_neighbour_uniform_over_eight():
    dims = SystemDims(2, 2, 3)
    rng = np.random.default_rng(1)
    start = Configuration((0, 1), (2, 0))
    counts = Counter(neighbour(start, dims, rng) for _ in range(16_000))
    assert len(counts) == 8
    assert stats.chisquare(list(counts.values())).pvalue > 0.001


@given(st.integers(1, 3), st.integers(1, 3), st.integers(2, 4), st.integers(0, 2**31))
def test_neighbour_differs_in_one_antenna(n_t, n_r, n, seed):
    dims = SystemDims(n_t, n_r, n)
    rng = np.random.default_rng(seed)
    cfg = Configuration.from_key(rng.integers(0, n, dims.n_antennas), dims)
    nb = neighbour(cfg, dims, rng)
    nb.validate(dims)
    assert sum(a != b for a, b in zip(cfg.key, nb.key)) == 1


def test_no_neighbour_when_single_state():
    dims = SystemDims(2, 2, 1)
    with pytest.raises(NoNeighbourError):
        neighbour(Configuration((0, 0), (0, 0)), dims, np.random.default_rng(0))
    ch = sample_channel(dims, np.random.default_rng(0))
    with pytest.raises(NoNeighbourError):
        sa_select(ch, 1.0, SaParams(), np.random.default_rng(0))
    with pytest.raises(NoNeighbourError):
        pt_select(ch, 1.0, PtParams(), np.random.default_rng(0))


# --- acceptance rules -----------------------------------------------------------


def test_metropolis_examples(rng):
    assert acceptance_probability(0.5, 0.1) == 1.0
    assert acceptance_probability(-1e6, 0.1) == 0.0
    assert metropolis_accept(0.5, 0.1, rng)
    assert not metropolis_accept(-1e6, 0.1, rng)
    with pytest.raises(ValueError):
        acceptance_probability(0.1, 0.0)


def test_metropolis_frequency(rng):
    hits = sum(metropolis_accept(-0.1, 0.1, rng) for _ in range(100_000))
    assert abs(hits / 100_000 - math.exp(-1)) < 0.01


def test_swap_rules():
    # hotter replica i holds the larger capacity -> always swap
    assert swap_probability(0.1, 0.001, 5.0, 4.0) == 1.0
    assert swap_probability(0.1, 0.001, 3.0, 3.0) == 1.0
    assert swap_probability(0.1, 0.001, 4.0, 4.001) == pytest.approx(math.exp(-0.99))
    rng = np.random.default_rng(2)
    assert all(pt_swap_accept(0.1, 0.001, 5.0, 4.0, rng) for _ in range(1000))


def test_swap_frequency(rng):
    hits = sum(pt_swap_accept(0.1, 0.001, 4.0, 4.001, rng) for _ in range(100_000))
    assert abs(hits / 100_000 - math.exp(-0.99)) < 0.01


@given(st.floats(1e-3, 10), st.floats(1e-3, 10), st.floats(-20, 20), st.floats(-20, 20))
def test_swap_symmetry(ti, tj, ci, cj):
    assert swap_probability(ti, tj, ci, cj) == pytest.approx(swap_probability(tj, ti, cj, ci), rel=1e-12)


def test_param_validation():
    for bad in (dict(tau=0), dict(alpha=1.0), dict(eps=0), dict(k_steps=0)):
        with pytest.raises(ValueError):
            SaParams(**bad)
    with pytest.raises(ValueError):
        PtParams(taus=(0.1,))
    assert SaParams().steps_per_stage(SystemDims(3, 3, 10)) == 45_000
    assert PtParams().evaluations == 80_000


# --- SA ---------------------------------------------------------------------------


def dominant_channel(seed):
    """(2,2,2) channel with one configuration far stronger than the rest."""
    dims = SystemDims(2, 2, 2)
    rng = np.random.default_rng(seed)
    g = 0.1 * sample_channel(dims, rng).g
    cfg = Configuration.from_key(rng.integers(0, 2, 4), dims)
    rows, cols = cfg.rows(2), cfg.cols(2)
    g[np.ix_(rows, cols)] = 3.0 * np.eye(2) + 0.3 * rng.normal(size=(2, 2))
    return FullChannel(dims, g), cfg


def test_sa_finds_dominant_optimum():
    hits = 0
    for seed in range(100):
        ch, cfg = dominant_channel(seed)
        assert es_select(ch, "capacity", 10.0).config == cfg
        hits += sa_select(ch, 10.0, SaParams(), np.random.default_rng(seed)).config == cfg
    assert hits >= 95


def test_sa_evaluation_count_and_kernels_agree():
    dims = SystemDims(2, 2, 3)
    ch = sample_channel(dims, np.random.default_rng(5))
    params = SaParams(k_steps=300)
    counter = CountingObjective(ch, 10.0)
    slow = sa_select(ch, 10.0, params, np.random.default_rng(7), objective=counter)
    fast = sa_select(ch, 10.0, params, np.random.default_rng(7))
    assert slow.evaluations == counter.calls == 1 + slow.extras["stages"] * 300
    assert fast.config == slow.config and fast.evaluations == slow.evaluations
    assert fast.objective == pytest.approx(slow.objective, rel=1e-12)
    assert fast.final_config == slow.final_config


def test_sa_frozen_limit_is_hill_climbing():
    dims = SystemDims(2, 2, 4)
    ch = sample_channel(dims, np.random.default_rng(6))
    seen = []

    def objective(cfg):
        c = capacity_objective(ch, cfg, 10.0)
        seen.append(c)
        return c

    r = sa_select(ch, 10.0, SaParams(tau=1e-9, k_steps=200), np.random.default_rng(3), objective=objective)
    # only improvements are accepted, so the chain ends on its best state
    assert r.final_objective == r.objective
    assert r.objective == max(seen)


def test_sa_best_dominates_final():
    ch = sample_channel(SystemDims(3, 3, 3), np.random.default_rng(9))
    r = sa_select(ch, 10.0, SaParams(), np.random.default_rng(1))
    assert r.objective >= r.final_objective
    assert r.objective == pytest.approx(capacity_objective(ch, r.config, 10.0), rel=1e-12)


# --- PT ---------------------------------------------------------------------------


def test_pt_evaluation_count_exact():
    ch = sample_channel(SystemDims(3, 3, 4), np.random.default_rng(1))
    r = pt_select(ch, 10.0, PtParams(), np.random.default_rng(2))
    assert r.evaluations == 80_000
    small = PtParams(taus=(0.3, 0.1, 0.01), steps_per_epoch=7, epochs=5)
    counter = CountingObjective(ch, 10.0)
    slow = pt_select(ch, 10.0, small, np.random.default_rng(4), objective=counter)
    fast = pt_select(ch, 10.0, small, np.random.default_rng(4))
    assert counter.calls == slow.evaluations == 3 * 7 * 5
    assert fast.config == slow.config and fast.extras["swaps"] == slow.extras["swaps"]


@pytest.mark.slow
def test_pt_not_worse_than_sa():
    dims = SystemDims(3, 3, 5)
    sa, pt = [], []
    for t in range(500):
        rng = np.random.default_rng([99, t])
        ch = sample_channel(dims, rng)
        sa.append(sa_select(ch, 10.0, SaParams(), rng).objective)
        pt.append(pt_select(ch, 10.0, PtParams(), rng).objective)
    assert np.mean(pt) >= np.mean(sa) - 0.05


# --- QUBO annealing ---------------------------------------------------------------


def test_qubo_anneal_reaches_brute_force_minimum(rng):
    prob = qubo_for_channel(sample_channel(SystemDims(2, 2, 2), rng), 0.8)
    _, best = brute_force_qubo(prob)
    samples = qubo_anneal(prob, QuboSaParams(reads=200, sweeps=60), np.random.default_rng(1))
    assert samples.shape == (200, 8)
    assert prob.value(samples).min() == pytest.approx(best)
