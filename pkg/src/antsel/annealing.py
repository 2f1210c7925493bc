"""Simulated annealing and parallel tempering over antenna configurations.

Both run Metropolis chains on the capacity objective.  A move changes the
state of exactly one antenna.  Random numbers for a block of steps are drawn
up front (antenna index, state offset, uniform) so that the jitted chain
kernel and the pure-Python reference kernel consume identical streams and
produce identical trajectories.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .channel import Configuration, FullChannel, SystemDims
from .results import SolverResult


class NoNeighbourError(ValueError):
    """Raised when every antenna has a single state, so no move exists."""


@dataclass(frozen=True)
class SaParams:
    tau: float = 0.1
    alpha: float = 0.75
    eps: float = 1e-3
    k_steps: int | None = None  # None: 50 * n**2 * n_r * n_t
    max_stages: int = 10_000

    def __post_init__(self):
        if self.tau <= 0 or not 0 < self.alpha < 1 or self.eps <= 0:
            raise ValueError("need tau > 0, 0 < alpha < 1, eps > 0")
        if self.k_steps is not None and self.k_steps < 1:
            raise ValueError("k_steps must be >= 1")

    def steps_per_stage(self, dims: SystemDims) -> int:
        if self.k_steps is not None:
            return self.k_steps
        return 50 * dims.n**2 * dims.n_r * dims.n_t


@dataclass(frozen=True)
class PtParams:
    taus: tuple[float, ...] = (0.1, 0.001)
    steps_per_epoch: int = 200
    epochs: int = 200

    def __post_init__(self):
        object.__setattr__(self, "taus", tuple(float(t) for t in self.taus))
        if len(self.taus) < 2 or min(self.taus) <= 0:
            raise ValueError("need at least two positive control parameters")
        if self.steps_per_epoch < 1 or self.epochs < 1:
            raise ValueError("steps_per_epoch and epochs must be >= 1")

    @property
    def evaluations(self) -> int:
        return len(self.taus) * self.steps_per_epoch * self.epochs


# --- elementary moves ---------------------------------------------------------


def _require_neighbours(dims: SystemDims):
    if dims.n < 2:
        raise NoNeighbourError("n = 1: every configuration is isolated")


def apply_move(key, antenna: int, offset: int, n: int) -> tuple[int, ...]:
    """Shift one antenna's state by ``offset`` in 1..n-1 (mod n)."""
    key = list(key)
    key[antenna] = (key[antenna] + offset) % n
    return tuple(key)


def neighbour(cfg: Configuration, dims: SystemDims, rng: np.random.Generator) -> Configuration:
    """Uniform draw from the configurations differing in exactly one antenna state."""
    _require_neighbours(dims)
    antenna = int(rng.integers(dims.n_antennas))
    offset = int(rng.integers(1, dims.n))
    return Configuration.from_key(apply_move(cfg.key, antenna, offset, dims.n), dims)


def acceptance_probability(delta_c: float, tau: float) -> float:
    if tau <= 0:
        raise ValueError("tau must be positive")
    if delta_c >= 0:
        return 1.0
    return math.exp(delta_c / tau)


def metropolis_accept(delta_c: float, tau: float, rng: np.random.Generator) -> bool:
    return bool(rng.random() < acceptance_probability(delta_c, tau))


def swap_probability(tau_i: float, tau_j: float, c_i: float, c_j: float) -> float:
    if tau_i <= 0 or tau_j <= 0:
        raise ValueError("control parameters must be positive")
    exponent = (1.0 / tau_i - 1.0 / tau_j) * (c_j - c_i)
    return 1.0 if exponent >= 0 else math.exp(exponent)


def pt_swap_accept(tau_i, tau_j, c_i, c_j, rng: np.random.Generator) -> bool:
    return bool(rng.random() < swap_probability(tau_i, tau_j, c_i, c_j))


# --- chain kernels ------------------------------------------------------------


@numba.njit(cache=True)
def _capacity_nb(g, key, n, n_t, n_r, rho):
    h = np.empty((n_r, n_t), dtype=np.complex128)
    for b in range(n_r):
        row = b * n + key[n_t + b]
        for a in range(n_t):
            h[b, a] = g[row, a * n + key[a]]
    m = np.empty((n_t, n_t), dtype=np.complex128)
    for i in range(n_t):
        for j in range(i, n_t):
            acc = 0j
            for b in range(n_r):
                acc += h[b, i].conjugate() * h[b, j]
            acc *= rho
            if i == j:
                acc += 1.0
            m[i, j] = acc
            m[j, i] = acc.conjugate()
    # in-place Cholesky, lower triangle
    logdet = 0.0
    for j in range(n_t):
        d = m[j, j].real
        for k in range(j):
            d -= m[j, k].real ** 2 + m[j, k].imag ** 2
        d = math.sqrt(d)
        logdet += math.log2(d)
        m[j, j] = d
        for i in range(j + 1, n_t):
            acc = m[i, j]
            for k in range(j):
                acc -= m[i, k] * m[j, k].conjugate()
            m[i, j] = acc / d
    return 2.0 * logdet


@numba.njit(cache=True)
def _stage_nb(g, n, n_t, n_r, rho, key, cur_c, best_key, best_c, ant, off, u, tau):
    accepted = 0
    for k in range(ant.shape[0]):
        a = ant[k]
        old = key[a]
        key[a] = (old + off[k]) % n
        c = _capacity_nb(g, key, n, n_t, n_r, rho)
        d = c - cur_c
        p = 1.0 if d >= 0 else math.exp(d / tau)
        if u[k] < p:
            cur_c = c
            accepted += 1
            if c > best_c:
                best_c = c
                best_key[:] = key
        else:
            key[a] = old
    return accepted, cur_c, best_c


class _Chain:
    """Current and best state of one Metropolis chain."""

    def __init__(self, key: np.ndarray, c: float):
        self.key = key.copy()
        self.c = c
        self.best_key = key.copy()
        self.best_c = c


class _Runner:
    """Evaluates capacities for one channel through either kernel."""

    def __init__(self, ch: FullChannel, p_over_nt: float, objective=None):
        self.ch = ch
        self.dims = ch.dims
        self.rho = float(p_over_nt)
        self.objective = objective
        self.evaluations = 0

    def evaluate(self, key: np.ndarray) -> float:
        self.evaluations += 1
        if self.objective is not None:
            return float(self.objective(Configuration.from_key(key, self.dims)))
        d = self.dims
        return float(_capacity_nb(self.ch.g, key, d.n, d.n_t, d.n_r, self.rho))

    def stage(self, chain: _Chain, ant, off, u, tau: float) -> int:
        steps = ant.shape[0]
        if self.objective is None:
            d = self.dims
            accepted, chain.c, chain.best_c = _stage_nb(
                self.ch.g, d.n, d.n_t, d.n_r, self.rho,
                chain.key, chain.c, chain.best_key, chain.best_c, ant, off, u, tau,
            )
            self.evaluations += steps
            return int(accepted)
        accepted = 0
        n = self.dims.n
        for k in range(steps):
            a = ant[k]
            old = chain.key[a]
            chain.key[a] = (old + off[k]) % n
            c = self.evaluate(chain.key)
            if u[k] < acceptance_probability(c - chain.c, tau):
                chain.c = c
                accepted += 1
                if c > chain.best_c:
                    chain.best_c = c
                    chain.best_key[:] = chain.key
            else:
                chain.key[a] = old
        return accepted


def _draws(rng: np.random.Generator, dims: SystemDims, steps: int):
    ant = rng.integers(0, dims.n_antennas, size=steps)
    off = rng.integers(1, dims.n, size=steps)
    u = rng.random(steps)
    return ant, off, u


def _random_key(rng: np.random.Generator, dims: SystemDims) -> np.ndarray:
    return rng.integers(0, dims.n, size=dims.n_antennas)


def sa_select(
    ch: FullChannel,
    p_over_nt: float,
    params: SaParams,
    rng: np.random.Generator,
    objective=None,
) -> SolverResult:
    """Simulated-annealing selection with geometric cooling.

    Each stage runs K candidate moves at a fixed control parameter, then
    multiplies it by ``alpha``; the run stops after the first stage whose
    acceptance ratio falls below ``eps``.  Returns the best configuration
    visited; the chain's final configuration is in ``final_config``.

    ``objective`` (a callable on :class:`Configuration`) switches to the
    pure-Python kernel, which follows the same trajectory.
    """
    dims = ch.dims
    _require_neighbours(dims)
    runner = _Runner(ch, p_over_nt, objective)
    k_steps = params.steps_per_stage(dims)
    key = _random_key(rng, dims)
    chain = _Chain(key, runner.evaluate(key))
    tau = params.tau
    stages = 0
    ratios = []
    while stages < params.max_stages:
        ant, off, u = _draws(rng, dims, k_steps)
        accepted = runner.stage(chain, ant, off, u, tau)
        stages += 1
        ratio = accepted / k_steps
        ratios.append(ratio)
        tau *= params.alpha
        if ratio < params.eps:
            break
    return SolverResult(
        config=Configuration.from_key(chain.best_key, dims),
        objective=float(chain.best_c),
        evaluations=runner.evaluations,
        final_config=Configuration.from_key(chain.key, dims),
        final_objective=float(chain.c),
        extras={"stages": stages, "final_tau": tau, "acceptance_ratios": ratios},
    )


def pt_select(
    ch: FullChannel,
    p_over_nt: float,
    params: PtParams,
    rng: np.random.Generator,
    objective=None,
) -> SolverResult:
    """Parallel tempering: replicas exchange control parameters between epochs.

    Every replica starts from an independent random configuration whose
    evaluation is the first step of its chain, so the total number of
    capacity evaluations is exactly ``R * steps_per_epoch * epochs``.
    After each epoch, replicas adjacent on the temperature ladder (hottest
    first) attempt an exchange.
    """
    dims = ch.dims
    _require_neighbours(dims)
    runner = _Runner(ch, p_over_nt, objective)
    n_rep = len(params.taus)
    chains = []
    for _ in range(n_rep):
        key = _random_key(rng, dims)
        chains.append(_Chain(key, runner.evaluate(key)))
    # ladder[i] = replica currently holding params.taus[i]
    ladder = list(range(n_rep))
    order = sorted(range(n_rep), key=lambda i: -params.taus[i])
    swaps = 0
    for epoch in range(params.epochs):
        steps = params.steps_per_epoch - (1 if epoch == 0 else 0)
        for slot, rep in enumerate(ladder):
            if steps:
                ant, off, u = _draws(rng, dims, steps)
                runner.stage(chains[rep], ant, off, u, params.taus[slot])
        for hi, lo in zip(order[:-1], order[1:]):
            ri, rj = ladder[hi], ladder[lo]
            if pt_swap_accept(params.taus[hi], params.taus[lo], chains[ri].c, chains[rj].c, rng):
                ladder[hi], ladder[lo] = rj, ri
                swaps += 1
    best = max(chains, key=lambda c: c.best_c)
    coldest = ladder[order[-1]]
    return SolverResult(
        config=Configuration.from_key(best.best_key, dims),
        objective=float(best.best_c),
        evaluations=runner.evaluations,
        final_config=Configuration.from_key(chains[coldest].key, dims),
        final_objective=float(chains[coldest].c),
        extras={"swaps": swaps},
    )


# --- QUBO annealing (desk stand-in for an annealer) ----------------------------


@dataclass(frozen=True)
class QuboSaParams:
    """Single-flip Metropolis sweeps on a minimized QUBO, many independent reads."""

    lam: float = 0.8
    reads: int = 2000
    sweeps: int = 100
    beta_start: float = 0.1
    beta_end: float = 20.0


def qubo_anneal(problem, params: QuboSaParams, rng: np.random.Generator) -> np.ndarray:
    """Final binary samples of ``params.reads`` annealing runs, shape (reads, size).

    Minimizes ``bᵀWb`` with a geometric inverse-temperature schedule; all
    reads advance in lockstep, one variable at a time.
    """
    w = np.asarray(getattr(problem, "w_matrix", problem), dtype=float)
    size = w.shape[0]
    diag = np.diag(w).copy()
    off = w - np.diag(diag)
    b = rng.integers(0, 2, size=(params.reads, size)).astype(float)
    field_ = b @ off  # Σ_j W_ij b_j (j != i), per read
    betas = np.geomspace(params.beta_start, params.beta_end, params.sweeps)
    for beta in betas:
        u = rng.random((params.reads, size))
        for i in range(size):
            flip = 1.0 - 2.0 * b[:, i]
            delta = flip * (diag[i] + 2.0 * field_[:, i])
            accept = (delta <= 0) | (u[:, i] < np.exp(-beta * np.maximum(delta, 0.0)))
            if accept.any():
                change = np.where(accept, flip, 0.0)
                b[:, i] += change
                field_ += change[:, None] * off[i][None, :]
    return b.astype(np.int8)
