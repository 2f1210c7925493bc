"""Simulated coherent Ising machine with amplitude-heterogeneity correction.

The dynamics integrated (explicit Euler, all anneals of a problem in lockstep)::

    dx/dt = (1 - p) x - x³ + ε e ⊙ (J x),     ε = γ t
    de/dt = -β (x² - a) e,                     e > 0

Amplitudes are clamped to ``|x| <= clip_factor·sqrt(a)`` after each step:
with ε ramping to γ·steps·dt the coupling term outgrows the Euler stability
region and unclamped runs overflow within ~50 steps.  The spin readout is
``sgn(x)`` with ``sgn(0) = +1``.  The coupling sign makes the machine
*maximize* ``s0ᵀ J s0``, matching :mod:`antsel.ising`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Configuration, FullChannel, SystemDims
from .ising import IsingProblem, feasible_mask, ising_for_channel, spins_to_bits

E_FLOOR = 1e-12
INIT_AMPLITUDE = 1e-3


class IntegrationDivergence(FloatingPointError):
    def __init__(self, step: int):
        super().__init__(f"CIM state became non-finite at time-step {step}")
        self.step = step


@dataclass(frozen=True)
class CimParams:
    p: float = 0.98
    beta: float = 1.0
    a: float = 2.0
    gamma: float = 100.0
    dt: float = 0.01
    steps: int = 1000
    anneals: int = 1000
    lam: float = 0.5
    clip_factor: float | None = 1.5  # |x| <= clip_factor * sqrt(a); None disables

    @property
    def x_clip(self) -> float | None:
        return None if self.clip_factor is None else self.clip_factor * float(np.sqrt(self.a))

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps < 0 or self.anneals < 1:
            raise ValueError("steps must be >= 0 and anneals >= 1")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")


@dataclass
class CimState:
    x: np.ndarray
    e: np.ndarray


@dataclass
class CimSolveResult:
    best_config: Configuration
    best_q0: float
    avg_q0: float
    feasible: np.ndarray  # per anneal
    q0: np.ndarray  # per anneal; RS fallback value where infeasible
    configs: list[Configuration] = field(repr=False)
    any_feasible: bool = True

    @property
    def p_c(self) -> float:
        return float(np.mean(self.feasible))


def cim_step(state: CimState, problem, params: CimParams, t: float, step: int = 0) -> CimState:
    """One Euler step; ``state.x``/``state.e`` may be 1-D or (anneals, spins)."""
    j = problem.j_matrix if isinstance(problem, IsingProblem) else np.asarray(problem, dtype=float)
    x, e = state.x, state.e
    eps = params.gamma * t
    with np.errstate(over="ignore", invalid="ignore"):
        x2 = x * x
        coupling = x @ j  # j is symmetric
        x_new = x + params.dt * ((1.0 - params.p - x2) * x + eps * e * coupling)
        e_new = e * (1.0 - params.dt * params.beta * (x2 - params.a))
    clip = params.x_clip
    if clip is not None:
        np.clip(x_new, -clip, clip, out=x_new)
    np.maximum(e_new, E_FLOOR, out=e_new)
    if not np.isfinite(x_new.sum() + e_new.sum()):
        raise IntegrationDivergence(step)
    return CimState(x_new, e_new)


def sign_readout(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, 1, -1).astype(np.int8)


def initial_state(n_spins: int, anneals: int, rng: np.random.Generator) -> CimState:
    x = rng.uniform(-INIT_AMPLITUDE, INIT_AMPLITUDE, size=(anneals, n_spins))
    return CimState(x, np.ones_like(x))


def _integrate(problem, params: CimParams, rng: np.random.Generator, anneals: int, on_step=None):
    state = initial_state(problem.size, anneals, rng)
    if on_step is not None:
        on_step(0, state)
    for k in range(params.steps):
        state = cim_step(state, problem, params, k * params.dt, step=k)
        if on_step is not None:
            on_step(k + 1, state)
    return state


def run_anneal(problem, params: CimParams, rng: np.random.Generator) -> np.ndarray:
    """Spin vector of a single anneal."""
    return sign_readout(_integrate(problem, params, rng, 1).x[0])


def run_anneals(problem, params: CimParams, rng: np.random.Generator) -> np.ndarray:
    """Spin readouts of ``params.anneals`` independent anneals, shape (anneals, spins)."""
    return sign_readout(_integrate(problem, params, rng, params.anneals).x)


def _q0_of_bits(bits: np.ndarray, t_matrix: np.ndarray, dims: SystemDims) -> np.ndarray:
    x = bits[:, : dims.tx_cols].astype(float)
    y = bits[:, dims.tx_cols :].astype(float)
    return np.einsum("ki,ij,kj->k", x, t_matrix, y)


def _states_of_bits(bits: np.ndarray, dims: SystemDims) -> np.ndarray:
    return np.argmax(bits.reshape(bits.shape[0], dims.n_antennas, dims.n), axis=2)


def _q0_of_keys(keys: np.ndarray, t_matrix: np.ndarray, dims: SystemDims) -> np.ndarray:
    cols = np.arange(dims.n_t) * dims.n + keys[:, : dims.n_t]
    rows = np.arange(dims.n_r) * dims.n + keys[:, dims.n_t :]
    return t_matrix[cols[:, :, None], rows[:, None, :]].sum(axis=(1, 2))


def cim_select(ch: FullChannel, params: CimParams, rng: np.random.Generator) -> CimSolveResult:
    """Run all anneals on the channel's spin problem and decode each readout.

    Infeasible readouts are replaced by a uniformly random configuration
    (drawn from a dedicated stream in anneal order) and counted in the
    average; the best configuration is taken over feasible anneals only,
    falling back to the first random draw when no anneal is feasible.
    """
    dims = ch.dims
    init_rng, fallback_rng = rng.spawn(2)
    problem = ising_for_channel(ch, params.lam)
    spins = run_anneals(problem, params, init_rng)
    bits = spins_to_bits(spins)
    feas = feasible_mask(bits, dims)
    t_matrix = np.abs(ch.g.T) ** 2
    fallback = fallback_rng.integers(0, dims.n, size=(params.anneals, dims.n_antennas))
    keys = np.where(feas[:, None], _states_of_bits(bits, dims), fallback)
    q0 = _q0_of_keys(keys, t_matrix, dims)
    configs = [Configuration.from_key(k, dims) for k in keys]
    if feas.any():
        idx = np.flatnonzero(feas)
        best = int(idx[np.argmax(q0[idx])])
    else:
        best = 0
    return CimSolveResult(
        best_config=configs[best],
        best_q0=float(q0[best]),
        avg_q0=float(np.mean(q0)),
        feasible=feas,
        q0=q0,
        configs=configs,
        any_feasible=bool(feas.any()),
    )


@dataclass
class CimTrace:
    steps: np.ndarray
    e_rho: np.ndarray
    p_c: np.ndarray

    def rows(self):
        return zip(self.steps.tolist(), self.e_rho.tolist(), self.p_c.tolist())


def cim_trace(ch: FullChannel, params: CimParams, rng: np.random.Generator) -> CimTrace:
    """Per-step anneal-averaged objective and feasibility of the sign readout.

    Infeasible readouts contribute the expected random-selection objective
    (mean over all configurations), which is the fallback's expectation.
    """
    dims = ch.dims
    init_rng, _ = rng.spawn(2)
    problem = ising_for_channel(ch, params.lam)
    t_matrix = np.abs(ch.g.T) ** 2
    rs_mean = float(t_matrix.sum()) / dims.n**2
    e_rho = np.empty(params.steps + 1)
    p_c = np.empty(params.steps + 1)

    def record(k, state):
        bits = spins_to_bits(sign_readout(state.x))
        feas = feasible_mask(bits, dims)
        q0 = np.where(feas, _q0_of_bits(bits, t_matrix, dims), rs_mean)
        e_rho[k] = q0.mean()
        p_c[k] = feas.mean()

    _integrate(problem, params, init_rng, params.anneals, on_step=record)
    return CimTrace(np.arange(params.steps + 1), e_rho, p_c)
