"""Benchmark selection schemes: exhaustive, norm-based, random, sequential
elimination, decoupled exhaustive search and SNR-surrogate selection."""
from __future__ import annotations

from itertools import product

import numpy as np
from scipy import linalg

from .annealing import QuboSaParams, qubo_anneal
from .channel import (
    Configuration,
    FullChannel,
    SystemDims,
    batched_logdet_hpd,
    capacity_batch,
    capacity_of,
    iter_config_keys,
    logdet_hpd,
    reduce,
    reduce_batch,
    snr_batch,
    snr_objective,
    snr_optimal_value,
    waterfilling,
)
from .cim import CimParams, cim_select
from .ising import decode_bits, feasible_mask, qubo_for_channel
from .results import SolverResult

ES_GUARD = 10**7
OBJECTIVES = ("snr", "capacity")


class SearchTooLarge(ValueError):
    pass


def _check_objective(objective: str):
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")


def es_evaluation_count(dims: SystemDims) -> int:
    return dims.n ** (dims.n_t + dims.n_r)


def decoupled_es_evaluation_count(dims: SystemDims) -> int:
    return dims.n**dims.n_r + dims.n**dims.n_t


def se_evaluation_count(dims: SystemDims) -> int:
    return (dims.n_t + dims.n_r) * (dims.n * (dims.n + 1) // 2 - 1)


def _guard(count: int):
    if count > ES_GUARD:
        raise SearchTooLarge(f"{count} evaluations exceeds the exhaustive-search guard {ES_GUARD}")


def _exhaustive(ch: FullChannel, score_batch) -> tuple[np.ndarray, float, int]:
    best_key, best_val, count = None, -np.inf, 0
    for keys in iter_config_keys(ch.dims):
        vals = score_batch(keys)
        count += len(keys)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_key, best_val = keys[i], float(vals[i])
    return best_key, best_val, count


def es_select(ch: FullChannel, objective: str = "capacity", p_over_nt: float = 1.0) -> SolverResult:
    """Exact optimum over all configurations with symmetric power.

    The SNR objective is the unscaled trace objective.  Ties go to the
    lexicographically smallest configuration.
    """
    _check_objective(objective)
    _guard(es_evaluation_count(ch.dims))
    if objective == "snr":
        key, val, count = _exhaustive(ch, lambda k: snr_batch(ch, k))
    else:
        key, val, count = _exhaustive(ch, lambda k: capacity_batch(ch, k, p_over_nt))
    return SolverResult(Configuration.from_key(key, ch.dims), val, count)


def waterfill_batch(gains: np.ndarray, total_power: float) -> np.ndarray:
    """Water-filling capacity for each row of ``gains`` (vectorized)."""
    g = -np.sort(-np.clip(gains, 0.0, None), axis=1)
    with np.errstate(divide="ignore"):
        inv = np.where(g > 0, 1.0 / np.where(g > 0, g, 1.0), np.inf)
    k = np.arange(1, g.shape[1] + 1)
    csum = np.cumsum(np.where(np.isfinite(inv), inv, 0.0), axis=1)
    levels = (total_power + csum) / k
    valid = (levels >= inv) & np.isfinite(inv)
    last = g.shape[1] - 1 - np.argmax(valid[:, ::-1], axis=1)
    level = levels[np.arange(g.shape[0]), last]
    alloc = np.where(np.isfinite(inv), np.maximum(0.0, level[:, None] - inv), 0.0)
    out = np.sum(np.log2(1.0 + alloc * g), axis=1)
    return np.where(valid.any(axis=1), out, 0.0)


def joint_es_select(ch: FullChannel, objective: str, total_power: float) -> SolverResult:
    """Exhaustive search where each configuration gets its optimal power allocation."""
    _check_objective(objective)
    _guard(es_evaluation_count(ch.dims))

    def score(keys):
        h = reduce_batch(ch, keys)
        gains = np.linalg.eigvalsh(np.einsum("kba,kbc->kac", h.conj(), h))
        if objective == "snr":
            return total_power * np.maximum(gains[:, -1], 0.0)
        return waterfill_batch(gains, total_power)

    key, val, count = _exhaustive(ch, score)
    return SolverResult(Configuration.from_key(key, ch.dims), val, count)


def config_es_with_power(ch: FullChannel, objective: str, total_power: float) -> SolverResult:
    """Configuration-based ES under symmetric power, then optimal power for the winner."""
    sym = es_select(ch, objective, total_power / ch.dims.n_t)
    h = reduce(ch, sym.config)
    if objective == "snr":
        val = snr_optimal_value(h, total_power)
    else:
        val = waterfilling(h, total_power).achieved_objective
    return SolverResult(sym.config, val, sym.evaluations, extras={"symmetric_objective": sym.objective})


def nsa_select(ch: FullChannel, rx_first: bool = True) -> Configuration:
    """Norm-based selection.

    The first end picks, per antenna, the state whose full row (column) of
    the complete matrix has the largest norm; the other end then picks by
    norm restricted to the already selected rows (columns).  Ties go to the
    lowest state index.
    """
    d = ch.dims
    p = np.abs(ch.g) ** 2

    def pick(power_by_state: np.ndarray, count: int) -> np.ndarray:
        return np.argmax(power_by_state.reshape(count, d.n), axis=1)

    if rx_first:
        rx = pick(p.sum(axis=1), d.n_r)
        rows = np.arange(d.n_r) * d.n + rx
        tx = pick(p[rows].sum(axis=0), d.n_t)
    else:
        tx = pick(p.sum(axis=0), d.n_t)
        cols = np.arange(d.n_t) * d.n + tx
        rx = pick(p[:, cols].sum(axis=1), d.n_r)
    return Configuration(tx, rx)


def rs_select(dims: SystemDims, rng: np.random.Generator) -> Configuration:
    key = rng.integers(0, dims.n, size=dims.n_antennas)
    return Configuration.from_key(key, dims)


# --- sequential elimination -----------------------------------------------------

RIDGE = 1e-10
COND_LIMIT = 1e12


def _loss_terms(g: np.ndarray, rho: float):
    """Quadratic forms g_k [I + ρ GᴴG]⁻¹ g_kᴴ for every row, and a ridge flag."""
    a = np.eye(g.shape[1]) + rho * (g.conj().T @ g)
    ridged = bool(np.linalg.cond(a) > COND_LIMIT)
    if ridged:
        a = a + RIDGE * np.eye(a.shape[0])
    factor = linalg.cho_factor(a, lower=True)
    sol = linalg.cho_solve(factor, g.conj().T)  # columns A⁻¹ g_kᴴ
    return np.real(np.einsum("ki,ik->k", g, sol)), ridged


def _full_capacity(g: np.ndarray, rho: float) -> float:
    if g.shape[0] <= g.shape[1]:
        return logdet_hpd(np.eye(g.shape[0]) + rho * (g @ g.conj().T))
    return logdet_hpd(np.eye(g.shape[1]) + rho * (g.conj().T @ g))


def _eliminate(g: np.ndarray, blocks: int, n: int, rho: float, log: list) -> np.ndarray:
    """Keep one row per block of ``n`` rows, removing the least-loss row each time.

    Returns the kept row's in-block state for each block.
    """
    keep = list(range(g.shape[0]))
    for blk in range(blocks):
        cand = [blk * n + l for l in range(n)]
        for _ in range(n - 1):
            cur = g[keep]
            terms, ridged = _loss_terms(cur, rho)
            pos = [keep.index(c) for c in cand]
            i = int(np.argmin(terms[pos]))
            victim = cand[i]
            before = _full_capacity(cur, rho)
            predicted = before + float(np.log2(1.0 - rho * terms[pos[i]]))
            keep.remove(victim)
            cand.remove(victim)
            after = _full_capacity(g[keep], rho)
            log.append(
                {"candidates": len(pos), "before": before, "after": after,
                 "predicted": predicted, "ridged": ridged}
            )
    states = [r - blk * n for blk in range(blocks) for r in keep if blk * n <= r < (blk + 1) * n]
    return np.array(states, dtype=int)


def se_select(ch: FullChannel, p_over_nt: float) -> SolverResult:
    """Decoupled selection by sequential row then column elimination."""
    d = ch.dims
    log: list = []
    rx = _eliminate(ch.g, d.n_r, d.n, p_over_nt, log)
    rows = np.arange(d.n_r) * d.n + rx
    g_bar_h = ch.g[rows].conj().T  # (n*n_t, n_r): columns become rows
    tx = _eliminate(g_bar_h, d.n_t, d.n, p_over_nt, log)
    cfg = Configuration(tx, rx)
    errors = [abs(e["after"] - e["predicted"]) for e in log]
    return SolverResult(
        cfg,
        capacity_of(reduce(ch, cfg), p_over_nt),
        sum(e["candidates"] for e in log),
        extras={
            "steps": log,
            "identity_max_error": max(errors, default=0.0),
            "ridged": any(e["ridged"] for e in log),
        },
    )


# --- decoupled exhaustive search ------------------------------------------------


def _side_keys(count: int, n: int) -> np.ndarray:
    return np.array(list(product(range(n), repeat=count)), dtype=np.int64).reshape(-1, count)


def decoupled_es_select(ch: FullChannel, p_over_nt: float, rx_first: bool = True) -> SolverResult:
    """Pick one side's states with the other side fully open, then the other side."""
    d = ch.dims
    _guard(decoupled_es_evaluation_count(d))
    if rx_first:
        first_count, g = d.n_r, ch.g
    else:
        first_count, g = d.n_t, ch.g.T
    first_keys = _side_keys(first_count, d.n)
    sel = np.arange(first_count) * d.n + first_keys  # (K, first_count)
    sub = g[sel]  # (K, first_count, n*other)
    gram = np.einsum("kai,kbi->kab", sub, sub.conj())
    vals = batched_logdet_hpd(np.eye(first_count) + p_over_nt * gram)
    first = first_keys[int(np.argmax(vals))]

    second_count = d.n_t if rx_first else d.n_r
    second_keys = _side_keys(second_count, d.n)
    if rx_first:
        keys = np.hstack([second_keys, np.broadcast_to(first, (len(second_keys), d.n_r))])
    else:
        keys = np.hstack([np.broadcast_to(first, (len(second_keys), d.n_t)), second_keys])
    cvals = capacity_batch(ch, keys, p_over_nt)
    i = int(np.argmax(cvals))
    return SolverResult(
        Configuration.from_key(keys[i], d),
        float(cvals[i]),
        len(first_keys) + len(second_keys),
    )


# --- SNR-surrogate selection ----------------------------------------------------

SNR_BACKENDS = ("cim", "qubo_sa", "brute")


def snr_based_select(
    ch: FullChannel,
    backend: str = "cim",
    params=None,
    rng: np.random.Generator | None = None,
) -> SolverResult:
    """Maximize the trace (low-SNR) surrogate with the chosen back-end.

    ``brute`` is the exact search over configurations; ``cim`` and
    ``qubo_sa`` keep the best feasible decoded sample and fall back to a
    random configuration (``extras["fallback"]``) when none is feasible.
    The reported objective is the trace objective of the selection.
    """
    if backend not in SNR_BACKENDS:
        raise ValueError(f"backend must be one of {SNR_BACKENDS}, got {backend!r}")
    if backend == "brute":
        res = es_select(ch, "snr")
        res.extras["fallback"] = False
        return res
    if rng is None:
        raise ValueError(f"backend {backend!r} needs an rng")
    if backend == "cim":
        params = params or CimParams()
        out = cim_select(ch, params, rng)
        return SolverResult(
            out.best_config, out.best_q0, params.anneals, feasible=out.any_feasible,
            extras={"fallback": not out.any_feasible, "p_c": out.p_c},
        )
    params = params or QuboSaParams()
    sample_rng, fallback_rng = rng.spawn(2)
    bits = qubo_anneal(qubo_for_channel(ch, params.lam), params, sample_rng)
    feas = feasible_mask(bits, ch.dims)
    if feas.any():
        cfgs = {decode_bits(b, ch.dims) for b in bits[feas]}
        best = max(sorted(cfgs, key=lambda c: c.key), key=lambda c: snr_objective(ch, c))
        fallback = False
    else:
        best = rs_select(ch.dims, fallback_rng)
        fallback = True
    return SolverResult(
        best, snr_objective(ch, best), params.reads, feasible=not fallback,
        extras={"fallback": fallback, "p_c": float(feas.mean())},
    )
