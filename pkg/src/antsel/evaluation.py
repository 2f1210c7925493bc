"""Monte Carlo experiment harness: trial records, metrics and persisted outputs.

Every trial derives its random streams from ``(master_seed, trial_index, ...)``
through :class:`numpy.random.SeedSequence` spawn keys, so results do not
depend on the order trials run in or on how many workers run them.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import stats

from .annealing import PtParams, QuboSaParams, SaParams, pt_select, sa_select
from .channel import (
    Configuration,
    FullChannel,
    SystemDims,
    all_configurations,
    capacity_objective,
    sample_channel,
    snr_batch,
    snr_objective,
)
from .cim import CimParams, cim_select, cim_trace
from .heuristics import (
    decoupled_es_select,
    es_select,
    nsa_select,
    rs_select,
    se_select,
    snr_based_select,
)

SNR_SCHEMES = ("es", "nsa", "rs", "cim", "qubo_sa", "brute")
CAPACITY_SCHEMES = ("es", "sa", "pt", "se", "decoupled_es", "snr", "nsa", "rs")


# --- records and metrics ------------------------------------------------------


@dataclass
class TrialRecord:
    trial_index: int
    seed: int
    scheme: str
    objective: str
    value: float
    feasible: bool
    evaluations: int
    wall_time: float = 0.0
    lam: float | None = None
    p_c: float | None = None
    error: str | None = None

    CSV_FIELDS = ("trial_index", "seed", "scheme", "lam", "objective", "value", "feasible", "evaluations")


@dataclass
class EmpiricalCdf:
    """Step function ``F(x) = P(C < x)`` of a sample."""

    sorted_values: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return np.searchsorted(self.sorted_values, x, side="left") / self.sorted_values.size

    def points(self) -> list[tuple[float, float, float]]:
        """``(x, P(C < x), P(C <= x))`` at each distinct sample value."""
        xs = np.unique(self.sorted_values)
        n = self.sorted_values.size
        lt = np.searchsorted(self.sorted_values, xs, side="left") / n
        le = np.searchsorted(self.sorted_values, xs, side="right") / n
        return list(zip(xs.tolist(), lt.tolist(), le.tolist()))


def empirical_cdf(values) -> EmpiricalCdf:
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ValueError("empirical CDF of an empty sample")
    return EmpiricalCdf(np.sort(values))


def ks_distance(a, b) -> float:
    """Kolmogorov distance between two empirical distributions."""
    return float(stats.ks_2samp(np.asarray(a), np.asarray(b), method="asymp").statistic)


@dataclass
class OccurrenceTable:
    configs: list[Configuration]
    q0: list[float]
    probability: list[float]
    infeasible_mass: float

    @property
    def feasible_mass(self) -> float:
        return float(sum(self.probability))


def occurrence_ranking(samples) -> OccurrenceTable:
    """Rank distinct feasible configurations by descending Q0 (ties: lexicographic).

    ``samples`` is an iterable of ``(configuration, q0, feasible)``; each
    probability is a relative frequency over *all* samples.
    """
    samples = list(samples)
    total = len(samples)
    if total == 0:
        return OccurrenceTable([], [], [], 0.0)
    counts: dict[Configuration, int] = {}
    values: dict[Configuration, float] = {}
    infeasible = 0
    for cfg, q0, feasible in samples:
        if not feasible:
            infeasible += 1
            continue
        counts[cfg] = counts.get(cfg, 0) + 1
        values.setdefault(cfg, float(q0))
    ranked = sorted(counts, key=lambda c: (-values[c], c.key))
    return OccurrenceTable(
        ranked,
        [values[c] for c in ranked],
        [counts[c] / total for c in ranked],
        infeasible / total,
    )


@dataclass
class MetricsSummary:
    e_rho: dict = field(default_factory=dict)
    p_c: dict = field(default_factory=dict)
    p_oc: dict = field(default_factory=dict)
    cdf: dict = field(default_factory=dict)
    evaluations: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


# --- configs ------------------------------------------------------------------


@dataclass
class SnrExperimentConfig:
    dims: SystemDims = field(default_factory=lambda: SystemDims(3, 3, 3))
    schemes: tuple[str, ...] = ("es", "nsa", "rs", "cim")
    trials: int = 100
    seed: int = 0
    lambdas: tuple[float, ...] = (0.5,)
    cim: CimParams = field(default_factory=lambda: CimParams(anneals=200))
    qubo: QuboSaParams = field(default_factory=QuboSaParams)
    workers: int = 1
    name: str = "snr"
    keep_samples: bool = True

    def __post_init__(self):
        bad = set(self.schemes) - set(SNR_SCHEMES)
        if bad:
            raise ValueError(f"unknown SNR schemes {sorted(bad)}; choose from {SNR_SCHEMES}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for lam in self.lambdas:
            if not 0.0 <= lam <= 1.0:
                raise ValueError(f"penalty weight {lam} outside [0, 1]")


@dataclass
class CapacityExperimentConfig:
    dims: SystemDims = field(default_factory=lambda: SystemDims(3, 3, 5))
    schemes: tuple[str, ...] = CAPACITY_SCHEMES
    trials: int = 100
    seed: int = 0
    power_db: float = 10.0
    sa: SaParams = field(default_factory=SaParams)
    pt: PtParams = field(default_factory=PtParams)
    snr_backend: str = "brute"
    cim: CimParams = field(default_factory=CimParams)
    qubo: QuboSaParams = field(default_factory=QuboSaParams)
    workers: int = 1
    name: str = "capacity"

    def __post_init__(self):
        bad = set(self.schemes) - set(CAPACITY_SCHEMES)
        if bad:
            raise ValueError(f"unknown capacity schemes {sorted(bad)}; choose from {CAPACITY_SCHEMES}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")

    @property
    def p_over_nt(self) -> float:
        return db_to_linear(self.power_db)


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


def config_echo(cfg) -> dict:
    def clean(v):
        if isinstance(v, SystemDims):
            return str(v)
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v

    return clean(asdict(cfg) | {"dims": str(cfg.dims)})


# --- seeding ------------------------------------------------------------------


def scheme_tag(name: str) -> int:
    return zlib.crc32(name.encode())


def trial_streams(master_seed: int, trial: int):
    """(channel rng, recorded integer seed) for one trial."""
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial, 0))
    return np.random.default_rng(ss), int(ss.generate_state(1, dtype=np.uint32)[0])


def scheme_rng(master_seed: int, trial: int, scheme: str, *extra: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(trial, 1, scheme_tag(scheme), *extra))
    return np.random.default_rng(ss)


def lam_tag(lam: float) -> int:
    return int(round(lam * 1_000_000))


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# --- SNR experiment -------------------------------------------------------------


class _SnrTrial:
    def __init__(self, cfg: SnrExperimentConfig):
        self.cfg = cfg

    def __call__(self, trial: int):
        cfg = self.cfg
        rng, seed = trial_streams(cfg.seed, trial)
        ch = sample_channel(cfg.dims, rng)
        records, samples = [], {}

        def add(scheme, value, feasible, evals, t0, lam=None):
            records.append(TrialRecord(trial, seed, scheme, "snr", float(value), bool(feasible),
                                       int(evals), time.perf_counter() - t0, lam))

        for scheme in cfg.schemes:
            t0 = time.perf_counter()
            try:
                if scheme == "es":
                    r = es_select(ch, "snr")
                    add("es", r.objective, True, r.evaluations, t0)
                elif scheme == "brute":
                    r = snr_based_select(ch, "brute")
                    add("brute", r.objective, True, r.evaluations, t0)
                elif scheme == "nsa":
                    add("nsa", snr_objective(ch, nsa_select(ch)), True, cfg.dims.n * cfg.dims.n_antennas, t0)
                elif scheme == "rs":
                    c = rs_select(cfg.dims, scheme_rng(cfg.seed, trial, "rs"))
                    add("rs", snr_objective(ch, c), True, 0, t0)
                elif scheme == "qubo_sa":
                    for lam in cfg.lambdas:
                        t0 = time.perf_counter()
                        r = snr_based_select(ch, "qubo_sa", replace(cfg.qubo, lam=lam),
                                             scheme_rng(cfg.seed, trial, "qubo_sa", lam_tag(lam)))
                        add("qubo_sa", r.objective, r.feasible, r.evaluations, t0, lam)
                        records[-1].p_c = r.extras["p_c"]
                elif scheme == "cim":
                    for lam in cfg.lambdas:
                        t0 = time.perf_counter()
                        out = cim_select(ch, replace(cfg.cim, lam=lam),
                                         scheme_rng(cfg.seed, trial, "cim", lam_tag(lam)))
                        add("cim_best", out.best_q0, out.any_feasible, cfg.cim.anneals, t0, lam)
                        add("cim_avg", out.avg_q0, out.any_feasible, cfg.cim.anneals, t0, lam)
                        records[-1].p_c = out.p_c
                        if cfg.keep_samples:
                            table = occurrence_ranking(
                                (c, q, f) for c, q, f in zip(out.configs, out.q0, out.feasible)
                            )
                            samples[lam] = table.probability
            except ValueError as exc:  # guard refusals stay per-trial
                records.append(TrialRecord(trial, seed, scheme, "snr", math.nan, False, 0,
                                           time.perf_counter() - t0, error=str(exc)))
        return records, samples


def _p_c_of(records, scheme, lam):
    vals = [r.p_c for r in records if r.scheme == scheme and r.lam == lam and r.p_c is not None]
    return float(np.mean(vals)) if vals else None


def _mean_poc(lists) -> list[float]:
    if not lists:
        return []
    width = max(len(p) for p in lists)
    padded = np.zeros((len(lists), width))
    for i, p in enumerate(lists):
        padded[i, : len(p)] = p
    return padded.mean(axis=0).tolist()


def _label(scheme, lam):
    return scheme if lam is None else f"{scheme}@{lam:g}"


def _summarize_common(records, summary: MetricsSummary):
    groups: dict[str, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault(_label(r.scheme, r.lam), []).append(r)
    for label, rs in groups.items():
        vals = np.array([r.value for r in rs if math.isfinite(r.value)])
        summary.e_rho[label] = float(vals.mean()) if vals.size else math.nan
        summary.evaluations[label] = float(np.mean([r.evaluations for r in rs]))
    return groups


def run_snr_experiment(cfg: SnrExperimentConfig):
    results = _map(_SnrTrial(cfg), list(range(cfg.trials)), cfg.workers)
    records = [r for recs, _ in results for r in recs]
    summary = MetricsSummary()
    _summarize_common(records, summary)
    for scheme in ("cim_avg", "qubo_sa"):
        for lam in cfg.lambdas:
            pc = _p_c_of(records, scheme, lam)
            if pc is not None:
                summary.p_c[_label("cim" if scheme == "cim_avg" else scheme, lam)] = pc
    if "cim" in cfg.schemes:
        for lam in cfg.lambdas:
            summary.p_oc[_label("cim", lam)] = _mean_poc([s[lam] for _, s in results if lam in s])
            summary.sweep.append({
                "lambda": lam,
                "e_rho_cim_best": summary.e_rho[_label("cim_best", lam)],
                "e_rho_cim_avg": summary.e_rho[_label("cim_avg", lam)],
                "p_c": summary.p_c[_label("cim", lam)],
            })
    return records, summary


# --- capacity experiment ----------------------------------------------------------


class _CapacityTrial:
    def __init__(self, cfg: CapacityExperimentConfig):
        self.cfg = cfg

    def __call__(self, trial: int):
        cfg = self.cfg
        rho = cfg.p_over_nt
        rng, seed = trial_streams(cfg.seed, trial)
        ch = sample_channel(cfg.dims, rng)
        records = []
        for scheme in cfg.schemes:
            t0 = time.perf_counter()
            feasible = True
            try:
                if scheme == "es":
                    r = es_select(ch, "capacity", rho)
                    value, evals = r.objective, r.evaluations
                elif scheme == "sa":
                    r = sa_select(ch, rho, cfg.sa, scheme_rng(cfg.seed, trial, "sa"))
                    value, evals = r.objective, r.evaluations
                elif scheme == "pt":
                    r = pt_select(ch, rho, cfg.pt, scheme_rng(cfg.seed, trial, "pt"))
                    value, evals = r.objective, r.evaluations
                elif scheme == "se":
                    r = se_select(ch, rho)
                    value, evals = r.objective, r.evaluations
                elif scheme == "decoupled_es":
                    r = decoupled_es_select(ch, rho)
                    value, evals = r.objective, r.evaluations
                elif scheme == "snr":
                    params = {"cim": cfg.cim, "qubo_sa": cfg.qubo}.get(cfg.snr_backend)
                    r = snr_based_select(ch, cfg.snr_backend, params, scheme_rng(cfg.seed, trial, "snr"))
                    value, evals, feasible = capacity_objective(ch, r.config, rho), r.evaluations, r.feasible
                elif scheme == "nsa":
                    value = capacity_objective(ch, nsa_select(ch), rho)
                    evals = cfg.dims.n * cfg.dims.n_antennas
                else:  # rs
                    value = capacity_objective(ch, rs_select(cfg.dims, scheme_rng(cfg.seed, trial, "rs")), rho)
                    evals = 0
            except ValueError:
                value, evals, feasible = math.nan, 0, False
            records.append(TrialRecord(trial, seed, scheme, "capacity", float(value), feasible,
                                       int(evals), time.perf_counter() - t0))
        return records


def run_capacity_experiment(cfg: CapacityExperimentConfig):
    results = _map(_CapacityTrial(cfg), list(range(cfg.trials)), cfg.workers)
    records = [r for recs in results for r in recs]
    summary = MetricsSummary()
    groups = _summarize_common(records, summary)
    for label, rs in groups.items():
        vals = [r.value for r in rs if math.isfinite(r.value)]
        if vals:
            summary.cdf[label] = empirical_cdf(vals).points()
    return records, summary


# --- CIM time evolution -----------------------------------------------------------


@dataclass
class TraceConfig:
    dims: SystemDims = field(default_factory=lambda: SystemDims(3, 3, 3))
    channels: int = 100
    seed: int = 0
    cim: CimParams = field(default_factory=lambda: CimParams(anneals=200))
    name: str = "cim_trace"


def run_cim_trace(cfg: TraceConfig):
    """Channel-averaged per-step (E_ρ, P_c) of the CIM sign readout."""
    e_rho = np.zeros(cfg.cim.steps + 1)
    p_c = np.zeros(cfg.cim.steps + 1)
    for trial in range(cfg.channels):
        rng, _ = trial_streams(cfg.seed, trial)
        ch = sample_channel(cfg.dims, rng)
        tr = cim_trace(ch, cfg.cim, scheme_rng(cfg.seed, trial, "cim", lam_tag(cfg.cim.lam)))
        e_rho += tr.e_rho
        p_c += tr.p_c
    e_rho /= cfg.channels
    p_c /= cfg.channels
    return np.arange(cfg.cim.steps + 1), e_rho, p_c


def tune_lambda(dims: SystemDims, grid, channels: int, seed: int, cim: CimParams) -> tuple[float, dict]:
    """Grid value of λ with the highest mean CIM(Best) objective on tuning channels."""
    scores = {}
    for lam in grid:
        total = 0.0
        for trial in range(channels):
            rng, _ = trial_streams(seed, trial)
            ch = sample_channel(dims, rng)
            out = cim_select(ch, replace(cim, lam=lam), scheme_rng(seed, trial, "cim", lam_tag(lam)))
            total += out.best_q0
        scores[lam] = total / channels
    best = max(grid, key=lambda lam: (scores[lam], -lam))
    return best, scores


def es_snr_values(ch: FullChannel) -> np.ndarray:
    return snr_batch(ch, all_configurations(ch.dims))


# --- persistence ------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TrialRecord.CSV_FIELDS)
    for r in sorted(records, key=lambda r: (r.trial_index, r.scheme, -1.0 if r.lam is None else r.lam)):
        w.writerow([_fmt(getattr(r, f)) for f in TrialRecord.CSV_FIELDS])
    return buf.getvalue()


def timing_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("trial_index", "scheme", "lam", "wall_time"))
    for r in records:
        w.writerow([r.trial_index, r.scheme, _fmt(r.lam), _fmt(r.wall_time)])
    return buf.getvalue()


def write_outputs(out_dir, name: str, records, summary: MetricsSummary, echo: dict) -> Path:
    """Write ``trials.csv``, ``timing.csv``, ``summary.json`` and one ``cdf_<scheme>.csv`` per scheme.

    Everything except ``timing.csv`` is a deterministic function of the config.
    """
    target = Path(out_dir) / name
    target.mkdir(parents=True, exist_ok=True)
    (target / "trials.csv").write_text(records_csv(records))
    (target / "timing.csv").write_text(timing_csv(records))
    for label, pts in summary.cdf.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("x", "p_less", "p_less_equal"))
        for row in pts:
            w.writerow([_fmt(float(v)) for v in row])
        (target / f"cdf_{label}.csv").write_text(buf.getvalue())
    if summary.sweep:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = list(summary.sweep[0])
        w.writerow(keys)
        for row in summary.sweep:
            w.writerow([_fmt(row[k]) for k in keys])
        (target / "sweep.csv").write_text(buf.getvalue())
    doc = {
        "config": echo,
        "seed": echo.get("seed"),
        "metrics": {
            "e_rho": summary.e_rho,
            "p_c": summary.p_c,
            "p_oc": {k: v for k, v in summary.p_oc.items()},
            "mean_evaluations": summary.evaluations,
            "sweep": summary.sweep,
            **summary.extra,
        },
    }
    (target / "summary.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return target
