"""``antsel`` command line: SNR and capacity experiments, QUBO export, CIM traces.

Settings come from built-in defaults, then an optional INI file
(``--config``), then flags.  The output root defaults to ``$ANTSEL_OUT`` or
``results``.  Exit status: 0 success, 1 I/O failure, 2 bad configuration.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .annealing import PtParams, QuboSaParams, SaParams
from .channel import SystemDims, sample_channel
from .cim import CimParams
from .evaluation import (
    CapacityExperimentConfig,
    SnrExperimentConfig,
    TraceConfig,
    config_echo,
    run_capacity_experiment,
    run_cim_trace,
    run_snr_experiment,
    trial_streams,
    write_outputs,
)
from .ising import qubo_for_channel, serialize_qubo


class ConfigError(ValueError):
    pass


def parse_sweep(text: str) -> tuple[float, ...]:
    """``start:stop:step`` with ``stop`` included, or a comma-separated list."""
    if ":" not in text:
        return tuple(float(v) for v in text.split(","))
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"lambda sweep must be start:stop:step, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ConfigError(f"empty lambda sweep {text!r}")
    count = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 10) for i in range(count))


def _split(text: str) -> tuple[str, ...]:
    return tuple(s.strip() for s in text.split(",") if s.strip())


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if value.strip().lower() == "none":
        return None
    if like is None:
        try:
            return int(value)
        except ValueError:
            return float(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, tuple):
        return tuple(float(v) for v in _split(value))
    return value


def _apply_section(params, section: dict):
    """Override dataclass fields from INI key/values."""
    known = {f.name for f in fields(params)}
    updates = {}
    for key, raw in section.items():
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"unknown key {key!r} for {type(params).__name__}")
        updates[key] = _coerce(raw, getattr(params, key))
    return replace(params, **updates)


def load_config(path: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    if path is None:
        return cp
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return cp


def _pick(args, cp, name: str, default):
    """Flag value, else ``[experiment]`` entry, else default."""
    flag = getattr(args, name, None)
    if flag is not None:
        return flag
    key = name.replace("_", "-")
    if cp.has_option("experiment", key):
        return cp.get("experiment", key)
    if cp.has_option("experiment", name):
        return cp.get("experiment", name)
    return default


def _section(cp, name: str) -> dict:
    return dict(cp.items(name)) if cp.has_section(name) else {}


def _common(args, cp, default_dims: str, default_name: str):
    dims = SystemDims.parse(str(_pick(args, cp, "dims", default_dims)))
    trials = int(_pick(args, cp, "trials", 100))
    seed = int(_pick(args, cp, "seed", 0))
    threads = int(_pick(args, cp, "threads", os.cpu_count() or 1))
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    name = str(_pick(args, cp, "name", default_name))
    out = Path(str(_pick(args, cp, "out", os.environ.get("ANTSEL_OUT", "results"))))
    return dims, trials, seed, threads, name, out


def build_snr_config(args, cp) -> tuple[SnrExperimentConfig, Path]:
    dims, trials, seed, threads, name, out = _common(args, cp, "3,3,3", "snr")
    schemes = _split(str(_pick(args, cp, "schemes", "es,nsa,rs,cim")))
    sweep = _pick(args, cp, "lambda_sweep", None)
    lam = _pick(args, cp, "lam", None)
    cim = _apply_section(CimParams(anneals=200), _section(cp, "cim"))
    if args.anneals is not None:
        cim = replace(cim, anneals=args.anneals)
    if args.steps is not None:
        cim = replace(cim, steps=args.steps)
    if sweep is not None:
        lambdas = parse_sweep(str(sweep))
    elif lam is not None:
        lambdas = (float(lam),)
    else:
        lambdas = (cim.lam,)
    qubo = _apply_section(QuboSaParams(), _section(cp, "qubo"))
    cfg = SnrExperimentConfig(dims=dims, schemes=schemes, trials=trials, seed=seed, lambdas=lambdas,
                              cim=cim, qubo=qubo, workers=threads, name=name)
    return cfg, out


def build_capacity_config(args, cp) -> tuple[CapacityExperimentConfig, Path]:
    dims, trials, seed, threads, name, out = _common(args, cp, "3,3,5", "capacity")
    default = CapacityExperimentConfig()
    schemes = _split(str(_pick(args, cp, "schemes", ",".join(default.schemes))))
    power_db = float(_pick(args, cp, "power_db", default.power_db))
    backend = str(_pick(args, cp, "snr_backend", default.snr_backend))
    cfg = CapacityExperimentConfig(
        dims=dims, schemes=schemes, trials=trials, seed=seed, power_db=power_db,
        sa=_apply_section(SaParams(), _section(cp, "sa")),
        pt=_apply_section(PtParams(), _section(cp, "pt")),
        snr_backend=backend,
        cim=_apply_section(CimParams(), _section(cp, "cim")),
        qubo=_apply_section(QuboSaParams(), _section(cp, "qubo")),
        workers=threads, name=name,
    )
    return cfg, out


def channel_checksum(g: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(g, dtype="<c16").tobytes()).hexdigest()


# --- commands -------------------------------------------------------------------------


def cmd_snr(args, cp) -> int:
    cfg, out = build_snr_config(args, cp)
    records, summary = run_snr_experiment(cfg)
    target = write_outputs(out, cfg.name, records, summary, config_echo(cfg))
    for label in sorted(summary.e_rho):
        pc = summary.p_c.get(label.replace("cim_best", "cim").replace("cim_avg", "cim"))
        extra = f"  P_c={pc:.3f}" if pc is not None and label.startswith("cim_best") else ""
        print(f"{label:>18}  E_rho={summary.e_rho[label]:.4f}{extra}")
    print(f"wrote {target}")
    return 0


def cmd_capacity(args, cp) -> int:
    cfg, out = build_capacity_config(args, cp)
    records, summary = run_capacity_experiment(cfg)
    target = write_outputs(out, cfg.name, records, summary, config_echo(cfg))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("scheme", "mean_capacity", "mean_evaluations"))
    print(f"{'scheme':>14}  {'mean C':>9}  {'mean evals':>12}")
    for scheme in cfg.schemes:
        c, e = summary.e_rho.get(scheme, float("nan")), summary.evaluations.get(scheme, float("nan"))
        w.writerow((scheme, repr(c), repr(e)))
        print(f"{scheme:>14}  {c:9.4f}  {e:12.1f}")
    (target / "evaluations.csv").write_text(buf.getvalue())
    print(f"wrote {target}")
    return 0


def cmd_qubo_export(args, cp) -> int:
    dims = SystemDims.parse(str(_pick(args, cp, "dims", "2,2,2")))
    seed = int(_pick(args, cp, "seed", 0))
    lam = float(_pick(args, cp, "lam", 0.8))
    trial = int(_pick(args, cp, "trial", 0))
    name = str(_pick(args, cp, "name", "qubo"))
    out = Path(str(_pick(args, cp, "out", os.environ.get("ANTSEL_OUT", "results"))))
    rng, trial_seed = trial_streams(seed, trial)
    ch = sample_channel(dims, rng)
    problem = qubo_for_channel(ch, lam)
    target = out / name
    target.mkdir(parents=True, exist_ok=True)
    (target / "qubo.txt").write_text(serialize_qubo(problem))
    sidecar = {
        "dims": str(dims),
        "lambda": lam,
        "seed": seed,
        "trial": trial,
        "trial_seed": trial_seed,
        "sense": problem.sense,
        "size": int(problem.w_matrix.shape[0]),
        "channel_sha256": channel_checksum(ch.g),
    }
    (target / "qubo.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    print(f"wrote {target / 'qubo.txt'}")
    return 0


def cmd_cim_trace(args, cp) -> int:
    dims = SystemDims.parse(str(_pick(args, cp, "dims", "3,3,3")))
    seed = int(_pick(args, cp, "seed", 0))
    channels = int(_pick(args, cp, "channels", 10))
    name = str(_pick(args, cp, "name", "cim_trace"))
    out = Path(str(_pick(args, cp, "out", os.environ.get("ANTSEL_OUT", "results"))))
    cim = _apply_section(CimParams(anneals=200), _section(cp, "cim"))
    lam = _pick(args, cp, "lam", None)
    if lam is not None:
        cim = replace(cim, lam=float(lam))
    if args.anneals is not None:
        cim = replace(cim, anneals=args.anneals)
    if args.steps is not None:
        cim = replace(cim, steps=args.steps)
    cfg = TraceConfig(dims=dims, channels=channels, seed=seed, cim=cim, name=name)
    steps, e_rho, p_c = run_cim_trace(cfg)
    target = out / name
    target.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("step", "e_rho", "p_c"))
    for row in zip(steps.tolist(), e_rho.tolist(), p_c.tolist()):
        w.writerow((row[0], repr(row[1]), repr(row[2])))
    (target / "trace.csv").write_text(buf.getvalue())
    (target / "summary.json").write_text(json.dumps({"config": config_echo(cfg), "seed": seed},
                                                    indent=2, sort_keys=True) + "\n")
    print(f"wrote {target / 'trace.csv'}")
    return 0


# --- parser ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI file; flags override it")
    p.add_argument("--dims", help="n_t,n_r,n")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output root (default $ANTSEL_OUT or ./results)")
    p.add_argument("--name", help="experiment name (sub-directory of --out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="antsel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    snr = sub.add_parser("snr", help="SNR-objective experiment (E_rho, P_c, P_oc)")
    _add_common(snr)
    snr.add_argument("--schemes", help="comma list from es,nsa,rs,cim,qubo_sa,brute")
    snr.add_argument("--trials", type=int)
    snr.add_argument("--threads", type=int)
    snr.add_argument("--lambda", dest="lam", type=float)
    snr.add_argument("--lambda-sweep", dest="lambda_sweep", help="start:stop:step (inclusive)")
    snr.add_argument("--anneals", type=int)
    snr.add_argument("--steps", type=int)
    snr.set_defaults(func=cmd_snr)

    cap = sub.add_parser("capacity", help="capacity experiment (CDFs, evaluation counts)")
    _add_common(cap)
    cap.add_argument("--schemes", help="comma list from es,sa,pt,se,decoupled_es,snr,nsa,rs")
    cap.add_argument("--trials", type=int)
    cap.add_argument("--threads", type=int)
    cap.add_argument("--power-db", dest="power_db", type=float, help="P/N_T in dB")
    cap.add_argument("--snr-backend", dest="snr_backend", choices=("brute", "cim", "qubo_sa"))
    cap.set_defaults(func=cmd_capacity)

    q = sub.add_parser("qubo-export", help="write one channel's QUBO as a coordinate list")
    _add_common(q)
    q.add_argument("--lambda", dest="lam", type=float)
    q.add_argument("--trial", type=int, help="channel index under the master seed")
    q.set_defaults(func=cmd_qubo_export)

    tr = sub.add_parser("cim-trace", help="per-step E_rho and P_c of the CIM readout")
    _add_common(tr)
    tr.add_argument("--lambda", dest="lam", type=float)
    tr.add_argument("--channels", type=int)
    tr.add_argument("--anneals", type=int)
    tr.add_argument("--steps", type=int)
    tr.set_defaults(func=cmd_cim_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cp = load_config(args.config)
        return args.func(args, cp)
    except (ConfigError, ValueError, configparser.Error) as exc:
        print(f"antsel: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"antsel: I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
