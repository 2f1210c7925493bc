"""CIM penalty-weight sweep on (3,3,3): E_rho of CIM(Best)/CIM(Avg) and P_c per λ, next to ES/NSA/RS."""
import argparse

from antsel.channel import SystemDims
from antsel.cim import CimParams
from antsel.evaluation import SnrExperimentConfig, config_echo, run_snr_experiment, write_outputs


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="3,3,3")
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--anneals", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    cfg = SnrExperimentConfig(
        dims=SystemDims.parse(args.dims),
        schemes=("es", "nsa", "rs", "cim"),
        trials=args.trials,
        seed=args.seed,
        lambdas=tuple(round(0.1 * k, 1) for k in range(1, 10)),
        cim=CimParams(anneals=args.anneals),
        workers=args.workers,
        name="lambda_sweep",
    )
    records, summary = run_snr_experiment(cfg)
    target = write_outputs(args.out, cfg.name, records, summary, config_echo(cfg))
    e = summary.e_rho
    print(f"ES {e['es']:.3f}  NSA {e['nsa']:.3f}  RS {e['rs']:.3f}")
    print(f"{'lambda':>6} {'best':>8} {'avg':>8} {'P_c':>6}")
    for row in summary.sweep:
        print(f"{row['lambda']:6.1f} {row['e_rho_cim_best']:8.3f} {row['e_rho_cim_avg']:8.3f} {row['p_c']:6.3f}")
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
