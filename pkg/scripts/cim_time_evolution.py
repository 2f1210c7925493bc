"""Per-step E_rho and P_c of the CIM sign readout, averaged over channels, for a few λ."""
import argparse
import csv
from pathlib import Path

from antsel.channel import SystemDims
from antsel.cim import CimParams
from antsel.evaluation import TraceConfig, run_cim_trace


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dims", default="3,3,3")
    ap.add_argument("--channels", type=int, default=100)
    ap.add_argument("--anneals", type=int, default=200)
    ap.add_argument("--lambdas", default="0.3,0.5,0.7")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    lams = [float(v) for v in args.lambdas.split(",")]
    columns = {}
    for lam in lams:
        cfg = TraceConfig(dims=SystemDims.parse(args.dims), channels=args.channels, seed=args.seed,
                          cim=CimParams(anneals=args.anneals, lam=lam))
        steps, e_rho, p_c = run_cim_trace(cfg)
        columns[lam] = (e_rho, p_c)
        print(f"λ={lam:g}: E_rho {e_rho[500]:.3f} (500) {e_rho[-1]:.3f} (end); "
              f"P_c {p_c[500]:.3f} (500) {p_c[-1]:.3f} (end)")
    target = Path(args.out) / "cim_time_evolution"
    target.mkdir(parents=True, exist_ok=True)
    with open(target / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step"] + [f"{k}@{lam:g}" for lam in lams for k in ("e_rho", "p_c")])
        for i, step in enumerate(steps):
            w.writerow([step] + [repr(float(columns[lam][j][i])) for lam in lams for j in (0, 1)])
    print(f"wrote {target / 'trace.csv'}")


if __name__ == "__main__":
    main()
