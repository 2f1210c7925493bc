"""Average number of configurations checked per scheme, for (3,3,10) and (4,4,5)."""
import argparse

import numpy as np

from antsel.annealing import PtParams, SaParams, pt_select, sa_select
from antsel.channel import SystemDims, sample_channel
from antsel.heuristics import (
    decoupled_es_evaluation_count,
    es_evaluation_count,
    se_evaluation_count,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rows = []
    for dims in (SystemDims(3, 3, 10), SystemDims(4, 4, 5)):
        sa, pt = [], []
        for t in range(args.trials):
            rng = np.random.default_rng([args.seed, t])
            ch = sample_channel(dims, rng)
            sa.append(sa_select(ch, 10.0, SaParams(), rng).evaluations)
            pt.append(pt_select(ch, 10.0, PtParams(), rng).evaluations)
        rows.append((dims, {
            "ES": es_evaluation_count(dims),
            "SA": float(np.mean(sa)),
            "PT": float(np.mean(pt)),
            "decoupled ES": decoupled_es_evaluation_count(dims),
            "SE (eliminations)": se_evaluation_count(dims),
        }))
    names = list(rows[0][1])
    print(f"{'scheme':>18}" + "".join(f"{str(d):>14}" for d, _ in rows))
    for name in names:
        print(f"{name:>18}" + "".join(f"{r[name]:>14,.0f}" for _, r in rows))


if __name__ == "__main__":
    main()
