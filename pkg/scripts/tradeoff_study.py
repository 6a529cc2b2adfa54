"""Config 1 vs Config 2: inverse Delta_k tables, critical gains and NARMA10 at long cycles."""

import argparse
import json

from delayres import bench


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--T", type=float, nargs="+", default=[20.0, 50.0])
    parser.add_argument("--kmax", type=int, default=10)
    parser.add_argument("--no-benchmark", action="store_true")
    parser.add_argument("--json", action="store_true")
    args = parser.parse_args()

    rep = bench.run_tradeoff_study(bench.config1(), bench.config2(), args.T,
                                   range(1, args.kmax + 1), not args.no_benchmark)
    if args.json:
        print(json.dumps(rep.to_dict(), indent=2))
        return
    print(f"s0 = {rep.s0[0]:.12f}, {rep.s0[1]:.12f}")
    print(f"eps* = {rep.eps_star[0]:.5f} (config 1), {rep.eps_star[1]:.5f} (config 2)")
    for T, (r1, r2) in rep.delta_inv.items():
        print(f"\nT = t1 = {T:g}")
        print("  k   1/D_k cfg1   1/D_k cfg2   ratio")
        for k, a, b in zip(rep.ks, r1, r2):
            print(f"{k:3d}  {a:11.5f}  {b:11.5f}  {b / a:6.3f}")
        print(f"  mean ratio {rep.mean_ratio[T]:.4f}, ratio of sums {rep.sum_ratio[T]:.4f}")
        for label in ("config1", "config2"):
            v = rep.nrmse.get((label, T))
            if v is not None:
                print(f"  {label} NRMSE {v:.4f} (theta = {T / 10:g}, timescales ok: {rep.timescale_ok[T]})")


if __name__ == "__main__":
    main()
