"""NARMA10 benchmark for the linear and log-nonlinearity reservoirs over several seeds."""

import argparse
import json

from delayres import bench


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--runs", type=int, default=10)
    parser.add_argument("--lambda", dest="lam", default="1e-6", help="ridge lambda or 'auto'")
    parser.add_argument("--clean-test", action="store_true", help="no noise during the test phase")
    parser.add_argument("--json", action="store_true", help="print full reports as JSON")
    args = parser.parse_args()

    lam = args.lam if args.lam == "auto" else float(args.lam)
    overrides = {"seeds.runs": args.runs, "dataset.ridge_lambda": lam,
                 "dataset.noise_at_test": not args.clean_test}
    reports = {
        "linear": bench.run_narma10(bench.config1(**overrides)),
        "log_sign": bench.run_narma10(bench.log_reservoir(**overrides)),
    }
    if args.json:
        print(json.dumps({k: r.to_dict() for k, r in reports.items()}, indent=2))
        return
    for name, rep in reports.items():
        per = ", ".join(f"{r.nrmse_test:.3f}" for r in rep.per_seed)
        print(f"{name:9s} median test NRMSE {rep.nrmse_test:.4f}  train {rep.nrmse_train:.4f}"
              f"  ({rep.runtime:.1f}s)")
        print(f"          per seed: {per}")


if __name__ == "__main__":
    main()
