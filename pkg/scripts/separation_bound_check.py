"""Brute-force energy of band-limited difference inputs against the Fourier lower bound."""

import argparse
import math

import numpy as np

from delayres.dde import DelayDynamics, integrate, trajectory_segment_norm
from delayres.separation import fourier_coeffs, random_trig_polynomial, separation_lower_bound
from delayres.spectral import spectral_abscissa

CONFIGS = {"config1": (-1.0, 0.9 * math.exp(-0.1)), "config2": (-0.5, 0.4 * math.exp(-0.1))}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--dt", type=float, default=0.05)
    parser.add_argument("--partial", action="store_true",
                        help="use windows that are not whole periods of the input")
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    for name, (a0, a1) in CONFIGS.items():
        dyn = DelayDynamics.scalar(a0, a1, 1.0)
        s0 = spectral_abscissa(dyn).s0
        ratios = []
        for _ in range(args.instances):
            period = float(rng.choice([10.0, 25.0, 50.0]))
            deg = int(rng.integers(1, 11))
            w = random_trig_polynomial(rng, period, deg)
            t0 = math.ceil(5 / abs(s0) / period) * period
            t1 = t0 + period * int(rng.integers(1, 4))
            if args.partial:
                t1 += round(rng.uniform(0.1, 0.9) * period / args.dt) * args.dt
                kmax = 64
            else:
                kmax = deg * round(t1 / period)
            energy = trajectory_segment_norm(integrate(dyn, None, w, t1, args.dt), t0, t1) ** 2
            ex = fourier_coeffs(w, t1, kmax, n_quad=max(256, 8 * kmax))
            bound = separation_lower_bound(ex, dyn, t0, t1, s0, 0.05).bound_value
            ratios.append(energy / bound)
        ratios = np.array(ratios)
        print(f"{name}: energy/bound min {ratios.min():.4f}  median {np.median(ratios):.4f}  "
              f"max {ratios.max():.4f}  below 0.95: {(ratios < 0.95).sum()}/{len(ratios)}")


if __name__ == "__main__":
    main()
