"""Command-line entry point: ``delayres simulate|benchmark|analyze|sweep``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bench
from .config import ExperimentConfig
from .dde import InitialCondition, integrate
from .errors import ConfigurationError, ContractError, DomainError, NumericalError
from .separation import delta_k, fourier_coeffs
from .signal import apply_mask, generate_mask, sample_and_hold
from .spectral import spectral_abscissa
from .stability import LKFConfig, iss_epsilon_critical, verify_delta_iss, verify_dissipation

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def fmt(x) -> str:
    return format(float(x), ".17g")


class Outputs:
    """Writes artifacts under one directory and remembers them for the manifest."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def write_csv(self, name: str, header: list[str], rows) -> None:
        with open(self.out / name, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for row in rows:
                writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
        self.files.append(name)

    def write_json(self, name: str, payload) -> None:
        text = json.dumps(_jsonable(payload), indent=2, sort_keys=True, allow_nan=False)
        (self.out / name).write_text(text + "\n", encoding="utf-8")
        self.files.append(name)

    def manifest(self, command: str, config_path: str) -> dict:
        artifacts = []
        for name in self.files:
            data = (self.out / name).read_bytes()
            artifacts.append({"file": name, "bytes": len(data),
                              "sha256": hashlib.sha256(data).hexdigest()})
        payload = {"subcommand": command, "config": str(config_path),
                   "output_dir": str(self.out), "artifacts": artifacts}
        (self.out / "manifest.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return payload


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _simulation_input(cfg: ExperimentConfig, horizon: float | None = None):
    """Constant input, or ``"random"``: masked uniform[0, 0.5] steps on the clock."""
    sim = cfg.simulation
    if not isinstance(sim.input, str):
        c = float(sim.input)
        return lambda t: np.full(np.shape(t), c) if np.ndim(t) else c
    if sim.input != "random":
        raise ConfigurationError(f"simulation.input must be a number or 'random', got {sim.input!r}")
    clock = cfg.clock.build()
    n = math.ceil(max(sim.t_end, horizon or 0.0) / clock.T) + 1
    u = np.random.default_rng(cfg.seeds.input).uniform(0.0, 0.5, n)
    mask = generate_mask(clock.N, cfg.clock.mask, cfg.seeds.mask, clock.theta)
    return apply_mask(sample_and_hold(u, clock.T), mask)


def cmd_simulate(cfg: ExperimentConfig, out: Outputs) -> dict:
    sim = cfg.simulation
    dyn = cfg.dynamics.build()
    dt = cfg.clock.step(dyn.delays)
    traj = integrate(dyn, InitialCondition(sim.phi, sim.x0), _simulation_input(cfg),
                     sim.t_end, dt, cfg.seeds.noise)
    header = ["t"] + [f"x{i}" for i in range(traj.n)]
    out.write_csv("trajectory.csv", header,
                  ([t, *x] for t, x in zip(traj.times, traj.states)))
    return {"steps": len(traj) - 1, "dt": dt}


def cmd_benchmark(cfg: ExperimentConfig, out: Outputs) -> dict:
    report = bench.run_narma10(cfg)
    out.write_json("report.json", report.to_dict())
    out.write_csv("predictions.csv", ["index", "y_target", "y_pred"],
                  ([int(i), yt, yp] for i, yt, yp in report.predictions))
    return {"nrmse_test": report.nrmse_test}


def cmd_analyze(cfg: ExperimentConfig, out: Outputs) -> dict:
    an = cfg.analysis
    dyn = cfg.dynamics.build(noise=False)
    if not dyn.is_linear:
        raise ContractError("analyze supports scalar linear dynamics only")
    a0, delayed = dyn.scalar_coefficients()
    spec = spectral_abscissa(dyn, an.branches)
    out.write_json("spectrum.json", spec.to_dict())

    t1 = an.t1 if an.t1 is not None else cfg.clock.build().T
    ks = np.arange(0, an.k_max + 1)
    delta = np.asarray(delta_k(a0, delayed, t1, ks), dtype=float)
    columns = [ks, delta, 1.0 / delta]
    header = ["k", "delta_k", "delta_k_inv"]
    if cfg.simulation.input != 0.0:
        expansion = fourier_coeffs(_simulation_input(cfg, t1), t1, an.k_max,
                                   n_quad=max(4096, 8 * an.k_max))
        columns.append([abs(expansion[int(k)]) ** 2 for k in ks])
        header.append("alpha_k_sq")
    out.write_csv("separation.csv", header,
                  ([int(r[0]), *r[1:]] for r in zip(*columns)))

    out.write_json("stability.json", _stability_summary(dyn, an, spec.s0))
    return {"s0": spec.s0}


def _stability_summary(dyn, an, s0: float) -> dict:
    try:
        cfg = LKFConfig.from_dynamics(dyn)
    except DomainError as exc:
        return {"applicable": False, "reason": str(exc), "s0": s0}
    eps_star = iss_epsilon_critical(cfg.a0, cfg.a1)
    eps = an.eps if an.eps is not None else 1.1 * eps_star
    phi = InitialCondition(an.phi)
    report = verify_dissipation(dyn, cfg, 0.0, phi, eps, an.t_end, an.dt)
    fading = verify_delta_iss(dyn, 0.0, 0.0, phi, InitialCondition(0.0), an.t_end, an.dt)
    report.fading_rate_estimate = fading.decay_exponent
    return {"applicable": True, "s0": s0, **report.to_dict()}


def cmd_sweep(cfg: ExperimentConfig, out: Outputs) -> dict:
    if not cfg.sweep:
        raise ConfigurationError("sweep needs a non-empty 'sweep' section")
    cells = bench.sweep(cfg.sweep, cfg)
    out.write_json("sweep.json", [c.to_dict() for c in cells])
    keys = list(cfg.sweep)
    rows = []
    for c in cells:
        vals = [c.overrides[k] if isinstance(c.overrides[k], str) else fmt(c.overrides[k])
                for k in keys]
        if c.report is not None:
            rows.append([str(c.index), *vals, fmt(c.report.nrmse_train),
                         fmt(c.report.nrmse_test), ""])
        else:
            rows.append([str(c.index), *vals, "", "", c.error_type])
    out.write_csv("sweep.csv", ["index", *keys, "nrmse_train", "nrmse_test", "error"], rows)
    return {"cells": len(cells), "failed": sum(c.report is None for c in cells)}


COMMANDS = {
    "simulate": cmd_simulate,
    "benchmark": cmd_benchmark,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="delayres", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON experiment config")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=None,
                        help="base seed; sets input/mask/noise seeds to S, S+1, S+2")
    return parser


def _error(kind: str, exc: BaseException) -> None:
    payload = {"error": kind, "type": type(exc).__name__, "message": str(exc)}
    stage = getattr(exc, "stage", None)
    if stage:
        payload["stage"] = stage
    print(json.dumps(payload), file=sys.stderr)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config)
        if args.seed is not None:
            cfg = cfg.replace(**{"seeds.input": args.seed, "seeds.mask": args.seed + 1,
                                 "seeds.noise": args.seed + 2})
        out = Outputs(Path(args.out))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            summary = COMMANDS[args.command](cfg, out)
        out.manifest(args.command, args.config)
    except (ConfigurationError, ContractError, DomainError) as exc:
        _error("configuration", exc)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError) as exc:
        _error("numerical", exc)
        return EXIT_NUMERIC
    except OSError as exc:
        _error("io", exc)
        return EXIT_IO
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(json.dumps(_jsonable({"command": args.command, **summary})))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
