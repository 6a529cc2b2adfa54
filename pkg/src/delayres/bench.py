"""Experiment harness: NARMA10 benchmark, Config 1 / Config 2 trade-off study, sweeps."""

from __future__ import annotations

import contextlib
import itertools
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import CONFIG2, ExperimentConfig
from .dde import integrate
from .errors import ConfigurationError, DelayResError, DivergenceError
from .readout import narma10, nrmse, predict, ridge_fit
from .separation import delta_k
from .signal import apply_mask, default_dt, generate_mask, sample_and_hold, sample_virtual_nodes
from .spectral import spectral_abscissa
from .stability import iss_epsilon_critical

LAMBDA_GRID = tuple(10.0 ** e for e in range(-8, -1))
S0_MATCH_TOL = 1e-6


def config1(**overrides) -> ExperimentConfig:
    return ExperimentConfig().replace(**overrides) if overrides else ExperimentConfig().validate()


def config2(**overrides) -> ExperimentConfig:
    base = ExperimentConfig().replace(**{"dynamics.a0": CONFIG2["a0"], "dynamics.a1": CONFIG2["a1"]})
    return base.replace(**overrides) if overrides else base


def log_reservoir(**overrides) -> ExperimentConfig:
    """``x' = -x + g(x(t-1) + u)`` with ``g(s) = sign(s) ln(1 + |s|)``."""
    base = ExperimentConfig().replace(**{"dynamics.a0": -1.0, "dynamics.a1": 1.0,
                                         "dynamics.nonlinearity": "log_sign"})
    return base.replace(**overrides) if overrides else base


@contextlib.contextmanager
def _stage(name: str):
    """Re-raise package errors with the failing pipeline stage in the message."""
    try:
        yield
    except DelayResError as exc:
        if getattr(exc, "stage", None):
            raise
        new = type(exc)(f"[{name}] {exc}")
        new.__dict__.update(exc.__dict__)
        new.stage = name
        raise new from exc


@dataclass
class SeedResult:
    seeds: dict
    nrmse_train: float
    nrmse_test: float
    baseline_test: float
    lam: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class BenchmarkReport:
    nrmse_train: float
    nrmse_test: float
    per_seed: list[SeedResult]
    config: dict
    seeds: dict
    predictions: np.ndarray  # (test, 3): index, target, prediction, first run
    timescale_ok: bool = True
    runtime: float = 0.0

    def to_dict(self) -> dict:
        # runtime is left out so identical configs give identical reports
        return {
            "nrmse_train": self.nrmse_train,
            "nrmse_test": self.nrmse_test,
            "per_seed": [r.to_dict() for r in self.per_seed],
            "config": self.config,
            "seeds": self.seeds,
            "timescale_ok": self.timescale_ok,
        }


def _select_lambda(X, y, n_train: int) -> float:
    split = n_train - max(2, n_train // 5)
    scores = []
    for lam in LAMBDA_GRID:
        model = ridge_fit(X[:split], y[:split], lam)
        scores.append(nrmse(y[split:n_train], predict(X[split:n_train], model)))
    return LAMBDA_GRID[int(np.argmin(scores))]


def _single_run(cfg: ExperimentConfig, seeds: dict):
    d = cfg.dataset
    clock = cfg.clock.build()
    dyn = cfg.dynamics.build()
    dt = cfg.clock.step(dyn.delays)
    L = d.warmup + d.train + d.test + 1  # one extra input so row k can predict y_{k+1}

    if dyn.is_linear:
        with _stage("stability"):
            s0 = spectral_abscissa(dyn, cfg.analysis.branches).s0
            if s0 > 0:
                raise DivergenceError(
                    f"spectral abscissa s0={s0:.6g} > 0: the reservoir diverges"
                )
    with _stage("input"):
        u = np.random.default_rng(seeds["input"]).uniform(0.0, 0.5, L)
        y = narma10(u, L)
    with _stage("masking"):
        mask = generate_mask(clock.N, cfg.clock.mask, seeds["mask"], clock.theta)
        drive = apply_mask(sample_and_hold(u, clock.T), mask)
    with _stage("integration"):
        noise_until = None if d.noise_at_test else (d.warmup + d.train) * clock.T
        traj = integrate(dyn, None, drive, L * clock.T, dt, seeds["noise"], noise_until)
    with _stage("sampling"):
        X = sample_virtual_nodes(traj, clock, L - 1).data
    target = y[1:]
    tr = slice(d.warmup, d.warmup + d.train)
    te = slice(d.warmup + d.train, d.warmup + d.train + d.test)
    with _stage("readout"):
        lam = (_select_lambda(X[tr], target[tr], d.train) if d.ridge_lambda == "auto"
               else float(d.ridge_lambda))
        model = ridge_fit(X[tr], target[tr], lam)
        fit_train = predict(X[tr], model)
        fit_test = predict(X[te], model)
        result = SeedResult(
            seeds=dict(seeds),
            nrmse_train=nrmse(target[tr], fit_train),
            nrmse_test=nrmse(target[te], fit_test),
            baseline_test=nrmse(target[te], np.full(d.test, target[tr].mean())),
            lam=lam,
        )
    if not all(math.isfinite(v) and v >= 0 for v in (result.nrmse_train, result.nrmse_test)):
        raise ArithmeticError("non-finite NRMSE")
    index = np.arange(te.start, te.stop) + 1
    return result, np.column_stack([index, target[te], fit_test])


def run_narma10(config: ExperimentConfig) -> BenchmarkReport:
    """NARMA10 one-step prediction with a masked delay reservoir and a ridge readout.

    Run ``r`` uses seeds ``input + r``, ``mask + r`` and ``noise + r``. Reported
    NRMSEs are medians over runs; predictions come from the first run.
    """
    config.validate()
    start = time.perf_counter()
    clock = config.clock.build()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        timescale_ok = clock.check_timescales(config.dynamics.tau)
    s = config.seeds
    results, predictions = [], None
    for r in range(s.runs):
        seeds = {"input": s.input + r, "mask": s.mask + r, "noise": s.noise + r}
        result, pred = _single_run(config, seeds)
        results.append(result)
        if predictions is None:
            predictions = pred
    echo = config.to_dict()
    seeds_echo = echo.pop("seeds")
    echo.pop("sweep")
    echo.pop("simulation")
    echo["clock"]["T"] = clock.T
    echo["clock"]["dt"] = config.clock.step([config.dynamics.tau])
    return BenchmarkReport(
        nrmse_train=float(np.median([r.nrmse_train for r in results])),
        nrmse_test=float(np.median([r.nrmse_test for r in results])),
        per_seed=results,
        config=echo,
        seeds=seeds_echo,
        predictions=predictions,
        timescale_ok=timescale_ok,
        runtime=time.perf_counter() - start,
    )


@dataclass
class TradeoffReport:
    s0: tuple[float, float]
    eps_star: tuple[float, float]
    ks: list[int]
    delta_inv: dict = field(default_factory=dict)    # T -> (config1 row, config2 row)
    ratios: dict = field(default_factory=dict)       # T -> per-k ratio
    mean_ratio: dict = field(default_factory=dict)
    sum_ratio: dict = field(default_factory=dict)
    nrmse: dict = field(default_factory=dict)        # (label, T) -> test NRMSE or None
    timescale_ok: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "s0": list(self.s0),
            "eps_star": list(self.eps_star),
            "ks": self.ks,
            "tables": {
                str(T): {
                    "config1_delta_inv": rows[0].tolist(),
                    "config2_delta_inv": rows[1].tolist(),
                    "ratio": self.ratios[T].tolist(),
                    "mean_ratio": self.mean_ratio[T],
                    "sum_ratio": self.sum_ratio[T],
                }
                for T, rows in self.delta_inv.items()
            },
            "nrmse": {f"{label}@T={T}": v for (label, T), v in self.nrmse.items()},
            "timescale_ok": {f"T={T}": v for T, v in self.timescale_ok.items()},
        }


def run_tradeoff_study(cfg1: ExperimentConfig, cfg2: ExperimentConfig,
                       T_values=(20.0, 50.0), k_range=range(1, 11),
                       run_benchmarks: bool = True) -> TradeoffReport:
    """Compare two linear configurations sharing a spectral abscissa.

    For each ``T`` the Fourier window is ``t1 = T``; benchmark cells keep
    ``N`` and set ``theta = T / N``.
    """
    dyns = [c.dynamics.build(noise=False) for c in (cfg1, cfg2)]
    s0 = tuple(spectral_abscissa(d, c.analysis.branches).s0 for d, c in zip(dyns, (cfg1, cfg2)))
    if abs(s0[0] - s0[1]) > S0_MATCH_TOL:
        raise ConfigurationError(
            f"configs must share the spectral abscissa: s0 = {s0[0]:.9g} vs {s0[1]:.9g}"
        )
    coeffs = [d.scalar_coefficients() for d in dyns]
    eps = tuple(iss_epsilon_critical(a0, dl[0][0]) for a0, dl in coeffs)
    ks = np.asarray(list(k_range))
    report = TradeoffReport(s0, eps, ks.tolist())
    for T in T_values:
        rows = tuple(1.0 / np.asarray(delta_k(a0, dl, T, ks), dtype=float) for a0, dl in coeffs)
        report.delta_inv[T] = rows
        report.ratios[T] = rows[1] / rows[0]
        report.mean_ratio[T] = float(report.ratios[T].mean())
        report.sum_ratio[T] = float(rows[1].sum() / rows[0].sum())
        for label, cfg in (("config1", cfg1), ("config2", cfg2)):
            N = cfg.clock.N
            theta = T / N
            cell = cfg.replace(**{"clock.theta": theta,
                                  "clock.dt": default_dt(theta, [cfg.dynamics.tau])})
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                report.timescale_ok[T] = cell.clock.build().check_timescales(cfg.dynamics.tau)
            report.nrmse[(label, T)] = run_narma10(cell).nrmse_test if run_benchmarks else None
    return report


@dataclass
class SweepCell:
    index: int
    overrides: dict
    report: BenchmarkReport | None = None
    error: str | None = None
    error_type: str | None = None

    def to_dict(self) -> dict:
        out = {"index": self.index, "overrides": self.overrides}
        if self.report is not None:
            out["report"] = self.report.to_dict()
        else:
            out["error"] = self.error
            out["error_type"] = self.error_type
        return out


def expand_grid(grid: dict) -> list[dict]:
    """Cartesian product of ``{"section.field": [values...]}`` in key order."""
    for key, values in grid.items():
        if not isinstance(values, (list, tuple)) or not values:
            raise ConfigurationError(f"sweep.{key} must be a non-empty list")
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _run_cell(args) -> SweepCell:
    index, base, overrides = args
    try:
        cfg = base.replace(**overrides)
        return SweepCell(index, overrides, report=run_narma10(cfg))
    except (DelayResError, ArithmeticError, ValueError) as exc:
        return SweepCell(index, overrides, error=str(exc), error_type=type(exc).__name__)


def max_workers() -> int:
    raw = os.environ.get("DELAYRES_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigurationError(f"DELAYRES_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigurationError(f"DELAYRES_THREADS must be >= 1, got {n}")
    return n


def sweep(grid: dict, base: ExperimentConfig, workers: int | None = None) -> list[SweepCell]:
    """Run ``run_narma10`` on every grid cell; failures are recorded per cell.

    Cells run in worker processes when ``workers`` (default ``DELAYRES_THREADS``,
    else 1) exceeds one. Output order is grid order either way.
    """
    cells = [(i, base, o) for i, o in enumerate(expand_grid(grid))]
    workers = max_workers() if workers is None else workers
    if workers <= 1 or len(cells) == 1:
        return [_run_cell(c) for c in cells]
    with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
        return list(pool.map(_run_cell, cells))
