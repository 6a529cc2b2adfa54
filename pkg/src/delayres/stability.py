"""Lyapunov-Krasovskii checks for scalar single-delay linear reservoirs.

The functional is ``V(x_t) = x(t)^2 + |a1| int_{-tau}^0 x(t+s)^2 ds``. Along
solutions of ``x' = a0 x + a1 x(t - tau) + u`` it satisfies, for any
``eps > eps* = 1 / (-2 (a0 + |a1|))``,

    D+V <= (2 a0 + 2 |a1| + 1/eps) x(t)^2 + eps u(t)^2.

Everything here checks that inequality (and its consequences) on simulated
trajectories; nothing here proves anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dde import (DelayDynamics, HistoryBuffer, InitialCondition, Trajectory, grid_steps,
                  input_samples, integrate)
from .errors import ContractError, DomainError


@dataclass(frozen=True)
class LKFConfig:
    a0: float
    a1: float
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ContractError(f"tau must be positive, got {self.tau}")
        if not self.a0 + abs(self.a1) < 0:
            raise DomainError(
                f"quadratic functional needs a0 + |a1| < 0, got {self.a0 + abs(self.a1)}"
            )

    @classmethod
    def from_dynamics(cls, dyn: DelayDynamics) -> "LKFConfig":
        a0, delayed = dyn.scalar_coefficients()
        if len(delayed) != 1:
            raise ContractError("the quadratic functional is for single-delay systems")
        (a1, tau), = delayed
        return cls(a0, a1, tau)

    @property
    def sandwich_constant(self) -> float:
        """``c`` in ``V(x_t) <= c * ||x_t||^2``."""
        return 1.0 + abs(self.a1) * self.tau


def lkf_value(history: HistoryBuffer, cfg: LKFConfig) -> float:
    window = history.window(cfg.tau)[:, 0]
    integral = np.trapezoid(window ** 2, dx=history.grid_step)
    return float(history.current[0] ** 2 + abs(cfg.a1) * integral)


def lkf_series(traj: Trajectory, cfg: LKFConfig) -> np.ndarray:
    """``V(x_t)`` at every grid point, using the stored prehistory for early times."""
    m = grid_steps(cfg.tau, traj.dt, "tau")
    if len(traj.prehistory) < m:
        raise ContractError("trajectory prehistory is shorter than the delay")
    _, full = traj.with_prehistory()
    sq = full[:, 0] ** 2
    # trapezoid over [t - tau, t] from cumulative sums of the trapezoid panels
    panels = np.concatenate([[0.0], np.cumsum(0.5 * (sq[1:] + sq[:-1]) * traj.dt)])
    p = len(traj.prehistory)
    idx = np.arange(p, len(full))
    return sq[idx] + abs(cfg.a1) * (panels[idx] - panels[idx - m])


def iss_epsilon_critical(a0: float, a1: float) -> float:
    """``eps* = 1 / (-2 (a0 + |a1|))``: smallest gain making the x^2 coefficient negative."""
    s = a0 + abs(a1)
    if not s < 0:
        raise DomainError(f"a0 + |a1| = {s} >= 0; the quadratic functional does not apply")
    return 1.0 / (-2.0 * s)


def dissipation_coefficient(a0: float, a1: float, eps: float) -> float:
    return 2 * a0 + 2 * abs(a1) + 1.0 / eps


def driver_derivative_numeric(V, index: int, h: float) -> float:
    """Forward difference ``(V[i+1] - V[i]) / h`` standing in for ``D+V``."""
    V = np.asarray(V)
    if not 0 <= index < len(V) - 1:
        raise ContractError(f"index {index} has no forward neighbour in a series of {len(V)}")
    return float((V[index + 1] - V[index]) / h)


@dataclass
class StabilityReport:
    eps_star: float
    eps: float
    violations: int
    worst_residual: float
    tolerance: float
    grid_step: float
    n_checked: int
    fading_rate_estimate: float | None = None

    def to_dict(self) -> dict:
        return {
            "eps_star": self.eps_star,
            "eps": self.eps,
            "dissipation_violations": self.violations,
            "worst_residual": self.worst_residual,
            "tolerance": self.tolerance,
            "diss_check_grid": self.grid_step,
            "n_checked": self.n_checked,
            "fading_rate_estimate": self.fading_rate_estimate,
        }


def dissipation_residuals(traj: Trajectory, u_grid: np.ndarray, cfg: LKFConfig,
                          eps: float) -> np.ndarray:
    """``D+V - (c x^2 + eps u^2)`` at every grid point with a forward neighbour."""
    V = lkf_series(traj, cfg)
    dV = np.diff(V) / traj.dt
    x = traj.x[:-1]
    rhs = dissipation_coefficient(cfg.a0, cfg.a1, eps) * x ** 2 + eps * u_grid[:len(x)] ** 2
    return dV - rhs


def verify_dissipation(dyn: DelayDynamics, cfg: LKFConfig | None, u,
                       phi: InitialCondition | None, eps: float, t_end: float,
                       dt: float, c: float = 10.0) -> StabilityReport:
    """Integrate and check the dissipation inequality at every grid point.

    A residual counts as a violation when it exceeds ``c * dt * (1 + max x^2)``,
    the allowance for the first-order difference.
    """
    if dyn.noise_std > 0:
        raise ContractError("dissipation check needs noise-free dynamics")
    cfg = cfg if cfg is not None else LKFConfig.from_dynamics(dyn)
    eps_star = iss_epsilon_critical(cfg.a0, cfg.a1)
    if not eps > eps_star:
        raise DomainError(f"eps={eps} must exceed eps*={eps_star:.6g}")
    traj = integrate(dyn, phi, u, t_end, dt)
    u_grid = input_samples(u, dt, len(traj) - 1)[0]
    res = dissipation_residuals(traj, u_grid, cfg, eps)
    tol = c * dt * (1.0 + float(np.max(traj.x ** 2)))
    return StabilityReport(
        eps_star=eps_star,
        eps=eps,
        violations=int(np.sum(res > tol)),
        worst_residual=float(res.max()),
        tolerance=tol,
        grid_step=dt,
        n_checked=len(res),
    )


def gronwall_envelope(traj: Trajectory, u_grid: np.ndarray, cfg: LKFConfig,
                      eps: float) -> np.ndarray:
    """``exp(-kappa t) V(x_0) + (eps/kappa) ||u||^2_[0,t]`` at each grid point.

    ``kappa`` converts the x^2 decay into V decay through the sandwich constant.
    """
    coef = dissipation_coefficient(cfg.a0, cfg.a1, eps)
    if not coef < 0:
        raise DomainError(f"eps={eps} does not give a negative x^2 coefficient")
    kappa = -coef / cfg.sandwich_constant
    V0 = lkf_series(traj, cfg)[0]
    running = np.maximum.accumulate(np.abs(np.append(u_grid, u_grid[-1:])))[:len(traj)]
    return np.exp(-kappa * (traj.times - traj.t0)) * V0 + eps / kappa * running ** 2


@dataclass
class DeltaISSReport:
    decay_exponent: float | None
    gamma_slope: float | None
    sup_difference: float
    trivial: bool
    fit_window: tuple[float, float] | None = None


def verify_delta_iss(dyn: DelayDynamics, u, v, phi: InitialCondition | None,
                     psi: InitialCondition | None, t_end: float, dt: float,
                     fit_window: tuple[float, float] | None = None) -> DeltaISSReport:
    """Trajectory-level incremental stability check for linear dynamics.

    With equal inputs, fits the decay exponent of ``|x^u(phi) - x^u(psi)|``
    (least squares on the log over ``fit_window``, default the second half).
    With equal initial conditions, reports ``sup_t |d(t)| / ||u - v||_[0,t]``.
    """
    if dyn.noise_std > 0:
        raise ContractError("incremental check needs noise-free dynamics")
    if not dyn.is_linear:
        raise ContractError("incremental check is implemented for linear dynamics only")
    phi = phi if phi is not None else InitialCondition()
    psi = psi if psi is not None else InitialCondition()
    xa = integrate(dyn, phi, u, t_end, dt)
    xb = integrate(dyn, psi, v, t_end, dt)
    d = np.linalg.norm((xa - xb).states, axis=1)
    n_steps = len(xa) - 1
    du = np.abs(input_samples(u, dt, n_steps)[0] - input_samples(v, dt, n_steps)[0])
    same_input = not np.any(du)
    same_init = (np.array_equal(xa.prehistory, xb.prehistory)
                 and np.array_equal(xa.states[0], xb.states[0]))
    sup_d = float(d.max())
    if sup_d == 0.0:
        return DeltaISSReport(None, None, 0.0, True)

    decay = None
    window = None
    if same_input:
        window = fit_window or (0.5 * t_end, t_end)
        t = xa.times
        sel = (t >= window[0]) & (t <= window[1]) & (d > 0)
        if sel.sum() < 2:
            raise ContractError(f"fit window {window} holds fewer than two usable points")
        decay = float(np.polyfit(t[sel], np.log(d[sel]), 1)[0])

    gamma = None
    if same_init:
        running = np.maximum.accumulate(np.append(du, du[-1]))
        ok = running > 0
        gamma = float(np.max(d[ok] / running[ok])) if ok.any() else None

    return DeltaISSReport(decay, gamma, sup_d, False, window)
