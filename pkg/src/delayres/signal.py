"""Input time-multiplexing, masking and virtual-node sampling."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dde import Trajectory
from .errors import ConfigurationError, ContractError
from .readout import StateMatrix


@dataclass(frozen=True)
class ClockConfig:
    """Virtual-node spacing ``theta``, node count ``N`` and clock cycle ``T = N*theta``."""

    theta: float
    N: int
    T: float | None = None

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError(f"theta must be positive, got {self.theta}")
        if int(self.N) != self.N or self.N < 1:
            raise ConfigurationError(f"N must be a positive integer, got {self.N}")
        T = self.N * self.theta
        if self.T is not None and abs(self.T - T) > 1e-12 * max(1.0, T):
            raise ConfigurationError(
                f"clock cycle T={self.T} violates T = N*theta = {self.N}*{self.theta} = {T}"
            )
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "T", float(T if self.T is None else self.T))

    def check_timescales(self, tau: float, factor: float = 5.0) -> bool:
        """Warn when the clock cycle is far from the delay. Returns True if they match."""
        ok = tau / factor <= self.T <= tau * factor
        if not ok:
            warnings.warn(
                f"clock cycle T={self.T} is more than a factor {factor} away from tau={tau}",
                stacklevel=2,
            )
        return ok


def default_dt(theta: float, delays, per_slot: int = 20) -> float:
    """Largest step not above ``min(theta, delays)/per_slot`` dividing theta and every delay."""
    durations = [Fraction(theta).limit_denominator(10**6)]
    durations += [Fraction(tau).limit_denominator(10**6) for tau in delays]
    g = durations[0]
    for d in durations[1:]:
        g = Fraction(math.gcd(g.numerator * d.denominator, d.numerator * g.denominator),
                     g.denominator * d.denominator)
    cap = min(float(d) for d in durations) / per_slot
    return float(g / math.ceil(float(g) / cap - 1e-9))


@dataclass(frozen=True)
class PiecewiseConstantSignal:
    """Holds ``values[k]`` on ``[start + k*step, start + (k+1)*step)``."""

    step: float
    values: np.ndarray
    start: float = 0.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if not self.step > 0:
            raise ContractError(f"step must be positive, got {self.step}")
        if len(values) == 0:
            raise ContractError("signal needs at least one value")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def end(self) -> float:
        return self.start + self.step * len(self.values)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        idx = np.floor((t_arr - self.start) / self.step).astype(int)
        if np.any(idx < 0) or np.any(idx >= len(self.values)):
            raise ContractError(
                f"signal evaluated outside its support [{self.start}, {self.end})"
            )
        out = self.values[idx]
        return float(out) if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class Mask:
    values: np.ndarray
    theta: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if len(values) == 0:
            raise ContractError("mask needs at least one value")
        if not np.any(values):
            raise ContractError("mask values are all zero")
        if not self.theta > 0:
            raise ContractError("mask theta must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return len(self.values)


def sample_and_hold(seq, T: float) -> PiecewiseConstantSignal:
    seq = np.asarray(seq, dtype=float).reshape(-1)
    if len(seq) == 0:
        raise ContractError("cannot hold an empty sequence")
    return PiecewiseConstantSignal(T, seq)


def generate_mask(N: int, scheme: str = "binary", seed: int = 0,
                  theta: float = 1.0) -> Mask:
    """Random mask: ``binary`` draws from {-1, +1}, ``uniform`` from [-1, 1]."""
    if N < 1:
        raise ContractError(f"mask length must be >= 1, got {N}")
    rng = np.random.default_rng(seed)
    if scheme == "binary":
        values = rng.choice([-1.0, 1.0], size=N)
    elif scheme == "uniform":
        values = rng.uniform(-1.0, 1.0, size=N)
        while not np.any(values):  # measure-zero, but Mask rejects it
            values = rng.uniform(-1.0, 1.0, size=N)
    else:
        raise ContractError(f"unknown mask scheme {scheme!r}")
    return Mask(values, theta)


def apply_mask(signal: PiecewiseConstantSignal, mask: Mask) -> PiecewiseConstantSignal:
    """Multiply a held signal by the T-periodic mask; the result steps every theta.

    The mask phase is anchored at ``signal.start``.
    """
    T = mask.theta * mask.N
    if abs(T - signal.step) > 1e-12 * max(1.0, T):
        raise ConfigurationError(
            f"mask cycle N*theta = {T} does not match the hold step {signal.step}"
        )
    values = np.outer(signal.values, mask.values).reshape(-1)
    return PiecewiseConstantSignal(mask.theta, values, signal.start)


def sample_virtual_nodes(traj: Trajectory, clock: ClockConfig, n_steps: int,
                         offset: float = 0.0, bias: bool = True) -> StateMatrix:
    """State matrix whose row k holds ``x(offset + k*T + (j+1)*theta)``, j < N.

    For vector states, each node contributes all components (node-major).
    A column of ones is appended when ``bias`` is set.
    """
    ratio = clock.theta / traj.dt
    per_node = round(ratio)
    if per_node < 1 or abs(per_node - ratio) > 1e-9 * ratio:
        raise ConfigurationError(
            f"theta={clock.theta} is not a multiple of the trajectory step {traj.dt}"
        )
    start = (offset - traj.t0) / traj.dt
    if abs(start - round(start)) > 1e-9 or start < 0:
        raise ContractError(f"offset {offset} is not on the trajectory grid")
    start = round(start)
    k = np.arange(n_steps)[:, None]
    j = np.arange(clock.N)[None, :]
    idx = start + (k * clock.N + j + 1) * per_node
    if n_steps < 1 or idx[-1, -1] >= len(traj):
        raise ContractError(
            f"trajectory ends at t={traj.t_end}, sampling needs "
            f"t={offset + n_steps * clock.T}"
        )
    data = traj.states[idx].reshape(n_steps, clock.N * traj.n)
    if bias:
        data = np.hstack([data, np.ones((n_steps, 1))])
    return StateMatrix(data)
