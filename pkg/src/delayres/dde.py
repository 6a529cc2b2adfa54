"""Fixed-step integration of retarded delay differential equations.

Every system handled here has the form

    x'(t) = A0 x(t) + g(sum_j A_j x(t - tau_j) + b u(t)) + xi(t)

with ``g`` applied elementwise. With ``g`` the identity this is the linear
multi-delay system; with ``g = log_sign``, ``A0 = -1``, ``A1 = 1`` and
``tau = 1`` it is the logarithmic reservoir ``x' = -x + g(x(t-1) + u)``.

The integrator is classical RK4 on a grid that contains every delay, so
delayed lookups at the step endpoints hit stored grid values. The half-step
stages need x at midpoints of past steps; those come from the cubic Hermite
interpolant built from the stored values and slopes, which keeps the scheme
fourth order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ContractError, DivergenceError

_BLOWUP = 1e150


def log_sign(t):
    """``sign(t) * log(1 + |t|)``, elementwise."""
    return np.sign(t) * np.log1p(np.abs(t))


def _log_sign_scalar(t: float) -> float:
    return math.copysign(math.log1p(abs(t)), t)


NONLINEARITIES = {
    "identity": (None, None),
    "log_sign": (_log_sign_scalar, log_sign),
    "tanh": (math.tanh, np.tanh),
}


def grid_steps(duration: float, dt: float, what: str = "duration") -> int:
    """Number of ``dt`` steps in ``duration``; raises if it is not a whole number."""
    m = round(duration / dt)
    if m < 1 or abs(m * dt - duration) > 1e-12 * max(1.0, abs(duration)):
        raise ConfigurationError(
            f"{what}={duration!r} is not a positive multiple of dt={dt!r}"
        )
    return int(m)


def _as_square(a, n: int | None, name: str) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1] or (n is not None and a.shape[0] != n):
        raise ContractError(f"{name} must be a square {n}x{n} matrix, got {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DelayDynamics:
    """Linear or output-nonlinear delay system with a scalar input channel."""

    A0: np.ndarray
    delayed_terms: tuple = ()
    nonlinearity: str = "identity"
    input_map: np.ndarray | None = None
    noise_std: float = 0.0

    def __post_init__(self):
        A0 = _as_square(self.A0, None, "A0")
        n = A0.shape[0]
        terms = tuple(
            (float(tau), _as_square(A, n, f"A[{j + 1}]"))
            for j, (tau, A) in enumerate(self.delayed_terms)
        )
        delays = [tau for tau, _ in terms]
        if any(tau <= 0 for tau in delays):
            raise ConfigurationError(f"delays must be positive, got {delays}")
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ConfigurationError(
                f"delays must be strictly increasing, got {delays}"
            )
        if self.nonlinearity not in NONLINEARITIES:
            raise ConfigurationError(
                f"unknown nonlinearity {self.nonlinearity!r}; "
                f"expected one of {sorted(NONLINEARITIES)}"
            )
        b = np.ones(n) if self.input_map is None else np.asarray(self.input_map, float)
        b = b.reshape(-1)
        if b.shape != (n,):
            raise ContractError(f"input_map must have length {n}, got {b.shape}")
        b.setflags(write=False)
        if not self.noise_std >= 0:
            raise ConfigurationError(f"noise_std must be >= 0, got {self.noise_std}")
        object.__setattr__(self, "A0", A0)
        object.__setattr__(self, "delayed_terms", terms)
        object.__setattr__(self, "input_map", b)
        object.__setattr__(self, "noise_std", float(self.noise_std))

    @classmethod
    def scalar(cls, a0, a1=0.0, tau=1.0, *, nonlinearity="identity", b=1.0,
               noise_std=0.0) -> "DelayDynamics":
        """One-dimensional, single-delay system ``x' = a0 x + g(a1 x(t-tau) + b u)``."""
        return cls([[a0]], ((tau, [[a1]]),), nonlinearity, [b], noise_std)

    @classmethod
    def log_reservoir(cls, tau=1.0, noise_std=0.0) -> "DelayDynamics":
        return cls.scalar(-1.0, 1.0, tau, nonlinearity="log_sign", noise_std=noise_std)

    @property
    def dim(self) -> int:
        return self.A0.shape[0]

    @property
    def delays(self) -> list[float]:
        return [tau for tau, _ in self.delayed_terms]

    @property
    def max_delay(self) -> float:
        return max(self.delays, default=0.0)

    @property
    def is_linear(self) -> bool:
        return self.nonlinearity == "identity"

    def scalar_coefficients(self) -> tuple[float, list[tuple[float, float]]]:
        """``(a0, [(a_j, tau_j), ...])`` for a scalar linear system."""
        if self.dim != 1:
            raise ContractError(
                f"analysis requires scalar dynamics, got dimension {self.dim}"
            )
        if not self.is_linear:
            raise ContractError("analysis requires the identity nonlinearity")
        return float(self.A0[0, 0]), [(float(A[0, 0]), tau) for tau, A in self.delayed_terms]


@dataclass(frozen=True)
class InitialCondition:
    """History ``phi`` on ``[-delta, 0)`` plus the state ``x0`` at ``t = 0``.

    ``phi`` may be a constant (scalar or vector) or a callable of time.
    ``x0`` defaults to the left limit of ``phi`` at 0.
    """

    phi: Callable | float | Sequence[float] = 0.0
    x0: float | Sequence[float] | None = None

    def profile(self, times: np.ndarray, dim: int) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if callable(self.phi):
            vals = _evaluate(self.phi, times, dim)
        else:
            vals = np.broadcast_to(np.asarray(self.phi, float).reshape(-1), (len(times), dim))
        vals = np.array(vals, dtype=float).reshape(len(times), dim)
        if not np.all(np.isfinite(vals)):
            raise ContractError("initial history contains non-finite values")
        return vals

    def initial_state(self, dim: int) -> np.ndarray:
        if self.x0 is None:
            return self.profile(np.zeros(1), dim)[0]
        x0 = np.broadcast_to(np.asarray(self.x0, float).reshape(-1), (dim,)).copy()
        if not np.all(np.isfinite(x0)):
            raise ContractError("x0 must be finite")
        return x0


def _evaluate(fn, times: np.ndarray, dim: int = 1) -> np.ndarray:
    """Evaluate ``fn`` on ``times``, vectorised when ``fn`` allows it."""
    try:
        out = np.asarray(fn(times), dtype=float)
        if out.shape in ((len(times),), (len(times), dim)):
            return out.reshape(len(times), dim) if dim > 1 else out.reshape(len(times))
    except (TypeError, ValueError):
        pass
    out = np.array([np.asarray(fn(float(t)), dtype=float) for t in times])
    return out.reshape(len(times), dim) if dim > 1 else out.reshape(len(times))


@dataclass
class HistoryBuffer:
    """Uniform-grid record of the state over ``[t_now - span, t_now]``."""

    grid_step: float
    values: np.ndarray
    t_now: float
    span: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim == 1:
            self.values = self.values[:, None]
        if not self.grid_step > 0:
            raise ContractError("grid_step must be positive")
        need = math.ceil(self.span / self.grid_step - 1e-9) + 1
        if len(self.values) < need:
            raise ContractError(
                f"history holds {len(self.values)} points, needs {need} to cover span {self.span}"
            )

    @property
    def times(self) -> np.ndarray:
        m = len(self.values)
        return self.t_now - self.grid_step * np.arange(m - 1, -1, -1)

    @property
    def current(self) -> np.ndarray:
        return self.values[-1]

    def query(self, t: float) -> np.ndarray:
        """Linearly interpolated state at time ``t`` inside the stored window."""
        lag = self.t_now - t
        slack = 1e-9 * self.grid_step
        if lag < -slack or lag > self.span + slack:
            raise ContractError(
                f"query at t={t} is outside the window [{self.t_now - self.span}, {self.t_now}]"
            )
        pos = (len(self.values) - 1) - max(lag, 0.0) / self.grid_step
        i = min(max(int(math.floor(pos)), 0), len(self.values) - 2) if len(self.values) > 1 else 0
        if len(self.values) == 1:
            return self.values[0].copy()
        frac = pos - i
        return (1 - frac) * self.values[i] + frac * self.values[i + 1]

    def window(self, length: float) -> np.ndarray:
        """Grid samples covering ``[t_now - length, t_now]`` (oldest first)."""
        m = grid_steps(length, self.grid_step, "window length")
        if m >= len(self.values):
            raise ContractError(f"window of length {length} exceeds the stored history")
        return self.values[-(m + 1):]


@dataclass(frozen=True)
class Trajectory:
    """States on the grid ``t0 + i*dt``.

    ``prehistory`` holds the initial profile sampled at ``t0 - p*dt, ..., t0 - dt``
    so functionals over past windows can be evaluated from the start.
    """

    t0: float
    dt: float
    states: np.ndarray
    prehistory: np.ndarray = field(default_factory=lambda: np.zeros((0, 1)))

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        if states.ndim == 1:
            states = states[:, None]
        if not self.dt > 0 or len(states) == 0:
            raise ContractError("trajectory needs dt > 0 and at least one state")
        pre = np.asarray(self.prehistory, dtype=float).reshape(-1, states.shape[1])
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "prehistory", pre)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.states))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self.states) - 1)

    @property
    def x(self) -> np.ndarray:
        """First state component; the whole state for scalar systems."""
        return self.states[:, 0]

    def index(self, t: float) -> int:
        i = round((t - self.t0) / self.dt)
        if i < 0 or i >= len(self.states):
            raise ContractError(f"t={t} is outside [{self.t0}, {self.t_end}]")
        return int(i)

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def with_prehistory(self) -> tuple[np.ndarray, np.ndarray]:
        """Times and states including the sampled initial profile."""
        p = len(self.prehistory)
        t = self.t0 + self.dt * np.arange(-p, len(self.states))
        return t, np.vstack([self.prehistory, self.states])

    def history(self, i: int, span: float) -> HistoryBuffer:
        """Buffer over ``[t_i - span, t_i]``, reaching into the prehistory if needed."""
        m = grid_steps(span, self.dt, "span")
        _, full = self.with_prehistory()
        j = i + len(self.prehistory)
        if j - m < 0:
            raise ContractError(
                f"not enough history before index {i} for span {span}"
            )
        return HistoryBuffer(self.dt, full[j - m: j + 1], self.t0 + i * self.dt, span)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        if (self.dt != other.dt or self.t0 != other.t0
                or self.states.shape != other.states.shape):
            raise ContractError("trajectories live on different grids")
        p = min(len(self.prehistory), len(other.prehistory))
        pre = self.prehistory[len(self.prehistory) - p:] - other.prehistory[len(other.prehistory) - p:]
        return Trajectory(self.t0, self.dt, self.states - other.states, pre)


def evaluate_rhs(dyn: DelayDynamics, x_now, delayed, u_val: float) -> np.ndarray:
    """Right-hand side of ``dyn`` at one instant, without the noise term."""
    n = dyn.dim
    x = np.asarray(x_now, dtype=float).reshape(-1)
    if x.shape != (n,):
        raise ContractError(f"x_now must have length {n}, got {x.shape}")
    if len(delayed) != len(dyn.delayed_terms):
        raise ContractError(
            f"expected {len(dyn.delayed_terms)} delayed values, got {len(delayed)}"
        )
    inner = dyn.input_map * float(u_val)
    for (_, A), d in zip(dyn.delayed_terms, delayed):
        d = np.asarray(d, dtype=float).reshape(-1)
        if d.shape != (n,):
            raise ContractError(f"delayed value must have length {n}, got {d.shape}")
        inner = inner + A @ d
    g = NONLINEARITIES[dyn.nonlinearity][1]
    return dyn.A0 @ x + (inner if g is None else g(inner))


def input_samples(u, dt: float, n_steps: int):
    """Input values at the left, middle and right stage times of each step.

    Objects with a ``step`` attribute are treated as piecewise constant and held
    over every integration step, which requires their step to sit on the grid.
    """
    if u is None:
        z = np.zeros(n_steps)
        return z, z, z
    if np.isscalar(u):
        c = np.full(n_steps, float(u))
        return c, c, c
    left = dt * np.arange(n_steps)
    step = getattr(u, "step", None)
    if step is not None:
        grid_steps(step, dt, "input step")
        start = getattr(u, "start", 0.0)
        if abs(start / dt - round(start / dt)) > 1e-9:
            raise ConfigurationError(f"input start {start} is not on the dt grid")
        held = _evaluate(u, left + 0.5 * dt)
        return held, held, held
    return _evaluate(u, left), _evaluate(u, left + 0.5 * dt), _evaluate(u, left + dt)


def _build_rhs(dyn: DelayDynamics):
    """Right-hand side closure on python floats (n = 1) or numpy vectors."""
    scalar_g, vector_g = NONLINEARITIES[dyn.nonlinearity]
    if dyn.dim == 1:
        a0 = float(dyn.A0[0, 0])
        b = float(dyn.input_map[0])
        coeffs = [float(A[0, 0]) for _, A in dyn.delayed_terms]
        g = scalar_g
        if len(coeffs) == 1:
            a1 = coeffs[0]
            if g is None:
                return lambda x, d, u: a0 * x + a1 * d[0] + b * u
            return lambda x, d, u: a0 * x + g(a1 * d[0] + b * u)

        def rhs(x, d, u):
            inner = b * u
            for a, dj in zip(coeffs, d):
                inner += a * dj
            return a0 * x + (inner if g is None else g(inner))

        return rhs

    A0 = dyn.A0
    b = dyn.input_map
    mats = [A for _, A in dyn.delayed_terms]

    def rhs(x, d, u):
        inner = b * u
        for A, dj in zip(mats, d):
            inner = inner + A @ dj
        return A0 @ x + (inner if vector_g is None else vector_g(inner))

    return rhs


def integrate(dyn: DelayDynamics, init: InitialCondition | None = None, u=None,
              t_end: float = 1.0, dt: float = 1e-3, rng_seed: int = 0,
              noise_until: float | None = None) -> Trajectory:
    """Integrate ``dyn`` on ``[0, t_end]`` with fixed-step RK4.

    ``u`` may be None (zero input), a constant, a callable of time, or a
    piecewise-constant signal (anything with ``step`` and ``start``), which is
    held constant over each step. Noise, when ``dyn.noise_std > 0``, is a
    per-step constant drawn from ``N(0, noise_std**2)`` using ``rng_seed``;
    steps starting at or after ``noise_until`` are noise-free.
    """
    if not dt > 0:
        raise ContractError(f"dt must be positive, got {dt}")
    if not t_end >= dt:
        raise ContractError(f"t_end={t_end} must be at least dt={dt}")
    init = init if init is not None else InitialCondition()
    n = dyn.dim
    lags = [grid_steps(tau, dt, f"delay {tau}") for tau in dyn.delays]
    p = max(lags, default=0)
    n_steps = int(math.ceil(t_end / dt - 1e-9))

    u_arrays = input_samples(u, dt, n_steps)
    u_left, u_mid, u_right = (a.tolist() for a in u_arrays)
    pre_t = dt * np.arange(-p, 0)
    pre = init.profile(pre_t, n)
    pre_mid = init.profile(pre_t + 0.5 * dt, n)
    x0 = init.initial_state(n)
    if dyn.noise_std > 0:
        xi = np.random.default_rng(rng_seed).normal(0.0, dyn.noise_std, size=(n_steps, n))
        if noise_until is not None:
            xi[dt * np.arange(n_steps) >= noise_until - 1e-9 * dt] = 0.0
    else:
        xi = np.zeros((n_steps, n))

    # the end slope of step k doubles as k1 of step k+1 when nothing jumps there
    reuse = np.zeros(n_steps, dtype=bool)
    reuse[:-1] = (u_arrays[0][1:] == u_arrays[2][:-1]) & np.all(xi[1:] == xi[:-1], axis=1)
    reuse = reuse.tolist()

    scalar = n == 1
    if scalar:
        pre_l, pre_mid_l = pre[:, 0].tolist(), pre_mid[:, 0].tolist()
        xi_l = xi[:, 0].tolist()
        x_cur = float(x0[0])
    else:
        pre_l, pre_mid_l = list(pre), list(pre_mid)
        xi_l = list(xi)
        x_cur = x0

    f = _build_rhs(dyn)
    h, h2, h6, h8 = dt, 0.5 * dt, dt / 6.0, dt / 8.0
    xs = [x_cur]
    d_right = []
    d_left = []

    def at_grid(i):
        return xs[i] if i >= 0 else pre_l[i + p]

    def at_mid(i):
        # midpoint of step i; cubic Hermite on stored values and slopes
        if i >= 0:
            return 0.5 * (xs[i] + xs[i + 1]) + h8 * (d_right[i] - d_left[i])
        return pre_mid_l[i + p]

    k_next = None
    try:
        for k in range(n_steps):
            noise = xi_l[k]
            ul, um, ur = u_left[k], u_mid[k], u_right[k]
            d_now = [at_grid(k - m) for m in lags]
            d_mid = [at_mid(k - m) for m in lags]
            d_end = [at_grid(k + 1 - m) for m in lags]
            k1 = k_next if k_next is not None else f(x_cur, d_now, ul) + noise
            k2 = f(x_cur + h2 * k1, d_mid, um) + noise
            k3 = f(x_cur + h2 * k2, d_mid, um) + noise
            k4 = f(x_cur + h * k3, d_end, ur) + noise
            x_new = x_cur + h6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if scalar:
                if not -_BLOWUP < x_new < _BLOWUP:
                    raise DivergenceError(
                        f"state diverged at step {k + 1} (t={(k + 1) * dt:.6g})",
                        step=k + 1, time=(k + 1) * dt)
            elif not np.all(np.abs(x_new) < _BLOWUP):
                raise DivergenceError(
                    f"state diverged at step {k + 1} (t={(k + 1) * dt:.6g})",
                    step=k + 1, time=(k + 1) * dt)
            xs.append(x_new)
            slope_end = f(x_new, d_end, ur) + noise
            d_right.append(k1)
            d_left.append(slope_end)
            k_next = slope_end if reuse[k] else None
            x_cur = x_new
    except (OverflowError, FloatingPointError) as exc:
        raise DivergenceError(
            f"state overflowed at step {len(xs)} (t={len(xs) * dt:.6g})",
            step=len(xs), time=len(xs) * dt) from exc

    states = np.array(xs, dtype=float).reshape(n_steps + 1, n)
    return Trajectory(0.0, dt, states, pre)


def trajectory_segment_norm(traj: Trajectory, t_a: float, t_b: float,
                            norm: str = "L2") -> float:
    """L2 (trapezoidal) or sup norm of the trajectory over ``[t_a, t_b]``."""
    i, j = traj.index(t_a), traj.index(t_b)
    if j <= i:
        raise ContractError(f"empty interval [{t_a}, {t_b}]")
    seg = np.linalg.norm(traj.states[i:j + 1], axis=1)
    if norm == "L2":
        return float(math.sqrt(np.trapezoid(seg ** 2, dx=traj.dt)))
    if norm == "sup":
        return float(seg.max())
    raise ContractError(f"unknown norm {norm!r}")
