"""Separation measures and the Fourier lower bound for linear delay reservoirs.

For ``z' = a0 z + sum_j a_j z(t - tau_j) + w(t)`` with ``w`` expanded as
``sum_k alpha_k exp(i omega_k t)`` on ``[0, t1]``, the periodic response has
coefficients ``beta_k = alpha_k / (i omega_k - a0 - sum_j a_j exp(-i omega_k tau_j))``
and hence energy density ``sum_k |alpha_k|^2 / Delta_k``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dde import DelayDynamics, InitialCondition, _evaluate, integrate, trajectory_segment_norm
from .errors import ConfigurationError, ContractError, DomainError
from .spectral import fit_exponential_envelope


def _scalar(dyn) -> tuple[float, list[tuple[float, float]]]:
    """Accept a DelayDynamics or an ``(a0, [(a_j, tau_j), ...])`` pair."""
    if isinstance(dyn, DelayDynamics):
        return dyn.scalar_coefficients()
    a0, delayed = dyn
    return float(a0), [(float(a), float(tau)) for a, tau in delayed]


@dataclass(frozen=True)
class FourierExpansion:
    """Coefficients ``alpha_k`` for ``k = -kmax..kmax`` on the window ``[0, t1]``."""

    t1: float
    alpha: np.ndarray
    mean_power: float = float("nan")

    @property
    def kmax(self) -> int:
        return (len(self.alpha) - 1) // 2

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.kmax, self.kmax + 1)

    def __getitem__(self, k: int) -> complex:
        if abs(k) > self.kmax:
            return 0j
        return complex(self.alpha[k + self.kmax])

    @property
    def power(self) -> np.ndarray:
        return np.abs(self.alpha) ** 2

    def symmetry_error(self) -> float:
        """``max |alpha_{-k} - conj(alpha_k)|``; zero for real signals."""
        return float(np.max(np.abs(self.alpha[::-1] - np.conj(self.alpha))))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        omega = 2 * np.pi * self.ks / self.t1
        out = (self.alpha * np.exp(1j * np.multiply.outer(t, omega))).sum(axis=-1).real
        return float(out) if out.ndim == 0 else out


class TrigPolynomial(FourierExpansion):
    """A real trigonometric polynomial, usable directly as an input signal."""

    @property
    def l2_norm(self) -> float:
        """``||w||_{L2[0, t1]}``, exact by Parseval."""
        return math.sqrt(self.t1 * float(self.power.sum()))


def random_trig_polynomial(rng: np.random.Generator, t1: float, kmax: int,
                           norm: float | None = None, dc: bool = True) -> TrigPolynomial:
    """Random real trig polynomial of degree ``kmax`` on ``[0, t1]``.

    If ``norm`` is given the result is rescaled to that L2 norm over one period.
    """
    pos = rng.normal(size=kmax) + 1j * rng.normal(size=kmax)
    a0 = rng.normal() if dc else 0.0
    alpha = np.concatenate([np.conj(pos[::-1]), [a0], pos]) / 2
    w = TrigPolynomial(t1, alpha)
    if norm is not None:
        w = TrigPolynomial(t1, alpha * norm / w.l2_norm)
    return w


DEFAULT_KMAX = 64


def fourier_coeffs(w, t1: float, kmax: int = DEFAULT_KMAX, n_quad: int | None = None) -> FourierExpansion:
    """``alpha_k = (1/t1) int_0^t1 w(t) exp(-2 i k pi t / t1) dt`` by the trapezoid rule.

    The trapezoid rule on ``n_quad`` uniform intervals reduces to a DFT of the
    samples with the two endpoint values averaged into the first one.
    """
    if kmax < 0:
        raise ContractError("kmax must be >= 0")
    if n_quad is None:
        n_quad = max(256, 4 * kmax)
    if n_quad < max(1, 4 * kmax):
        raise ConfigurationError(f"n_quad={n_quad} < 4*kmax={4 * kmax} would alias")
    t = np.linspace(0.0, t1, n_quad + 1)
    samples = _evaluate(w, t).astype(complex)
    folded = samples[:-1].copy()
    folded[0] = 0.5 * (samples[0] + samples[-1])
    spectrum = np.fft.fft(folded) / n_quad
    ks = np.arange(-kmax, kmax + 1)
    mean_power = float(np.trapezoid(np.abs(samples) ** 2, t) / t1)
    return FourierExpansion(float(t1), spectrum[ks % n_quad], mean_power)


def delta_k(a0: float, delayed, t1: float, k):
    """``|i omega_k - a0 - sum_j a_j exp(-i omega_k tau_j)|^2`` with ``omega_k = 2 k pi / t1``.

    Written out, ``(a0 + sum a_j cos(omega_k tau_j))^2 + (omega_k + sum a_j sin(omega_k tau_j))^2``.
    ``k`` may be an array.
    """
    if not t1 > 0:
        raise ContractError("t1 must be positive")
    omega = 2 * np.pi * np.asarray(k, dtype=float) / t1
    re = a0 + sum(a * np.cos(omega * tau) for a, tau in delayed)
    im = omega + sum(a * np.sin(omega * tau) for a, tau in delayed)
    out = re ** 2 + im ** 2
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class SeparationReport:
    ks: np.ndarray
    delta: np.ndarray
    bound_value: float
    steady_energy: float
    transient_margin: float
    band_split: tuple[int, float, float]
    truncation_estimate: float
    empirical_energy: float | None = None

    @property
    def delta_k(self) -> dict[int, float]:
        return dict(zip(self.ks.tolist(), self.delta.tolist()))


def separation_lower_bound(expansion: FourierExpansion, dyn, t0: float, t1: float,
                           s0: float, eps: float, M1: float = 0.0, k0: int | None = None,
                           empirical_energy: float | None = None) -> SeparationReport:
    """``(t1 - t0) * (sum_k |alpha_k|^2 / Delta_k - M1 exp((s0 + eps) t0))``.

    With ``M1 = 0`` the transient is neglected and the value no longer depends
    on the initial condition.
    """
    a0, delayed = _scalar(dyn)
    if not s0 < 0:
        raise DomainError(f"free system is not asymptotically stable (s0={s0})")
    if not (eps > 0 and s0 + eps < 0):
        raise ContractError(f"need eps > 0 and s0 + eps < 0, got eps={eps}")
    if not 0 <= t0 < t1:
        raise ContractError(f"need 0 <= t0 < t1, got t0={t0}, t1={t1}")
    if M1 < 0:
        raise ContractError("M1 must be non-negative")
    ks = expansion.ks
    delta = delta_k(a0, delayed, expansion.t1, ks)
    terms = expansion.power / delta
    density = float(terms.sum())
    margin = M1 * math.exp((s0 + eps) * t0)
    k0 = expansion.kmax if k0 is None else k0
    inside = np.abs(ks) <= k0
    split = (int(k0), float(terms[inside].sum()), float(terms[~inside].sum()))

    # Parseval tail, bounded using Delta_k >= (omega_k - |a0| - sum |a_j|)^2
    tail_power = max(0.0, expansion.mean_power - float(expansion.power.sum()))
    gap = 2 * math.pi * (expansion.kmax + 1) / expansion.t1 - abs(a0) - sum(abs(a) for a, _ in delayed)
    if tail_power == 0.0 or math.isnan(tail_power):
        truncation = 0.0
    else:
        truncation = tail_power / gap ** 2 if gap > 0 else math.inf

    return SeparationReport(
        ks=ks,
        delta=np.asarray(delta),
        bound_value=(t1 - t0) * (density - margin),
        steady_energy=(t1 - t0) * density,
        transient_margin=margin,
        band_split=split,
        truncation_estimate=truncation,
        empirical_energy=empirical_energy,
    )


def transient_constant(dyn: DelayDynamics, phi: InitialCondition, s0: float, eps: float,
                       t_end: float, dt: float, factor: float = 3.0) -> float:
    """Heuristic ``M1``: ``factor`` times the envelope constant of the free response.

    The free response from ``phi`` is fitted with rate ``s0 + eps``; ``factor``
    leaves room for the cross terms between transient and periodic parts.
    """
    _require_deterministic(dyn)
    traj = integrate(dyn, phi, None, t_end, dt)
    _, full = traj.with_prehistory()
    phi_norm = float(np.max(np.abs(full[: len(traj.prehistory) + 1])))
    if phi_norm == 0.0:
        return 0.0
    return factor * (fit_exponential_envelope(traj, s0 + eps, phi_norm) * phi_norm) ** 2


def band_separation_objective(dyn, t1: float, k0: int, kmax: int, weights=1.0):
    """In-band (``|k| <= k0``) and out-of-band sums of ``weights_k / Delta_k``.

    ``weights`` is a scalar or an array indexed by ``k = -kmax..kmax``.
    """
    if not 0 <= k0 <= kmax:
        raise ContractError(f"need 0 <= k0 <= kmax, got k0={k0}, kmax={kmax}")
    a0, delayed = _scalar(dyn)
    ks = np.arange(-kmax, kmax + 1)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), ks.shape)
    terms = weights / delta_k(a0, delayed, t1, ks)
    inside = np.abs(ks) <= k0
    return float(terms[inside].sum()), float(terms[~inside].sum())


def _require_deterministic(dyn: DelayDynamics):
    if dyn.noise_std > 0:
        raise ContractError("separation measures need noise-free dynamics")


def pairwise_separation(dyn: DelayDynamics, phi: InitialCondition | None, u, v,
                        t0: float, t1: float, dt: float) -> float:
    """``||x^u(phi) - x^v(phi)||_{L2[t0, t1]}``."""
    _require_deterministic(dyn)
    if not t0 < t1:
        raise ContractError(f"need t0 < t1, got {t0}, {t1}")
    xu = integrate(dyn, phi, u, t1, dt)
    xv = integrate(dyn, phi, v, t1, dt)
    return trajectory_segment_norm(xu - xv, t0, t1, "L2")


def input_distance(u, v, t1: float, dt: float) -> float:
    """``||u - v||_{L2[0, t1]}`` by the trapezoid rule on the ``dt`` grid."""
    t = np.linspace(0.0, t1, int(round(t1 / dt)) + 1)

    def sample(s):
        if s is None:
            return np.zeros_like(t)
        if np.isscalar(s):
            return np.full_like(t, float(s))
        if hasattr(s, "step"):  # right-open steps: avoid the final edge
            return _evaluate(s, np.minimum(t, np.nextafter(s.end, -np.inf)))
        return _evaluate(s, t)

    return float(math.sqrt(np.trapezoid((sample(u) - sample(v)) ** 2, t)))


@dataclass
class AveragedSeparation:
    value: float
    n_pairs: int
    n_initial: int
    rejected: list = field(default_factory=list)

    def __float__(self) -> float:
        return self.value


def averaged_separation(dyn: DelayDynamics, F, E, d: float, delta: float,
                        t0: float, t1: float, dt: float) -> AveragedSeparation:
    """Mean of ``pairwise_separation`` over initial conditions ``F`` and input pairs ``E``.

    Pairs whose distance misses ``d`` by more than ``delta`` are dropped and
    listed in ``rejected`` as ``(index, distance)``.
    """
    F = list(F)
    if not F:
        raise ContractError("need at least one initial condition")
    kept, rejected = [], []
    for i, (u, v) in enumerate(E):
        dist = input_distance(u, v, t1, dt)
        if abs(dist - d) <= delta:
            kept.append((u, v))
        else:
            rejected.append((i, dist))
    if rejected:
        warnings.warn(f"{len(rejected)} input pair(s) outside d={d}+/-{delta}: {rejected}",
                      stacklevel=2)
    if not kept:
        raise DomainError("no input pair satisfies the distance condition")
    total = sum(pairwise_separation(dyn, phi, u, v, t0, t1, dt) for u, v in kept for phi in F)
    return AveragedSeparation(total / (len(kept) * len(F)), len(kept), len(F), rejected)


def random_input_pairs(rng: np.random.Generator, n: int, t1: float, kmax: int, d: float):
    """``n`` pairs ``(u, v)`` of trig polynomials with ``||u - v||_{L2[0,t1]} = d``."""
    pairs = []
    for _ in range(n):
        u = random_trig_polynomial(rng, t1, kmax)
        w = random_trig_polynomial(rng, t1, kmax, norm=d)
        pairs.append((u, TrigPolynomial(t1, u.alpha - w.alpha)))
    return pairs
