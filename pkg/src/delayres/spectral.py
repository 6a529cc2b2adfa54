"""Characteristic roots of scalar delay equations via the Lambert W function."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .dde import DelayDynamics, Trajectory
from .errors import ContractError, ConvergenceError

_INV_E = math.exp(-1.0)
ROOT_TOL = 1e-9


def _initial_guess(x: complex, k: int) -> complex:
    # series about the branch point -1/e, only for the two branches meeting there
    dist = abs(x + _INV_E)
    side = k == 0 or (k == -1 and x.imag >= 0) or (k == 1 and x.imag < 0)
    if side and (dist < 1.0 if k == 0 else dist < 0.25):
        p = cmath.sqrt(2.0 * (math.e * x + 1.0))
        if k != 0:
            p = -p
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    if k == 0 and abs(x) <= 2.0:
        return cmath.log(1.0 + x)
    if k == -1 and x.imag == 0 and -_INV_E < x.real < 0:
        # real lower branch: start from the asymptote on the real axis
        l1 = math.log(-x.real)
        return complex(l1 - math.log(-l1), 0.0)
    l1 = cmath.log(x) + 2j * math.pi * k
    l2 = cmath.log(l1)
    return l1 - l2 + l2 / l1


def lambert_w(x: complex, branch: int = 0, max_iter: int = 100) -> complex:
    """Branch ``branch`` of the Lambert W function (``w * exp(w) = x``).

    Branches follow the usual convention: ``W_0`` is real on ``[-1/e, inf)``
    and ``W_{-1}`` is real on ``[-1/e, 0)``. Solved by Halley's iteration.
    """
    x = complex(x)
    k = int(branch)
    if x == 0:
        if k == 0:
            return 0j
        raise ContractError(f"W_{k}(0) is unbounded")
    w = _initial_guess(x, k)
    for it in range(max_iter):
        ew = cmath.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= 1e-12 * (1.0 + abs(w)):
            break
    else:
        raise ConvergenceError(
            f"Lambert W did not converge for x={x}, branch={k} after {max_iter} "
            f"iterations (last w={w}, residual={abs(w * cmath.exp(w) - x):.3e})"
        )
    real_branch = x.imag == 0 and x.real >= -_INV_E and (k == 0 or (k == -1 and x.real < 0))
    if real_branch:
        w = complex(w.real, 0.0)
    residual = abs(w * cmath.exp(w) - x)
    if residual > 1e-12 * (1.0 + abs(x)) * max(1.0, abs(w)):
        raise ConvergenceError(
            f"Lambert W residual {residual:.3e} too large for x={x}, branch={k}"
        )
    return w


def characteristic_residual(a0: float, delayed, z: complex) -> float:
    """``|z - a0 - sum_j a_j exp(-z tau_j)|`` for ``delayed = [(a_j, tau_j), ...]``."""
    z = complex(z)
    return abs(z - a0 - sum(a * cmath.exp(-z * tau) for a, tau in delayed))


@dataclass
class SpectralReport:
    s0: float
    dominant_roots: list[complex]
    branch_count: int
    residuals: list[float]
    complex_dominant: bool = False
    coefficients: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "s0": self.s0,
            "roots": [[z.real, z.imag] for z in self.dominant_roots],
            "residuals": self.residuals,
            "branch_count": self.branch_count,
            "complex_dominant": self.complex_dominant,
            **self.coefficients,
        }


def _polish(z: complex, a0: float, a1: float, tau: float) -> complex:
    for _ in range(3):
        e = a1 * cmath.exp(-z * tau)
        h = z - a0 - e
        z -= h / (1.0 + tau * e)
    return z


def spectral_abscissa_scalar(a0: float, a1: float, tau: float,
                             branches: int = 8) -> SpectralReport:
    """Roots ``a0 + W_k(a1 tau exp(-a0 tau)) / tau`` for ``|k| <= branches``.

    Roots are returned with non-negative imaginary part (conjugates dropped),
    ordered by decreasing real part.
    """
    if not tau > 0:
        raise ContractError(f"tau must be positive, got {tau}")
    if branches < 1:
        raise ContractError("need at least one branch")
    coeffs = {"a0": a0, "a1": a1, "tau": tau}
    if a1 == 0:
        return SpectralReport(float(a0), [complex(a0)], 0, [0.0], False, coeffs)
    arg = a1 * tau * math.exp(-a0 * tau)
    roots: list[complex] = []
    for k in range(-branches, branches + 1):
        z = _polish(a0 + lambert_w(arg, k) / tau, a0, a1, tau)
        if z.imag < -1e-12:
            z = z.conjugate()
        if not any(abs(z - r) <= 1e-9 * (1.0 + abs(z)) for r in roots):
            roots.append(complex(z.real, 0.0) if abs(z.imag) <= 1e-12 else z)
    roots.sort(key=lambda z: (-z.real, z.imag))
    residuals = [characteristic_residual(a0, [(a1, tau)], z) for z in roots]
    worst = max(residuals)
    if worst >= ROOT_TOL:
        raise ConvergenceError(f"characteristic root residual {worst:.3e} exceeds {ROOT_TOL}")
    s0 = roots[0].real
    return SpectralReport(s0, roots, branches, residuals, abs(roots[0].imag) > 0, coeffs)


def spectral_abscissa(dyn: DelayDynamics, branches: int = 8) -> SpectralReport:
    a0, delayed = dyn.scalar_coefficients()
    if len(delayed) > 1:
        raise ContractError("Lambert-W analysis covers single-delay systems only")
    a1, tau = delayed[0] if delayed else (0.0, 1.0)
    return spectral_abscissa_scalar(a0, a1, tau, branches)


def fit_exponential_envelope(traj: Trajectory, p: float, phi_norm: float) -> float:
    """Smallest ``M`` with ``|x(t)| <= M exp(p t) ||phi||`` on the trajectory grid."""
    if not phi_norm > 0:
        raise ContractError("phi_norm must be positive")
    t = traj.times
    return float(np.max(traj.norms() * np.exp(-p * t)) / phi_norm)
