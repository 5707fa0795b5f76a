"""Canonical-transformation view of time-rescaling for scale-invariant flows.

For H = p^2/2m + V(x/gamma)/gamma^2 the substituted Hamiltonian
df*H(x, p, f(t)) is generated back into standard kinetic form by the
second-kind generating function F = h1(t) x pbar + h2(t) x^2 with

    h1 = 1/sqrt(df),    h2 = m d2f / (4 df^2) ,

for which the pbar*xbar cross term cancels identically and only an
auxiliary harmonic term kappa(t) xbar^2 remains.  The quantum analogue
replaces F by exponentials of x^2 and {x, p} with coefficients
beta = log(df), alpha = d2f/df and a harmonic strength kappa_q.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .gauge import ToleranceError
from .rescaling import RescalingFunction, check_boundary

__all__ = [
    "ClassicalModel",
    "harmonic_model",
    "quartic_model",
    "h1h2",
    "canonical_map",
    "kappa",
    "quantum_coeffs",
    "evolve_classical",
    "appendix_equivalence_check",
    "AppendixCheckResult",
]


@dataclass(frozen=True)
class ClassicalModel:
    """Mass, scale factor gamma(t) > 0 and shape V(u) with derivative dV."""

    m: float
    gamma: Callable
    V: Callable
    dV: Callable
    label: str = "custom"

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError("mass must be positive")


def _default_gamma(tau: float) -> Callable:
    return lambda t: 1.0 + np.asarray(t, dtype=float) / (2.0 * tau)


def harmonic_model(tau: float = 1.0, m: float = 1.0) -> ClassicalModel:
    return ClassicalModel(m=m, gamma=_default_gamma(tau),
                          V=lambda u: u * u, dV=lambda u: 2.0 * u, label="harmonic")


def quartic_model(tau: float = 1.0, m: float = 1.0) -> ClassicalModel:
    return ClassicalModel(m=m, gamma=_default_gamma(tau),
                          V=lambda u: u**4, dV=lambda u: 4.0 * u**3, label="quartic")


def h1h2(rf: RescalingFunction, t, m: float = 1.0):
    """Generating-function coefficients (1/sqrt(df), m d2f/(4 df^2))."""
    fd = np.asarray(rf.df(t), dtype=float)
    f2 = np.asarray(rf.d2f(t), dtype=float)
    h1 = 1.0 / np.sqrt(fd)
    h2 = m * f2 / (4.0 * fd * fd)
    if np.ndim(h1) == 0:
        return float(h1), float(h2)
    return h1, h2


def canonical_map(state, rf: RescalingFunction, t, m: float = 1.0,
                  direction: str = "forward"):
    """Point map induced by p = h1 pbar + 2 h2 x, xbar = h1 x.

    forward: (x, p) -> (xbar, pbar); inverse composes back to the identity.
    State is any (..., 2) array ordered (position, momentum).
    """
    h1, h2 = h1h2(rf, t, m)
    arr = np.asarray(state, dtype=float)
    x, p = arr[..., 0], arr[..., 1]
    if direction == "forward":
        out = np.stack([h1 * x, (p - 2.0 * h2 * x) / h1], axis=-1)
    elif direction == "inverse":
        xb, pb = x, p
        xo = xb / h1
        out = np.stack([xo, h1 * pb + 2.0 * h2 * xo], axis=-1)
    else:
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return out


def kappa(rf: RescalingFunction, t, m: float = 1.0):
    """Auxiliary harmonic strength, assembled from the chosen h1, h2:

        kappa = 4 h2^2 df/(2 m h1^2) + dh2/dt / h1^2
              = m d2f^2/(8 df^2) + m (df d3f - 2 d2f^2)/(4 df^2) .
    """
    fd = np.asarray(rf.df(t), dtype=float)
    f2 = np.asarray(rf.d2f(t), dtype=float)
    f3 = np.asarray(rf.d3f(t), dtype=float)
    out = m * f2 * f2 / (8.0 * fd * fd) + m * (fd * f3 - 2.0 * f2 * f2) / (4.0 * fd * fd)
    return float(out) if np.ndim(out) == 0 else out


def quantum_coeffs(rf: RescalingFunction, t):
    """(alpha, beta, kappa_q) of the quantum generating function:

        beta = log(df),  alpha = d2f/df,
        kappa_q = d3f/df - d2f^2/df^2 - d2f^2/df^3 .
    """
    fd = np.asarray(rf.df(t), dtype=float)
    f2 = np.asarray(rf.d2f(t), dtype=float)
    f3 = np.asarray(rf.d3f(t), dtype=float)
    alpha = f2 / fd
    beta = np.log(fd)
    kq = f3 / fd - f2 * f2 / (fd * fd) - f2 * f2 / (fd * fd * fd)
    if np.ndim(alpha) == 0:
        return float(alpha), float(beta), float(kq)
    return alpha, beta, kq


#: |x| or |p| beyond this aborts the integration as diverged
_OVERFLOW_GUARD = 1e12


def evolve_classical(dH_dp: Callable, dH_dx: Callable, state0, t0: float,
                     t1: float, n_steps: int, n_record: int | None = None):
    """Fixed-step RK4 for xdot = dH/dp, pdot = -dH/dx.

    Both callables take (x, p, t).  Returns (times, trajectory) with
    trajectory[j] = (x, p) at times[j]; n_record defaults to every step.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be at least 1")
    n_record = n_steps if n_record is None else n_record
    record_every = max(1, n_steps // n_record)

    def rhs(t, y):
        x, p = y
        return np.array([dH_dp(x, p, t), -dH_dx(x, p, t)], dtype=float)

    h = (t1 - t0) / n_steps
    y = np.asarray(state0, dtype=float).copy()
    times = [t0]
    traj = [y.copy()]
    t = t0
    for k in range(n_steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2.0, y + h / 2.0 * k1)
        k3 = rhs(t + h / 2.0, y + h / 2.0 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (k + 1) * h
        if np.max(np.abs(y)) > _OVERFLOW_GUARD:
            raise RuntimeError(f"trajectory diverged at t = {t:g}")
        if (k + 1) % record_every == 0 or k + 1 == n_steps:
            times.append(t)
            traj.append(y.copy())
    return np.asarray(times), np.asarray(traj)


@dataclass(frozen=True, eq=False)
class AppendixCheckResult:
    """Dual-integration comparison of the original and transformed flows."""

    times: np.ndarray
    original: np.ndarray     # (x, p) trajectory under df*H(f)
    transformed: np.ndarray  # (xbar, pbar) trajectory under the standard form
    mapped: np.ndarray       # canonical image of the original trajectory
    max_deviation: float


def appendix_equivalence_check(model: ClassicalModel, rf: RescalingFunction,
                               state0=(1.0, 0.0), n_steps: int = 4000,
                               tol: float | None = 1e-5) -> AppendixCheckResult:
    """Verify that the canonical map carries one flow onto the other.

    (x, p) evolves under df*[p^2/2m + V(x/gamma(f))/gamma(f)^2]; (xbar, pbar)
    under pbar^2/2m + df*V(xbar sqrt(df)/gamma(f))/gamma(f)^2 + kappa xbar^2,
    from the mapped initial condition.  Two independent integrations act as
    mutual oracle; raises :class:`ToleranceError` above ``tol``.
    """
    report = check_boundary(rf)
    if not report.passed:
        raise ValueError(f"rescaling fails boundary conditions:\n{report}")
    m, gam, dV = model.m, model.gamma, model.dV

    def orig_dH_dp(x, p, t):
        return rf.df(t) * p / m

    def orig_dH_dx(x, p, t):
        g = gam(rf.f(t))
        return rf.df(t) * dV(x / g) / g**3

    def bar_dH_dp(x, p, t):
        return p / m

    def bar_dH_dx(x, p, t):
        fd = rf.df(t)
        g = gam(rf.f(t))
        root = np.sqrt(fd)
        return fd * root * dV(x * root / g) / g**3 + 2.0 * kappa(rf, t, m) * x

    horizon = rf.horizon
    times, orig = evolve_classical(orig_dH_dp, orig_dH_dx, state0, 0.0, horizon, n_steps)
    bar0 = canonical_map(np.asarray(state0, dtype=float), rf, 0.0, m)
    _, bar = evolve_classical(bar_dH_dp, bar_dH_dx, bar0, 0.0, horizon, n_steps)
    mapped = np.stack(
        [canonical_map(orig[j], rf, float(times[j]), m) for j in range(len(times))]
    )
    deviation = float(np.max(np.abs(mapped - bar)))
    result = AppendixCheckResult(times=times, original=orig, transformed=bar,
                                 mapped=mapped, max_deviation=deviation)
    if tol is not None and deviation > tol:
        raise ToleranceError(deviation, tol, what="canonical-map trajectory equivalence")
    return result
