"""Single-mode kicked-lattice Floquet machinery and pumping shortcuts.

The driven mode

    H_k(t) = 2J cos(k) sx + 2 lambda sin(k) cos(phi_y) sy
             + [V1 + V2 cos(Omega t)] cos(phi_z) sz

is T-periodic with T = 2 pi / Omega.  Slow cyclic variation of the
quasimomenta (phi_y, phi_z) over a pumping period T0 >> T transports the
mode around a band feature; contracting that loop with a rescaling function
reproduces the same one-cycle Floquet operator on a window T0/a.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import jv

from .propagator import (
    IDENTITY2,
    PAULI_X,
    PAULI_Y,
    PauliHamiltonian,
    propagate,
    rescaled_propagate,
    unitarity_defect,
)
from .gauge import ToleranceError
from .rescaling import RescalingFunction

__all__ = [
    "WeylModelParams",
    "build_single_mode_h",
    "build_rotating_frame_h",
    "build_pumping_h",
    "pumping_path",
    "floquet_operator",
    "quasienergies",
    "quasienergy_gap",
    "perturbative_floquet",
    "calibrate_perturbative_prefactor",
    "linearized_h_near_touching",
    "rescaled_floquet_equivalence",
]

#: below this pumping-to-drive period ratio adiabatic transport is doubtful
MIN_PUMPING_RATIO = 50.0


def _wrap_angle(x: float) -> float:
    """Reduce to the quasimomentum zone (-pi, pi]."""
    y = math.fmod(x + math.pi, 2.0 * math.pi)
    if y <= 0.0:
        y += 2.0 * math.pi
    return y - math.pi


@dataclass(frozen=True)
class WeylModelParams:
    """Hopping/drive parameters of one lattice mode plus the pumping loop."""

    J: float = 0.2
    lam: float = 0.15
    V1: float = 2.0 * math.pi
    V2: float = 0.4 * math.pi
    Omega: float = 2.0 * math.pi
    k: float = math.pi / 2
    phi_y: float = math.pi / 2
    phi_z: float = 1.0
    ell: int = 1
    T0: float = 50.0
    r: float = 0.3
    phi_y0: float = math.pi / 2
    phi_z0: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        if not self.Omega > 0:
            raise ValueError("Omega must be positive")
        if not self.T0 > 0:
            raise ValueError("T0 must be positive")
        for name in ("k", "phi_y", "phi_z"):
            object.__setattr__(self, name, _wrap_angle(getattr(self, name)))
        if self.T0 / self.T < MIN_PUMPING_RATIO:
            warnings.warn(
                f"pumping period T0 = {self.T0:g} is below {MIN_PUMPING_RATIO:g} drive "
                f"periods (T = {self.T:g}); transport may not be adiabatic",
                RuntimeWarning,
                stacklevel=2,
            )

    @property
    def T(self) -> float:
        """Drive period 2 pi / Omega."""
        return 2.0 * math.pi / self.Omega

    @property
    def c_ratio(self) -> float:
        """Drive-to-onsite ratio V2 / V1."""
        return self.V2 / self.V1

    @property
    def phi_l(self) -> float:
        """Touching-point quasimomentum arccos(ell*pi / V1)."""
        x = self.ell * math.pi / self.V1
        if abs(x) > 1.0:
            raise ValueError(
                f"|ell*pi/V1| = {abs(x):.3f} > 1; no band-touching angle exists"
            )
        return math.acos(x)


def build_single_mode_h(params: WeylModelParams) -> PauliHamiltonian:
    """The mode Hamiltonian at frozen quasimomenta; T-periodic in t."""
    J, lam, V1, V2, Om = params.J, params.lam, params.V1, params.V2, params.Omega
    k, py, pz = params.k, params.phi_y, params.phi_z
    return PauliHamiltonian(
        d0=lambda t: 0.0 * np.asarray(t, dtype=float),
        dx=lambda t: 2.0 * J * np.cos(k) + 0.0 * np.asarray(t, dtype=float),
        dy=lambda t: 2.0 * lam * np.sin(k) * np.cos(py) + 0.0 * np.asarray(t, dtype=float),
        dz=lambda t: (V1 + V2 * np.cos(Om * np.asarray(t, dtype=float))) * np.cos(pz),
    )


def build_rotating_frame_h(params: WeylModelParams,
                           phi_y: Callable | None = None,
                           phi_z: Callable | None = None) -> PauliHamiltonian:
    """Rotating-frame coefficients with alpha = V2 cos(phi_z(t)) sin(Omega t)/(hbar Omega).

    The sx row mixes cos(2 alpha) and sin(2 alpha); the sy row repeats it
    with the hopping term negated; the sz row keeps V1 cos(phi_z).
    """
    J, lam, V1, V2, Om, hbar = params.J, params.lam, params.V1, params.V2, params.Omega, params.hbar
    k = params.k
    py = phi_y if phi_y is not None else (lambda t: params.phi_y + 0.0 * np.asarray(t, dtype=float))
    pz = phi_z if phi_z is not None else (lambda t: params.phi_z + 0.0 * np.asarray(t, dtype=float))

    def alpha(t):
        t = np.asarray(t, dtype=float)
        return V2 * np.cos(np.asarray(pz(t), dtype=float)) * np.sin(Om * t) / (hbar * Om)

    def dx(t):
        a2 = 2.0 * alpha(t)
        return 2.0 * J * np.cos(k) * np.cos(a2) + 2.0 * lam * np.sin(k) * np.cos(np.asarray(py(t), dtype=float)) * np.sin(a2)

    def dy(t):
        a2 = 2.0 * alpha(t)
        return -2.0 * J * np.cos(k) * np.cos(a2) + 2.0 * lam * np.sin(k) * np.cos(np.asarray(py(t), dtype=float)) * np.sin(a2)

    def dz(t):
        return V1 * np.cos(np.asarray(pz(np.asarray(t, dtype=float)), dtype=float))

    return PauliHamiltonian(
        d0=lambda t: 0.0 * np.asarray(t, dtype=float), dx=dx, dy=dy, dz=dz
    )


def pumping_path(params: WeylModelParams, t):
    """Loop (phi_y, phi_z) = (phi_y0 + r cos(theta), phi_z0 + r sin(theta)), theta = 2 pi t / T0."""
    theta = 2.0 * math.pi * np.asarray(t, dtype=float) / params.T0
    return params.phi_y0 + params.r * np.cos(theta), params.phi_z0 + params.r * np.sin(theta)


def build_pumping_h(params: WeylModelParams) -> PauliHamiltonian:
    """Mode Hamiltonian with the quasimomenta driven around the pumping loop."""
    J, lam, V1, V2, Om = params.J, params.lam, params.V1, params.V2, params.Omega
    k = params.k

    def dy(t):
        py, _ = pumping_path(params, t)
        return 2.0 * lam * np.sin(k) * np.cos(py)

    def dz(t):
        t = np.asarray(t, dtype=float)
        _, pz = pumping_path(params, t)
        return (V1 + V2 * np.cos(Om * t)) * np.cos(pz)

    return PauliHamiltonian(
        d0=lambda t: 0.0 * np.asarray(t, dtype=float),
        dx=lambda t: 2.0 * J * np.cos(k) + 0.0 * np.asarray(t, dtype=float),
        dy=dy,
        dz=dz,
    )


def floquet_operator(h: PauliHamiltonian, period: float, n_steps: int,
                     hbar: float = 1.0):
    """One-period time-ordered propagator U_F(period <- 0)."""
    return propagate(h, 0.0, period, n_steps, hbar=hbar)


def quasienergies(u_f, period: float, hbar: float = 1.0):
    """Zone-reduced quasienergies of a Floquet operator, sorted ascending.

    E = i hbar log(eigenvalue)/period reduced to (-pi hbar/period,
    pi hbar/period]; a tie exactly at the zone edge is reported as
    +pi hbar/period.
    """
    u_f = np.asarray(u_f)
    if unitarity_defect(u_f) > 1e-8:
        raise ValueError("input operator is not unitary")
    lam = np.linalg.eigvals(u_f)
    edge = math.pi * hbar / period
    energies = -hbar * np.angle(lam) / period
    energies = np.where(energies == -edge, edge, energies)
    return np.sort(energies, axis=-1)


def quasienergy_gap(u_f, period: float, hbar: float = 1.0) -> float:
    """Distance of the two quasienergies on the Floquet-zone circle."""
    e1, e2 = quasienergies(u_f, period, hbar=hbar)
    zone = 2.0 * math.pi * hbar / period
    d = abs(e2 - e1) % zone
    return float(min(d, zone - d))


def perturbative_floquet(params: WeylModelParams, bessel_order: int = 0):
    """First-order pumping-cycle operator near the touching point,

        I + i (2J k_x sx + 2 lambda k_y sy) * J_n(ell c) * T0/hbar ,

    with k_x = k - pi/2, k_y = phi_y - pi/2 and c = V2/V1.  The Bessel order
    defaults to 0, which is what the drive-period average of the linearized
    coefficients produces; the prefactor T0/hbar is fixed once by matching
    the first-order term of the numeric operator (see
    :func:`calibrate_perturbative_prefactor`).
    """
    params.phi_l  # raises if the touching angle does not exist
    kx = params.k - math.pi / 2.0
    ky = params.phi_y - math.pi / 2.0
    amp = jv(bessel_order, params.ell * params.c_ratio) * params.T0 / params.hbar
    return IDENTITY2 + 1j * amp * (2.0 * params.J * kx * PAULI_X + 2.0 * params.lam * ky * PAULI_Y)


def calibrate_perturbative_prefactor(params: WeylModelParams, n_steps: int = 20000,
                                     scale: float = 1e-3) -> float:
    """Prefactor in front of J_0(ell c) matched against the numeric operator.

    Shrinks the hopping amplitudes by ``scale`` so the first-order term
    dominates, evolves the touching-point Hamiltonian over one pumping
    period and reads the sx component of (U - I)/i.
    """
    small = WeylModelParams(
        J=params.J * scale, lam=params.lam * scale, V1=params.V1, V2=params.V2,
        Omega=params.Omega, k=params.k, phi_y=params.phi_y, phi_z=params.phi_z,
        ell=params.ell, T0=params.T0, r=params.r,
        phi_y0=params.phi_y0, phi_z0=params.phi_z0, hbar=params.hbar,
    )
    h = linearized_h_near_touching(small, include_offset=False, freeze_kz=True)
    u = propagate(h, 0.0, small.T0, n_steps, hbar=small.hbar)
    kx = small.k - math.pi / 2.0
    first_order = (u - IDENTITY2) / 1j
    sx_part = 0.5 * np.real(np.trace(PAULI_X @ first_order))
    j0 = jv(0, small.ell * small.c_ratio)
    return float(sx_part / (2.0 * small.J * kx * j0))


def linearized_h_near_touching(params: WeylModelParams,
                               rf: RescalingFunction | None = None,
                               include_offset: bool = True,
                               freeze_kz: bool = False) -> PauliHamiltonian:
    """First-order expansion of the driven mode around the touching point,

        df(t) * { [-2J k_x cos(g) - 2 lam k_y sin(g)] sx
                  + [2J k_x sin(g) - 2 lam k_y cos(g)] sy
                  + [ell pi - V1 k_z sin(phi_l)] sz } ,

    with g(t) = ell c sin(Omega f(t)), k_x = k - pi/2, k_y = phi_y - pi/2
    and k_z = phi_z - phi_l.  ``include_offset=False`` drops the constant
    ell*pi rest term (the quasienergy offset already resummed into the
    oscillating coefficients), which is the frame in which the dispersion
    slopes (2J, 2lam, V1 sin(phi_l)) appear; ``freeze_kz`` zeroes k_z.
    """
    if rf is None:
        rf = RescalingFunction.identity(tau=params.T0)
    phi_l = params.phi_l
    kx = params.k - math.pi / 2.0
    ky = params.phi_y - math.pi / 2.0
    kz = 0.0 if freeze_kz else params.phi_z - phi_l
    z = params.ell * params.c_ratio
    J, lam, V1, Om = params.J, params.lam, params.V1, params.Omega
    offset = params.ell * math.pi if include_offset else 0.0

    def arg(t):
        return z * np.sin(Om * np.asarray(rf.f(t), dtype=float))

    def dx(t):
        g = arg(t)
        return np.asarray(rf.df(t), dtype=float) * (-2.0 * J * kx * np.cos(g) - 2.0 * lam * ky * np.sin(g))

    def dy(t):
        g = arg(t)
        return np.asarray(rf.df(t), dtype=float) * (2.0 * J * kx * np.sin(g) - 2.0 * lam * ky * np.cos(g))

    def dz(t):
        t = np.asarray(t, dtype=float)
        return np.asarray(rf.df(t), dtype=float) * (offset - V1 * kz * math.sin(phi_l)) * np.ones_like(t)

    return PauliHamiltonian(
        d0=lambda t: 0.0 * np.asarray(t, dtype=float), dx=dx, dy=dy, dz=dz
    )


def rescaled_floquet_equivalence(h: PauliHamiltonian, rf: RescalingFunction,
                                 n_steps: int, hbar: float = 1.0,
                                 tol: float | None = 1e-6) -> float:
    """Operator-norm distance between U_F(tau <- 0) and the contracted run.

    The rescaling must be built with tau equal to the Floquet period under
    test; the deviation vanishes at second order in the step size.
    """
    u_orig = propagate(h, 0.0, rf.tau, n_steps, hbar=hbar)
    u_resc = rescaled_propagate(h, rf, n_steps, hbar=hbar)
    deviation = float(np.linalg.norm(u_resc - u_orig, 2))
    if tol is not None and deviation > tol:
        raise ToleranceError(deviation, tol, what="rescaled Floquet equivalence")
    return deviation
