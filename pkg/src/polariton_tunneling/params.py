"""Device parameters and bare dispersions in natural units.

Energies are measured in units of the intersubband transition energy
(hbar = omega_12 = 1) and wavevectors in units of the Fermi wavevector
(k_F = 1).  Under this choice the cavity is fully described by its cutoff
``omega_c0`` and by the resonant wavevector ``q_res``; the light-matter
interaction by the vacuum Rabi frequency at resonance.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import NoResonanceError, ParameterError

#: intersubband transition frequency, the energy unit
OMEGA_12 = 1.0
#: Fermi wavevector, the wavevector unit
K_F = 1.0


@dataclass(frozen=True)
class DeviceParams:
    """Cavity and two-subband quantum well parameters.

    Attributes
    ----------
    omega_c0 : float
        Cavity cutoff frequency ``omega_c(q=0)``.  Must lie below the
        transition for a resonant crossing to exist; values above are
        accepted here and rejected by :func:`resonant_wavevector`.
    rabi_res : float
        Collective vacuum Rabi frequency at the resonant wavevector.
    mass_scale : float
        Kinetic Fermi energy ``hbar k_F^2 / (2 m* omega_12)``.
    qres_over_kf : float
        Resonant photon wavevector in Fermi units.
    """

    omega_c0: float = 0.7
    rabi_res: float = 0.1
    mass_scale: float = 0.3
    qres_over_kf: float = 0.01

    def __post_init__(self):
        for name in ("omega_c0", "rabi_res", "mass_scale", "qres_over_kf"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if self.omega_c0 <= 0:
            raise ParameterError(f"omega_c0 must be positive, got {self.omega_c0}")
        # rabi_res = 0 is kept legal: it is the decoupled reference point.
        if self.rabi_res < 0:
            raise ParameterError(f"rabi_res must be >= 0, got {self.rabi_res}")
        if self.mass_scale <= 0:
            raise ParameterError(f"mass_scale must be positive, got {self.mass_scale}")
        if self.qres_over_kf <= 0:
            raise ParameterError(
                f"qres_over_kf must be positive, got {self.qres_over_kf}")

    @property
    def omega12(self) -> float:
        return OMEGA_12

    @property
    def kf(self) -> float:
        return K_F

    @property
    def fermi_energy(self) -> float:
        return self.mass_scale * K_F**2

    def to_dict(self) -> dict:
        return asdict(self)


def subband_dispersion(j, k, p: DeviceParams):
    """Bare subband frequency ``omega_j(k)``; scalar or array ``k``."""
    if j not in (1, 2):
        raise ParameterError(f"subband index must be 1 or 2, got {j!r}")
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise ParameterError("wavevector must be non-negative")
    omega = p.mass_scale * k_arr**2
    if j == 2:
        omega = omega + OMEGA_12
    return omega if omega.ndim else float(omega)


def growth_wavevector(p: DeviceParams) -> float:
    """Quantized growth-direction photon wavevector, in Fermi units.

    Fixed by requiring ``omega_c(q_res) = omega_12`` for the lambda/2 cavity
    dispersion ``omega_c0 * sqrt(1 + (q / kappa_z)^2)``.
    """
    if p.omega_c0 >= OMEGA_12:
        raise NoResonanceError(
            f"cavity cutoff omega_c0={p.omega_c0} is not below the intersubband "
            "transition; no resonant wavevector exists")
    return p.qres_over_kf / math.sqrt((OMEGA_12 / p.omega_c0) ** 2 - 1.0)


def cavity_dispersion(q, p: DeviceParams):
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr < 0):
        raise ParameterError("wavevector must be non-negative")
    kz = growth_wavevector(p)
    omega = p.omega_c0 * np.sqrt(1.0 + (q_arr / kz) ** 2)
    return omega if omega.ndim else float(omega)


def resonant_wavevector(p: DeviceParams) -> float:
    q_res = p.qres_over_kf
    mismatch = abs(cavity_dispersion(q_res, p) - OMEGA_12)
    if mismatch >= 1e-12:
        raise NoResonanceError(
            f"cavity dispersion misses the transition at q_res by {mismatch:.3e}")
    return q_res


def collective_coupling(q, p: DeviceParams):
    """Collective coupling ``Omega_R(q) = |chi(q)| sqrt(N)``.

    The microscopic prefactor (dipole, dielectric constant, cavity length,
    area, electron number) is eliminated by normalizing to ``rabi_res`` at
    ``q_res``; what remains is the ``1/sqrt(omega_c)`` field amplitude and the
    TM geometric factor ``q^2 / (kappa_z^2 + q^2)``.
    """
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr < 0):
        raise ParameterError("wavevector must be non-negative")
    kz = growth_wavevector(p)
    q_res = p.qres_over_kf
    omega_c = p.omega_c0 * np.sqrt(1.0 + (q_arr / kz) ** 2)
    rabi = (p.rabi_res * np.sqrt(OMEGA_12 / omega_c) * (q_arr / q_res)
            * np.sqrt((kz**2 + q_res**2) / (kz**2 + q_arr**2)))
    return rabi if rabi.ndim else float(rabi)
