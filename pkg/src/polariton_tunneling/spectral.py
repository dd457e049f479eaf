"""Electron spectral functions of the two subbands.

Spectra are delta combs: a :class:`SpectralLines` holds the line positions
and weights.  :func:`broaden` renders a comb on a frequency grid for display.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .arrowhead import EigenSystem
from .errors import ConsistencyError, ParameterError
from .params import K_F, DeviceParams, subband_dispersion

#: display half-width, on the scale of the non-radiative rate
DEFAULT_DISPLAY_WIDTH = 0.005


def is_outside_fermi_sea(k) -> bool:
    """Pauli-blocking test; ``k == k_F`` counts as outside (radiatively active)."""
    return k >= K_F


@dataclass(frozen=True, eq=False)
class SpectralLines:
    """Delta comb ``sum_i weight_i delta(omega - omega_i)``."""

    omega: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        omega = np.atleast_1d(np.asarray(self.omega, dtype=float))
        weight = np.atleast_1d(np.asarray(self.weight, dtype=float))
        if omega.shape != weight.shape:
            raise ParameterError("line positions and weights must align")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "weight", weight)

    def __len__(self):
        return self.omega.size

    def __iter__(self):
        return iter(zip(self.omega.tolist(), self.weight.tolist()))

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())

    def moment(self, order: int, about: float = 0.0) -> float:
        return float(np.sum(self.weight * (self.omega - about) ** order))

    def shifted(self, offset: float) -> "SpectralLines":
        return SpectralLines(self.omega + offset, self.weight)


@dataclass(frozen=True, eq=False)
class SpectralCurve:
    omega_samples: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.omega_samples))


def spectral_function_subband1(k: float, p: DeviceParams) -> SpectralLines:
    """First subband: unperturbed line at ``omega_1(k)``, empty inside the Fermi sea."""
    if k < 0:
        raise ParameterError("wavevector must be non-negative")
    if not is_outside_fermi_sea(k):
        return SpectralLines(np.empty(0), np.empty(0))
    return SpectralLines([subband_dispersion(1, k, p)], [1.0])


def spectral_function_subband2(k: float, eig: EigenSystem, p: DeviceParams) -> SpectralLines:
    """Second subband.

    Inside the Fermi sea the injected electron cannot emit and keeps its bare
    line at ``omega_2(k)``.  Outside, the lines sit at ``omega_1(k) + omega_zeta``
    with weights ``mu_zeta^2``.
    """
    if k < 0:
        raise ParameterError("wavevector must be non-negative")
    if eig.params != p:
        raise ConsistencyError(
            f"eigensystem was computed for {eig.params!r}, not for {p!r}")
    if not is_outside_fermi_sea(k):
        return SpectralLines([subband_dispersion(2, k, p)], [1.0])
    return SpectralLines(subband_dispersion(1, k, p) + eig.omega_zeta, eig.mu**2)


def broaden(lines: SpectralLines, width: float, omega) -> SpectralCurve:
    """Sum of unit-area Lorentzians of half-width ``width`` weighted by the lines."""
    if not width > 0:
        raise ParameterError(f"display width must be positive, got {width}")
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1:
        raise ParameterError("frequency grid must be one-dimensional")
    values = np.zeros_like(omega)
    # chunked to bound memory for long combs on fine grids
    step = max(1, 2_000_000 // max(omega.size, 1))
    for start in range(0, len(lines), step):
        w0 = lines.omega[start:start + step]
        wt = lines.weight[start:start + step]
        values += (wt[None, :] * (width / np.pi)
                   / ((omega[:, None] - w0[None, :]) ** 2 + width**2)).sum(axis=1)
    return SpectralCurve(omega.copy(), values)


def write_curve_csv(curve: SpectralCurve, path, fingerprint: str) -> None:
    """Two-column CSV (omega, value) behind a ``#`` fingerprint header line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# fingerprint={fingerprint}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["omega", "value"])
        for w, v in zip(curve.omega_samples, curve.values):
            writer.writerow([f"{w:.17g}", f"{v:.17g}"])
