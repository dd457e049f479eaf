"""Tunneling injection, radiative decay and the electroluminescence map.

Injection into dressed state ``zeta`` follows the golden rule, with the
contact reduced to a spectral shape and an overall strength.  Tunneling
conserves the in-plane wavevector, so the contact state at ``k`` sits at
``omega_1(k)`` plus the injector energy: the shape is evaluated at the
transition energy ``omega_zeta`` measured from ``omega_1(k)``, which is also
the energy carried away by the emitted photon.

Cavity losses are treated in the quasi-mode approximation: a flat decay rate
``kappa`` per unit photon content.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arrowhead import EigenSystem
from .errors import (ConsistencyError, DarkStateError, ParameterError,
                     UndefinedEfficiencyError)
from .params import DeviceParams
from .polariton import PolaritonTable, polariton_frequencies
from .spectral import is_outside_fermi_sea

DEFAULT_KAPPA = 0.01
DEFAULT_RATE_NR = 0.005
#: states whose summed photon weight is below this are dark
DARK_TOL = 1e-14

_FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class InjectorSpec:
    """Spectral shape of the injecting contact.

    ``width`` is the full bandwidth (box) or the FWHM (gaussian).
    """

    shape: str = "box"
    center: float = 1.0
    width: float = 1.0
    strength: float = 1.0

    def __post_init__(self):
        if self.shape not in ("box", "gaussian"):
            raise ParameterError(f"injector shape must be 'box' or 'gaussian', got {self.shape!r}")
        if not self.width > 0:
            raise ParameterError(f"injector width must be positive, got {self.width}")
        if not self.center > 0:
            raise ParameterError(f"injector center must be positive, got {self.center}")
        if not self.strength >= 0:
            raise ParameterError(f"injector strength must be >= 0, got {self.strength}")


def injector_shape(omega, inj: InjectorSpec):
    omega = np.asarray(omega, dtype=float)
    if inj.shape == "box":
        half = 0.5 * inj.width
        value = ((omega >= inj.center - half) & (omega <= inj.center + half)).astype(float)
    else:
        sigma = inj.width * _FWHM_TO_SIGMA
        value = np.exp(-((omega - inj.center) ** 2) / (2.0 * sigma**2))
    return value if value.ndim else float(value)


@dataclass(frozen=True, eq=False)
class Rates:
    """Per-state rates for one electron wavevector."""

    gamma_inj: np.ndarray
    rate_r: np.ndarray
    rate_nr: float

    def __post_init__(self):
        if np.any(np.asarray(self.gamma_inj) < 0) or np.any(np.asarray(self.rate_r) < 0) \
                or self.rate_nr < 0:
            raise ParameterError("rates must be non-negative")

    @property
    def total_width(self) -> np.ndarray:
        return self.rate_r + self.rate_nr


def _check_table(eig: EigenSystem, table: PolaritonTable):
    if eig.params != table.params:
        raise ConsistencyError("eigensystem and polariton table use different parameters")
    if eig.lam.shape[1] != 2 * len(table.grid):
        raise ConsistencyError(
            f"eigensystem has {eig.lam.shape[1]} continuum columns, "
            f"table has {len(table.grid)} rings")


def photon_ring_weight(eig: EigenSystem, table: PolaritonTable, zeta=None) -> np.ndarray:
    """Photon weight ``W[zeta, i] = |sum_s lam[zeta, s, i] g_s(q_i)|^2``.

    The two bright states of a ring share the same photon, so their
    amplitudes add coherently.  Column layout follows
    :func:`~polariton_tunneling.arrowhead.build_fano_matrix` (upper rings,
    then lower rings).
    """
    _check_table(eig, table)
    n_q = len(table.grid)
    lam = eig.lam if zeta is None else eig.lam[np.atleast_1d(zeta)]
    amp = lam[:, :n_q] * table.g_plus + lam[:, n_q:] * table.g_minus
    weight = amp**2
    if zeta is not None and np.ndim(zeta) == 0:
        return weight[0]
    return weight


def _states(k, eig: EigenSystem, p: DeviceParams):
    """Transition energies and apex weights of the states reachable at ``k``."""
    if k < 0:
        raise ParameterError("wavevector must be non-negative")
    if eig.params != p:
        raise ConsistencyError("eigensystem was computed for different parameters")
    if is_outside_fermi_sea(k):
        return eig.omega_zeta, eig.mu
    # blocked: bare second-subband electron, omega_2(k) - omega_1(k) = omega_12
    return np.array([p.omega12]), np.array([1.0])


def injection_rate(k, eig: EigenSystem, inj: InjectorSpec, p: DeviceParams, zeta=None):
    """Golden-rule injection rate ``strength * mu^2 * shape(omega_zeta)``.

    Returns one rate per reachable state (all eigenstates outside the Fermi
    sea, the single bare state inside), or the rate of state ``zeta``.
    """
    omega, mu = _states(k, eig, p)
    rate = inj.strength * mu**2 * injector_shape(omega, inj)
    return rate if zeta is None else float(rate[zeta])


def radiative_rate(k, eig: EigenSystem, table: PolaritonTable, kappa: float, zeta=None):
    """Quasi-mode radiative rate ``kappa * sum_i W[zeta, i]``; zero inside the Fermi sea."""
    if kappa < 0:
        raise ParameterError(f"kappa must be >= 0, got {kappa}")
    if k < 0:
        raise ParameterError("wavevector must be non-negative")
    if not is_outside_fermi_sea(k):
        rate = np.zeros(1)
    else:
        rate = kappa * photon_ring_weight(eig, table).sum(axis=1)
    return rate if zeta is None else float(rate[zeta])


def state_rates(k, eig: EigenSystem, table: PolaritonTable, inj: InjectorSpec,
                kappa: float = DEFAULT_KAPPA, rate_nr: float = DEFAULT_RATE_NR) -> Rates:
    return Rates(injection_rate(k, eig, inj, table.params),
                 radiative_rate(k, eig, table, kappa), float(rate_nr))


def emission_distribution(zeta: int, eig: EigenSystem, table: PolaritonTable) -> np.ndarray:
    """Normalized photon emission over rings, ``L[i] = W[i] / sum_j W[j]``."""
    weight = photon_ring_weight(eig, table, zeta)
    total = weight.sum()
    if total <= DARK_TOL:
        raise DarkStateError(
            f"state {zeta} at omega={eig.omega_zeta[zeta]:.6f} has no photon content "
            f"(sum W = {total:.3e})")
    return weight / total


def quantum_efficiency(rate_r, rate_nr):
    """Fraction of decays that are radiative, ``rate_r / (rate_r + rate_nr)``."""
    rate_r = np.asarray(rate_r, dtype=float)
    total = rate_r + rate_nr
    if np.any(total == 0):
        raise UndefinedEfficiencyError("efficiency undefined when both rates vanish")
    eff = rate_r / total
    return eff if eff.ndim else float(eff)


def default_k_grid(inj: InjectorSpec, p: DeviceParams, kappa: float = DEFAULT_KAPPA,
                   rate_nr: float = DEFAULT_RATE_NR, n: int = 200) -> np.ndarray:
    """Electron wavevectors uniform in ``omega_1(k)`` above the Fermi edge.

    The span is the injector bandwidth plus five total linewidths on each
    side; the grid starts at ``k_F`` itself.
    """
    span = inj.width + 10.0 * (kappa + rate_nr)
    energy = p.fermi_energy + np.linspace(0.0, span, n)
    return np.sqrt(energy / p.mass_scale)


@dataclass(frozen=True, eq=False)
class ELMap:
    q_axis: np.ndarray
    omega_axis: np.ndarray
    intensity: np.ndarray
    overlays: dict = field(default_factory=dict)

    def total(self) -> float:
        dq = self.q_axis[1] - self.q_axis[0]
        dw = self.omega_axis[1] - self.omega_axis[0]
        return float(self.intensity.sum() * dq * dw)


def _check_axis(axis, name):
    axis = np.asarray(axis, dtype=float)
    if axis.ndim != 1 or axis.size < 2:
        raise ParameterError(f"{name} needs at least two points")
    steps = np.diff(axis)
    if np.any(steps <= 0):
        raise ParameterError(f"{name} must be strictly increasing")
    if np.max(np.abs(steps - steps[0])) > 1e-9 * abs(steps[0]) + 1e-12 * np.max(np.abs(axis)):
        raise ParameterError(f"{name} must be uniform")
    return axis


def _interpolation_matrix(q_nodes: np.ndarray, q_axis: np.ndarray) -> np.ndarray:
    """Linear interpolation weights from ring nodes onto ``q_axis`` (zero outside)."""
    n_nodes = q_nodes.size
    mat = np.zeros((q_axis.size, n_nodes))
    if n_nodes == 1:
        mat[np.isclose(q_axis, q_nodes[0], rtol=0, atol=1e-15), 0] = 1.0
        return mat
    inside = (q_axis >= q_nodes[0]) & (q_axis <= q_nodes[-1])
    rows = np.nonzero(inside)[0]
    idx = np.clip(np.searchsorted(q_nodes, q_axis[rows], side="right") - 1, 0, n_nodes - 2)
    frac = (q_axis[rows] - q_nodes[idx]) / (q_nodes[idx + 1] - q_nodes[idx])
    mat[rows, idx] = 1.0 - frac
    mat[rows, idx + 1] += frac
    return mat


def _single_k_map(omega, rates: Rates, density_q, omega_axis):
    """``(1/pi) sum_zeta Gamma L(q) r / ((w - w_zeta)^2 + (r + nr)^2)``."""
    lorentz = rates.rate_r[:, None] / (
        (omega_axis[None, :] - omega[:, None]) ** 2 + rates.total_width[:, None] ** 2)
    return (density_q * rates.gamma_inj[None, :]) @ lorentz / np.pi


def electroluminescence_map(k_grid, inj: InjectorSpec, eig: EigenSystem,
                            table: PolaritonTable, q_axis, omega_axis,
                            kappa: float = DEFAULT_KAPPA,
                            rate_nr: float = DEFAULT_RATE_NR) -> ELMap:
    """Photons emitted per unit time, in-plane wavevector and frequency.

    The emission distribution of each state is converted to a density per
    unit ``q`` on the rings (dividing by the cell widths, which keeps its
    ring-quadrature integral at one) and interpolated linearly onto
    ``q_axis``.  Dark states and states not injected contribute nothing.
    Inside the Fermi sea the bare state is injected but cannot decay
    radiatively, so it adds exactly zero.
    """
    q_axis = _check_axis(q_axis, "q_axis")
    omega_axis = _check_axis(omega_axis, "omega_axis")
    k_grid = np.atleast_1d(np.asarray(k_grid, dtype=float))
    if k_grid.size == 0:
        raise ParameterError("k grid is empty")
    p = table.params
    _check_table(eig, table)
    if rate_nr < 0:
        raise ParameterError(f"rate_nr must be >= 0, got {rate_nr}")

    weight = photon_ring_weight(eig, table)
    photon = weight.sum(axis=1)
    interp = _interpolation_matrix(table.q_values, q_axis)

    def contribution(k):
        rates = state_rates(k, eig, table, inj, kappa, rate_nr)
        if not is_outside_fermi_sea(k):
            # injected but Pauli blocked: rate_r == 0, no photon, no term
            return None
        keep = (photon > DARK_TOL) & (rates.gamma_inj > 0)
        if not keep.any():
            return None
        density = weight[keep] / photon[keep, None] / table.grid.spacings
        kept = Rates(rates.gamma_inj[keep], rates.rate_r[keep], rates.rate_nr)
        return _single_k_map(eig.omega_zeta[keep], kept, interp @ density.T, omega_axis)

    intensity = np.zeros((q_axis.size, omega_axis.size))
    # the dressed spectrum depends on k only through the Fermi factor
    dressed = None
    for k in k_grid:
        if is_outside_fermi_sea(k):
            if dressed is None:
                dressed = contribution(k)
                if dressed is None:
                    dressed = np.zeros_like(intensity)
            intensity += dressed
        else:
            blocked = contribution(k)
            if blocked is not None:
                intensity += blocked

    overlays = {}
    positive = q_axis > 0
    if positive.any():
        w_minus, w_plus = polariton_frequencies(q_axis[positive], p)
        overlays = {"q": q_axis[positive], "omega_minus": w_minus, "omega_plus": w_plus}
    return ELMap(q_axis, omega_axis, intensity, overlays)


def write_elmap_csv(el: ELMap, path, fingerprint: str) -> None:
    """Long-format CSV: one ``q, omega, intensity`` row per grid sample."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# fingerprint={fingerprint}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["q", "omega", "intensity"])
        for i, q in enumerate(el.q_axis):
            for j, w in enumerate(el.omega_axis):
                writer.writerow([f"{q:.17g}", f"{w:.17g}", f"{el.intensity[i, j]:.17g}"])


def write_elmap_json(el: ELMap, path, fingerprint: str, config: dict) -> None:
    """Axes, row-major intensity (rows = q), branch overlays and the config echo."""
    doc = {
        "fingerprint": fingerprint,
        "config": config,
        "q_axis": el.q_axis.tolist(),
        "omega_axis": el.omega_axis.tolist(),
        "intensity": el.intensity.ravel().tolist(),
        "shape": list(el.intensity.shape),
        "overlays": {key: np.asarray(val).tolist() for key, val in el.overlays.items()},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
