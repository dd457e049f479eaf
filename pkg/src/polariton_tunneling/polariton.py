"""Intersubband polariton branches and their coupling to the bare electron.

Within each one-photon block the bright state of branch ``s`` has photon
amplitude

    g_s(q) = (omega_s - 1) / sqrt((omega_s - 1)^2 + Omega_R(q)^2)

and couples to the injected electron with ``J_s(q) = Omega_R(q) g_s(q)``.
The two amplitudes satisfy ``g_+^2 + g_-^2 = 1``, so the pair exhausts the
photon at fixed ``q``; the remaining (dark) combinations never couple to the
electron and are not represented at all.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .params import DeviceParams, cavity_dispersion, collective_coupling, resonant_wavevector

BRANCHES = ("+", "-")


def _branch_sign(branch) -> int:
    if branch in ("+", 1, "plus", "upper"):
        return 1
    if branch in ("-", -1, "minus", "lower"):
        return -1
    raise ParameterError(f"branch must be '+' or '-', got {branch!r}")


def _branch_algebra(omega_c, rabi):
    """Frequencies and photon amplitudes from the 2x2 block, cancellation-free.

    With ``a = (omega_c - 1)/2`` and ``s = sqrt(a^2 + Omega^2)`` the detunings
    are ``a +- s`` and the photon weights ``(s +- a)/(2 s)``; the small one of
    each pair is rewritten as ``Omega^2 / (s + |a|)``.
    """
    a = 0.5 * (omega_c - 1.0)
    s = np.hypot(a, rabi)
    big = s + np.abs(a)
    with np.errstate(invalid="ignore", divide="ignore"):
        small = np.where(big > 0, rabi**2 / np.where(big > 0, big, 1.0), 0.0)
        w_big = np.where(s > 0, big / (2.0 * np.where(s > 0, s, 1.0)), 0.5)
        w_small = np.where(s > 0, small / (2.0 * np.where(s > 0, s, 1.0)), 0.5)
    upper_is_big = a >= 0
    det_plus = np.where(upper_is_big, big, small)
    det_minus = np.where(upper_is_big, -small, -big)
    frac_plus = np.where(upper_is_big, w_big, w_small)
    frac_minus = np.where(upper_is_big, w_small, w_big)
    return (1.0 + det_minus, 1.0 + det_plus,
            -np.sqrt(frac_minus), np.sqrt(frac_plus))


def polariton_frequencies(q, p: DeviceParams):
    """Lower and upper polariton frequencies ``(omega_-, omega_+)``."""
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr <= 0):
        raise ParameterError("polariton branches are defined for q > 0")
    w_minus, w_plus, _, _ = _branch_algebra(cavity_dispersion(q_arr, p),
                                            collective_coupling(q_arr, p))
    if q_arr.ndim == 0:
        return float(w_minus), float(w_plus)
    return w_minus, w_plus


def photon_amplitudes(q, p: DeviceParams):
    """Signed photon amplitudes ``(g_-, g_+)`` of the two bright states.

    Sign convention: real, with the sign of ``omega_s - omega_12``.
    """
    q_arr = np.asarray(q, dtype=float)
    if np.any(q_arr <= 0):
        raise ParameterError("polariton branches are defined for q > 0")
    _, _, g_minus, g_plus = _branch_algebra(cavity_dispersion(q_arr, p),
                                            collective_coupling(q_arr, p))
    if q_arr.ndim == 0:
        return float(g_minus), float(g_plus)
    return g_minus, g_plus


@dataclass(frozen=True)
class BranchPoint:
    q: float
    omega_minus: float
    omega_plus: float
    photon_frac_minus: float
    photon_frac_plus: float


def branch_point(q: float, p: DeviceParams) -> BranchPoint:
    w_minus, w_plus = polariton_frequencies(q, p)
    g_minus, g_plus = photon_amplitudes(q, p)
    return BranchPoint(float(q), w_minus, w_plus, g_minus**2, g_plus**2)


def bright_coupling(q, branch, p: DeviceParams):
    """Coupling ``J_s(q)`` of the bare electron to the bright state of branch ``s``.

    Expressed through the collective coupling, i.e. ``Omega_R(q) g_s(q)``;
    the per-electron ``1/sqrt(N)`` is carried by the continuum density.
    """
    sign = _branch_sign(branch)
    g_minus, g_plus = photon_amplitudes(q, p)
    g = g_plus if sign > 0 else g_minus
    return collective_coupling(q, p) * g


def ring_coupling(q, dq, branch, p: DeviceParams, density: float):
    """Coupling of the apex state to one coarse-grained ring of width ``dq``.

    ``density`` is the continuum-density parameter ``w``; the squared
    coupling is ``J_s(q)^2 q dq w`` and is therefore additive in ``dq``.
    """
    dq_arr = np.asarray(dq, dtype=float)
    if np.any(dq_arr < 0):
        raise ParameterError("ring width must be non-negative")
    if density < 0:
        raise ParameterError("continuum density must be non-negative")
    return bright_coupling(q, branch, p) * np.sqrt(np.asarray(q) * dq_arr * density)


@dataclass(frozen=True, eq=False)
class QGrid:
    """Ring radii discretizing the photon wavevector continuum.

    ``spacings`` are trapezoidal cell widths, so sums ``sum(f * spacings)``
    are trapezoid-rule integrals over ``[q_values[0], q_values[-1]]``.
    """

    q_values: np.ndarray
    spacings: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q_values, dtype=float)
        dq = np.asarray(self.spacings, dtype=float)
        if q.ndim != 1 or q.size == 0:
            raise ParameterError("grid must contain at least one ring")
        if dq.shape != q.shape:
            raise ParameterError("spacings must align with q_values")
        if q[0] <= 0 or np.any(np.diff(q) <= 0):
            raise ParameterError("ring radii must be positive and strictly increasing")
        if np.any(dq <= 0) or not np.all(np.isfinite(q)) or not np.all(np.isfinite(dq)):
            raise ParameterError("ring spacings must be positive and finite")
        q.setflags(write=False)
        dq.setflags(write=False)
        object.__setattr__(self, "q_values", q)
        object.__setattr__(self, "spacings", dq)

    def __len__(self):
        return self.q_values.size

    def __eq__(self, other):
        if not isinstance(other, QGrid):
            return NotImplemented
        return (np.array_equal(self.q_values, other.q_values)
                and np.array_equal(self.spacings, other.spacings))

    __hash__ = None

    @classmethod
    def uniform(cls, p: DeviceParams, n_q: int = 400, q_min: float = 0.05,
                q_max: float = 4.0) -> "QGrid":
        """Uniform grid on ``[q_min, q_max]`` given in units of ``q_res``.

        A single ring gets unit width in ``q_res`` units so it still carries
        a well-defined weight.
        """
        n_q = int(n_q)
        if n_q < 1:
            raise ParameterError(f"n_q must be >= 1, got {n_q}")
        if not 0 < q_min <= q_max:
            raise ParameterError(f"need 0 < q_min <= q_max, got {q_min}, {q_max}")
        q_res = resonant_wavevector(p)
        if n_q == 1:
            if q_min != q_max:
                raise ParameterError("a single-ring grid needs q_min == q_max")
            return cls(np.array([q_min * q_res]), np.array([q_res]))
        if q_min == q_max:
            raise ParameterError("q_max must exceed q_min for n_q > 1")
        q = np.linspace(q_min, q_max, n_q) * q_res
        h = (q_max - q_min) / (n_q - 1) * q_res
        dq = np.full(n_q, h)
        dq[0] *= 0.5
        dq[-1] *= 0.5
        return cls(q, dq)

    def refined(self, factor: int = 2) -> "QGrid":
        """Uniform grid with ``factor`` times as many cells on the same span."""
        q = self.q_values
        if q.size < 2:
            raise ParameterError("cannot refine a single-ring grid")
        n_new = (q.size - 1) * factor + 1
        q_new = np.linspace(q[0], q[-1], n_new)
        dq = np.full(n_new, q_new[1] - q_new[0])
        dq[0] *= 0.5
        dq[-1] *= 0.5
        return QGrid(q_new, dq)


def continuum_density(grid: QGrid, p: DeviceParams) -> float:
    """Continuum-density parameter ``w`` fixed by the second-moment anchor.

    The apex spectral variance equals the summed squared ring couplings,
    ``w * sum(Omega_R^2 (g_+^2 + g_-^2) q dq) = w * sum(Omega_R^2 q dq)``;
    ``w`` makes it equal to ``rabi_res^2``.
    """
    rabi = collective_coupling(grid.q_values, p)
    total = float(np.sum(rabi**2 * grid.q_values * grid.spacings))
    if total == 0.0:
        return 0.0
    return p.rabi_res**2 / total


@dataclass(frozen=True, eq=False)
class PolaritonTable:
    """Branch data tabulated on a ring grid, shared read-only downstream."""

    grid: QGrid
    params: DeviceParams
    rabi: np.ndarray
    omega_minus: np.ndarray
    omega_plus: np.ndarray
    g_minus: np.ndarray
    g_plus: np.ndarray
    density: float

    @property
    def q_values(self):
        return self.grid.q_values

    @property
    def photon_frac_minus(self):
        return self.g_minus**2

    @property
    def photon_frac_plus(self):
        return self.g_plus**2


def polariton_table(grid: QGrid, p: DeviceParams) -> PolaritonTable:
    q = grid.q_values
    w_minus, w_plus, g_minus, g_plus = _branch_algebra(cavity_dispersion(q, p),
                                                       collective_coupling(q, p))
    return PolaritonTable(grid=grid, params=p, rabi=collective_coupling(q, p),
                          omega_minus=w_minus, omega_plus=w_plus,
                          g_minus=g_minus, g_plus=g_plus,
                          density=continuum_density(grid, p))
