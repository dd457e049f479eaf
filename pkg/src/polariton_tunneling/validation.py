"""Invariant suite run by ``validate``.

Every check returns a :class:`Check` carrying the measured value and the
threshold it was held to, so reports are self-describing.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .arrowhead import (ArrowheadMatrix, EigenSystem, build_fano_matrix,
                        eigendecompose_arrowhead, eigendecompose_dense)
from .params import DeviceParams
from .polariton import QGrid
from .spectral import (DEFAULT_DISPLAY_WIDTH, SpectralLines, broaden,
                       spectral_function_subband1, spectral_function_subband2)

SUM_RULE_TOL = 1e-10
IDENTITY_RTOL = 1e-9
ORACLE_OMEGA_TOL = 1e-10
ORACLE_MU_TOL = 1e-8
CALIBRATION_RTOL = 0.05
REFINEMENT_TOL = 0.02
#: rings used for the dense cross-check
ORACLE_RINGS = 100


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    threshold: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = f"{status}  {self.name}: {self.value:.3e} (threshold {self.threshold:.1e})"
        return f"{text}  {self.detail}" if self.detail else text

    def to_dict(self) -> dict:
        return asdict(self)


def _check(name, value, threshold, detail=""):
    value = float(value)
    return Check(name, bool(np.isfinite(value) and value <= threshold), value,
                 float(threshold), detail)


def interlacing_violations(a: ArrowheadMatrix, eig: EigenSystem) -> int:
    """Count intervals between coupled poles that do not hold exactly one root.

    Only eigenvalues carrying apex weight are secular roots; deflated ones sit
    on their poles with ``mu = 0`` and are ignored.  The two unbounded
    intervals must hold one root each as well.
    """
    coupled = np.abs(a.coupling) > 0
    poles = np.unique(a.diag[coupled])
    roots = np.sort(eig.omega_zeta[eig.mu != 0])
    if poles.size == 0:
        return int(roots.size != 1)
    edges = np.concatenate([[-np.inf], poles, [np.inf]])
    counts = np.array([np.count_nonzero((roots > lo) & (roots < hi))
                       for lo, hi in zip(edges[:-1], edges[1:])])
    return int(np.count_nonzero(counts != 1))


def eigensystem_checks(a: ArrowheadMatrix, eig: EigenSystem) -> list:
    """Sum rules, interlacing, trace and moment identities, residuals."""
    weights = eig.mu**2
    checks = [
        _check("apex_sum_rule", abs(weights.sum() - 1.0), SUM_RULE_TOL),
        _check("vector_normalization",
               np.max(np.abs(weights + np.sum(eig.lam**2, axis=1) - 1.0)), SUM_RULE_TOL),
        _check("interlacing", interlacing_violations(a, eig), 0,
               "intervals without exactly one secular root"),
    ]
    trace_scale = max(abs(a.apex) + np.sum(np.abs(a.diag)), a.norm_inf())
    checks.append(_check("trace",
                         abs(eig.omega_zeta.sum() - a.apex - a.diag.sum()) / trace_scale,
                         IDENTITY_RTOL, "relative"))
    checks.append(_check("first_moment",
                         abs(np.sum(weights * eig.omega_zeta) - a.apex)
                         / max(abs(a.apex), 1.0), IDENTITY_RTOL, "relative"))
    z2 = float(np.sum(a.coupling**2))
    second = float(np.sum(weights * (eig.omega_zeta - a.apex) ** 2))
    checks.append(_check("second_moment", abs(second - z2) / z2 if z2 > 0 else abs(second),
                         IDENTITY_RTOL, "relative to the summed squared couplings"))
    vectors = eig.vectors()
    residual = np.max(np.abs(a.matvec(vectors) - eig.omega_zeta[:, None] * vectors))
    checks.append(_check("residual", residual / a.norm_inf(), IDENTITY_RTOL,
                         "max-norm, relative to the matrix norm"))
    return checks


def oracle_check(grid: QGrid, p: DeviceParams, n_rings: int = ORACLE_RINGS) -> list:
    """Secular path against the dense solver on a coarser grid of the same span."""
    q_res = p.qres_over_kf
    q = grid.q_values
    if len(grid) > n_rings:
        grid = QGrid.uniform(p, n_q=n_rings, q_min=q[0] / q_res, q_max=q[-1] / q_res)
    a = build_fano_matrix(grid, p)
    fast = eigendecompose_arrowhead(a)
    slow = eigendecompose_dense(a)
    detail = f"dimension {a.dim}"
    return [
        _check("oracle_eigenvalues", np.max(np.abs(fast.omega_zeta - slow.omega_zeta)),
               ORACLE_OMEGA_TOL, detail),
        _check("oracle_apex_weights", np.max(np.abs(np.abs(fast.mu) - np.abs(slow.mu))),
               ORACLE_MU_TOL, detail),
    ]


def spectral_sum_rules(eig: EigenSystem, p: DeviceParams, k_values=None) -> Check:
    """Unit total weight of both subbands at wavevectors on both sides of ``k_F``."""
    if k_values is None:
        k_values = np.linspace(0.0, 2.0, 20)
    worst = 0.0
    for k in k_values:
        worst = max(worst, abs(spectral_function_subband2(k, eig, p).total_weight - 1.0))
        line1 = spectral_function_subband1(k, p)
        if len(line1):
            worst = max(worst, abs(line1.total_weight - 1.0))
    return _check("spectral_sum_rule", worst, SUM_RULE_TOL, f"{len(k_values)} wavevectors")


def calibration_residual(eig: EigenSystem, p: DeviceParams) -> float:
    """Relative mismatch of the apex spectral variance to ``rabi_res**2``."""
    weights = eig.mu**2
    mean = np.sum(weights * eig.omega_zeta)
    variance = np.sum(weights * (eig.omega_zeta - mean) ** 2)
    if p.rabi_res == 0:
        return float(variance)
    return float(abs(variance - p.rabi_res**2) / p.rabi_res**2)


def refinement_delta(grid: QGrid, p: DeviceParams, eig: EigenSystem = None,
                     width: float = DEFAULT_DISPLAY_WIDTH) -> float:
    """Sup-norm change of the broadened apex spectrum when the ring count doubles.

    Measured relative to the sup-norm of the refined curve, on a sampling
    grid spanning every line of both spectra by 20 widths.
    """
    if eig is None:
        eig = eigendecompose_arrowhead(build_fano_matrix(grid, p))
    fine = eigendecompose_arrowhead(build_fano_matrix(grid.refined(2), p))
    lo = min(eig.omega_zeta[0], fine.omega_zeta[0]) - 20 * width
    hi = max(eig.omega_zeta[-1], fine.omega_zeta[-1]) + 20 * width
    omega = np.linspace(lo, hi, int(np.ceil((hi - lo) / (0.25 * width))) + 1)
    coarse_curve = broaden(SpectralLines(eig.omega_zeta, eig.mu**2), width, omega).values
    fine_curve = broaden(SpectralLines(fine.omega_zeta, fine.mu**2), width, omega).values
    return float(np.max(np.abs(coarse_curve - fine_curve)) / np.max(np.abs(fine_curve)))


def run_suite(grid: QGrid, p: DeviceParams, width: float = DEFAULT_DISPLAY_WIDTH) -> list:
    a = build_fano_matrix(grid, p)
    eig = eigendecompose_arrowhead(a)
    checks = eigensystem_checks(a, eig)
    checks.append(spectral_sum_rules(eig, p))
    checks.extend(oracle_check(grid, p))
    checks.append(_check("calibration", calibration_residual(eig, p), CALIBRATION_RTOL,
                         "relative variance mismatch to rabi_res^2"))
    if len(grid) > 1:
        checks.append(_check("refinement", refinement_delta(grid, p, eig, width),
                             REFINEMENT_TOL, f"ring count {len(grid)} -> doubled"))
    return checks
