"""Reduced Fano matrix and its eigendecomposition.

The Hamiltonian restricted to the bare electron and the annular bright
polariton states is ``omega_1(k) * I + A`` with ``A`` an arrowhead matrix: an
apex (the bare electron at ``omega_12``) coupled to a diagonal continuum.
``A`` does not depend on ``k``, so it is diagonalized once per parameter set.

Two solvers share one output contract:

* :func:`eigendecompose_arrowhead` solves the secular equation
  ``omega - apex - sum_j z_j^2 / (omega - d_j) = 0`` root by root, O(n^2);
* :func:`eigendecompose_dense` hands the expanded matrix to the QR-iteration
  symmetric eigensolver and serves as the independent oracle.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import DimensionCapError, ParameterError, SolverError
from .params import DeviceParams
from .polariton import QGrid, polariton_table

#: relative threshold below which two poles are merged
POLE_MERGE_RTOL = 1e-14
#: relative tolerance on the root offset from its nearest pole
ROOT_RTOL = 1e-13
DENSE_CAP = 2000

_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class ArrowheadMatrix:
    """Apex + diagonal + coupling column.

    ``ring_index[j] = (sign, i)`` locates diagonal entry ``j`` on branch
    ``sign`` (+1 upper, -1 lower) and ring ``i``; it is empty for matrices
    that do not come from a polariton grid.
    """

    apex: float
    diag: np.ndarray
    coupling: np.ndarray
    ring_index: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))
    params: Optional[DeviceParams] = None
    grid: Optional[QGrid] = None

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float).ravel()
        coupling = np.asarray(self.coupling, dtype=float).ravel()
        ring_index = np.asarray(self.ring_index, dtype=int).reshape(-1, 2)
        if diag.shape != coupling.shape:
            raise ParameterError("diag and coupling must have equal length")
        if ring_index.shape[0] not in (0, diag.size):
            raise ParameterError("ring_index must align with diag")
        if not (np.isfinite(self.apex) and np.all(np.isfinite(diag))
                and np.all(np.isfinite(coupling))):
            raise ParameterError("arrowhead entries must be finite")
        for arr in (diag, coupling, ring_index):
            arr.setflags(write=False)
        object.__setattr__(self, "apex", float(self.apex))
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "coupling", coupling)
        object.__setattr__(self, "ring_index", ring_index)

    @property
    def dim(self) -> int:
        return self.diag.size + 1

    def to_dense(self) -> np.ndarray:
        n = self.dim
        mat = np.zeros((n, n))
        mat[0, 0] = self.apex
        mat[0, 1:] = self.coupling
        mat[1:, 0] = self.coupling
        mat[np.arange(1, n), np.arange(1, n)] = self.diag
        return mat

    def norm_inf(self) -> float:
        rows = np.abs(self.diag) + np.abs(self.coupling)
        apex_row = abs(self.apex) + np.sum(np.abs(self.coupling))
        return float(max(apex_row, rows.max(initial=0.0)))

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """Product with one vector or with the rows of a 2-D array."""
        v = np.asarray(v, dtype=float)
        head, tail = v[..., 0], v[..., 1:]
        out = np.empty_like(v)
        out[..., 0] = self.apex * head + tail @ self.coupling
        out[..., 1:] = self.diag * tail + head[..., None] * self.coupling
        return out


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Sorted eigenvalues with apex weights ``mu`` and continuum weights ``lam``.

    Row ``z`` of ``lam`` holds the components of eigenvector ``z`` on the
    diagonal positions of the source matrix, in the source order.
    """

    omega_zeta: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    params: Optional[DeviceParams] = None

    @property
    def dim(self) -> int:
        return self.omega_zeta.size

    @property
    def weights(self) -> np.ndarray:
        return self.mu**2

    def vectors(self) -> np.ndarray:
        """Eigenvectors as rows ``[mu, lam...]``."""
        return np.column_stack([self.mu, self.lam])


def build_fano_matrix(grid: QGrid, p: DeviceParams) -> ArrowheadMatrix:
    """Arrowhead matrix of the bare electron coupled to all annular rings.

    Diagonal layout: upper-branch rings first, then lower-branch rings, each
    in increasing ``q``.
    """
    if len(grid) == 0:
        raise ParameterError("empty grid")
    table = polariton_table(grid, p)
    cell = np.sqrt(grid.q_values * grid.spacings * table.density)
    diag = np.concatenate([table.omega_plus, table.omega_minus])
    coupling = np.concatenate([table.rabi * table.g_plus * cell,
                               table.rabi * table.g_minus * cell])
    n_q = len(grid)
    rings = np.arange(n_q)
    ring_index = np.concatenate([np.column_stack([np.ones(n_q, int), rings]),
                                 np.column_stack([-np.ones(n_q, int), rings])])
    return ArrowheadMatrix(apex=1.0, diag=diag, coupling=coupling,
                           ring_index=ring_index, params=p, grid=grid)


def _group_poles(d_sorted: np.ndarray, scale: float):
    """Start indices of runs of (relatively) coincident poles."""
    gaps = np.diff(d_sorted)
    breaks = np.nonzero(gaps > POLE_MERGE_RTOL * scale)[0] + 1
    return np.concatenate([[0], breaks, [d_sorted.size]])


def _householder_complement(u: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of unit vector ``u``."""
    m = u.size
    v = u.copy()
    v[0] += np.copysign(1.0, u[0]) if u[0] != 0 else 1.0
    h = np.eye(m) - 2.0 * np.outer(v, v) / (v @ v)
    # first column of h is -+u, the rest span its complement
    return h[:, 1:]


def _pole_sums(poles, z2, k, t, block=128):
    """``sum_j z2_j / x_j`` and ``sum_j z2_j / x_j^2`` with ``x_j = p_k - p_j + t``, j != k.

    Row blocks keep the temporaries cache-sized.
    """
    s1 = np.empty(k.size)
    s2 = np.empty(k.size)
    for b in range(0, k.size, block):
        kb = k[b:b + block]
        inv = 1.0 / (poles[kb][:, None] - poles[None, :] + t[b:b + block, None])
        inv[np.arange(kb.size), kb] = 0.0
        terms = z2 * inv
        s1[b:b + block] = terms.sum(axis=1)
        s2[b:b + block] = (terms * inv).sum(axis=1)
    return s1, s2


def _two_pole_guess(f_mid, mid, apex, poles, z2, right_half, lo, hi):
    """Starting offsets from a model keeping the two bracketing poles exact.

    The remaining poles are frozen at their value at the interval midpoint,
    which turns the secular equation into a quadratic in the offset.
    """
    gap = poles[1:] - poles[:-1]
    za, zb = z2[:-1], z2[1:]
    half = 0.5 * gap
    # f(mid) = mid - apex - za/half + zb/half - rest
    const = f_mid + za / half - zb / half
    # left origin: const t (t - gap) - za (t - gap) - zb t = 0
    # right origin: const t (t + gap) - za t - zb (t + gap) = 0
    qa = const
    qb = np.where(right_half, const * gap - za - zb, -(const * gap + za + zb))
    qc = np.where(right_half, -zb * gap, za * gap)
    disc = np.maximum(qb * qb - 4.0 * qa * qc, 0.0)
    qq = -0.5 * (qb + np.copysign(np.sqrt(disc), qb))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = qq / qa
        r2 = qc / qq
    ok1 = np.isfinite(r1) & (r1 > lo) & (r1 < hi)
    ok2 = np.isfinite(r2) & (r2 > lo) & (r2 < hi)
    return np.where(ok2, r2, np.where(ok1, r1, 0.5 * (lo + hi)))


def _solve_secular(poles, z2, apex, norm_z, max_iter=200):
    """Roots of ``omega - apex - sum z2 / (omega - poles)``, one per interval.

    Returns ``(origin, tau)``: each root is ``poles[origin] + tau`` with
    ``tau`` computed directly, so differences to the nearest pole keep full
    relative accuracy.
    """
    m = poles.size
    n_roots = m + 1
    origin = np.empty(n_roots, dtype=int)
    lo = np.empty(n_roots)
    hi = np.empty(n_roots)

    # exterior roots
    origin[0] = 0
    lo[0] = min(apex, poles[0]) - norm_z - poles[0]
    hi[0] = 0.0
    origin[m] = m - 1
    lo[m] = 0.0
    hi[m] = max(apex, poles[-1]) + norm_z - poles[-1]

    if m > 1:
        left = np.arange(m - 1)
        gap = poles[1:] - poles[:-1]
        mid = poles[:-1] + 0.5 * gap
        # f(mid) decides which half, hence which pole is the origin
        f_mid = mid - apex - np.sum(z2 / (mid[:, None] - poles[None, :]), axis=1)
        right_half = f_mid < 0
        origin[1:m] = np.where(right_half, left + 1, left)
        lo[1:m] = np.where(right_half, -0.5 * gap, 0.0)
        hi[1:m] = np.where(right_half, 0.0, 0.5 * gap)

    tau = 0.5 * (lo + hi)
    if m > 1:
        tau[1:m] = _two_pole_guess(f_mid, mid, apex, poles, z2, right_half,
                                   lo[1:m], hi[1:m])

    shift = poles[origin] - apex
    z2_origin = z2[origin]
    active = np.arange(n_roots)
    converged = np.zeros(n_roots, dtype=bool)

    for _ in range(max_iter):
        if active.size == 0:
            break
        k = origin[active]
        t = tau[active]
        s1, s2 = _pole_sums(poles, z2, k, t)
        # F(t) = t f(p_k + t) removes the pole at the origin
        big_f = t * (shift[active] + t - s1) - z2_origin[active]
        d_f = shift[active] + 2.0 * t - s1 + t * s2

        f_sign = np.sign(big_f) * np.sign(t)
        lo_a, hi_a = lo[active], hi[active]
        hi_a = np.where(f_sign > 0, t, hi_a)
        lo_a = np.where(f_sign < 0, t, lo_a)
        lo[active], hi[active] = lo_a, hi_a

        with np.errstate(divide="ignore", invalid="ignore"):
            t_new = t - big_f / d_f
        inside = np.isfinite(t_new) & (t_new > lo_a) & (t_new < hi_a)
        t_new = np.where(inside, t_new, 0.5 * (lo_a + hi_a))

        tol = ROOT_RTOL * np.maximum(np.abs(t_new), np.finfo(float).tiny)
        done = (big_f == 0) | (np.abs(t_new - t) <= tol) | (hi_a - lo_a <= tol)
        tau[active] = np.where(big_f == 0, t, t_new)
        converged[active[done]] = True
        active = active[~done]

    if active.size:
        bad = active[:5]
        detail = ", ".join(
            f"root {i}: pole {poles[origin[i]]:.16g}, bracket [{lo[i]:.3e}, {hi[i]:.3e}]"
            for i in bad)
        raise SolverError(
            f"{active.size} secular roots did not converge in {max_iter} iterations; {detail}")
    return origin, tau


def eigendecompose_arrowhead(a: ArrowheadMatrix) -> EigenSystem:
    """Full eigensystem of an arrowhead matrix through its secular equation.

    Zero couplings and coincident poles are deflated first: a zero coupling
    leaves its pole as an exact eigenvalue with ``mu = 0``, and ``m`` equal
    poles are rotated so that one representative carries the combined
    coupling while the other ``m - 1`` combinations decouple.
    """
    n = a.diag.size
    if n == 0:
        return EigenSystem(np.array([a.apex]), np.array([1.0]), np.zeros((1, 0)), a.params)

    order = np.argsort(a.diag, kind="stable")
    d_sorted = a.diag[order]
    z_sorted = a.coupling[order]
    scale = max(abs(a.apex), float(np.max(np.abs(d_sorted))),
                float(np.linalg.norm(z_sorted)), np.finfo(float).tiny)
    z_tol = 8.0 * _EPS * scale
    bounds = _group_poles(d_sorted, scale)
    starts, sizes = bounds[:-1], np.diff(bounds)
    group_of = np.repeat(np.arange(sizes.size), sizes)
    group_value = np.add.reduceat(d_sorted, starts) / sizes
    group_z2 = np.add.reduceat(z_sorted**2, starts)
    coupled = group_z2 > z_tol**2

    poles = group_value[coupled]
    pole_z2 = group_z2[coupled]
    # sorted position -> index of its representative pole, -1 if deflated
    pole_of = np.where(coupled, np.cumsum(coupled) - 1, -1)[group_of]
    z_eff = np.where(pole_of >= 0, z_sorted, 0.0)

    deflated_vals, deflated_rows = [], []
    for j in np.nonzero(pole_of < 0)[0]:
        row = np.zeros(n)
        row[j] = 1.0
        deflated_vals.append(group_value[group_of[j]])
        deflated_rows.append(row)
    for g in np.nonzero(coupled & (sizes > 1))[0]:
        members = slice(starts[g], starts[g] + sizes[g])
        basis = _householder_complement(z_sorted[members] / np.sqrt(group_z2[g]))
        for col in basis.T:
            row = np.zeros(n)
            row[members] = col
            deflated_vals.append(group_value[g])
            deflated_rows.append(row)

    n_dim = n + 1
    omega = np.empty(n_dim)
    mu = np.zeros(n_dim)
    lam_sorted = np.zeros((n_dim, n))

    n_sec = poles.size + 1
    if poles.size == 0:
        omega[0] = a.apex
        mu[0] = 1.0
    else:
        origin, tau = _solve_secular(poles, pole_z2, a.apex, float(np.sqrt(pole_z2.sum())))
        omega[:n_sec] = poles[origin] + tau
        # omega - pole, formed from the origin offset for accuracy
        gap = poles[origin][:, None] - poles[None, :] + tau[:, None]
        mu[:n_sec] = 1.0 / np.sqrt(1.0 + np.sum(pole_z2[None, :] / gap**2, axis=1))
        cols = np.nonzero(pole_of >= 0)[0]
        lam_sorted[:n_sec, cols] = mu[:n_sec, None] * z_eff[cols][None, :] / gap[:, pole_of[cols]]

    if deflated_rows:
        omega[n_sec:] = deflated_vals
        lam_sorted[n_sec:] = np.array(deflated_rows)

    perm = np.argsort(omega, kind="stable")
    lam = np.empty_like(lam_sorted)
    lam[:, order] = lam_sorted
    return EigenSystem(omega[perm], mu[perm], lam[perm], a.params)


def eigendecompose_dense(a: ArrowheadMatrix, cap: int = DENSE_CAP) -> EigenSystem:
    """Oracle path: dense symmetric eigensolver on the expanded matrix.

    Uses the implicit-QR tridiagonal driver, which shares no secular-equation
    machinery with :func:`eigendecompose_arrowhead`.  Eigenvector signs are
    fixed so that ``mu >= 0`` (first nonzero component positive when
    ``mu == 0``).
    """
    if a.dim > cap:
        raise DimensionCapError(f"dense oracle refuses dimension {a.dim} > cap {cap}")
    if a.dim == 1:
        return EigenSystem(np.array([a.apex]), np.array([1.0]), np.zeros((1, 0)), a.params)
    values, vectors = scipy.linalg.eigh(a.to_dense(), driver="ev")
    vecs = vectors.T
    first = np.argmax(vecs != 0, axis=1)
    vecs = vecs * np.sign(vecs[np.arange(vecs.shape[0]), first])[:, None]
    return EigenSystem(values, vecs[:, 0].copy(), vecs[:, 1:].copy(), a.params)


_MAGIC = b"ARWEIGS\x00"
_VERSION = 1


def dump_eigensystem(eig: EigenSystem, path) -> None:
    """Binary cache: magic, version, dim, then little-endian float64 arrays.

    Layout after the 20-byte header: ``omega_zeta[dim]``, ``mu[dim]``,
    ``lam[dim][dim-1]`` row-major.  Parameters are not stored.
    """
    dim = eig.dim
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQ", _VERSION, dim))
        fh.write(np.ascontiguousarray(eig.omega_zeta, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(eig.mu, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(eig.lam, dtype="<f8").tobytes())


def load_eigensystem(path, params: Optional[DeviceParams] = None) -> EigenSystem:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != _MAGIC:
        raise ValueError(f"{path}: not an eigensystem dump")
    version, dim = struct.unpack("<IQ", raw[8:20])
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported dump version {version}")
    expected = 20 + 8 * (2 * dim + dim * (dim - 1))
    if len(raw) != expected:
        raise ValueError(f"{path}: truncated dump ({len(raw)} of {expected} bytes)")
    data = np.frombuffer(raw, dtype="<f8", offset=20).astype(float)
    omega = data[:dim].copy()
    mu = data[dim:2 * dim].copy()
    lam = data[2 * dim:].reshape(dim, dim - 1).copy()
    return EigenSystem(omega, mu, lam, params)
