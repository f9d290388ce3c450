"""Dense-matrix numerical kernel.

Quadratic-pencil eigenanalysis via companion linearization, numerical rank,
the Autonne-Takagi factorization of complex symmetric matrices, and
classification of eigenvalues relative to the imaginary axis.  Everything
here is a pure function of small dense arrays; higher modules build the
dynamical-systems semantics on top.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _validation as val
from .errors import (
    NotSymmetric,
    SingularInertia,
    SingularLeadingCoefficient,
)

__all__ = [
    "QuadraticPencil",
    "SpectrumReport",
    "TakagiFactorization",
    "classify_spectrum",
    "jacobian_2n",
    "matching_distance",
    "numerical_rank",
    "pencil_eigenvalues",
    "takagi",
]


def numerical_rank(a, tol_rank=None):
    """Numerical rank of ``a``: singular values above ``tol_rank * sigma_max``.

    Parameters
    ----------
    a : array_like
        Real or complex matrix.
    tol_rank : float, optional
        Relative threshold.  Defaults to ``max(m, n) * eps``, the standard
        SVD rank rule.

    Returns
    -------
    int
        Rank estimate; 0 for the zero matrix.
    """
    a = val.as_matrix(a, "a", square=False)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    smax = s[0]
    if smax == 0.0:
        return 0
    if tol_rank is None:
        tol_rank = max(a.shape) * np.finfo(float).eps
    return int(np.count_nonzero(s > tol_rank * smax))


@dataclass(frozen=True)
class QuadraticPencil:
    """Matrix polynomial ``P(lam) = lam**2 a2 + lam a1 + a0`` with a2 nonsingular.

    ``a2``, ``a1``, ``a0`` are n-by-n real matrices (complex evaluation points
    are fine).  For a second-order system these are inertia, damping and the
    vector-field Jacobian respectively.
    """

    a2: np.ndarray
    a1: np.ndarray
    a0: np.ndarray

    def __post_init__(self):
        a2 = val.as_matrix(self.a2, "a2")
        a1 = val.as_matrix(self.a1, "a1")
        a0 = val.as_matrix(self.a0, "a0")
        if not (a2.shape == a1.shape == a0.shape):
            raise SingularLeadingCoefficient(
                f"pencil blocks must share one dimension, got "
                f"{a2.shape}, {a1.shape}, {a0.shape}"
            )
        n = a2.shape[0]
        if numerical_rank(a2) < n:
            raise SingularLeadingCoefficient(
                "leading coefficient a2 is numerically singular"
            )
        object.__setattr__(self, "a2", a2)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a0", a0)

    @property
    def n(self):
        return self.a2.shape[0]

    def evaluate(self, lam):
        return (lam * lam) * self.a2 + lam * self.a1 + self.a0

    def residual_scale(self, lam):
        """Natural backward-error scale at ``lam``."""
        r = abs(lam)
        return (
            r * r * np.linalg.norm(self.a2, 2)
            + r * np.linalg.norm(self.a1, 2)
            + np.linalg.norm(self.a0, 2)
        )

    def companion(self):
        """First companion linearization ``[[0, I], [-a2^-1 a0, -a2^-1 a1]]``."""
        n = self.n
        top = np.hstack([np.zeros((n, n)), np.eye(n)])
        sol = np.linalg.solve(self.a2, np.hstack([self.a0, self.a1]))
        bottom = -np.hstack([sol[:, :n], sol[:, n:]])
        return np.vstack([top, bottom])

    def eigenvalues(self):
        return np.linalg.eigvals(self.companion())


def pencil_eigenvalues(a2, a1, a0):
    """All 2n eigenvalues of the quadratic pencil ``lam^2 a2 + lam a1 + a0``.

    Raises SingularLeadingCoefficient if ``a2`` is rank deficient.
    """
    return QuadraticPencil(a2, a1, a0).eigenvalues()


def jacobian_2n(inertia, damping, stiffness):
    """Block Jacobian ``[[0, I], [-M^-1 L, -M^-1 D]]`` of the first-order system.

    ``stiffness`` is the vector-field Jacobian at the linearization point.
    Raises SingularInertia when ``inertia`` is numerically singular.
    """
    m = val.as_matrix(inertia, "inertia", dtype=float)
    d = val.as_matrix(damping, "damping", dtype=float)
    l = val.as_matrix(stiffness, "stiffness", dtype=float)
    n = m.shape[0]
    if d.shape != (n, n) or l.shape != (n, n):
        raise SingularInertia(f"blocks must all be {n}x{n}")
    if numerical_rank(m) < n:
        raise SingularInertia("inertia matrix is numerically singular")
    sol = np.linalg.solve(m, np.hstack([l, d]))
    top = np.hstack([np.zeros((n, n)), np.eye(n)])
    bottom = np.hstack([-sol[:, :n], -sol[:, n:]])
    return np.vstack([top, bottom])


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues split by the sign of their real part.

    ``axis_set`` collects eigenvalues with ``|Re| <= tol_axis * scale`` where
    ``scale = max(1, spectral radius)``; the counts form the inertia triple
    ``(left_count, axis_count, right_count)``.
    """

    eigenvalues: np.ndarray
    axis_set: np.ndarray
    left_count: int
    axis_count: int
    right_count: int
    tol_axis: float
    scale: float

    @property
    def inertia(self):
        return (self.left_count, self.axis_count, self.right_count)

    @property
    def hyperbolic(self):
        return self.axis_count == 0


def classify_spectrum(eigs, tol_axis=val.TOL_AXIS):
    """Partition ``eigs`` by half-plane with a relative axis band.

    ``tol_axis`` must be positive; the band half-width is
    ``tol_axis * max(1, max |eig|)``.
    """
    if tol_axis <= 0:
        raise ValueError("tol_axis must be positive")
    eigs = np.atleast_1d(np.asarray(eigs, dtype=complex))
    scale = val.spectral_scale(eigs)
    band = tol_axis * scale
    re = eigs.real
    on_axis = np.abs(re) <= band
    return SpectrumReport(
        eigenvalues=eigs,
        axis_set=eigs[on_axis],
        left_count=int(np.count_nonzero(re < -band)),
        axis_count=int(np.count_nonzero(on_axis)),
        right_count=int(np.count_nonzero(re > band)),
        tol_axis=tol_axis,
        scale=scale,
    )


def matching_distance(first, second):
    """Optimal-assignment distance between two eigenvalue multisets.

    Returns the largest pairwise distance in the optimal matching; inf if
    the multisets have different sizes.
    """
    a = np.atleast_1d(np.asarray(first, dtype=complex))
    b = np.atleast_1d(np.asarray(second, dtype=complex))
    if a.size != b.size:
        return np.inf
    if a.size == 0:
        return 0.0
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def subset_distance(sub, full):
    """For each element of ``sub``, distance to its own nearest match in ``full``.

    Greedy injective matching: returns the largest distance over ``sub`` (0.0
    for an empty ``sub``, inf if ``full`` is too small).
    """
    sub = np.atleast_1d(np.asarray(sub, dtype=complex))
    full = np.atleast_1d(np.asarray(full, dtype=complex))
    if sub.size == 0:
        return 0.0
    if sub.size > full.size:
        return np.inf
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(sub[:, None] - full[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@dataclass(frozen=True)
class TakagiFactorization:
    """Autonne-Takagi factorization ``S = U diag(sigma) U^T`` with unitary U."""

    u: np.ndarray
    sigma: np.ndarray

    def reconstruct(self):
        return (self.u * self.sigma) @ self.u.T

    def unitarity_defect(self):
        n = self.u.shape[0]
        return float(np.linalg.norm(self.u.conj().T @ self.u - np.eye(n), 2))


def takagi(s, tol_sym=val.TOL_SYM):
    """Takagi factorization of a complex symmetric matrix via its SVD.

    Computes ``S = U Sigma U^T`` with ``U`` unitary and ``Sigma`` the singular
    values in descending order.  Repeated singular values are handled by a
    blockwise phase correction: within each singular-value cluster the
    correction ``Q = sqrtm(V^T W)`` rotates the left singular basis so the
    reconstruction is symmetric-consistent.

    Raises NotSymmetric when ``max|S - S^T| > tol_sym * max|S|``.
    """
    s = val.as_matrix(s, "s", dtype=complex)
    scale = max(np.abs(s).max(), 1e-300)
    if np.abs(s - s.T).max() > tol_sym * scale:
        raise NotSymmetric("takagi requires a complex symmetric matrix")

    v, sig, wh = np.linalg.svd(s)
    w = wh.conj().T

    # Cluster near-equal singular values so the phase correction stays
    # block-unitary when the SVD basis mixes within a multiplet.
    groups = []
    start = 0
    for i in range(1, len(sig) + 1):
        if i == len(sig) or abs(sig[i] - sig[start]) > 1e-8 * max(sig[0], 1e-300):
            groups.append(list(range(start, i)))
            start = i

    blocks = []
    for g in groups:
        z = v[:, g].T @ w[:, g]
        blocks.append(scipy.linalg.sqrtm(z))
    q = scipy.linalg.block_diag(*blocks) if blocks else np.zeros((0, 0))
    u = v @ q.conj()
    return TakagiFactorization(u=u, sigma=sig)
