"""Input validation helpers shared across modules.

All checks are relative: a tolerance ``tol`` applied to a matrix ``A`` means
``tol * scale(A)`` with ``scale`` the largest entry magnitude (symmetry) or
the spectral norm (definiteness).  Every constructor-facing helper rejects
NaN/Inf on sight.
"""

from __future__ import annotations

import numpy as np

from .errors import MatrixShapeError, NotSymmetric

#: Default relative tolerance for symmetry checks.
TOL_SYM = 1e-10

#: PSD margin: min eigenvalue >= -TOL_PSD * ||A||_2 counts as PSD.
TOL_PSD = 1e-10

#: Strict positive-definiteness margin.
TOL_PD = 1e-10

#: Relative half-width of the imaginary-axis band.
TOL_AXIS = 1e-7

#: Relative observability threshold.
TOL_OBS = 1e-8


def as_matrix(a, name="matrix", square=True, dtype=None):
    """Return ``a`` as a 2-d ndarray, rejecting bad shapes and non-finite entries."""
    arr = np.asarray(a, dtype=dtype)
    if arr.ndim != 2:
        raise MatrixShapeError(f"{name} must be 2-d, got ndim={arr.ndim}")
    if square and arr.shape[0] != arr.shape[1]:
        raise MatrixShapeError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise MatrixShapeError(f"{name} contains NaN or Inf entries")
    return arr


def as_vector(v, name="vector"):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise MatrixShapeError(f"{name} must be 1-d, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise MatrixShapeError(f"{name} contains NaN or Inf entries")
    return arr


def is_symmetric(a, tol=TOL_SYM):
    a = np.asarray(a)
    scale = max(np.abs(a).max(), 1e-300)
    return np.abs(a - a.T).max() <= tol * scale


def require_symmetric(a, name="matrix", tol=TOL_SYM):
    if not is_symmetric(a, tol):
        raise NotSymmetric(f"{name} is not symmetric to relative tolerance {tol:g}")
    return np.asarray(a)


def sym_part(a):
    return 0.5 * (a + a.T)


def is_psd(a, tol=TOL_PSD):
    """Positive semidefiniteness of the symmetric part, with relative margin."""
    s = sym_part(np.asarray(a, dtype=float))
    scale = max(np.linalg.norm(s, 2), 1.0e-300)
    return np.linalg.eigvalsh(s).min() >= -tol * scale

def is_pd(a, tol=TOL_PD):
    """Strict positive definiteness of the symmetric part."""
    s = sym_part(np.asarray(a, dtype=float))
    scale = max(np.linalg.norm(s, 2), 1.0e-300)
    return np.linalg.eigvalsh(s).min() > tol * scale


def spectral_scale(eigs):
    """max(1, max |eig|): the reference scale for relative axis bands."""
    eigs = np.asarray(eigs)
    return max(1.0, np.abs(eigs).max()) if eigs.size else 1.0
