"""Complex-symmetric matrix perturbation checks.

Numerically exercises the duality between the imaginary parts of a complex
symmetric matrix and its inverse, the nonsingularity of rank-one and PSD
imaginary updates, the rank-principal submatrix search, and the rank
monotonicity inequality rank(A + iD) <= rank(A + iD + iE) for symmetric A
and PSD D, E.  The predicates return what they compute; the accompanying
test suites assert the theorems' conclusions on conforming input.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _validation as val
from .errors import (
    PreconditionViolated,
    RankPrincipalNotFound,
    SingularMatrix,
)
from .linalg import numerical_rank

__all__ = [
    "PsdPerturbationInstance",
    "check_inverse_imag_duality",
    "find_rank_principal_submatrix",
    "psd_imag_update_nonsingular",
    "rank_monotonicity_holds",
    "rank_one_imag_update_nonsingular",
]

# Exhaustive principal-submatrix search is capped here; C(12, 6) = 924
# determinants is trivial cost.
_EXHAUSTIVE_N_MAX = 12


def _require_complex_symmetric(s, name="s"):
    s = val.as_matrix(s, name, dtype=complex)
    scale = max(np.abs(s).max(), 1e-300)
    if np.abs(s - s.T).max() > val.TOL_SYM * scale:
        raise PreconditionViolated(f"{name} must be complex symmetric")
    return s


def _require_imag_psd(s, name="s"):
    if not val.is_psd(s.imag, tol=val.TOL_PSD):
        raise PreconditionViolated(f"Im({name}) must be positive semidefinite")


def check_inverse_imag_duality(s, tol_psd=val.TOL_PSD):
    """Flags (Im(S) >= 0 ?, Im(S^-1) <= 0 ?) for nonsingular complex symmetric S.

    Both flags are computed from eigenvalues of the real symmetric parts with
    relative margin ``tol_psd``.  On conforming input the flags agree whenever
    the first is definite beyond tolerance.
    """
    s = _require_complex_symmetric(s)
    n = s.shape[0]
    if numerical_rank(s) < n:
        raise SingularMatrix("duality check requires a nonsingular matrix")
    s_inv = np.linalg.inv(s)

    im_s = val.sym_part(s.imag)
    im_inv = val.sym_part(s_inv.imag)
    scale_s = max(np.linalg.norm(im_s, 2), 1e-300)
    scale_inv = max(np.linalg.norm(im_inv, 2), 1e-300)
    imag_psd = np.linalg.eigvalsh(im_s).min() >= -tol_psd * scale_s
    inv_imag_nsd = np.linalg.eigvalsh(im_inv).max() <= tol_psd * scale_inv
    return bool(imag_psd), bool(inv_imag_nsd)


def rank_one_imag_update_nonsingular(s, v):
    """Whether ``S + i v v^T`` is nonsingular (true on conforming input).

    Requires S nonsingular complex symmetric with PSD imaginary part and a
    real vector v.
    """
    s = _require_complex_symmetric(s)
    _require_imag_psd(s)
    if numerical_rank(s) < s.shape[0]:
        raise PreconditionViolated("s must be nonsingular")
    v = val.as_vector(v, "v")
    updated = s + 1j * np.outer(v, v)
    return numerical_rank(updated) == s.shape[0]


def psd_imag_update_nonsingular(s, e):
    """Whether ``S + iE`` is nonsingular for real PSD ``E`` (true on conforming input)."""
    s = _require_complex_symmetric(s)
    _require_imag_psd(s)
    if numerical_rank(s) < s.shape[0]:
        raise PreconditionViolated("s must be nonsingular")
    e = val.as_matrix(e, "e", dtype=float)
    if not val.is_symmetric(e):
        raise PreconditionViolated("e must be real symmetric")
    if not val.is_psd(e):
        raise PreconditionViolated("e must be positive semidefinite")
    return numerical_rank(s + 1j * e) == s.shape[0]


def find_rank_principal_submatrix(s, r=None, tol_rank=None):
    """Index set ``alpha`` with ``S[alpha, alpha]`` nonsingular of size ``r = rank(S)``.

    Candidates are tried in descending order of the diagonal pivot magnitudes
    of a rank-revealing QR factorization, falling back to exhaustive search
    for n <= 12.  Returns a sorted tuple of 0-based indices.

    Raises RankPrincipalNotFound when the search exhausts; this happens for
    matrices that are not rank principal (e.g. nilpotent ones), outside the
    hypothesis of the underlying lemma.
    """
    s = val.as_matrix(s, "s", dtype=complex)
    n = s.shape[0]
    rank = numerical_rank(s, tol_rank)
    if r is None:
        r = rank
    elif r != rank:
        raise PreconditionViolated(f"requested size {r} != numerical rank {rank}")
    if r == 0:
        return ()
    if r == n:
        return tuple(range(n))

    def nonsingular(alpha):
        sub = s[np.ix_(alpha, alpha)]
        return numerical_rank(sub, tol_rank) == len(alpha)

    # Pivoted-QR column order ranks indices by how much mass they carry.
    _, _, piv = scipy.linalg.qr(s, pivoting=True)
    candidate = tuple(sorted(piv[:r]))
    if nonsingular(candidate):
        return candidate

    if n <= _EXHAUSTIVE_N_MAX:
        for alpha in itertools.combinations(range(n), r):
            if nonsingular(alpha):
                return tuple(alpha)
    raise RankPrincipalNotFound(
        f"no nonsingular {r}x{r} principal submatrix found (n={n})"
    )


@dataclass(frozen=True)
class PsdPerturbationInstance:
    """Triple (A symmetric, D PSD, E PSD) for the rank-monotonicity inequality."""

    a: np.ndarray
    d: np.ndarray
    e: np.ndarray

    def validate(self):
        for name in ("a", "d", "e"):
            mat = val.as_matrix(getattr(self, name), name, dtype=float)
            if not val.is_symmetric(mat):
                raise PreconditionViolated(f"{name} must be real symmetric")
        if self.a.shape != self.d.shape or self.a.shape != self.e.shape:
            raise PreconditionViolated("a, d, e must share one dimension")
        for name in ("d", "e"):
            if not val.is_psd(getattr(self, name)):
                raise PreconditionViolated(f"{name} must be positive semidefinite")
        return self


def rank_monotonicity_holds(instance, tol_rank=None, check=True):
    """Whether ``rank(A + iD) <= rank(A + iD + iE)``.

    Must be true whenever the instance invariants hold (A symmetric, D and E
    PSD).  ``check=False`` bypasses the precondition for demonstrating that
    the symmetry assumption is sharp; both ranks share one ``tol_rank`` so a
    tolerance straddle cannot fake a violation.
    """
    if check:
        instance.validate()
    a = np.asarray(instance.a, dtype=float)
    base = a + 1j * np.asarray(instance.d, dtype=float)
    bumped = base + 1j * np.asarray(instance.e, dtype=float)
    return numerical_rank(base, tol_rank) <= numerical_rank(bumped, tol_rank)
