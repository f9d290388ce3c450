import math

import numpy as np
import pytest

from damplab import perturbation, suites
from damplab.errors import (
    PreconditionViolated,
    RankPrincipalNotFound,
    SingularMatrix,
)
from damplab.linalg import numerical_rank
from conftest import L_CASE1

# The unsymmetric pair for which the PSD imaginary update *does* drop the
# rank, showing the symmetry hypothesis is sharp.
S_UNSYM = np.array([[1 + 1j, math.sqrt(2)], [-math.sqrt(2), -1.0]])
E_UNSYM = np.diag([0.0, 1.0])


class TestInverseImagDuality:
    def test_scalar_imaginary(self):
        assert perturbation.check_inverse_imag_duality([[1j]]) == (True, True)

    def test_diagonal(self):
        s = np.diag([1 + 2j, 3 + 0j])
        assert perturbation.check_inverse_imag_duality(s) == (True, True)

    def test_rejects_singular(self):
        with pytest.raises(SingularMatrix):
            perturbation.check_inverse_imag_duality(np.zeros((2, 2), complex))

    def test_rejects_unsymmetric(self):
        with pytest.raises(PreconditionViolated):
            perturbation.check_inverse_imag_duality(S_UNSYM)

    def test_random_conforming_instances(self):
        result = suites.suite_imag_duality(seed=101, trials=300)
        assert result.passed, result.failures[:1]


class TestRankOneUpdate:
    def test_scalar(self):
        assert perturbation.rank_one_imag_update_nonsingular([[1.0]], [1.0])

    def test_mixed_diagonal(self):
        s = np.diag([1j, 1.0 + 0j])
        assert perturbation.rank_one_imag_update_nonsingular(s, [1.0, 1.0])

    def test_rejects_indefinite_imaginary_part(self):
        s = np.diag([-1j, 1.0 + 0j])
        with pytest.raises(PreconditionViolated):
            perturbation.rank_one_imag_update_nonsingular(s, [1.0, 0.0])

    def test_random_conforming_instances(self):
        result = suites.suite_imag_updates(seed=17, trials=300)
        assert result.passed, result.failures[:1]


class TestPsdUpdate:
    def test_zero_update(self):
        s = np.diag([1 + 1j, 2 + 0j])
        assert perturbation.psd_imag_update_nonsingular(s, np.zeros((2, 2)))

    def test_unsymmetric_matrix_refused(self):
        with pytest.raises(PreconditionViolated):
            perturbation.psd_imag_update_nonsingular(S_UNSYM, E_UNSYM)

    def test_non_psd_update_refused(self):
        s = np.diag([1 + 1j, 2 + 0j])
        with pytest.raises(PreconditionViolated):
            perturbation.psd_imag_update_nonsingular(s, -np.eye(2))


class TestRankPrincipalSearch:
    def test_diagonal(self):
        assert perturbation.find_rank_principal_submatrix(np.diag([1.0, 0.0])) == (0,)

    def test_case1_flow_jacobian(self):
        alpha = perturbation.find_rank_principal_submatrix(L_CASE1)
        assert len(alpha) == 2
        sub = L_CASE1[np.ix_(alpha, alpha)]
        assert abs(np.linalg.det(sub)) > 1e-10

    def test_nilpotent_not_found(self):
        s = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(RankPrincipalNotFound):
            perturbation.find_rank_principal_submatrix(s)

    def test_full_rank_returns_everything(self):
        assert perturbation.find_rank_principal_submatrix(np.eye(3)) == (0, 1, 2)

    def test_rank_mismatch_rejected(self):
        with pytest.raises(PreconditionViolated):
            perturbation.find_rank_principal_submatrix(np.eye(3), r=1)

    def test_random_rank_deficient_complex_symmetric(self):
        # A + iD with common-kernel structure is rank principal by
        # construction (unitarily similar to B oplus 0).
        rng = np.random.default_rng(29)
        for _ in range(25):
            n = int(rng.integers(2, 8))
            r = int(rng.integers(1, n))
            basis = np.linalg.qr(rng.normal(size=(n, n)))[0][:, :r]
            a = basis @ rng.normal(size=(r, r)) @ basis.T
            a = 0.5 * (a + a.T)
            g = rng.normal(size=(r, r))
            d = basis @ (g @ g.T) @ basis.T
            s = a + 1j * d
            rank = numerical_rank(s)
            alpha = perturbation.find_rank_principal_submatrix(s)
            assert len(alpha) == rank
            sub = s[np.ix_(alpha, alpha)]
            assert numerical_rank(sub) == rank


class TestRankMonotonicity:
    def test_zero_base(self):
        inst = perturbation.PsdPerturbationInstance(
            a=np.zeros((3, 3)), d=np.zeros((3, 3)), e=np.eye(3)
        )
        assert perturbation.rank_monotonicity_holds(inst)

    def test_unsymmetric_a_rejected(self):
        inst = perturbation.PsdPerturbationInstance(
            a=S_UNSYM.real + np.array([[0.0, 0.0], [0.0, 0.0]]),
            d=np.diag([1.0, 0.0]),
            e=E_UNSYM,
        )
        # Re(S_UNSYM) is not symmetric, so the precondition fires.
        with pytest.raises(PreconditionViolated):
            perturbation.rank_monotonicity_holds(inst)

    def test_counterexample_under_bypass(self):
        # With the symmetry check bypassed the inequality genuinely fails:
        # the update drops the rank from 2 to 1.
        inst = perturbation.PsdPerturbationInstance(
            a=S_UNSYM.real, d=S_UNSYM.imag, e=E_UNSYM
        )
        assert not perturbation.rank_monotonicity_holds(inst, check=False)
        assert numerical_rank(S_UNSYM) == 2
        assert numerical_rank(S_UNSYM + 1j * E_UNSYM) == 1

    def test_random_conforming_instances(self):
        result = suites.suite_rank_monotonicity(seed=3, trials=400)
        assert result.passed, result.failures[:1]
