import math

import numpy as np
import pytest

from damplab import hopf, suites
from damplab.errors import (
    AssumptionViolated,
    NormalizationFailure,
    NotAnAxisEigenvalue,
    TrackingAmbiguity,
)
from conftest import OMEGA_CASE1


class TestDampingPath:
    def test_derivative_consistency_enforced(self):
        with pytest.raises(AssumptionViolated):
            hopf.DampingPath(
                inertia=np.eye(2),
                stiffness=np.eye(2),
                damping_of=lambda g: g * np.eye(2),
                damping_derivative=lambda g: 3.0 * np.eye(2),  # wrong slope
                gamma_range=(0.0, 1.0),
            )

    def test_referenced_requires_gauge_mode(self):
        with pytest.raises(AssumptionViolated):
            hopf.DampingPath(
                inertia=np.eye(2),
                stiffness=np.eye(2),  # row sums not zero
                damping_of=lambda g: g * np.eye(2),
                gamma_range=(0.0, 1.0),
                referenced=True,
            )

    def test_fd_derivative_fallback(self):
        path = hopf.DampingPath(
            inertia=np.eye(2),
            stiffness=np.eye(2),
            damping_of=lambda g: (g**2) * np.eye(2),
            gamma_range=(0.0, 1.0),
        )
        np.testing.assert_allclose(
            path.damping_prime(0.5), np.eye(2), rtol=1e-6
        )


class TestTrackAxisCrossing:
    def test_case2_single_crossing(self, case2_path):
        crossings = hopf.track_axis_crossing(case2_path, samples=21)
        assert len(crossings) == 1
        c = crossings[0]
        assert abs(c.gamma - 0.2) <= 1e-3
        assert not c.boundary
        assert abs(c.eigenvalue.real) <= 1e-10 * abs(c.eigenvalue)

    def test_case1_boundary_crossing(self, case1_path):
        crossings = hopf.track_axis_crossing(case1_path, samples=21)
        assert len(crossings) == 1
        c = crossings[0]
        assert c.boundary and c.gamma == 0.0
        assert abs(c.omega - OMEGA_CASE1) < 1e-9

    def test_constant_damping_no_crossing(self):
        path = hopf.DampingPath(
            inertia=np.eye(3),
            stiffness=np.diag([1.0, 2.0, 3.0]),
            damping_of=lambda g: np.eye(3),
            gamma_range=(0.0, 1.0),
        )
        assert hopf.track_axis_crossing(path, samples=11) == []

    def test_coarse_grid_ambiguity(self):
        # One fast-moving branch crossing the axis plus a pair of close
        # frequencies: with two samples the continuation step exceeds half
        # the minimum gap, with a fine grid the crossing is resolved.
        stiffness = np.diag([1.0, 16.0, 17.64])

        def damping_of(g):
            return np.diag([2.0 * g - 1.0, 0.1, 0.1])

        path = hopf.DampingPath(
            inertia=np.eye(3),
            stiffness=stiffness,
            damping_of=damping_of,
            gamma_range=(0.0, 1.0),
        )
        with pytest.raises(TrackingAmbiguity):
            hopf.track_axis_crossing(path, samples=2)
        # 81 samples place the crossing exactly on a grid point; 80 make the
        # bisection produce it from a bracketing interval.
        for samples in (81, 80):
            fine = hopf.track_axis_crossing(path, samples=samples)
            assert len(fine) == 1
            assert abs(fine[0].gamma - 0.5) < 1e-8
            assert not fine[0].boundary

    def test_bad_sample_count(self):
        path = hopf.DampingPath(
            inertia=np.eye(1),
            stiffness=np.eye(1),
            damping_of=lambda g: g * np.eye(1),
            gamma_range=(0.0, 1.0),
        )
        with pytest.raises(AssumptionViolated):
            hopf.track_axis_crossing(path, samples=1)

    def test_safe_region_suite(self):
        result = suites.suite_safe_damping_region(seed=41, trials=150)
        assert result.passed, result.failures[:1]


class TestHopfConditions:
    def test_case1_certificate(self, case1_path):
        cert = hopf.hopf_conditions(
            case1_path, 0.0, omega_hint=OMEGA_CASE1, boundary=True
        )
        assert abs(cert.omega0 - OMEGA_CASE1) < 1e-9
        # eigenvalue drift per unit damping parameter is exactly -1/2
        assert abs(abs(cert.transversality) - 0.5) <= 1e-4
        assert cert.transversality < 0
        assert cert.simple
        assert cert.resonance_clear
        assert cert.boundary
        assert cert.kind == hopf.SUPERCRITICAL
        assert -2.0e-3 <= cert.l1 <= -1.2e-3
        # normalization invariant
        assert abs(np.vdot(cert.l0, cert.r0) - 1.0) <= 1e-10
        # the mode vector is the unobservable direction (1, -1, 0)
        direction = np.array([1.0, -1.0, 0.0]) / math.sqrt(2)
        assert abs(abs(np.vdot(direction, cert.v)) - 1.0) < 1e-8

    def test_case1_no_second_harmonic_resonance(self, case1_path):
        # kappa = 2 harmonic: det P(2 i omega0) well away from zero
        pencil_smin = case1_path.pencil_sigma_min(2j * OMEGA_CASE1, 0.0)
        assert pencil_smin > 1e-2

    def test_case2_certificate(self, case2_path):
        crossings = hopf.track_axis_crossing(case2_path, samples=21)
        cert = hopf.hopf_conditions(
            case2_path, crossings[0].gamma, omega_hint=crossings[0].omega
        )
        assert cert.transversality != 0
        assert cert.simple and cert.resonance_clear
        assert cert.kind == hopf.SUBCRITICAL
        assert 1.03 <= cert.l1 <= 1.27

    def test_transversality_vs_finite_difference(self, case1_path):
        # hopf_conditions raises TheoremViolation if the eigenvector
        # projection and the finite-difference derivative disagree; also
        # compare against an explicit independent finite difference here.
        cert = hopf.hopf_conditions(case1_path, 0.0, omega_hint=OMEGA_CASE1)
        h = 1e-6
        lams = []
        for g in (h, -h):
            eigs = np.linalg.eigvals(case1_path.jacobian(g))
            lams.append(eigs[np.argmin(np.abs(eigs - 1j * cert.omega0))])
        fd = (lams[0] - lams[1]) / (2 * h)
        assert abs(fd - cert.dlambda_dgamma) <= 1e-5 * abs(cert.dlambda_dgamma)

    def test_off_axis_gamma_rejected(self, case1_path):
        with pytest.raises(NotAnAxisEigenvalue):
            hopf.hopf_conditions(case1_path, 0.4)


class TestEigenvalueParameterDerivative:
    @pytest.fixture()
    def eigentriple(self):
        rng = np.random.default_rng(47)
        jac = rng.normal(size=(5, 5))
        eigs, vecs = np.linalg.eig(jac)
        idx = np.argmax(eigs.imag)
        lam = eigs[idx]
        r = vecs[:, idx]
        eigs_t, vecs_t = np.linalg.eig(jac.T)
        jdx = np.argmin(np.abs(eigs_t - np.conj(lam)))
        l = vecs_t[:, jdx]
        l = l / np.conj(np.vdot(l, r))
        return jac, lam, r, l

    def test_zero_direction(self, eigentriple):
        jac, lam, r, l = eigentriple
        val = hopf.eigenvalue_parameter_derivative(jac, np.zeros_like(jac), lam, r, l)
        assert abs(val) < 1e-12

    def test_self_direction_returns_eigenvalue(self, eigentriple):
        jac, lam, r, l = eigentriple
        val = hopf.eigenvalue_parameter_derivative(jac, jac, lam, r, l)
        assert abs(val - lam) < 1e-8 * abs(lam)

    def test_normalization_enforced(self, eigentriple):
        jac, lam, r, l = eigentriple
        with pytest.raises(NormalizationFailure):
            hopf.eigenvalue_parameter_derivative(jac, jac, lam, r, 2 * l)

    def test_matches_finite_difference_on_random_path(self, eigentriple):
        jac, lam, r, l = eigentriple
        rng = np.random.default_rng(53)
        djac = rng.normal(size=jac.shape)
        analytic = hopf.eigenvalue_parameter_derivative(jac, djac, lam, r, l)
        h = 1e-7
        lam_p = _nearest(np.linalg.eigvals(jac + h * djac), lam)
        lam_m = _nearest(np.linalg.eigvals(jac - h * djac), lam)
        fd = (lam_p - lam_m) / (2 * h)
        assert abs(fd - analytic) <= 1e-5 * max(1.0, abs(analytic))


def _nearest(eigs, lam):
    return eigs[np.argmin(np.abs(eigs - lam))]


class TestFirstLyapunovCoefficient:
    @pytest.mark.parametrize("sign", [1.0, -1.0])
    def test_cubic_normal_form_sign(self, sign):
        def rhs(z, s=sign):
            x, y = z
            r2 = x * x + y * y
            return np.array([-y + s * x * r2, x + s * y * r2])

        jac = np.array([[0.0, -1.0], [1.0, 0.0]])
        q = np.array([1.0, -1j]) / math.sqrt(2)
        p = np.array([1.0, -1j]) / math.sqrt(2)
        l1 = hopf.first_lyapunov_coefficient(
            rhs, np.zeros(2), 1.0, q, p, jac=jac
        )
        assert math.copysign(1.0, l1) == sign
        assert abs(l1) > 0.1

    def test_step_halving_stability_case1(self, case1_path):
        values = []
        scale = np.linalg.norm(case1_path.x0) + 1.0
        eps = np.finfo(float).eps
        cert = hopf.hopf_conditions(case1_path, 0.0, omega_hint=OMEGA_CASE1,
                                    compute_l1=False)
        f = case1_path.rhs_of(0.0)
        for fac in (1.0, 0.5):
            values.append(
                hopf.first_lyapunov_coefficient(
                    f, case1_path.x0, cert.omega0, cert.r0, cert.l0,
                    jac=case1_path.jacobian(0.0),
                    h2=fac * eps ** (1 / 3) * scale,
                    h3=fac * eps**0.25 * scale,
                )
            )
        assert abs(values[1] - values[0]) < 0.05 * abs(values[0])

    def test_step_halving_stability_case2(self, case2_path):
        crossings = hopf.track_axis_crossing(case2_path, samples=21)
        cert = hopf.hopf_conditions(
            case2_path, crossings[0].gamma, omega_hint=crossings[0].omega,
            compute_l1=False,
        )
        f = case2_path.rhs_of(cert.gamma0)
        scale = np.linalg.norm(case2_path.x0) + 1.0
        eps = np.finfo(float).eps
        values = [
            hopf.first_lyapunov_coefficient(
                f, case2_path.x0, cert.omega0, cert.r0, cert.l0,
                jac=case2_path.jacobian(cert.gamma0),
                h2=fac * eps ** (1 / 3) * scale,
                h3=fac * eps**0.25 * scale,
            )
            for fac in (1.0, 0.5)
        ]
        assert abs(values[1] - values[0]) < 0.05 * abs(values[0])

    def test_classify(self):
        assert hopf.classify_lyapunov(-1.0) == hopf.SUPERCRITICAL
        assert hopf.classify_lyapunov(1.0) == hopf.SUBCRITICAL
        assert hopf.classify_lyapunov(1e-7) == hopf.DEGENERATE
        assert hopf.classify_lyapunov(None) == hopf.DEGENERATE
