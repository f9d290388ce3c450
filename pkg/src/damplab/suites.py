"""Seeded randomized verification suites.

Each suite draws random conforming instances for one theorem-level claim
and checks the claim's conclusion on every draw.  Suites are deterministic
given a seed, return a :class:`SuiteResult` with serializable failure
payloads for replay, and are shared between the test suite and the CLI
``verify`` command.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _validation as val
from . import hopf, stability, swing
from .linalg import (
    classify_spectrum,
    jacobian_2n,
    matching_distance,
    pencil_eigenvalues,
)
from .perturbation import (
    PsdPerturbationInstance,
    check_inverse_imag_duality,
    psd_imag_update_nonsingular,
    rank_monotonicity_holds,
    rank_one_imag_update_nonsingular,
)

__all__ = ["SuiteResult", "run_all", "SUITES"]

DEFAULT_SEED = 20240501


@dataclass
class SuiteResult:
    name: str
    trials: int
    failures: list = field(default_factory=list)

    @property
    def passed(self):
        return not self.failures

    def record(self, **payload):
        self.failures.append(
            {k: _serialize(v) for k, v in payload.items()}
        )


def _serialize(v):
    if isinstance(v, np.ndarray):
        if np.iscomplexobj(v):
            return {"re": v.real.tolist(), "im": v.imag.tolist()}
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    return v


# -- random generators ------------------------------------------------------


def _sym(rng, n, scale=1.0):
    a = rng.normal(size=(n, n)) * scale
    return 0.5 * (a + a.T)


def _psd(rng, n, rank=None, scale=1.0):
    rank = n if rank is None else rank
    if rank == 0:
        return np.zeros((n, n))
    g = rng.normal(size=(rank, n)) * scale
    return g.T @ g


def _spd(rng, n, ridge=0.1):
    return _psd(rng, n) + ridge * np.eye(n)


def random_lossless_grid(rng, n, gamma_profile="positive"):
    """Connected lossless model with an equilibrium in the admissible set.

    Angles are drawn first and the mechanical powers set to the resulting
    flow, so the drawn angles are an exact equilibrium.
    """
    half_pi = math.pi / 2
    # random connected graph: a spanning path plus extra edges
    y = np.zeros((n, n))
    order = rng.permutation(n)
    for a, b in zip(order[:-1], order[1:]):
        y[a, b] = y[b, a] = rng.uniform(0.5, 2.0)
    extra = rng.integers(0, n)
    for _ in range(extra):
        a, b = rng.integers(0, n, size=2)
        if a != b and y[a, b] == 0:
            y[a, b] = y[b, a] = rng.uniform(0.5, 2.0)
    theta = np.full((n, n), half_pi)
    np.fill_diagonal(theta, -half_pi)
    delta = rng.uniform(-0.3, 0.3, size=n)
    if gamma_profile == "positive":
        d = rng.uniform(0.1, 2.0, size=n)
    elif gamma_profile == "one_undamped":
        d = rng.uniform(0.1, 2.0, size=n)
        d[rng.integers(0, n)] = 0.0
    else:
        d = np.zeros(n)
    model = swing.PowerGridModel(
        y_mag=y,
        theta=theta,
        voltage=rng.uniform(0.95, 1.05, size=n),
        p_mech=np.zeros(n),
        inertia_const=rng.uniform(0.5, 2.0, size=n),
        damping_coeff=d,
        omega_s=1.0,
    )
    from dataclasses import replace

    model = replace(model, p_mech=model.flow(delta))
    eq = model.equilibrium_at(delta)
    return model, eq


def random_lossy_grid(rng, n):
    """Connected lossy model whose equilibrium lies in the admissible set.

    Line angles are chosen so that both directed phase angles
    ``theta - delta_j + delta_k`` stay inside (0, pi).
    """
    delta = rng.uniform(-0.1, 0.1, size=n)
    y = np.zeros((n, n))
    theta = np.zeros((n, n))
    order = rng.permutation(n)
    edges = list(zip(order[:-1], order[1:]))
    if n == 3 and rng.random() < 0.5:
        a, b = order[0], order[2]
        edges.append((a, b))
    for a, b in edges:
        y[a, b] = y[b, a] = rng.uniform(0.5, 2.0)
        phi = rng.uniform(0.5, math.pi - 0.5)
        theta[a, b] = theta[b, a] = phi  # both directed angles stay interior
    for j in range(n):
        y[j, j] = rng.uniform(0.0, 1.0)
        theta[j, j] = rng.uniform(-math.pi / 2 + 1e-3, -0.8)
    d = rng.uniform(0.1, 2.0, size=n)
    d[rng.integers(0, n)] = 0.0
    model = swing.PowerGridModel(
        y_mag=y,
        theta=theta,
        voltage=rng.uniform(0.95, 1.05, size=n),
        p_mech=np.zeros(n),
        inertia_const=rng.uniform(0.5, 2.0, size=n),
        damping_coeff=d,
        omega_s=1.0,
    )
    from dataclasses import replace

    model = replace(model, p_mech=model.flow(delta))
    eq = model.equilibrium_at(delta)
    return model, eq


# -- suites -----------------------------------------------------------------


def suite_pencil_vs_jacobian(seed=DEFAULT_SEED, trials=200):
    """Pencil roots equal the eigenvalues of the companion Jacobian (and the
    spectrum is closed under conjugation)."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("pencil_vs_jacobian", trials)
    for k in range(trials):
        n = int(rng.integers(2, 7))
        m = _spd(rng, n)
        d = rng.normal(size=(n, n))
        l = rng.normal(size=(n, n))
        pencil = pencil_eigenvalues(m, d, l)
        direct = np.linalg.eigvals(jacobian_2n(m, d, l))
        dist = matching_distance(pencil, direct)
        scale = val.spectral_scale(direct)
        conj_dist = matching_distance(direct, np.conj(direct))
        if dist > 1e-8 * scale or conj_dist > 1e-8 * scale:
            result.record(trial=k, m=m, d=d, l=l, distance=dist,
                          conj_distance=conj_dist)
    return result


def suite_undamped_map(seed=DEFAULT_SEED, trials=200):
    """Square-root map between sigma(-M^-1 L) and the undamped spectrum."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("undamped_map", trials)
    for k in range(trials):
        n = int(rng.integers(2, 7))
        m = _spd(rng, n)
        l = _sym(rng, n)
        try:
            stability.undamped_spectral_map(m, l)
        except Exception as exc:  # TheoremViolation carries the mismatch
            result.record(trial=k, m=m, l=l, error=str(exc))
    return result


def suite_referenced_spectrum(seed=DEFAULT_SEED, trials=200):
    """Reference-bus reduction: same nonzero spectrum, inertia loses one zero."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("referenced_spectrum", trials)
    for k in range(trials):
        n = int(rng.integers(2, 7))
        model, eq = random_lossless_grid(rng, n)
        full = np.linalg.eigvals(
            model.to_second_order().jacobian_at(eq.delta0)
        )
        reduced = np.linalg.eigvals(model.referenced(eq).jacobian())
        scale = val.spectral_scale(full)
        band = 1e-7 * scale
        full_nonzero = full[np.abs(full) > band]
        dist = matching_distance(full_nonzero, reduced[np.abs(reduced) > band])
        full_report = classify_spectrum(full)
        red_report = classify_spectrum(reduced)
        inertia_ok = (
            full_report.left_count == red_report.left_count
            and full_report.axis_count == red_report.axis_count + 1
            and full_report.right_count == red_report.right_count
        )
        if dist > 1e-7 * scale or not inertia_ok:
            result.record(
                trial=k, n=n, distance=dist,
                full_inertia=list(full_report.inertia),
                reduced_inertia=list(red_report.inertia),
            )
    return result


def suite_rank_monotonicity(seed=DEFAULT_SEED, trials=2000):
    """PSD imaginary perturbations never lower the rank of A + iD."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("rank_monotonicity", trials)
    for k in range(trials):
        n = int(rng.integers(1, 9))
        style = rng.integers(0, 4)
        if style == 0:
            a = _sym(rng, n)
            d = _psd(rng, n, rank=int(rng.integers(0, n + 1)))
        elif style == 1:
            # graph-Laplacian-like A: zero row sums, so A + iD is often
            # rank deficient when D shares the kernel
            a = _sym(rng, n)
            a -= np.diag(a.sum(axis=1))
            d = _psd(rng, n, rank=int(rng.integers(0, n)))
        elif style == 2:
            # common kernel by construction
            r = int(rng.integers(0, n))
            basis = np.linalg.qr(rng.normal(size=(n, max(r, 1))))[0][:, :r]
            a = basis @ _sym(rng, r) @ basis.T if r else np.zeros((n, n))
            d = basis @ _psd(rng, r) @ basis.T if r else np.zeros((n, n))
        else:
            a = np.zeros((n, n))
            d = _psd(rng, n, rank=int(rng.integers(0, n + 1)))
        e = _psd(rng, n, rank=int(rng.integers(0, n + 1)))
        inst = PsdPerturbationInstance(a=a, d=d, e=e)
        if not rank_monotonicity_holds(inst):
            result.record(trial=k, a=a, d=d, e=e)
    return result


def suite_imag_duality(seed=DEFAULT_SEED, trials=1000):
    """Im(S) PSD iff Im(S^-1) NSD for nonsingular complex symmetric S."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("imag_duality", trials)
    done = 0
    while done < trials:
        n = int(rng.integers(1, 9))
        s = _sym(rng, n) + 1j * _psd(rng, n)
        if np.linalg.svd(s, compute_uv=False)[-1] < 1e-8:
            continue
        done += 1
        flags = check_inverse_imag_duality(s)
        if flags != (True, True):
            result.record(trial=done, s=s, flags=list(flags))
    return result


def suite_imag_updates(seed=DEFAULT_SEED, trials=1000):
    """Rank-one and PSD imaginary updates keep S nonsingular."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("imag_updates", trials)
    done = 0
    while done < trials:
        n = int(rng.integers(1, 9))
        s = _sym(rng, n) + 1j * _psd(rng, n)
        if np.linalg.svd(s, compute_uv=False)[-1] < 1e-8:
            continue
        done += 1
        v = rng.normal(size=n)
        e = _psd(rng, n, rank=int(rng.integers(0, n + 1)))
        ok_rank_one = rank_one_imag_update_nonsingular(s, v)
        ok_psd = psd_imag_update_nonsingular(s, e)
        if not (ok_rank_one and ok_psd):
            result.record(trial=done, s=s, v=v, e=e,
                          rank_one=ok_rank_one, psd=ok_psd)
    return result


def suite_observability_equivalence(seed=DEFAULT_SEED, trials=500):
    """Symmetric setting: hyperbolic iff the damping pair is observable."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("observability_equivalence", trials)
    for k in range(trials):
        n = int(rng.integers(2, 7))
        m = _spd(rng, n)
        l = _spd(rng, n)
        d = _psd(rng, n, rank=int(rng.integers(0, n + 1)))
        system = stability.SecondOrderSystem.linear(m, d, l)
        try:
            stability.hyperbolicity_symmetric(system, np.zeros(n))
        except Exception as exc:
            result.record(trial=k, m=m, d=d, l=l, error=str(exc))
    return result


def suite_damping_monotonicity(seed=DEFAULT_SEED, trials=500):
    """More PSD damping never enlarges the imaginary-axis eigenvalue set."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("damping_monotonicity", trials)
    for k in range(trials):
        n = int(rng.integers(2, 7))
        m = _sym(rng, n) + np.eye(n) * 0.1  # symmetric nonsingular, sign-free
        if abs(np.linalg.det(m)) < 1e-6:
            m += 0.5 * np.eye(n)
        l = _sym(rng, n)
        d1 = _psd(rng, n, rank=int(rng.integers(0, n + 1)))
        d2 = d1 + _psd(rng, n, rank=int(rng.integers(0, n + 1)))
        first = stability.SecondOrderSystem.linear(m, d1, l)
        second = stability.SecondOrderSystem.linear(m, d2, l)
        report = stability.monotonicity_compare(first, second, np.zeros(n))
        if not (report.damping_increase_psd and report.subset_holds):
            result.record(trial=k, m=m, l=l, d1=d1, d2=d2,
                          axis_first=report.axis_set_first,
                          axis_second=report.axis_set_second)
    return result


def suite_full_damping_stability(seed=DEFAULT_SEED, trials=500):
    """SPD inertia, damping and stiffness force a strictly stable spectrum."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("full_damping_stability", trials)
    for k in range(trials):
        n = int(rng.integers(1, 9))
        m = _spd(rng, n)
        d = _spd(rng, n, ridge=0.05)
        l = _spd(rng, n)
        if not stability.asymptotic_stability_full_damping(m, d, l):
            result.record(trial=k, m=m, d=d, l=l)
    return result


def suite_small_grid_hyperbolicity(seed=DEFAULT_SEED, trials=500):
    """Lossy 2- and 3-generator grids with one undamped generator stay
    hyperbolic beyond the structural zero."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("small_grid_hyperbolicity", trials)
    for k in range(trials):
        n = int(rng.integers(2, 4))
        model, eq = random_lossy_grid(rng, n)
        try:
            ok = swing.small_n_hyperbolicity_check(model, eq)
        except Exception as exc:
            result.record(trial=k, n=n, error=str(exc))
            continue
        if not ok:
            result.record(
                trial=k, n=n,
                y=model.y_mag, theta=model.theta,
                volt=model.voltage, pm=model.p_mech,
                inertia=model.inertia_const, damping=model.damping_coeff,
                delta0=eq.delta0,
            )
    return result


def suite_undamped_pair_family(seed=DEFAULT_SEED, peers=range(2, 7)):
    """The two-undamped-generator family always carries its imaginary pair."""
    rng = np.random.default_rng(seed)
    peers = list(peers)
    result = SuiteResult("undamped_pair_family", len(peers))
    for n in peers:
        d_tail = rng.uniform(0.1, 2.0, size=n - 1)
        try:
            m, d, l = swing.build_nonhyperbolic_family(n, d_tail)
        except Exception as exc:
            result.record(n=n, error=str(exc))
            continue
        beta = math.sqrt(1.0 + 1.0 / n)
        eigs = np.linalg.eigvals(jacobian_2n(m, d, l))
        err = max(
            np.abs(eigs - 1j * beta).min(), np.abs(eigs + 1j * beta).min()
        )
        if err > 1e-8:
            result.record(n=n, error=float(err))
    return result


def suite_lossless_criterion(seed=DEFAULT_SEED, trials=300):
    """Lossless grids: imaginary pair iff the damping pair is unobservable."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("lossless_criterion", trials)
    for k in range(trials):
        n = int(rng.integers(2, 6))
        profile = "positive" if rng.random() < 0.7 else "one_undamped"
        model, eq = random_lossless_grid(rng, n, gamma_profile=profile)
        try:
            verdict = swing.lossless_imaginary_criterion(model, eq)
        except Exception as exc:
            result.record(trial=k, n=n, error=str(exc))
            continue
        if profile == "positive" and verdict.imaginary_pair_exists:
            result.record(trial=k, n=n, error="pair under full damping")
    return result


def suite_safe_damping_region(seed=DEFAULT_SEED, trials=500):
    """PSD-increasing damping paths from a hyperbolic point never cross."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("safe_damping_region", trials)
    for k in range(trials):
        n = int(rng.integers(2, 5))
        m = _spd(rng, n)
        l = _spd(rng, n)
        d0 = _spd(rng, n, ridge=0.05)  # SPD start: hyperbolic by stability
        g = rng.normal(size=(n, n))
        growth = g.T @ g

        def damping_of(gamma, d0=d0, growth=growth):
            return d0 + gamma * growth

        path = hopf.DampingPath(
            inertia=m, stiffness=l, damping_of=damping_of,
            gamma_range=(0.0, 2.0),
        )
        crossings = hopf.track_axis_crossing(path, samples=9)
        if crossings:
            result.record(trial=k, m=m, l=l, d0=d0, growth=growth,
                          gammas=[c.gamma for c in crossings])
    return result


def suite_flow_jacobian_fd(seed=DEFAULT_SEED, trials=100):
    """Analytic flow Jacobian agrees with central finite differences."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("flow_jacobian_fd", trials)
    h = 1e-6
    for k in range(trials):
        n = int(rng.integers(2, 6))
        lossy = rng.random() < 0.5
        model, eq = (
            random_lossy_grid(rng, min(n, 3)) if lossy
            else random_lossless_grid(rng, n)
        )
        delta = eq.delta0 + rng.uniform(-0.05, 0.05, size=model.n)
        jac = model.flow_jacobian(delta)
        fd = np.zeros_like(jac)
        for i in range(model.n):
            e = np.zeros(model.n)
            e[i] = h
            fd[:, i] = (model.flow(delta + e) - model.flow(delta - e)) / (2 * h)
        err = np.abs(jac - fd).max()
        if err > 1e-6 * max(1.0, np.abs(jac).max()):
            result.record(trial=k, error=float(err))
        rowsum = np.abs(jac.sum(axis=1)).max()
        if rowsum > 1e-12 * max(1.0, np.abs(jac).max()):
            result.record(trial=k, rowsum=float(rowsum))
    return result


def suite_fold_exclusion(seed=DEFAULT_SEED, trials=200):
    """Zero is a Jacobian eigenvalue iff the stiffness matrix is singular,
    independent of damping."""
    rng = np.random.default_rng(seed)
    result = SuiteResult("fold_exclusion", trials)
    for k in range(trials):
        n = int(rng.integers(2, 7))
        m = _spd(rng, n)
        singular = bool(rng.integers(0, 2))
        if singular:
            l = _sym(rng, n)
            l -= np.diag(l.sum(axis=1))  # zero row sums
        else:
            l = _spd(rng, n)
        d = _psd(rng, n, rank=int(rng.integers(0, n + 1)))
        eigs = np.linalg.eigvals(jacobian_2n(m, d, l))
        has_zero = np.abs(eigs).min() <= 1e-7 * val.spectral_scale(eigs)
        if has_zero != singular:
            result.record(trial=k, m=m, d=d, l=l, has_zero=bool(has_zero),
                          singular=singular)
    return result


SUITES = {
    "pencil_vs_jacobian": suite_pencil_vs_jacobian,
    "undamped_map": suite_undamped_map,
    "referenced_spectrum": suite_referenced_spectrum,
    "rank_monotonicity": suite_rank_monotonicity,
    "imag_duality": suite_imag_duality,
    "imag_updates": suite_imag_updates,
    "observability_equivalence": suite_observability_equivalence,
    "damping_monotonicity": suite_damping_monotonicity,
    "full_damping_stability": suite_full_damping_stability,
    "small_grid_hyperbolicity": suite_small_grid_hyperbolicity,
    "undamped_pair_family": suite_undamped_pair_family,
    "lossless_criterion": suite_lossless_criterion,
    "safe_damping_region": suite_safe_damping_region,
    "flow_jacobian_fd": suite_flow_jacobian_fd,
    "fold_exclusion": suite_fold_exclusion,
}


def run_all(seed=DEFAULT_SEED, scale=1.0):
    """Run every suite with trial counts scaled by ``scale``; returns results in order."""
    results = []
    for name, fn in SUITES.items():
        if name == "undamped_pair_family":
            results.append(fn(seed=seed))
            continue
        import inspect

        default_trials = inspect.signature(fn).parameters["trials"].default
        trials = max(1, int(default_trials * scale))
        results.append(fn(seed=seed, trials=trials))
    return results
