"""Batch command-line front end.

Commands
--------
``spectrum``   eigenvalues, inertia triple and hyperbolicity verdict of a
               grid model at one damping value (exit 2 when non-hyperbolic).
``hopf-scan``  damping sweep: eigenvalue locus CSV plus one certificate JSON
               per axis crossing.
``simulate``   time-domain integration of the referenced model, optional
               Poincare cycle search; trajectory CSV and cycle JSON.
``verify``     seeded randomized suites for every implemented theorem-level
               claim (exit 3 on any failure, with the failing instance
               serialized for replay).
``reduce``     referenced-model export (equilibrium, Jacobian, spectra).

The verbosity of progress logging is controlled by the ``DAMPLAB_LOG``
environment variable (``debug``, ``info``, default ``warning``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile

import numpy as np

from . import __version__, hopf, simulate, suites, swing
from ._validation import TOL_AXIS
from .errors import (
    CycleNotFound,
    DampLabError,
    StepSizeUnderflow,
    TrackingAmbiguity,
)
from .linalg import classify_spectrum

log = logging.getLogger("damplab")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NONHYPERBOLIC = 2
EXIT_PROPERTY_FAILURE = 3


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".damplab-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _fmt_complex(z):
    return f"{z.real:+.6f}{z.imag:+.6f}i"


def _parse_range(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected gamma range as lo:hi:samples")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 2 or not lo < hi:
        raise argparse.ArgumentTypeError("need lo < hi and samples >= 2")
    return lo, hi, n


def _load(args, gamma=None):
    mfile = swing.load_grid_model(args.model)
    if gamma is None:
        gamma = getattr(args, "gamma", None)
    model = mfile.model(gamma)
    return mfile, model


def _equilibrium(mfile, model, args):
    if getattr(args, "initial_state", None):
        guess = np.asarray(args.initial_state, dtype=float)
    elif mfile.delta_guess is not None:
        guess = np.asarray(mfile.delta_guess, dtype=float)
    else:
        guess = np.zeros(model.n)
    if guess.shape != (model.n,):
        raise DampLabError(
            f"equilibrium guess needs {model.n} angles, got {guess.size}"
        )
    return model.solve_equilibrium(guess)


def _nonzero_axis(report):
    band = report.tol_axis * report.scale
    return [z for z in report.axis_set if abs(z.imag) > band]


def cmd_spectrum(args):
    mfile, model = _load(args)
    eq = _equilibrium(mfile, model, args)
    system = model.to_second_order()
    report = classify_spectrum(
        np.linalg.eigvals(system.jacobian_at(eq.delta0)), args.tol_axis
    )
    print(f"model: {args.model}")
    print(f"equilibrium angles: {np.array2string(eq.delta0, precision=6)}")
    print(f"residual: {eq.residual:.3e}   admissible-set member: {eq.in_omega}")
    print(f"lossless: {model.is_lossless()}")
    print("eigenvalues:")
    for z in sorted(report.eigenvalues, key=lambda z: (z.real, z.imag)):
        print(f"  {_fmt_complex(z)}")
    print(f"inertia (left, axis, right): {report.inertia}")

    nonzero_axis = _nonzero_axis(report)
    hyperbolic = not nonzero_axis
    print(f"hyperbolic beyond the structural zero: {hyperbolic}")

    if model.is_lossless() and eq.in_omega:
        verdict = swing.lossless_imaginary_criterion(
            model, eq, tol_axis=args.tol_axis
        )
        for w in verdict.witnesses:
            vec = np.array2string(np.real_if_close(w.vector), precision=4)
            print(
                f"unobservable mode: eigenvalue {w.eigenvalue.real:.6f}, "
                f"vector {vec}, damping residual {w.residual:.2e}"
            )
        if verdict.witnesses:
            repairs = swing.damping_repair_suggestion(model, eq, verdict.witnesses)
            print(f"damping repair suggestion: generators {[j + 1 for j in repairs]}")

    if args.out:
        payload = {
            "eigenvalues": [{"re": z.real, "im": z.imag} for z in report.eigenvalues],
            "inertia": list(report.inertia),
            "hyperbolic_beyond_structural_zero": hyperbolic,
            "equilibrium": eq.delta0.tolist(),
            "in_omega": eq.in_omega,
            "tol_axis": args.tol_axis,
            "gamma": getattr(args, "gamma", None),
        }
        _atomic_write(args.out, json.dumps(payload, indent=2) + "\n")
    return EXIT_OK if hyperbolic else EXIT_NONHYPERBOLIC


def _grid_damping_path(mfile, model, eq, gamma_range):
    """Referenced damping path over the model file's gamma placeholders.

    Without placeholders the path is constant in the parameter, which is a
    legitimate (crossing-free) scan.
    """
    mask = np.array(
        [1.0 if entry == "gamma" else 0.0 for entry in mfile.damping_spec]
    )
    system = model.to_second_order()
    stiffness = system.jac(eq.delta0)

    def damping_of(g):
        return np.diag(mfile.damping_vector(g)) / model.omega_s

    def damping_derivative(g):
        return np.diag(mask) / model.omega_s

    def rhs_of(g):
        frozen = model.with_damping(mfile.damping_vector(g))
        ref = frozen.referenced(eq)
        return lambda x: ref.rhs(0.0, x)

    ref0 = model.referenced(eq)
    return hopf.DampingPath(
        inertia=system.inertia,
        stiffness=stiffness,
        damping_of=damping_of,
        damping_derivative=damping_derivative,
        gamma_range=gamma_range[:2],
        referenced=True,
        rhs_of=rhs_of,
        x0=ref0.equilibrium_state,
    )


def cmd_hopf_scan(args):
    mfile, model = _load(args, gamma=args.gamma_range[0])
    eq = _equilibrium(mfile, model, args)
    lo, hi, samples = args.gamma_range
    path = _grid_damping_path(mfile, model, eq, (lo, hi))

    grid = np.linspace(lo, hi, samples)
    locus_rows = ["gamma,branch,re,im"]
    for g in grid:
        eigs = np.linalg.eigvals(path.jacobian(g))
        upper = sorted(
            (z for z in eigs if z.imag > 1e-9), key=lambda z: z.imag
        )
        for branch, z in enumerate(upper):
            locus_rows.append(f"{g:.10g},{branch},{z.real:.12g},{z.imag:.12g}")

    try:
        crossings = hopf.track_axis_crossing(path, samples=samples)
    except TrackingAmbiguity as exc:
        print(f"error: {exc}", file=sys.stderr)
        print("hint: increase the sample count in --gamma-range", file=sys.stderr)
        return EXIT_ERROR

    certificates = []
    for crossing in crossings:
        cert = hopf.hopf_conditions(
            path, crossing.gamma, omega_hint=crossing.omega,
            boundary=crossing.boundary,
        )
        certificates.append(cert)
        print(
            f"crossing: gamma0 = {cert.gamma0:.6f}  omega0 = {cert.omega0:.6f}"
            f"{'  (range boundary)' if cert.boundary else ''}"
        )
        print(
            f"  transversal drift Re(dxi/dgamma) = {cert.transversality:+.6f}  "
            f"simple: {cert.simple}  resonance-free (k <= {cert.resonance_kmax}): "
            f"{cert.resonance_clear}"
        )
        if cert.l1 is not None:
            print(f"  first Lyapunov coefficient = {cert.l1:+.6g}  -> {cert.kind}")

    if not certificates:
        print("no axis crossings in the scanned range")

    out_dir = args.out or "."
    locus_path = os.path.join(out_dir, "locus.csv")
    _atomic_write(locus_path, "\n".join(locus_rows) + "\n")
    cert_path = os.path.join(out_dir, "certificates.json")
    payload = [
        {
            "gamma0": c.gamma0,
            "omega0": c.omega0,
            "boundary": c.boundary,
            "transversality": c.transversality,
            "dlambda_dgamma": {"re": c.dlambda_dgamma.real,
                               "im": c.dlambda_dgamma.imag},
            "simple": c.simple,
            "eigenvalue_gap": c.eigenvalue_gap,
            "resonance_clear": c.resonance_clear,
            "resonance_kmax": c.resonance_kmax,
            "l1": c.l1,
            "kind": c.kind,
            "mode_vector": {"re": c.v.real.tolist(), "im": c.v.imag.tolist()},
        }
        for c in certificates
    ]
    _atomic_write(cert_path, json.dumps(payload, indent=2) + "\n")
    print(f"wrote {locus_path} and {cert_path}")
    return EXIT_OK


def cmd_simulate(args):
    mfile, model = _load(args)
    eq = _equilibrium(mfile, model, args)
    ref = model.referenced(eq)
    x_eq = ref.equilibrium_state

    if args.state:
        x0 = np.asarray(args.state, dtype=float)
        if x0.shape != (ref.dim,):
            raise DampLabError(
                f"referenced state needs {ref.dim} components, got {x0.size}"
            )
    else:
        eigs, vecs = np.linalg.eig(ref.jacobian())
        upper = np.where(eigs.imag > 1e-9)[0]
        idx = (
            upper[np.argmax([eigs[i].real for i in upper])]
            if upper.size
            else np.argmax(eigs.real)
        )
        mode = np.real(vecs[:, idx])
        mode /= max(np.linalg.norm(mode), 1e-300)
        x0 = x_eq + args.kick * mode

    t0, t1 = args.t_span
    section = None
    cycle = None
    if args.cycle_search:
        eigs, vecs = np.linalg.eig(ref.jacobian())
        idx = np.argmax(eigs.imag)
        section = simulate.hopf_section(x_eq, vecs[:, idx])
        try:
            cycle = simulate.poincare_cycle_search(
                ref.rhs, section, x0, equilibrium=x_eq,
                rtol=args.rtol, atol=args.atol,
            )
        except (CycleNotFound, DampLabError) as exc:
            print(f"cycle search: not found ({exc})")

    try:
        traj = simulate.integrate(
            ref.rhs, x0, (t0, t1), rtol=args.rtol, atol=args.atol,
            section=section,
        )
    except StepSizeUnderflow as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    classification = simulate.classify_orbit(traj, x_eq)
    print(f"integrated t = [{t0:g}, {t1:g}] with {traj.times.size} samples")
    print(f"orbit classification: {classification}")
    if cycle is not None:
        print(
            f"cycle: period = {cycle.period:.6f}, amplitude = "
            f"{cycle.amplitude:.6f}, {cycle.stability_hint}, "
            f"return error = {cycle.return_error:.2e}"
        )

    n = model.n
    header = (
        ["t"]
        + [f"psi_{j + 1}" for j in range(n - 1)]
        + [f"omega_{j + 1}" for j in range(n)]
        + ["crossing"]
    )
    crossing_times = {c.time for c in traj.event_log}
    rows = [",".join(header)]
    for t, state in zip(traj.times, traj.states):
        cells = [f"{t:.10g}"] + [f"{x:.12g}" for x in state] + ["0"]
        rows.append(",".join(cells))
    for c in traj.event_log:
        cells = [f"{c.time:.10g}"] + [f"{x:.12g}" for x in c.state] + ["1"]
        rows.append(",".join(cells))

    out_dir = args.out or "."
    traj_path = os.path.join(out_dir, "trajectory.csv")
    _atomic_write(traj_path, "\n".join(rows) + "\n")
    summary = {
        "classification": classification,
        "samples": int(traj.times.size),
        "t_span": [t0, t1],
        "cycle": None
        if cycle is None
        else {
            "period": cycle.period,
            "anchor_state": cycle.anchor_state.tolist(),
            "return_error": cycle.return_error,
            "stability_hint": cycle.stability_hint,
            "amplitude": cycle.amplitude,
        },
    }
    summary_path = os.path.join(out_dir, "summary.json")
    _atomic_write(summary_path, json.dumps(summary, indent=2) + "\n")
    print(f"wrote {traj_path} and {summary_path}")
    return EXIT_OK


def cmd_verify(args):
    results = suites.run_all(seed=args.seed, scale=args.scale)
    any_failed = False
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name:30s} trials = {res.trials:5d}  {status}")
        if not res.passed:
            any_failed = True
    if any_failed:
        dump = {
            res.name: res.failures for res in results if not res.passed
        }
        out_path = os.path.join(args.out or ".", "verify_failures.json")
        _atomic_write(out_path, json.dumps(dump, indent=2) + "\n")
        print(f"FAILURES dumped to {out_path}", file=sys.stderr)
        return EXIT_PROPERTY_FAILURE
    print(f"all suites passed (seed = {args.seed})")
    return EXIT_OK


def cmd_reduce(args):
    mfile, model = _load(args)
    eq = _equilibrium(mfile, model, args)
    ref = model.referenced(eq)
    full_report = classify_spectrum(
        np.linalg.eigvals(model.to_second_order().jacobian_at(eq.delta0))
    )
    reduced_eigs = np.linalg.eigvals(ref.jacobian())
    reduced_report = classify_spectrum(reduced_eigs)
    payload = {
        "n": model.n,
        "equilibrium_angles": eq.delta0.tolist(),
        "referenced_equilibrium": ref.equilibrium_state.tolist(),
        "jacobian": ref.jacobian().tolist(),
        "eigenvalues": [{"re": z.real, "im": z.imag} for z in reduced_eigs],
        "inertia_full": list(full_report.inertia),
        "inertia_reduced": list(reduced_report.inertia),
    }
    text = json.dumps(payload, indent=2) + "\n"
    if args.out:
        _atomic_write(args.out, text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="damplab",
        description="Equilibrium stability and Hopf bifurcation analysis "
        "of swing-equation power-grid models.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_model(p):
        p.add_argument("model", help="grid model JSON file")
        p.add_argument(
            "--initial-state", type=float, nargs="+", default=None,
            help="equilibrium guess angles (radians)",
        )
        p.add_argument("--out", default=None, help="output file or directory")

    p = sub.add_parser("spectrum", help="eigenvalues and hyperbolicity verdict")
    add_model(p)
    p.add_argument("--gamma", type=float, default=None,
                   help="value for 'gamma' damping placeholders")
    p.add_argument("--tol-axis", type=float, default=TOL_AXIS)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("hopf-scan", help="damping sweep with Hopf certificates")
    add_model(p)
    p.add_argument("--gamma-range", type=_parse_range, required=True,
                   metavar="LO:HI:SAMPLES")
    p.set_defaults(func=cmd_hopf_scan)

    p = sub.add_parser("simulate", help="integrate the referenced model")
    add_model(p)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--state", type=float, nargs="+", default=None,
                   help="initial referenced state (psi_1.. omega_1..)")
    p.add_argument("--kick", type=float, default=1e-2,
                   help="mode kick amplitude when --state is omitted")
    p.add_argument("--t-span", type=float, nargs=2, default=(0.0, 100.0))
    p.add_argument("--rtol", type=float, default=simulate.RTOL)
    p.add_argument("--atol", type=float, default=simulate.ATOL)
    p.add_argument("--cycle-search", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="run the randomized verification suites")
    p.add_argument("--seed", type=int, default=suites.DEFAULT_SEED)
    p.add_argument("--scale", type=float, default=1.0,
                   help="multiplier on per-suite trial counts")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reduce", help="export the referenced model")
    add_model(p)
    p.add_argument("--gamma", type=float, default=None)
    p.set_defaults(func=cmd_reduce)

    return parser


def main(argv=None):
    level = os.environ.get("DAMPLAB_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DampLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
