"""Command-line entry points: simulate, continuation, verify."""
import argparse
import sys

import numpy as np

from .config import parse_config
from .errors import ConfigError, SimulationError


def _progress(msg):
    print(f"[polymach] {msg}", flush=True)


def _cmd_simulate(cfg, args):
    from .harness import simulate
    run = simulate(cfg, progress=_progress)
    print(f"[polymach] finished {run.label}: {run.n_steps} steps, dt = {run.dt:.3e}")
    print(f"[polymach] mass drift {run.mass_drift:.3e}, "
          f"polymer mass drift {run.polymer_mass_drift:.3e}")
    if run.ledger.times:
        ok = run.ledger.monitor_holds
        print(f"[polymach] energy monitor: {'PASS' if ok else 'FAIL'}")
        return 0 if ok else 1
    return 0


def _cmd_continuation(cfg, args):
    from .harness import run_continuation
    report = run_continuation(cfg, threads=args.threads, progress=_progress)
    header, rows = report.table()
    print("[polymach] " + ", ".join(header))
    for row in rows:
        print("[polymach] " + ", ".join("" if v is None else str(v) for v in row))
    failed = [r for r in report.runs.values() if r.status != "ok"]
    return 1 if failed else 0


def _cmd_verify(cfg, args):
    """Configuration-space and projection identity suites."""
    from .fene import maxwellian_gradient_identity_check, verify_assumptions
    from .fokker_planck import ConfigDistribution, kramers_identity_check
    from .acoustics import helmholtz_project, weak_divergence_residual
    from .harness import build_problem

    params, grid, maxwellian, basis = build_problem(cfg)
    checks = []

    qgrid = maxwellian.grid
    norm = abs(float(np.sum(qgrid.volume * maxwellian.values)) - 1.0)
    checks.append(("maxwellian normalisation", norm, 1e-10))

    report = verify_assumptions(maxwellian, maxwellian.potentials)
    for s in report.springs:
        checks.append((f"spring {s.spring} decay exponent fit "
                       f"(theta = {s.theta_fit:.4f}, expected {s.theta_expected:.4f})",
                       abs(s.theta_fit - s.theta_expected) / s.theta_expected, 0.05))
        checks.append((f"spring {s.spring} force bounds "
                       f"(c3 = {s.c3:.4f}, c4 = {s.c4:.4f})",
                       0.0 if s.force_bounds_ok else 1.0, 0.5))
        checks.append((f"spring {s.spring} moment integral ({s.u3_integral:.4f})",
                       0.0 if s.moments_ok else 1.0, 0.5))

    grad_resid = maxwellian_gradient_identity_check(maxwellian, maxwellian.potentials)
    checks.append(("maxwellian gradient identity", grad_resid, 0.5))

    dist = ConfigDistribution(np.ones((1, 1) + qgrid.shape), maxwellian, grid)
    tests = [
        ("phi = 1", lambda qx, qy: np.ones_like(qx), lambda qx, qy: (0.0 * qx, 0.0 * qy)),
        ("phi = |q|^2", lambda qx, qy: qx**2 + qy**2, lambda qx, qy: (2 * qx, 2 * qy)),
        ("phi = q_x", lambda qx, qy: qx, lambda qx, qy: (np.ones_like(qx), 0.0 * qy)),
    ]
    for name, phi, dphi in tests:
        checks.append((f"kramers identity, {name}",
                       kramers_identity_check(dist, phi, dphi), 1e-8))

    rng = np.random.default_rng(7)
    worst_idem = worst_orth = worst_div = 0.0
    for _ in range(5):
        v = rng.standard_normal((grid.nx, grid.ny, 2))
        w = rng.standard_normal((grid.nx, grid.ny, 2))
        h, h_perp, _ = helmholtz_project(v, basis)
        h2, _, _ = helmholtz_project(h, basis)
        worst_idem = max(worst_idem, float(np.abs(h2 - h).max()))
        _, wp, _ = helmholtz_project(w, basis)
        worst_orth = max(worst_orth, abs(grid.integrate(np.sum(h * wp, axis=-1))))
        worst_div = max(worst_div, weak_divergence_residual(h, basis))
    checks.append(("projection idempotency", worst_idem, 1e-10))
    checks.append(("projection orthogonality", worst_orth, 1e-10))
    checks.append(("projection weak divergence", worst_div, 1e-10))

    failed = 0
    for name, value, tol in checks:
        ok = value <= tol
        failed += not ok
        print(f"[verify] {'PASS' if ok else 'FAIL'}  {name}: {value:.3e} "
              f"(tolerance {tol:.1e})")
    print(f"[verify] {len(checks) - failed}/{len(checks)} checks passed")
    return 1 if failed else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="polymach",
        description="Compressible polymeric-fluid solver with a Mach-number "
                    "continuation harness.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "single run at the configured Mach number"),
        ("continuation", "Mach continuation against the incompressible reference"),
        ("verify", "configuration-space and projection identity suites"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="path to the run-configuration file")
        p.add_argument("--threads", type=int, default=1,
                       help="independent runs executed concurrently")
        p.add_argument("--output-dir", default=None,
                       help="override the configured output directory")

    args = parser.parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"[polymach] configuration error: {exc}", file=sys.stderr)
        return 2
    if args.output_dir is not None:
        cfg.directory = args.output_dir
    try:
        if args.command == "simulate":
            return _cmd_simulate(cfg, args)
        if args.command == "continuation":
            return _cmd_continuation(cfg, args)
        return _cmd_verify(cfg, args)
    except SimulationError as exc:
        print(f"[polymach] simulation error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
