"""Experiment driver: well-prepared data, single runs and Mach continuation."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fokker_planck as fp
from .acoustics import (AcousticTrace, acoustic_residual, helmholtz_project,
                        mode_coefficients, neumann_eigenbasis)
from .coupled import CoupledIntegrator, CoupledState, EnergyLedger
from .errors import ConfigError, SimulationError
from .fene import QGrid, BallGrid, SpringPotential, build_maxwellian
from .fluid import FluidState
from .grid import Grid2D
from .output import (ensure_dir, write_acoustic_csv, write_field_dump,
                     write_ledger_csv, write_report_csv)
from .parameters import validate

METRIC_FLOOR = 1e-9      # orders are only meaningful well above solver tolerance

RECIPES = ("equilibrium", "acoustic", "baseline")


def essential_residual_split(rho, params):
    """Cell fractions of density inside/outside [rho_bar/2, 2 rho_bar]."""
    rho = np.asarray(rho)
    ess = float(np.mean((rho >= 0.5 * params.rho_bar) & (rho <= 2.0 * params.rho_bar)))
    return ess, 1.0 - ess


def taylor_green_velocity(grid, amplitude):
    """Solenoidal stream-function field with zero normal trace on the walls."""
    u = np.empty((grid.nx, grid.ny, 2))
    u[:, :, 0] = amplitude * np.sin(np.pi * grid.X) * np.cos(np.pi * grid.Y)
    u[:, :, 1] = -amplitude * np.cos(np.pi * grid.X) * np.sin(np.pi * grid.Y)
    return u


def well_prepared_init(recipe, amplitude, params, grid, maxwellian):
    """Build a well-prepared coupled state for the given recipe.

    The density is rho_bar + eps * r0 with a mean-zero bounded r0, the
    velocity is a solenoidal stream-function field with zero normal trace,
    and psi_hat is a nonnegative finite-entropy perturbation of equilibrium
    that vanishes at the configuration rim.
    """
    if recipe not in RECIPES:
        raise ConfigError(f"unknown initial-data recipe {recipe!r}; "
                          f"choose from {RECIPES}")
    qgrid = maxwellian.grid
    r0 = np.zeros((grid.nx, grid.ny))
    u0 = np.zeros((grid.nx, grid.ny, 2))
    psi0 = np.ones((grid.nx, grid.ny) + qgrid.shape)
    if recipe == "acoustic":
        r0 = amplitude * np.cos(np.pi * grid.X)
    elif recipe == "baseline":
        r0 = amplitude * np.cos(np.pi * grid.X)
        u0 = taylor_green_velocity(grid, amplitude)
        gx = np.cos(np.pi * grid.X) * np.cos(np.pi * grid.Y)
        ball = qgrid.balls[0]
        hq = 1.0 - (ball.r[:, None] ** 2 / ball.b) * np.ones(ball.n_angular)
        bump = np.multiply.outer(gx, hq)
        for extra in qgrid.balls[1:]:
            bump = np.multiply.outer(
                bump, 1.0 - (extra.r[:, None] ** 2 / extra.b) * np.ones(extra.n_angular))
        psi0 = np.maximum(1.0 + amplitude * bump, 0.0)

    rho0 = params.rho_bar + params.epsilon * r0
    if rho0.min() <= 0:
        raise ConfigError("amplitude makes the initial density nonpositive")
    m0 = rho0[:, :, None] * u0
    fluid = FluidState(rho0, m0, grid, 0.0)
    dist = fp.ConfigDistribution(psi0, maxwellian, grid, 0.0)
    rho_p = fp.number_density(dist)
    tau = fp.tau1(dist, params)
    return CoupledState(fluid, dist, rho_p, tau, 0.0)


# --------------------------------------------------------------------------
# problem assembly
# --------------------------------------------------------------------------

def build_problem(cfg, epsilon=None):
    params = cfg.params(epsilon)
    report = validate(params)
    if not report.ok:
        raise ConfigError("invalid model parameters: " + "; ".join(report.violations))
    grid = Grid2D(cfg.cells)
    qgrid = QGrid([BallGrid(b, cfg.q_radial, cfg.q_angular) for b in params.b])
    potentials = [SpringPotential(b) for b in params.b]
    maxwellian = build_maxwellian(potentials, qgrid)
    basis = neumann_eigenbasis(grid, grid.nx - 1)
    return params, grid, maxwellian, basis


# --------------------------------------------------------------------------
# single run
# --------------------------------------------------------------------------

@dataclass
class RunResult:
    label: str
    epsilon: float
    status: str = "ok"
    fail_reason: str = ""
    ledger: EnergyLedger = None
    trace: AcousticTrace = None
    sample_times: np.ndarray = None
    u_samples: np.ndarray = None
    rho_samples: np.ndarray = None
    rho_p_samples: np.ndarray = None
    sup_rho_dev: float = 0.0
    divu_l2l2: float = 0.0
    mass_drift: float = 0.0
    polymer_mass_drift: float = 0.0
    ess_fraction_min: float = 1.0
    res_fraction_max: float = 0.0
    mode_results: list = field(default_factory=list)
    n_steps: int = 0
    dt: float = 0.0


def _plan_steps(dt_target, t_final, n_samples):
    """Uniform dt that lands exactly on the n_samples + 1 sample times."""
    per_window = max(1, math.ceil(t_final / (dt_target * n_samples)))
    n_steps = n_samples * per_window
    return n_steps, t_final / n_steps, per_window


def _run_loop(integrator, state, cfg, mode, basis, label, epsilon):
    """Advance one run to t_final collecting ledger, trace and samples.

    mode is 'coupled', 'fluid' (polymer switched off) or 'incompressible'.
    """
    grid = integrator.grid
    params = integrator.params
    polymer = mode != "fluid"

    if mode == "coupled":
        dt_bound = integrator.stable_dt(state)
    elif mode == "fluid":
        dt_bound = integrator.fluid.stable_dt(state.fluid)
    else:
        u = state.fluid.m / params.rho_bar
        grad_u = grid.velocity_gradient(u)
        rate_adv = np.abs(u[:, :, 0]).max() / grid.hx + np.abs(u[:, :, 1]).max() / grid.hy
        rate_visc = 2.0 * (2.0 * params.mu_s / params.rho_bar) \
            * (1.0 / grid.hx**2 + 1.0 / grid.hy**2)
        dt_bound = min(1.0 / max(rate_adv + rate_visc, 1e-300),
                       integrator.fp.stable_dt(u, grad_u))

    n_steps, dt, per_window = _plan_steps(cfg.dt_safety * dt_bound, cfg.t_final,
                                          cfg.n_samples)
    result = RunResult(label=label, epsilon=epsilon, n_steps=n_steps, dt=dt)
    result.ledger = EnergyLedger()
    result.trace = AcousticTrace(modes=list(cfg.acoustic_modes),
                                 lam=np.array([np.pi**2 * (k**2 + l**2)
                                               for (k, l) in cfg.acoustic_modes]))
    ns = cfg.n_samples
    result.sample_times = np.linspace(0.0, cfg.t_final, ns + 1)
    result.u_samples = np.zeros((ns + 1, grid.nx, grid.ny, 2))
    result.rho_samples = np.zeros((ns + 1, grid.nx, grid.ny))
    result.rho_p_samples = np.zeros((ns + 1, grid.nx, grid.ny))

    mass0 = grid.integrate(state.fluid.rho)
    pmass0 = grid.integrate(state.rho_p.values)
    divu_sq = 0.0

    def record(step_index):
        nonlocal divu_sq
        t = state.time
        u = state.fluid.velocity
        integrator.energy_ledger_update(state, result.ledger, polymer=polymer)
        dev = grid.l2_norm(state.fluid.rho - params.rho_bar)
        result.sup_rho_dev = max(result.sup_rho_dev, dev)
        if step_index > 0:
            divu_sq += dt * grid.l2_norm(grid.divergence(u)) ** 2
        ess, res = essential_residual_split(state.fluid.rho, params)
        result.ess_fraction_min = min(result.ess_fraction_min, ess)
        result.res_fraction_max = max(result.res_fraction_max, res)
        result.mass_drift = max(result.mass_drift,
                                abs(grid.integrate(state.fluid.rho) - mass0) / abs(mass0))
        result.polymer_mass_drift = max(
            result.polymer_mass_drift,
            abs(grid.integrate(state.rho_p.values) - pmass0) / abs(pmass0))
        if step_index % cfg.stride == 0 or step_index == n_steps:
            b_row, a_row = mode_coefficients(state.fluid, basis, params,
                                             modes=cfg.acoustic_modes)
            result.trace.append(t, b_row, a_row)
        if step_index % per_window == 0:
            s = step_index // per_window
            result.u_samples[s] = u
            result.rho_samples[s] = state.fluid.rho
            result.rho_p_samples[s] = state.rho_p.values

    record(0)
    for n in range(1, n_steps + 1):
        if mode == "coupled":
            state = integrator.coupled_step(state, dt)
        elif mode == "incompressible":
            state = integrator.incompressible_step(state, dt)
        else:
            fluid = integrator.fluid.fluid_step(state.fluid, None, None, dt)
            state = CoupledState(fluid, state.dist, state.rho_p, state.tau, fluid.time)
        record(n)

    result.divu_l2l2 = float(np.sqrt(divu_sq))
    if mode != "incompressible":
        try:
            result.mode_results = acoustic_residual(result.trace, params)
        except SimulationError:
            result.mode_results = []
    return result, state


# --------------------------------------------------------------------------
# continuation experiment
# --------------------------------------------------------------------------

@dataclass
class ConvergenceReport:
    epsilons: list
    runs: dict                     # epsilon -> RunResult
    reference: RunResult
    modes: list
    metrics: dict = field(default_factory=dict)
    orders: dict = field(default_factory=dict)

    METRIC_KEYS = ("sup_rho_l2", "div_u_l2l2", "u_vs_ref_l2l2", "rho_p_vs_ref_l2l2")

    def finalize(self):
        for key in self.METRIC_KEYS:
            self.orders[key] = [None] * len(self.epsilons)
        for i in range(1, len(self.epsilons)):
            e_prev, e_cur = self.epsilons[i - 1], self.epsilons[i]
            for key in self.METRIC_KEYS:
                m_prev = self.metrics.get((e_prev, key))
                m_cur = self.metrics.get((e_cur, key))
                if m_prev is None or m_cur is None:
                    continue
                if m_prev > 10 * METRIC_FLOOR and m_cur > 10 * METRIC_FLOOR:
                    self.orders[key][i] = (math.log(m_prev / m_cur)
                                           / math.log(e_prev / e_cur))

    def table(self):
        header = ["epsilon", "status", "fail_reason", "sup_rho_l2", "div_u_l2l2",
                  "u_vs_ref_l2l2", "rho_p_vs_ref_l2l2", "mass_drift",
                  "polymer_mass_drift", "ess_fraction_min", "res_fraction_max",
                  "energy_monitor_ok"]
        for (k, l) in self.modes:
            header += [f"omega_fit_{k}_{l}", f"omega_theory_{k}_{l}"]
        for key in self.METRIC_KEYS:
            header.append(f"order_{key}")
        rows = []
        for i, eps in enumerate(self.epsilons):
            run = self.runs[eps]
            row = [eps, run.status, run.fail_reason or ""]
            for key in self.METRIC_KEYS:
                row.append(self.metrics.get((eps, key)))
            row += [run.mass_drift, run.polymer_mass_drift,
                    run.ess_fraction_min, run.res_fraction_max,
                    int(run.ledger.monitor_holds) if run.ledger and run.ledger.times else ""]
            fits = {m.mode: m for m in (run.mode_results or [])}
            for (k, l) in self.modes:
                m = fits.get((k, l))
                row += [m.omega_fit if m else None, m.omega_theory if m else None]
            for key in self.METRIC_KEYS:
                row.append(self.orders[key][i])
            rows.append(row)
        return header, rows


def _eps_tag(eps):
    return f"{eps:g}"


def run_continuation(cfg, threads=1, progress=None):
    """Run the incompressible reference and one compressible run per epsilon.

    Every run consumes the same well-prepared velocity and configuration
    data; failures abort their own epsilon and are recorded in the report.
    """
    out = ensure_dir(cfg.directory)
    from .config import echo_config
    echo_config(cfg, out / "effective_config.ini")

    params0, grid, maxwellian, basis = build_problem(cfg)
    mode = "coupled" if cfg.polymer else "fluid"

    def reference_job():
        integ = CoupledIntegrator(params0, grid, maxwellian, basis)
        init = well_prepared_init(cfg.recipe, cfg.amplitude, params0, grid, maxwellian)
        ref_init = CoupledState(
            FluidState(np.full((grid.nx, grid.ny), params0.rho_bar),
                       init.fluid.m.copy(), grid, 0.0),
            init.dist, init.rho_p, init.tau, 0.0)
        return _run_loop(integ, ref_init, cfg, "incompressible", basis,
                         "incompressible reference", cfg.epsilon)[0]

    def eps_job(eps):
        params = cfg.params(eps)
        integ = CoupledIntegrator(params, grid, maxwellian, basis)
        init = well_prepared_init(cfg.recipe, cfg.amplitude, params, grid, maxwellian)
        try:
            run, _ = _run_loop(integ, init, cfg, mode, basis,
                               f"epsilon={_eps_tag(eps)}", eps)
        except SimulationError as exc:
            run = RunResult(label=f"epsilon={_eps_tag(eps)}", epsilon=eps,
                            status="failed", fail_reason=str(exc))
        return run

    if progress:
        progress("running incompressible reference")
    reference = reference_job()

    runs = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {eps: pool.submit(eps_job, eps) for eps in cfg.epsilon_list}
            for eps in cfg.epsilon_list:
                runs[eps] = futures[eps].result()
    else:
        for eps in cfg.epsilon_list:
            if progress:
                progress(f"running epsilon = {_eps_tag(eps)}")
            runs[eps] = eps_job(eps)

    report = ConvergenceReport(epsilons=list(cfg.epsilon_list), runs=runs,
                               reference=reference, modes=list(cfg.acoustic_modes))
    dt_sample = cfg.t_final / cfg.n_samples
    for eps, run in runs.items():
        if run.status != "ok":
            continue
        report.metrics[(eps, "sup_rho_l2")] = run.sup_rho_dev
        report.metrics[(eps, "div_u_l2l2")] = run.divu_l2l2
        u_err_sq = 0.0
        p_err_sq = 0.0
        for s in range(1, cfg.n_samples + 1):
            h_u, _, _ = helmholtz_project(run.u_samples[s], basis)
            u_err_sq += dt_sample * grid.l2_norm(h_u - reference.u_samples[s]) ** 2
            p_err_sq += dt_sample * grid.l2_norm(
                run.rho_p_samples[s] - reference.rho_p_samples[s]) ** 2
        report.metrics[(eps, "u_vs_ref_l2l2")] = float(np.sqrt(u_err_sq))
        report.metrics[(eps, "rho_p_vs_ref_l2l2")] = float(np.sqrt(p_err_sq))
    report.finalize()

    write_report_csv(out / "report.csv", report)
    write_ledger_csv(out / "ledger_reference.csv", reference.ledger)
    for eps, run in runs.items():
        if run.ledger is not None and run.ledger.times:
            write_ledger_csv(out / f"ledger_{_eps_tag(eps)}.csv", run.ledger)
        if run.trace is not None and run.trace.times:
            write_acoustic_csv(out / f"acoustic_{_eps_tag(eps)}.csv", run.trace)
    if cfg.plots:
        from . import plots
        plots.render_convergence(report, out / "report_convergence.png")
        for eps, run in runs.items():
            if run.status == "ok":
                plots.render_ledger(run.ledger, out / f"ledger_{_eps_tag(eps)}.png")
                plots.render_trace(run.trace, out / f"acoustic_{_eps_tag(eps)}.png")
    return report


def simulate(cfg, progress=None):
    """Single run at the configured epsilon; writes ledger, trace and dumps."""
    out = ensure_dir(cfg.directory)
    from .config import echo_config
    echo_config(cfg, out / "effective_config.ini")

    params, grid, maxwellian, basis = build_problem(cfg)
    integ = CoupledIntegrator(params, grid, maxwellian, basis)
    init = well_prepared_init(cfg.recipe, cfg.amplitude, params, grid, maxwellian)
    mode = "coupled" if cfg.polymer else "fluid"
    if progress:
        progress(f"running single simulation, epsilon = {_eps_tag(params.epsilon)}")
    run, final_state = _run_loop(integ, init, cfg, mode, basis,
                                 f"epsilon={_eps_tag(params.epsilon)}", params.epsilon)

    tag = _eps_tag(params.epsilon)
    write_ledger_csv(out / f"ledger_{tag}.csv", run.ledger)
    write_acoustic_csv(out / f"acoustic_{tag}.csv", run.trace)
    if cfg.field_dumps:
        per_window = run.n_steps // cfg.n_samples
        for s in range(cfg.n_samples + 1):
            step = s * per_window
            write_field_dump(out / f"field_rho_{step}.dat", run.rho_samples[s])
            write_field_dump(out / f"field_ux_{step}.dat", run.u_samples[s][:, :, 0])
            write_field_dump(out / f"field_uy_{step}.dat", run.u_samples[s][:, :, 1])
            write_field_dump(out / f"field_polymer_density_{step}.dat",
                             run.rho_p_samples[s])
        tau = final_state.tau.tau
        last = run.n_steps
        write_field_dump(out / f"field_tau_xx_{last}.dat", tau[:, :, 0, 0])
        write_field_dump(out / f"field_tau_xy_{last}.dat", tau[:, :, 0, 1])
        write_field_dump(out / f"field_tau_yy_{last}.dat", tau[:, :, 1, 1])
    if cfg.plots:
        from . import plots
        plots.render_ledger(run.ledger, out / f"ledger_{tag}.png")
        plots.render_trace(run.trace, out / f"acoustic_{tag}.png")
    return run
