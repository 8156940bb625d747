"""Operator-split coupling of the solvent and configuration solvers.

One coupled step is Lie splitting: the fluid advances with frozen elastic
stress and polymer density, the configuration density advances with the
fresh velocity, then the moments are refreshed.  The energy ledger records
every term of the total energy balance and monitors the discrete energy
inequality.
"""
from dataclasses import dataclass, field

import numpy as np

from . import fokker_planck as fp
from .acoustics import neumann_eigenbasis, project_or_fail
from .errors import SimulationError
from .fluid import FluidSolver, FluidState, pressure, pressure_potential

MONITOR_REL_TOL = 1e-6
CONSISTENCY_TOL = 1e-10


@dataclass
class CoupledState:
    fluid: FluidState
    dist: fp.ConfigDistribution
    rho_p: fp.PolymerDensity
    tau: fp.KramersStress
    time: float = 0.0

    def copy(self):
        return CoupledState(self.fluid.copy(), self.dist.copy(),
                            fp.PolymerDensity(self.rho_p.values.copy(), self.rho_p.grid),
                            fp.KramersStress(self.tau.tau.copy(), list(self.tau.components)),
                            self.time)


@dataclass
class EnergyLedger:
    """Time series of the energy balance: four stores, five dissipation rates.

    The monitor asserts E(t) + sum dt D <= E(0) + tol |E(0)| at every sample;
    a second, much looser exponential-growth predicate is recorded alongside.
    """

    times: list = field(default_factory=list)
    kinetic: list = field(default_factory=list)
    pressure_potential: list = field(default_factory=list)
    entropy: list = field(default_factory=list)
    interaction: list = field(default_factory=list)
    d_viscous: list = field(default_factory=list)
    d_bulk: list = field(default_factory=list)
    d_fisher_x: list = field(default_factory=list)
    d_fisher_q: list = field(default_factory=list)
    d_density_grad: list = field(default_factory=list)
    dissipation_cumulative: list = field(default_factory=list)
    monitor_ok: list = field(default_factory=list)
    monitor_exp_ok: list = field(default_factory=list)
    initial_energy: float = None
    initial_energy_abs: float = None

    def energy(self, n=-1):
        return (self.kinetic[n] + self.pressure_potential[n]
                + self.entropy[n] + self.interaction[n])

    def dissipation(self, n=-1):
        return (self.d_viscous[n] + self.d_bulk[n] + self.d_fisher_x[n]
                + self.d_fisher_q[n] + self.d_density_grad[n])

    @property
    def monitor_holds(self):
        return all(self.monitor_ok)

    COLUMNS = ("t", "kinetic", "pressure_potential", "entropy", "interaction",
               "energy_total", "d_viscous", "d_bulk", "d_fisher_x", "d_fisher_q",
               "d_density_grad", "dissipation_total", "dissipation_cumulative",
               "monitor_ok", "monitor_exp_ok")

    def rows(self):
        for n in range(len(self.times)):
            yield (self.times[n], self.kinetic[n], self.pressure_potential[n],
                   self.entropy[n], self.interaction[n], self.energy(n),
                   self.d_viscous[n], self.d_bulk[n], self.d_fisher_x[n],
                   self.d_fisher_q[n], self.d_density_grad[n], self.dissipation(n),
                   self.dissipation_cumulative[n],
                   int(self.monitor_ok[n]), int(self.monitor_exp_ok[n]))


class CoupledIntegrator:
    """Owns the two sub-solvers and the spectral basis for the limit solver."""

    def __init__(self, params, grid, maxwellian, basis=None):
        self.params = params
        self.grid = grid
        self.maxwellian = maxwellian
        self.fluid = FluidSolver(grid, params)
        self.fp = fp.FokkerPlanckSolver(grid, maxwellian, params)
        self._basis = basis

    @property
    def basis(self):
        if self._basis is None:
            self._basis = neumann_eigenbasis(self.grid, min(self.grid.nx, self.grid.ny) - 1)
        return self._basis

    # -- state assembly ------------------------------------------------------

    def refresh_moments(self, dist):
        return fp.number_density(dist), fp.tau1(dist, self.params)

    def make_state(self, rho, m, psi_hat, time=0.0):
        fluid = FluidState(np.asarray(rho, float), np.asarray(m, float), self.grid, time)
        dist = fp.ConfigDistribution(np.asarray(psi_hat, float), self.maxwellian,
                                     self.grid, time)
        rho_p, tau = self.refresh_moments(dist)
        return CoupledState(fluid, dist, rho_p, tau, time)

    def check_consistency(self, state):
        rho_p = fp.number_density(state.dist).values
        gap = np.abs(rho_p - state.rho_p.values).max()
        if gap > CONSISTENCY_TOL:
            raise SimulationError(f"stored polymer density stale by {gap:.3e}")
        return gap

    # -- time stepping -------------------------------------------------------

    def stable_dt(self, state):
        u = state.fluid.velocity
        grad_u = self.grid.velocity_gradient(u)
        return min(self.fluid.stable_dt(state.fluid),
                   self.fp.stable_dt(u, grad_u))

    def coupled_step(self, state, dt):
        """Lie-split step: fluid with frozen moments, then configuration."""
        fluid_new = self.fluid.fluid_step(state.fluid, state.tau.tau,
                                          state.rho_p.values, dt)
        u = fluid_new.velocity
        grad_u = self.grid.velocity_gradient(u)
        dist_new = self.fp.fp_step(state.dist, u, grad_u, dt)
        rho_p, tau = self.refresh_moments(dist_new)
        return CoupledState(fluid_new, dist_new, rho_p, tau, state.time + dt)

    def incompressible_step(self, state, dt):
        """Projection step of the constant-density limit system.

        Explicit momentum update with the plain mu_s Du stress and the
        elastic stress, then a Helmholtz projection restores the solenoidal
        constraint; the density stays at rho_bar and the quadratic
        interaction gradient is absorbed by the projection.
        """
        g = self.grid
        p = self.params
        rho_bar = p.rho_bar
        U = state.fluid.m / rho_bar

        ufx, ufy = g.face_normal_velocity(U)
        Ug = g.velocity_ghost(U)
        # central advective fluxes rho_bar * u_f * U_f; wall faces vanish
        Ufx = 0.5 * (Ug[:-1, 1:-1] + Ug[1:, 1:-1])          # (nx+1, ny, 2)
        Ufy = 0.5 * (Ug[1:-1, :-1] + Ug[1:-1, 1:])          # (nx, ny+1, 2)
        adv = np.diff(rho_bar * ufx[:, :, None] * Ufx, axis=0) / g.hx \
            + np.diff(rho_bar * ufy[:, :, None] * Ufy, axis=1) / g.hy

        Sxx, Sxy, Syx, Syy = self.fluid._stress_face_fluxes(
            Ug[:, :, 0], Ug[:, :, 1], state.tau.tau, deviatoric=False)
        stress = np.stack([
            np.diff(Sxx, axis=0) / g.hx + np.diff(Syx, axis=1) / g.hy,
            np.diff(Sxy, axis=0) / g.hx + np.diff(Syy, axis=1) / g.hy,
        ], axis=-1)

        m_star = state.fluid.m + dt * (stress - adv)
        U_star = m_star / rho_bar
        U_new, _, _ = project_or_fail(U_star, self.basis)

        fluid_new = FluidState(state.fluid.rho.copy(), rho_bar * U_new, g,
                               state.time + dt)
        grad_u = g.velocity_gradient(U_new)
        dist_new = self.fp.fp_step(state.dist, U_new, grad_u, dt)
        rho_p, tau = self.refresh_moments(dist_new)
        return CoupledState(fluid_new, dist_new, rho_p, tau, state.time + dt)

    # -- energy accounting ----------------------------------------------------

    def energy_terms(self, state, polymer=True):
        g = self.grid
        p = self.params
        u = state.fluid.velocity
        kinetic = 0.5 * g.integrate(state.fluid.rho * np.sum(u**2, axis=-1))
        pres = g.integrate(pressure_potential(state.fluid.rho, p)) / p.epsilon**2
        if polymer:
            entropy, x_fisher, q_fisher = fp.entropy_fisher(state.dist, p)
            interaction = p.xi_bar * g.integrate(state.rho_p.values**2)
            grad_rho_p = g.scalar_gradient(state.rho_p.values)
            d_grad = 2.0 * p.delta * p.xi_bar * g.integrate(
                np.sum(grad_rho_p**2, axis=-1))
        else:
            entropy = x_fisher = q_fisher = interaction = d_grad = 0.0

        J = g.velocity_gradient(u)
        D = 0.5 * (J + np.swapaxes(J, -1, -2))
        div = J[:, :, 0, 0] + J[:, :, 1, 1]
        dev = D - (div[:, :, None, None] / p.dim_x) * np.eye(2)
        d_visc = p.mu_s * g.integrate(np.sum(dev**2, axis=(-2, -1)))
        d_bulk = p.mu_b * g.integrate(div**2)
        return {
            "kinetic": kinetic,
            "pressure_potential": pres,
            "entropy": p.beta_comp * entropy,
            "interaction": interaction,
            "d_viscous": d_visc,
            "d_bulk": d_bulk,
            "d_fisher_x": p.beta_comp * x_fisher,
            "d_fisher_q": p.beta_comp * q_fisher,
            "d_density_grad": d_grad,
        }

    def energy_ledger_update(self, state, ledger, polymer=True):
        """Append one sample and evaluate both energy-inequality predicates."""
        p = self.params
        terms = self.energy_terms(state, polymer=polymer)
        t = state.time
        if ledger.times:
            dt = t - ledger.times[-1]
        else:
            dt = 0.0
        diss = (terms["d_viscous"] + terms["d_bulk"] + terms["d_fisher_x"]
                + terms["d_fisher_q"] + terms["d_density_grad"])
        cum = (ledger.dissipation_cumulative[-1] if ledger.times else 0.0) + dt * diss

        ledger.times.append(t)
        for key in ("kinetic", "pressure_potential", "entropy", "interaction",
                    "d_viscous", "d_bulk", "d_fisher_x", "d_fisher_q",
                    "d_density_grad"):
            getattr(ledger, key).append(terms[key])
        ledger.dissipation_cumulative.append(cum)

        energy = ledger.energy()
        if ledger.initial_energy is None:
            ledger.initial_energy = energy
            g, eps = self.grid, p.epsilon
            abs_pot = g.integrate(pressure(state.fluid.rho, p) / (p.gamma - 1.0)) / eps**2
            ledger.initial_energy_abs = (terms["kinetic"] + abs_pot
                                         + terms["entropy"] + terms["interaction"])
        e0 = ledger.initial_energy
        ledger.monitor_ok.append(energy + cum <= e0 + MONITOR_REL_TOL * abs(e0))

        g, eps = self.grid, p.epsilon
        abs_pot = g.integrate(pressure(state.fluid.rho, p) / (p.gamma - 1.0)) / eps**2
        energy_abs = (terms["kinetic"] + abs_pot + terms["entropy"]
                      + terms["interaction"])
        ledger.monitor_exp_ok.append(
            energy_abs + cum <= np.exp(t) * ledger.initial_energy_abs
            + MONITOR_REL_TOL * abs(ledger.initial_energy_abs)
        )
        return ledger
