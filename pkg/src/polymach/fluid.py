"""Compressible solvent solver: isentropic Navier-Stokes with polymer forcing.

Colocated finite volumes on the unit square.  Hyperbolic fluxes use a Rusanov
(local Lax-Friedrichs) approximation whose wave speed carries the stiff
1/epsilon sound speed, so acoustics are resolved, not filtered.  Viscous and
elastic stresses enter through face fluxes; on the slip walls the tangential
component of the combined stress traction is closed to zero and the mass flux
vanishes identically, which conserves total mass to rounding.
"""
from dataclasses import dataclass

import numpy as np

from .errors import CFLError, DensityFloorError

DENSITY_FLOOR_FACTOR = 1e-8


@dataclass
class FluidState:
    rho: np.ndarray               # (nx, ny)
    m: np.ndarray                 # (nx, ny, 2) momentum density
    grid: object
    time: float = 0.0

    @property
    def velocity(self):
        return self.m / self.rho[:, :, None]

    def copy(self):
        return FluidState(self.rho.copy(), self.m.copy(), self.grid, self.time)


def pressure(rho, params):
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DensityFloorError("nonpositive density in pressure evaluation")
    return params.c_p * rho**params.gamma


def pressure_potential(rho, params):
    """Relative pressure potential P(rho) - P'(rho_bar)(rho - rho_bar) - P(rho_bar).

    P = p/(gamma - 1); the relative form is nonnegative and vanishes at the
    static density, which makes it the natural acoustic energy density.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DensityFloorError("nonpositive density in pressure potential")
    g, cp, rb = params.gamma, params.c_p, params.rho_bar

    def P(r):
        return cp * r**g / (g - 1.0)

    dP = cp * g / (g - 1.0) * rb ** (g - 1.0)
    return P(rho) - dP * (rho - rb) - P(rb)


def sound_speed(rho, params):
    return np.sqrt(params.gamma * params.c_p * rho ** (params.gamma - 1.0)) / params.epsilon


def stress(u, grid, params):
    """Newtonian stress tensor at cell centres (diagnostic form).

    Uses one-sided differences at the boundary cells so linear velocity
    fields are differentiated exactly everywhere.
    """
    d = params.dim_x
    J = np.empty((grid.nx, grid.ny, 2, 2))
    for a in range(2):
        J[:, :, a, 0] = np.gradient(u[:, :, a], grid.hx, axis=0, edge_order=2)
        J[:, :, a, 1] = np.gradient(u[:, :, a], grid.hy, axis=1, edge_order=2)
    D = 0.5 * (J + np.swapaxes(J, -1, -2))
    div = J[:, :, 0, 0] + J[:, :, 1, 1]
    eye = np.eye(2)
    return params.mu_s * (D - (div[:, :, None, None] / d) * eye) \
        + params.mu_b * div[:, :, None, None] * eye


class FluidSolver:
    """Explicit conservative update of (rho, m) with slip walls."""

    def __init__(self, grid, params):
        self.grid = grid
        self.params = params
        self.rho_floor = DENSITY_FLOOR_FACTOR * params.rho_bar

    # -- stability ---------------------------------------------------------

    def stable_dt(self, state):
        g = self.grid
        c = sound_speed(state.rho, self.params)
        u = state.velocity
        rate_h = np.max((np.abs(u[:, :, 0]) + c) / g.hx + (np.abs(u[:, :, 1]) + c) / g.hy)
        # spectral bound of the stress operator is (mu_s/2 + mu_b); keep margin
        nu = (0.75 * self.params.mu_s + self.params.mu_b) / state.rho.min()
        rate_v = 2.0 * nu * (1.0 / g.hx**2 + 1.0 / g.hy**2)
        return 1.0 / (rate_h + rate_v)

    # -- face fluxes -------------------------------------------------------

    def _hyperbolic_fluxes(self, rg, ug, vg, pg, cg):
        g = self.grid
        # x-faces (nx+1, ny)
        rL, rR = rg[:-1, 1:-1], rg[1:, 1:-1]
        uL, uR = ug[:-1, 1:-1], ug[1:, 1:-1]
        vL, vR = vg[:-1, 1:-1], vg[1:, 1:-1]
        pL, pR = pg[:-1, 1:-1], pg[1:, 1:-1]
        a = np.maximum(np.abs(uL) + cg[:-1, 1:-1], np.abs(uR) + cg[1:, 1:-1])
        Fr = 0.5 * (rL * uL + rR * uR) - 0.5 * a * (rR - rL)
        Fmx = 0.5 * (rL * uL**2 + pL + rR * uR**2 + pR) - 0.5 * a * (rR * uR - rL * uL)
        Fmy = 0.5 * (rL * uL * vL + rR * uR * vR) - 0.5 * a * (rR * vR - rL * vL)
        Fr[0, :] = Fr[-1, :] = 0.0      # no mass through slip walls
        Fmy[0, :] = Fmy[-1, :] = 0.0    # no advective tangential-momentum flux

        # y-faces (nx, ny+1)
        rB, rT = rg[1:-1, :-1], rg[1:-1, 1:]
        uB, uT = ug[1:-1, :-1], ug[1:-1, 1:]
        vB, vT = vg[1:-1, :-1], vg[1:-1, 1:]
        pB, pT = pg[1:-1, :-1], pg[1:-1, 1:]
        a = np.maximum(np.abs(vB) + cg[1:-1, :-1], np.abs(vT) + cg[1:-1, 1:])
        Gr = 0.5 * (rB * vB + rT * vT) - 0.5 * a * (rT - rB)
        Gmx = 0.5 * (rB * uB * vB + rT * uT * vT) - 0.5 * a * (rT * uT - rB * uB)
        Gmy = 0.5 * (rB * vB**2 + pB + rT * vT**2 + pT) - 0.5 * a * (rT * vT - rB * vB)
        Gr[:, 0] = Gr[:, -1] = 0.0
        Gmx[:, 0] = Gmx[:, -1] = 0.0
        return Fr, Fmx, Fmy, Gr, Gmx, Gmy

    def _stress_face_fluxes(self, ug, vg, tau, deviatoric=True):
        """Face tractions of S(u) [+ tau]; tangential wall traction zeroed.

        With deviatoric=True this is the full Newtonian stress
        mu_s (Du - (1/d) div u I) + mu_b div u I; with False it is the plain
        mu_s Du form used by the incompressible limit.
        """
        g = self.grid
        mu_s, mu_b = self.params.mu_s, self.params.mu_b
        d = self.params.dim_x

        # x-faces
        dudx = (ug[1:, 1:-1] - ug[:-1, 1:-1]) / g.hx
        dvdx = (vg[1:, 1:-1] - vg[:-1, 1:-1]) / g.hx
        dudy_c = (ug[:, 2:] - ug[:, :-2]) / (2.0 * g.hy)
        dvdy_c = (vg[:, 2:] - vg[:, :-2]) / (2.0 * g.hy)
        dudy = 0.5 * (dudy_c[:-1, :] + dudy_c[1:, :])
        dvdy = 0.5 * (dvdy_c[:-1, :] + dvdy_c[1:, :])
        if deviatoric:
            div = dudx + dvdy
            Sxx = mu_s * (dudx - div / d) + mu_b * div
        else:
            Sxx = mu_s * dudx
        Sxy = mu_s * 0.5 * (dudy + dvdx)
        if tau is not None:
            txx = np.pad(tau[:, :, 0, 0], ((1, 1), (0, 0)), mode="edge")
            tyx = np.pad(tau[:, :, 1, 0], ((1, 1), (0, 0)), mode="edge")
            Sxx = Sxx + 0.5 * (txx[:-1] + txx[1:])
            Sxy = Sxy + 0.5 * (tyx[:-1] + tyx[1:])
        Sxy[0, :] = Sxy[-1, :] = 0.0    # slip wall: zero tangential traction

        # y-faces
        dudy2 = (ug[1:-1, 1:] - ug[1:-1, :-1]) / g.hy
        dvdy2 = (vg[1:-1, 1:] - vg[1:-1, :-1]) / g.hy
        dudx_c = (ug[2:, :] - ug[:-2, :]) / (2.0 * g.hx)
        dvdx_c = (vg[2:, :] - vg[:-2, :]) / (2.0 * g.hx)
        dudx2 = 0.5 * (dudx_c[:, :-1] + dudx_c[:, 1:])
        dvdx2 = 0.5 * (dvdx_c[:, :-1] + dvdx_c[:, 1:])
        if deviatoric:
            div2 = dudx2 + dvdy2
            Syy = mu_s * (dvdy2 - div2 / d) + mu_b * div2
        else:
            Syy = mu_s * dvdy2
        Syx = mu_s * 0.5 * (dudy2 + dvdx2)
        if tau is not None:
            tyy = np.pad(tau[:, :, 1, 1], ((0, 0), (1, 1)), mode="edge")
            txy = np.pad(tau[:, :, 0, 1], ((0, 0), (1, 1)), mode="edge")
            Syy = Syy + 0.5 * (tyy[:, :-1] + tyy[:, 1:])
            Syx = Syx + 0.5 * (txy[:, :-1] + txy[:, 1:])
        Syx[:, 0] = Syx[:, -1] = 0.0
        return Sxx, Sxy, Syx, Syy

    # -- time step ---------------------------------------------------------

    def fluid_step(self, state, tau, rho_p, dt, source=None):
        """One explicit conservative step with frozen polymer fields.

        tau is the elastic stress tensor field (or None), rho_p the polymer
        number density (or None); source, if given, is a (s_rho, s_m) pair of
        cell-centred external sources (used by manufactured-solution tests).
        """
        g = self.grid
        p = self.params
        dt_max = self.stable_dt(state)
        if dt > dt_max:
            raise CFLError(
                f"dt = {dt:.3e} exceeds the stability bound {dt_max:.3e}; "
                f"suggested dt = {0.45 * dt_max:.3e}",
                suggested_dt=0.45 * dt_max,
            )
        if state.rho.min() <= self.rho_floor:
            raise DensityFloorError("density floor reached")

        rg = g.scalar_ghost(state.rho)
        mg = g.velocity_ghost(state.m)
        ug, vg = mg[:, :, 0] / rg, mg[:, :, 1] / rg
        pg = pressure(rg, p) / p.epsilon**2
        cg = sound_speed(rg, p)

        Fr, Fmx, Fmy, Gr, Gmx, Gmy = self._hyperbolic_fluxes(rg, ug, vg, pg, cg)
        Sxx, Sxy, Syx, Syy = self._stress_face_fluxes(ug, vg, tau)

        rho_new = state.rho - dt / g.hx * np.diff(Fr, axis=0) - dt / g.hy * np.diff(Gr, axis=1)
        mx = state.m[:, :, 0] \
            - dt / g.hx * np.diff(Fmx - Sxx, axis=0) - dt / g.hy * np.diff(Gmx - Syx, axis=1)
        my = state.m[:, :, 1] \
            - dt / g.hx * np.diff(Fmy - Sxy, axis=0) - dt / g.hy * np.diff(Gmy - Syy, axis=1)

        if rho_p is not None and p.xi_bar != 0.0:
            q2 = g.scalar_ghost(np.asarray(rho_p) ** 2)
            fx = 0.5 * (q2[:-1, 1:-1] + q2[1:, 1:-1])
            fy = 0.5 * (q2[1:-1, :-1] + q2[1:-1, 1:])
            mx -= dt * p.xi_bar / g.hx * np.diff(fx, axis=0)
            my -= dt * p.xi_bar / g.hy * np.diff(fy, axis=1)

        if source is not None:
            s_rho, s_m = source
            rho_new = rho_new + dt * s_rho
            mx = mx + dt * s_m[:, :, 0]
            my = my + dt * s_m[:, :, 1]

        if rho_new.min() <= self.rho_floor:
            raise DensityFloorError("density floor reached")
        return FluidState(rho_new, np.stack([mx, my], axis=-1), g, state.time + dt)
