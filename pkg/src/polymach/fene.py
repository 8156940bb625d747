"""FENE spring potentials, configuration-space grids and Maxwellian quadrature.

The configuration domain is a product of open balls, one per spring, with a
polar tensor grid on each ball: Gauss-Legendre nodes in the radius, uniform
nodes in the angle.  The quadrature weight of a node doubles as the finite
volume of the cell around it, so integrals and conservative fluxes share one
measure.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import SimulationError

NORMALISATION_TOL = 1e-6


def fene_eval(s, b):
    """Evaluate the finitely extensible spring potential and its derivative.

    U(s) = -(b/2) ln(1 - 2s/b) on s in [0, b/2); the force factor U'(s)
    diverges at the extensibility limit.
    """
    s = np.asarray(s, dtype=float)
    if np.any(s < 0) or np.any(s >= b / 2.0):
        raise ValueError("beyond finite extensibility: require 0 <= s < b/2")
    U = -(b / 2.0) * np.log1p(-2.0 * s / b)
    Up = 1.0 / (1.0 - 2.0 * s / b)
    if U.ndim == 0:
        return float(U), float(Up)
    return U, Up


@dataclass(frozen=True)
class SpringPotential:
    """One FENE spring with extensibility limit b (maximum extension sqrt(b))."""

    b: float

    def energy(self, s):
        # +inf at the rim s = b/2 is intentional: exp(-U) = 0 there.
        with np.errstate(divide="ignore"):
            return -(self.b / 2.0) * np.log1p(-2.0 * np.asarray(s, float) / self.b)

    def force_factor(self, s):
        return 1.0 / (1.0 - 2.0 * np.asarray(s, float) / self.b)

    @property
    def maxwellian_exponent(self):
        return self.b / 2.0

    def unnormalised_maxwellian(self, r):
        """exp(-U(r^2/2)) = (1 - r^2/b)^(b/2), zero at and beyond the rim."""
        z = np.maximum(1.0 - np.asarray(r, float) ** 2 / self.b, 0.0)
        return z ** (self.b / 2.0)


class BallGrid:
    """Polar quadrature/finite-volume grid on one 2-D ball of radius sqrt(b)."""

    def __init__(self, b, n_radial=24, n_angular=16):
        self.b = float(b)
        self.n_radial = int(n_radial)
        self.n_angular = int(n_angular)
        self.radius = np.sqrt(self.b)

        xg, wg = np.polynomial.legendre.leggauss(self.n_radial)
        self.r = 0.5 * self.radius * (xg + 1.0)
        self.w_r = 0.5 * self.radius * wg
        edges = np.concatenate(([0.0], np.cumsum(self.w_r)))
        edges[-1] = self.radius
        self.r_edges = edges

        self.d_theta = 2.0 * np.pi / self.n_angular
        self.theta = (np.arange(self.n_angular) + 0.5) * self.d_theta
        self.theta_edges = np.arange(self.n_angular) * self.d_theta + self.d_theta

        # node volumes = quadrature weights r w_r dtheta
        self.volume = np.outer(self.w_r * self.r, np.ones(self.n_angular)) * self.d_theta
        self.qx = np.outer(self.r, np.cos(self.theta))
        self.qy = np.outer(self.r, np.sin(self.theta))

    @property
    def shape(self):
        return (self.n_radial, self.n_angular)

    def integrate(self, values):
        """Integral over the ball of node values (last two axes radial, angular)."""
        return np.einsum("...ra,ra->...", np.asarray(values), self.volume)


class QGrid:
    """Product grid over the K configuration balls."""

    def __init__(self, balls):
        self.balls = list(balls)
        self.K = len(self.balls)
        shape = []
        for ball in self.balls:
            shape.extend(ball.shape)
        self.shape = tuple(shape)
        vol = np.ones(())
        for ball in self.balls:
            vol = np.multiply.outer(vol, ball.volume)
        self.volume = vol

    def ball_axes(self, i, ndim_prefix=0):
        """(radial, angular) axis indices of ball i within a psi array."""
        return (ndim_prefix + 2 * i, ndim_prefix + 2 * i + 1)

    def integrate(self, values):
        values = np.asarray(values)
        axes = tuple(range(values.ndim - 2 * self.K, values.ndim))
        return np.tensordot(values, self.volume, axes=(axes, tuple(range(2 * self.K))))


def build_qgrid(b_list, n_radial=24, n_angular=16):
    return QGrid([BallGrid(b, n_radial, n_angular) for b in b_list])


@dataclass
class Maxwellian:
    """Normalised equilibrium configuration density on a product grid."""

    grid: QGrid
    potentials: list
    Z: tuple                      # partition constant per spring
    radial: list                  # per ball, M_i at radial nodes (normalised)
    radial_edges: list            # per ball, M_i at radial cell edges
    values: np.ndarray = field(default=None)   # total M on the product grid
    theta_exponents: tuple = ()

    def ball_values(self, i):
        return self.radial[i][:, None] * np.ones(self.grid.balls[i].n_angular)


def build_maxwellian(potentials, grid):
    """Quadrature-normalised Maxwellian; errors out if the grid is too coarse.

    The partition constants are fixed by the grid's own quadrature (so the
    grid integral of M is 1 by construction); they are cross-checked against
    an adaptive 1-D reference integral.
    """
    potentials = list(potentials)
    if len(potentials) != grid.K:
        raise ValueError("one potential per ball required")
    Z, radial, radial_edges = [], [], []
    for pot, ball in zip(potentials, grid.balls):
        m_nodes = pot.unnormalised_maxwellian(ball.r)
        z_grid = 2.0 * np.pi * np.sum(ball.w_r * ball.r * m_nodes)
        z_ref, _ = integrate.quad(
            lambda r: 2.0 * np.pi * r * pot.unnormalised_maxwellian(r),
            0.0, ball.radius, limit=200,
        )
        if abs(z_grid - z_ref) > NORMALISATION_TOL * abs(z_ref):
            raise SimulationError(
                "insufficient q-resolution: partition constant off by "
                f"{abs(z_grid - z_ref) / abs(z_ref):.3e}"
            )
        Z.append(z_grid)
        radial.append(m_nodes / z_grid)
        radial_edges.append(pot.unnormalised_maxwellian(ball.r_edges) / z_grid)

    total = np.ones(())
    for m_r, ball in zip(radial, grid.balls):
        total = np.multiply.outer(total, m_r[:, None] * np.ones(ball.n_angular))
    return Maxwellian(
        grid=grid,
        potentials=potentials,
        Z=tuple(Z),
        radial=radial,
        radial_edges=radial_edges,
        values=total,
        theta_exponents=tuple(p.maxwellian_exponent for p in potentials),
    )


@dataclass
class SpringAssumptionReport:
    spring: int
    theta_fit: float
    theta_expected: float
    c1: float
    c2: float
    c3: float
    c4: float
    u3_integral: float
    decay_ok: bool
    force_bounds_ok: bool
    moments_ok: bool

    @property
    def ok(self):
        return self.decay_ok and self.force_bounds_ok and self.moments_ok


@dataclass
class AssumptionReport:
    springs: list

    @property
    def ok(self):
        return all(s.ok for s in self.springs)


def verify_assumptions(maxw, potentials, theta_rel_tol=0.05):
    """Numerically verify the structural assumptions on U_i and M_i.

    Fits the boundary decay exponent of M_i against the distance to the rim,
    brackets dist * U', and evaluates the (1 + U^2 + U'^2) moment.
    """
    reports = []
    for i, (pot, ball) in enumerate(zip(potentials, maxw.grid.balls)):
        R = ball.radius
        # decay exponent: ln M against ln dist on a thin boundary layer
        dist = np.geomspace(1e-6 * R, 1e-2 * R, 40)
        r = R - dist
        m = pot.unnormalised_maxwellian(r) / maxw.Z[i]
        slope, intercept = np.polyfit(np.log(dist), np.log(m), 1)
        theta_fit = float(slope)
        theta_exp = pot.maxwellian_exponent
        ratio = m / dist**theta_fit
        c1, c2 = float(ratio.min()), float(ratio.max())

        r_all = np.linspace(0.0, R, 512, endpoint=False)
        du = (R - r_all) * pot.force_factor(0.5 * r_all**2)
        c3, c4 = float(du.min()), float(du.max())

        def u3_integrand(r):
            s = 0.5 * r**2
            U = pot.energy(s)
            Up = pot.force_factor(s)
            return 2.0 * np.pi * r * (1.0 + U**2 + Up**2) \
                * pot.unnormalised_maxwellian(r) / maxw.Z[i]

        u3, _ = integrate.quad(u3_integrand, 0.0, R, limit=400)

        reports.append(SpringAssumptionReport(
            spring=i,
            theta_fit=theta_fit,
            theta_expected=theta_exp,
            c1=c1, c2=c2, c3=c3, c4=c4,
            u3_integral=float(u3),
            decay_ok=abs(theta_fit - theta_exp) <= theta_rel_tol * theta_exp
            and 0.0 < c1 <= c2 < np.inf,
            force_bounds_ok=0.0 < c3 <= c4 < np.inf,
            moments_ok=np.isfinite(u3),
        ))
    return AssumptionReport(springs=reports)


def maxwellian_gradient_identity_check(maxw, potentials):
    """Residual of -grad_q M / M = U'(|q|^2/2) q on the radial grid.

    Finite differences of ln M between neighbouring radial nodes against the
    analytic U' r at the midpoint; first order in the radial spacing.
    """
    worst = 0.0
    for pot, ball, m_r in zip(potentials, maxw.grid.balls, maxw.radial):
        lnm = np.log(m_r)
        dr = np.diff(ball.r)
        fd = -(lnm[1:] - lnm[:-1]) / dr
        r_mid = 0.5 * (ball.r[1:] + ball.r[:-1])
        exact = pot.force_factor(0.5 * r_mid**2) * r_mid
        # skip the outermost gap where U' blows up faster than any stencil
        resid = np.abs(fd - exact)[:-1]
        worst = max(worst, float(resid.max()))
    return worst
