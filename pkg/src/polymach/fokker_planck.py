"""Configuration-density transport and its moment integrals.

The unknown is the Maxwellian-normalised density psi_hat = psi / M on the
tensor grid (physical cells) x (polar configuration cells).  All fluxes are
M-weighted and conservative: the Maxwellian vanishes at the ball rim, so the
elastic and drift fluxes through the rim are identically zero, and the total
weighted mass is conserved to rounding.

Advection in x and the spring drift in q are explicit upwind; the M-weighted
configuration diffusion is integrated implicitly (backward Euler) with one
factorisation shared by every physical cell, because the polar grid's centre
cells make an explicit treatment of that term unusably stiff.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import CFLError, PositivityError

ENTROPY_CUT = 1e-14        # below this, s (log s - 1) uses its limit value 0
CLIP_TOL = 1e-12           # negativity beyond this is an error, not roundoff


@dataclass
class ConfigDistribution:
    """psi_hat samples on (nx, ny, *q-shape) with the grids that define them."""

    psi_hat: np.ndarray
    maxwellian: object
    grid: object
    time: float = 0.0

    def copy(self):
        return ConfigDistribution(self.psi_hat.copy(), self.maxwellian, self.grid, self.time)


@dataclass
class PolymerDensity:
    values: np.ndarray
    grid: object


@dataclass
class KramersStress:
    tau: np.ndarray                # (nx, ny, 2, 2)
    components: list               # per spring, (nx, ny, 2, 2)


def _lift(arr, qgrid, i, n_prefix):
    """Reshape a per-ball (Nr, Na) array to broadcast over the product grid."""
    shape = [1] * (n_prefix + 2 * qgrid.K)
    shape[n_prefix + 2 * i] = arr.shape[0]
    shape[n_prefix + 2 * i + 1] = arr.shape[1]
    return arr.reshape(shape)


def _weighted_integral(dist, weight):
    """Contract psi_hat against a full-q-shape weight, leaving the x axes."""
    K = dist.maxwellian.grid.K
    axes = tuple(range(dist.psi_hat.ndim - 2 * K, dist.psi_hat.ndim))
    return np.tensordot(dist.psi_hat, weight, axes=(axes, tuple(range(2 * K))))


def number_density(dist):
    """Polymer number density, the M-weighted q-marginal of psi_hat."""
    maxw = dist.maxwellian
    weight = maxw.grid.volume * maxw.values
    return PolymerDensity(_weighted_integral(dist, weight), dist.grid)


def kramers_tensor(i, dist):
    """Second moment of M psi_hat against the spring force of spring i."""
    maxw = dist.maxwellian
    qgrid = maxw.grid
    ball = qgrid.balls[i]
    pot = maxw.potentials[i]
    up = pot.force_factor(0.5 * ball.r**2)[:, None] * np.ones(ball.n_angular)
    base = qgrid.volume * maxw.values * _lift(up, qgrid, i, 0)
    C = np.empty(dist.psi_hat.shape[: dist.psi_hat.ndim - 2 * qgrid.K] + (2, 2))
    comps = {(0, 0): ball.qx * ball.qx, (0, 1): ball.qx * ball.qy,
             (1, 1): ball.qy * ball.qy}
    for (a, b), qq in comps.items():
        w = base * _lift(qq, qgrid, i, 0)
        C[..., a, b] = _weighted_integral(dist, w)
    C[..., 1, 0] = C[..., 0, 1]
    return C


def tau1(dist, params):
    """Elastic extra stress: (1 - beta) (sum_i C_i - (K + 1) rho_p I)."""
    qgrid = dist.maxwellian.grid
    comps = [kramers_tensor(i, dist) for i in range(qgrid.K)]
    rho_p = number_density(dist).values
    tau = sum(comps) - (qgrid.K + 1) * rho_p[..., None, None] * np.eye(2)
    return KramersStress(params.beta_comp * tau, comps)


def kramers_identity_check(dist, phi, grad_phi):
    """Residual of the integration-by-parts identity for the Kramers moment.

    For a smooth q-function phi the force moment of M phi equals the gradient
    moment plus the plain M-moment times the identity; both sides are
    evaluated with the module quadrature, the gradient analytically.
    """
    maxw = dist.maxwellian
    qgrid = maxw.grid
    if qgrid.K != 1:
        raise NotImplementedError("identity check implemented for the dumbbell case")
    ball = qgrid.balls[0]
    vol = qgrid.volume
    M = maxw.values
    up = maxw.potentials[0].force_factor(0.5 * ball.r**2)[:, None]
    f = phi(ball.qx, ball.qy)
    gx, gy = grad_phi(ball.qx, ball.qy)
    lhs = np.empty((2, 2))
    rhs = np.empty((2, 2))
    q = (ball.qx, ball.qy)
    grad = (np.broadcast_to(gx, ball.qx.shape), np.broadcast_to(gy, ball.qx.shape))
    moment = np.sum(vol * M * f)
    for a in range(2):
        for b in range(2):
            lhs[a, b] = np.sum(vol * M * up * f * q[a] * q[b])
            rhs[a, b] = np.sum(vol * M * grad[a] * q[b]) + (a == b) * moment
    return float(np.abs(lhs - rhs).max())


def entropy_fisher(dist, params):
    """Relative entropy and the two Fisher-information dissipation integrals.

    Returns (integral of M F(psi_hat), 4 delta integral of M |grad_x sqrt|^2,
    Rouse-weighted integral of M grad_q sqrt . grad_q sqrt); the latter two
    are nonnegative by construction.
    """
    maxw = dist.maxwellian
    qgrid = maxw.grid
    grid = dist.grid
    psi = dist.psi_hat

    if qgrid.K == 1 and psi.ndim == 4:
        ball = qgrid.balls[0]
        w_row = ball.w_r * ball.r * ball.d_theta * maxw.radial[0]
        lo, mid, hi = _radial_diff_coefficients(ball.r)
        ent, fx, fq = kernels.fisher_integrals(
            psi, w_row, grid.cell_volume, grid.hx, grid.hy,
            ball.r, 1.0 / ball.r, ball.d_theta, lo, mid, hi)
        return ent, 4.0 * params.delta * fx, params.rouse[0, 0] * fq

    w = qgrid.volume * maxw.values
    cell = grid.cell_volume
    s = np.maximum(psi, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(s > ENTROPY_CUT, s * (np.log(np.maximum(s, ENTROPY_CUT)) - 1.0), 0.0)
    entropy = float(np.sum(F * w) * cell)

    root = np.sqrt(s)
    gpad = np.pad(root, ((1, 1), (1, 1)) + ((0, 0),) * 2 * qgrid.K, mode="edge")
    gx = (gpad[2:, 1:-1] - gpad[:-2, 1:-1]) / (2.0 * grid.hx)
    gy = (gpad[1:-1, 2:] - gpad[1:-1, :-2]) / (2.0 * grid.hy)
    x_fisher = 4.0 * params.delta * float(np.sum((gx**2 + gy**2) * w) * cell)

    A = params.rouse
    grads = []
    for i, ball in enumerate(qgrid.balls):
        ar, aa = 2 + 2 * i, 2 + 2 * i + 1
        gr = np.gradient(root, ball.r, axis=ar, edge_order=1)
        gt = (np.roll(root, -1, axis=aa) - np.roll(root, 1, axis=aa)) / (2.0 * ball.d_theta)
        rr = _lift(ball.r[:, None] * np.ones(ball.n_angular), qgrid, i, 2)
        gt = gt / rr
        cth = _lift(np.ones((ball.n_radial, 1)) * np.cos(ball.theta), qgrid, i, 2)
        sth = _lift(np.ones((ball.n_radial, 1)) * np.sin(ball.theta), qgrid, i, 2)
        grads.append((gr * cth - gt * sth, gr * sth + gt * cth))
    q_fisher = 0.0
    for i in range(qgrid.K):
        for j in range(qgrid.K):
            if A[i, j] == 0.0:
                continue
            dot = grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]
            q_fisher += A[i, j] * float(np.sum(dot * w) * cell)
    return entropy, x_fisher, float(q_fisher)


# --------------------------------------------------------------------------
# time stepping
# --------------------------------------------------------------------------

def _radial_diff_coefficients(r):
    """Second-order non-uniform central-difference weights at interior nodes."""
    n = len(r)
    lo = np.zeros(n)
    mid = np.zeros(n)
    hi = np.zeros(n)
    h1 = r[1:-1] - r[:-2]
    h2 = r[2:] - r[1:-1]
    lo[1:-1] = -h2 / (h1 * (h1 + h2))
    mid[1:-1] = (h2 - h1) / (h1 * h2)
    hi[1:-1] = h1 / (h2 * (h1 + h2))
    return lo, mid, hi


class FokkerPlanckSolver:
    """IMEX evolution of psi_hat for the single-spring (dumbbell) chain."""

    def __init__(self, grid, maxwellian, params):
        qgrid = maxwellian.grid
        if qgrid.K != 1:
            raise NotImplementedError(
                "time evolution is implemented for K = 1; moment integrals "
                "support general chains"
            )
        if params.dim_x != 2:
            raise NotImplementedError("physical grids are two-dimensional")
        self.grid = grid
        self.maxwellian = maxwellian
        self.params = params
        ball = qgrid.balls[0]
        self.ball = ball
        nr, na = ball.n_radial, ball.n_angular

        m_r = maxwellian.radial[0]
        m_edge = maxwellian.radial_edges[0]
        self.V = ball.volume
        self.VM = self.V * m_r[:, None]
        self.vm_flat = self.VM.ravel()

        # diffusion transmissibilities; rim face carries M = 0, centre face
        # has zero arc length, so neither appears
        r, re, dth, wr = ball.r, ball.r_edges, ball.d_theta, ball.w_r
        t_rad = m_edge[1:-1] * (re[1:-1] * dth) / np.diff(r)      # (nr-1,)
        t_ang = m_r * wr / (r * dth)                              # (nr,)

        rows, cols, vals = [], [], []

        def add_face(c1, c2, t):
            rows.extend((c1, c2))
            cols.extend((c2, c1))
            vals.extend((t, t))

        def cell(j, k):
            return j * na + k

        for j in range(nr - 1):
            for k in range(na):
                add_face(cell(j, k), cell(j + 1, k), t_rad[j])
        for j in range(nr):
            for k in range(na):
                add_face(cell(j, k), cell(j, (k + 1) % na), t_ang[j])
        off = sp.csr_matrix((vals, (rows, cols)), shape=(nr * na, nr * na))
        diag = -np.asarray(off.sum(axis=1)).ravel()
        T = off + sp.diags(diag)
        self.L_q = sp.diags(1.0 / self.vm_flat) @ T
        self.kappa = params.rouse[0, 0] / 4.0
        self._lu = {}

        # spring-drift face geometry: radial faces at interior edges, angular
        # faces between consecutive angular cells (periodic)
        cth, sth = np.cos(ball.theta), np.sin(ball.theta)
        self._rad_c2, self._rad_cs, self._rad_s2 = cth**2, cth * sth, sth**2
        self._rad_base = m_edge[1:-1] * re[1:-1] ** 2 * dth        # (nr-1,)
        ce, se = np.cos(ball.theta_edges), np.sin(ball.theta_edges)
        self._ang_c2, self._ang_cs, self._ang_s2 = ce**2, ce * se, se**2
        self._ang_base = m_r * r * wr                              # (nr,)
        self._inv_vm_row = 1.0 / (wr * r * dth * m_r)

        # geometric constant for the drift stability bound: total face
        # coefficient per cell at unit velocity-gradient magnitude
        per_cell = np.zeros((nr, na))
        for a in range(na):
            amp_r = self._rad_base * (self._rad_c2[a] + 2 * abs(self._rad_cs[a])
                                      + self._rad_s2[a])
            per_cell[:-1, a] += amp_r
            per_cell[1:, a] += amp_r
            amp_a = self._ang_base * (self._ang_c2[a] + 2 * abs(self._ang_cs[a])
                                      + self._ang_s2[a])
            per_cell[:, a] += amp_a
            per_cell[:, (a + 1) % na] += amp_a
        self._drift_rate_coef = float((per_cell * self._inv_vm_row[:, None]).max())

    # -- helpers -------------------------------------------------------------

    def _factorised(self, dt):
        lu = self._lu.get(dt)
        if lu is None:
            n = self.L_q.shape[0]
            system = (sp.eye(n, format="csc") - dt * self.kappa * self.L_q.tocsc())
            lu = spla.splu(system)
            self._lu[dt] = lu
        return lu

    def _explicit_rhs(self, psi, ufx, ufy, grad_u, dt):
        out = np.empty_like(psi)
        kernels.xadv_xlap(psi, ufx, ufy, self.params.delta,
                          self.grid.hx, self.grid.hy, out)
        kernels.add_drift_divergence(
            psi,
            np.ascontiguousarray(grad_u[:, :, 0, 0]),
            np.ascontiguousarray(grad_u[:, :, 0, 1]),
            np.ascontiguousarray(grad_u[:, :, 1, 0]),
            np.ascontiguousarray(grad_u[:, :, 1, 1]),
            self._rad_base, self._rad_c2, self._rad_cs, self._rad_s2,
            self._ang_base, self._ang_c2, self._ang_cs, self._ang_s2,
            self._inv_vm_row, out)
        return psi + dt * out

    def stable_dt(self, u, grad_u):
        """Largest explicit-stable step for advection, drift and x-diffusion."""
        g = self.grid
        ufx, ufy = g.face_normal_velocity(u)
        rate = np.abs(ufx).max() / g.hx + np.abs(ufy).max() / g.hy
        rate += 2.0 * self.params.delta * (1.0 / g.hx**2 + 1.0 / g.hy**2)
        j_bound = max(
            np.abs(grad_u[:, :, 0, 0]).max(), np.abs(grad_u[:, :, 1, 1]).max(),
            np.abs(grad_u[:, :, 0, 1] + grad_u[:, :, 1, 0]).max(),
            np.abs(grad_u[:, :, 1, 0]).max(), np.abs(grad_u[:, :, 0, 1]).max(),
            np.abs(grad_u[:, :, 1, 1] - grad_u[:, :, 0, 0]).max(),
        )
        rate += j_bound * self._drift_rate_coef
        if rate == 0.0:
            return np.inf
        return 1.0 / rate

    # -- public steps --------------------------------------------------------

    def fp_step(self, dist, u, grad_u, dt):
        """Advance psi_hat by one IMEX step under frozen velocity data."""
        g = self.grid
        psi = dist.psi_hat
        dt_max = self.stable_dt(u, grad_u)
        if dt > dt_max:
            raise CFLError(
                f"dt = {dt:.3e} exceeds the configuration-transport bound "
                f"{dt_max:.3e}; suggested dt = {0.45 * dt_max:.3e}",
                suggested_dt=0.45 * dt_max,
            )
        ufx, ufy = g.face_normal_velocity(u)
        rhs = self._explicit_rhs(psi, ufx, ufy, grad_u, dt)
        lu = self._factorised(dt)
        flat = rhs.reshape(g.nx * g.ny, -1).T
        out = lu.solve(np.ascontiguousarray(flat)).T.reshape(psi.shape)
        low = out.min()
        if low < -CLIP_TOL:
            raise PositivityError(f"positivity failure: min psi_hat = {low:.3e}")
        if low < 0.0:
            out = np.maximum(out, 0.0)
        out = np.ascontiguousarray(out)
        return ConfigDistribution(out, self.maxwellian, g, dist.time + dt)

    def rho_ad_step(self, rho_p, u, dt):
        """Advection-diffusion step of the polymer number density itself.

        Shares the flux kernel with fp_step, so for q-independent data the
        q-marginal of fp_step reproduces this update exactly.
        """
        g = self.grid
        ufx, ufy = g.face_normal_velocity(u)
        rate = np.abs(ufx).max() / g.hx + np.abs(ufy).max() / g.hy \
            + 2.0 * self.params.delta * (1.0 / g.hx**2 + 1.0 / g.hy**2)
        if rate > 0 and dt > 1.0 / rate:
            raise CFLError(
                f"dt = {dt:.3e} exceeds the advection-diffusion bound {1.0 / rate:.3e}",
                suggested_dt=0.45 / rate,
            )
        f4 = np.ascontiguousarray(rho_p.values[:, :, None, None])
        out = np.empty_like(f4)
        kernels.xadv_xlap(f4, ufx, ufy, self.params.delta, g.hx, g.hy, out)
        return PolymerDensity(rho_p.values + dt * out[:, :, 0, 0], g)
