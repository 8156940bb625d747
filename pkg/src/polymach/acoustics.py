"""Neumann cosine eigenbasis on the slip rectangle and acoustic diagnostics.

The eigenfunctions of the Neumann Laplacian on the unit square are products
of cosines; sampled at cell midpoints they are exactly orthogonal under the
midpoint rule, so the Helmholtz projection built from them satisfies its
algebra (idempotency, orthogonality, weak divergence) to rounding error.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ProjectionError, SimulationError


@dataclass
class SpectralBasis:
    """Eigenpairs of the Neumann Laplacian plus full-grid transform tables."""

    grid: object
    cutoff: int                    # largest per-direction mode index tracked
    modes: list                    # [(k, l)] sorted by eigenvalue, (0,0) excluded
    lam: np.ndarray                # eigenvalue per tracked mode, pi^2 (k^2 + l^2)
    # midpoint sample tables at full Nyquist, used by the projection
    cos_x: np.ndarray = field(repr=False, default=None)   # (nx, nx) [k, i]
    sin_x: np.ndarray = field(repr=False, default=None)
    cos_y: np.ndarray = field(repr=False, default=None)
    sin_y: np.ndarray = field(repr=False, default=None)
    norm_x: np.ndarray = field(repr=False, default=None)  # sqrt(2) except k=0
    norm_y: np.ndarray = field(repr=False, default=None)

    def eigenfunction(self, k, l):
        """L2-normalised eigenfunction samples c_k c_l cos(k pi x) cos(l pi y)."""
        return (self.norm_x[k] * self.norm_y[l]) * np.outer(self.cos_x[k], self.cos_y[l])

    def eigenfunction_gradient(self, k, l):
        gx = -(self.norm_x[k] * self.norm_y[l]) * k * np.pi \
            * np.outer(self.sin_x[k], self.cos_y[l])
        gy = -(self.norm_x[k] * self.norm_y[l]) * l * np.pi \
            * np.outer(self.cos_x[k], self.sin_y[l])
        return np.stack([gx, gy], axis=-1)

    # -- full-Nyquist transforms --------------------------------------------

    def gradient_coefficients(self, v):
        """s[k, l] = <v, grad zeta_kl> by the midpoint rule, all modes."""
        g = self.grid
        A = np.einsum("ki,ij,lj->kl", self.sin_x, v[:, :, 0], self.cos_y)
        B = np.einsum("ki,ij,lj->kl", self.cos_x, v[:, :, 1], self.sin_y)
        k = np.arange(g.nx)[:, None]
        l = np.arange(g.ny)[None, :]
        cc = self.norm_x[:, None] * self.norm_y[None, :]
        return -cc * np.pi * (k * A + l * B) * g.hx * g.hy

    def scalar_coefficients(self, f):
        g = self.grid
        A = np.einsum("ki,ij,lj->kl", self.cos_x, f, self.cos_y)
        return self.norm_x[:, None] * self.norm_y[None, :] * A * g.hx * g.hy

    def _reconstruct_gradient(self, coef):
        """Sample sum coef[k,l] grad zeta_kl on the grid."""
        cc = self.norm_x[:, None] * self.norm_y[None, :] * coef
        k = np.arange(self.grid.nx)[:, None]
        l = np.arange(self.grid.ny)[None, :]
        gx = -np.einsum("kl,ki,lj->ij", cc * k * np.pi, self.sin_x, self.cos_y)
        gy = -np.einsum("kl,ki,lj->ij", cc * l * np.pi, self.cos_x, self.sin_y)
        return np.stack([gx, gy], axis=-1)

    def _reconstruct_scalar(self, coef):
        cc = self.norm_x[:, None] * self.norm_y[None, :] * coef
        return np.einsum("kl,ki,lj->ij", cc, self.cos_x, self.cos_y)

    @property
    def laplace_symbol(self):
        k = np.arange(self.grid.nx, dtype=float)[:, None]
        l = np.arange(self.grid.ny, dtype=float)[None, :]
        lam = np.pi**2 * (k**2 + l**2)
        lam[0, 0] = 1.0
        return lam


def neumann_eigenbasis(grid, cutoff):
    """Eigenpairs (Lambda, zeta) with per-direction index up to the cutoff.

    The constant mode (0, 0) has eigenvalue zero and is excluded.  Midpoint
    sampling resolves cosines up to index n-1, so larger cutoffs are refused.
    """
    if cutoff >= grid.nx or cutoff >= grid.ny:
        raise SimulationError(
            f"mode cutoff {cutoff} exceeds the grid Nyquist index "
            f"({min(grid.nx, grid.ny) - 1})"
        )
    if cutoff < 1:
        raise SimulationError("mode cutoff must be at least 1")
    modes = [(k, l) for k in range(cutoff + 1) for l in range(cutoff + 1)
             if (k, l) != (0, 0)]
    lam = np.array([np.pi**2 * (k**2 + l**2) for (k, l) in modes])
    order = np.argsort(lam, kind="stable")
    modes = [modes[i] for i in order]
    lam = lam[order]

    kx = np.arange(grid.nx)
    ky = np.arange(grid.ny)
    basis = SpectralBasis(
        grid=grid,
        cutoff=cutoff,
        modes=modes,
        lam=lam,
        cos_x=np.cos(np.outer(kx, np.pi * grid.x)),
        sin_x=np.sin(np.outer(kx, np.pi * grid.x)),
        cos_y=np.cos(np.outer(ky, np.pi * grid.y)),
        sin_y=np.sin(np.outer(ky, np.pi * grid.y)),
        norm_x=np.where(kx == 0, 1.0, np.sqrt(2.0)),
        norm_y=np.where(ky == 0, 1.0, np.sqrt(2.0)),
    )
    return basis


def helmholtz_project(v, basis):
    """Split v into solenoidal and gradient parts, v = H[v] + grad Phi.

    Phi solves the weak Neumann problem <grad Phi, grad zeta> = <v, grad zeta>
    over the full resolvable cosine basis; H[v] = v - grad Phi then has zero
    weak divergence and zero weak normal trace by construction.
    """
    s = basis.gradient_coefficients(v)
    coef = s / basis.laplace_symbol
    coef[0, 0] = 0.0
    h_perp = basis._reconstruct_gradient(coef)
    phi = basis._reconstruct_scalar(coef)
    return v - h_perp, h_perp, phi


def weak_divergence_residual(v, basis):
    """Largest weak-form divergence coefficient |<v, grad zeta_kl>|."""
    return float(np.abs(basis.gradient_coefficients(v)).max())


def pn_truncate(v, basis, n_modes):
    """Gradient-part reconstruction restricted to the first n_modes tracked modes."""
    if n_modes > len(basis.modes):
        raise SimulationError("truncation order exceeds the tracked mode count")
    s = basis.gradient_coefficients(v)
    coef = np.zeros_like(s)
    for (k, l), lam in zip(basis.modes[:n_modes], basis.lam[:n_modes]):
        coef[k, l] = s[k, l] / lam
    return basis._reconstruct_gradient(coef)


# --------------------------------------------------------------------------
# acoustic mode tracking
# --------------------------------------------------------------------------

@dataclass
class AcousticTrace:
    """Time series of the density and momentum mode coefficients.

    b[r] = integral of (rho - rho_bar)/eps against the eigenfunction;
    a[V] = Lambda^(-1/2) integral of the momentum against its gradient.
    """

    modes: list
    lam: np.ndarray
    times: list = field(default_factory=list)
    b: list = field(default_factory=list)      # rows: one sample, per mode
    a: list = field(default_factory=list)

    def append(self, t, b_row, a_row):
        self.times.append(float(t))
        self.b.append(np.asarray(b_row, dtype=float))
        self.a.append(np.asarray(a_row, dtype=float))

    def arrays(self):
        return (np.asarray(self.times), np.vstack(self.b) if self.b else np.empty((0, 0)),
                np.vstack(self.a) if self.a else np.empty((0, 0)))


def mode_coefficients(state, basis, params, modes=None):
    """Sample (b_n, a_n) for the tracked modes from the current fluid state."""
    g = basis.grid
    if modes is None:
        modes = basis.modes
    r = (state.rho - params.rho_bar) / params.epsilon
    s_r = basis.scalar_coefficients(r)
    s_v = basis.gradient_coefficients(state.m)
    b_row, a_row = [], []
    for (k, l) in modes:
        lam = np.pi**2 * (k**2 + l**2)
        b_row.append(s_r[k, l])
        a_row.append(s_v[k, l] / np.sqrt(lam))
    return np.array(b_row), np.array(a_row)


def fit_frequency(times, signal):
    """Dominant angular frequency of a (possibly decaying) oscillation.

    Resamples to a uniform grid, applies a Hann window, zero-pads the DFT and
    refines the peak bin by quadratic interpolation of the log magnitude.
    """
    times = np.asarray(times, dtype=float)
    signal = np.asarray(signal, dtype=float)
    if len(times) < 8 or np.allclose(signal, signal[0]):
        raise SimulationError("no signal: trace too short or constant")
    tu = np.linspace(times[0], times[-1], len(times))
    su = np.interp(tu, times, signal)
    su = su - su.mean()
    if not np.any(su):
        raise SimulationError("no signal: trace is constant")
    dt = tu[1] - tu[0]
    padded = 8 * len(su)
    spec = np.abs(np.fft.rfft(su * np.hanning(len(su)), padded))
    k = int(np.argmax(spec[1:])) + 1
    if 1 <= k < len(spec) - 1 and spec[k - 1] > 0 and spec[k + 1] > 0:
        ya, yb, yc = np.log(spec[k - 1]), np.log(spec[k]), np.log(spec[k + 1])
        denom = ya - 2.0 * yb + yc
        shift = 0.5 * (ya - yc) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    freq = (k + shift) / (padded * dt)
    return 2.0 * np.pi * freq


@dataclass
class ModeResidual:
    mode: tuple
    continuity_residual: float     # normalised residual of eps b' = sqrt(L) a
    momentum_source: float         # max |eps a' + p'(rho_bar) sqrt(L) b| (raw)
    omega_fit: float
    omega_theory: float


def acoustic_residual(trace, params):
    """Finite-difference residuals of the mode oscillator and a frequency fit.

    The continuity-side equation eps db/dt = sqrt(Lambda) a carries no source
    term, so its centred residual measures pure discretisation error; the
    momentum-side residual is reported as the empirical slow forcing.
    """
    times, B, A = trace.arrays()
    if len(times) < 3:
        raise SimulationError("no signal: need at least 3 trace samples")
    eps = params.epsilon
    p_prime = params.gamma * params.c_p * params.rho_bar ** (params.gamma - 1.0)
    out = []
    for j, (k, l) in enumerate(trace.modes):
        lam = trace.lam[j]
        b, a = B[:, j], A[:, j]
        amp = np.abs(b).max()
        if amp == 0.0 and np.abs(a).max() == 0.0:
            raise SimulationError("no signal: trace is identically zero")
        dtm = times[2:] - times[:-2]
        db = (b[2:] - b[:-2]) / dtm
        da = (a[2:] - a[:-2]) / dtm
        r1 = np.abs(eps * db - np.sqrt(lam) * a[1:-1]).max()
        r2 = np.abs(eps * da + p_prime * np.sqrt(lam) * b[1:-1]).max()
        scale = max(amp, np.abs(a).max() / np.sqrt(p_prime)) * np.sqrt(lam * p_prime)
        omega = fit_frequency(times, b if amp > 0 else a)
        out.append(ModeResidual(
            mode=(k, l),
            continuity_residual=float(r1 / scale),
            momentum_source=float(r2),
            omega_fit=float(omega),
            omega_theory=float(np.sqrt(p_prime * lam) / eps),
        ))
    return out


def project_or_fail(v, basis, tol=1e-8):
    """Helmholtz projection that enforces the weak-divergence tolerance."""
    h, h_perp, phi = helmholtz_project(v, basis)
    resid = weak_divergence_residual(h, basis)
    if resid > tol:
        raise ProjectionError(f"projection residual {resid:.3e} exceeds {tol:.1e}")
    return h, h_perp, phi
