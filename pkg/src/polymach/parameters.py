"""Dimensionless model parameters and their admissibility checks."""
from dataclasses import dataclass, field

import numpy as np

SYMMETRY_TOL = 1e-12


def rouse_matrix(n_springs):
    """Connectivity matrix of a topologically linear chain, tridiag[-1, 2, -1]."""
    A = 2.0 * np.eye(n_springs)
    for i in range(n_springs - 1):
        A[i, i + 1] = -1.0
        A[i + 1, i] = -1.0
    return A


@dataclass(frozen=True)
class Params:
    """All dimensionless constants of the coupled solvent/polymer model.

    Immutable after construction; safe to share across workers.
    """

    epsilon: float = 0.1          # Mach number
    gamma: float = 2.0            # adiabatic exponent of p = c_p rho^gamma
    c_p: float = 1.0
    mu_s: float = 1.0             # shear viscosity
    mu_b: float = 0.1             # bulk viscosity
    beta_comp: float = 0.5        # 1 - beta = eta_p / (eta_s + eta_p)
    delta: float = 0.1            # centre-of-mass diffusion
    xi_bar: float = 0.1           # quadratic interaction coefficient
    rho_bar: float = 1.0          # static solvent density
    K: int = 1                    # number of springs in the chain
    b: tuple = (4.0,)             # extensibility limit per spring
    A: tuple = ((2.0,),)          # Rouse matrix, row tuples
    dim_x: int = 2
    dim_q: int = 2                # per-spring configuration dimension

    def __post_init__(self):
        object.__setattr__(self, "b", tuple(float(v) for v in self.b))
        object.__setattr__(self, "A", tuple(tuple(float(v) for v in row) for row in self.A))

    @property
    def rouse(self):
        return np.array(self.A, dtype=float)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    a0: float = None

    @property
    def ok(self):
        return not self.violations


@dataclass(frozen=True)
class ScaledNumbers:
    """Effective coefficients of the momentum equation after the Mach scaling.

    The 1/Ma^2 prefactor of the quadratic interaction term cancels against
    the Ma^2 scaling of the interaction kernel, so that coefficient is
    epsilon-independent.
    """

    pressure_prefactor: float
    interaction_coefficient: float
    deborah: float = 1.0
    reynolds: float = 1.0
    body_force: float = 0.0


def rouse_min_eigenvalue(A):
    """Smallest eigenvalue a0 of a symmetric connectivity matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("matrix not symmetric")
    if np.abs(A - A.T).max() > SYMMETRY_TOL * max(1.0, np.abs(A).max()):
        raise ValueError("matrix not symmetric")
    return float(np.linalg.eigvalsh(A).min())


def validate(params):
    """Report-style admissibility check; empty violation list means valid."""
    rep = ValidationReport()
    v = rep.violations
    if not params.gamma > 1.5:
        v.append("gamma <= 3/2")
    if not params.c_p > 0:
        v.append("c_p <= 0")
    if not params.mu_s > 0:
        v.append("mu_s <= 0")
    if params.mu_b < 0:
        v.append("mu_b < 0")
    if not params.delta > 0:
        v.append("delta <= 0")
    if not params.rho_bar > 0:
        v.append("rho_bar <= 0")
    if not (0.0 < params.epsilon < 1.0):
        v.append("epsilon outside (0, 1)")
    if not (0.0 < params.beta_comp < 1.0):
        v.append("1 - beta outside (0, 1)")
    if params.xi_bar < 0:
        v.append("xi_bar < 0")
    if params.K < 1:
        v.append("K < 1")
    if len(params.b) != params.K:
        v.append("len(b) != K")
    if any(bi <= 2.0 for bi in params.b):
        v.append("b_i <= 2 (Maxwellian decay exponent would be <= 1)")
    if params.dim_x not in (2, 3):
        v.append("dim_x not in {2, 3}")
    if params.dim_q != params.dim_x:
        v.append("dim_q != dim_x")
    A = params.rouse
    if A.shape != (params.K, params.K):
        v.append("Rouse matrix is not K x K")
    else:
        try:
            rep.a0 = rouse_min_eigenvalue(A)
            if rep.a0 <= 0:
                v.append("Rouse matrix not positive definite (a0 <= 0)")
        except ValueError:
            v.append("Rouse matrix not symmetric")
    return rep


def scaled_numbers(params):
    """Effective coefficients entering the scaled momentum equation."""
    return ScaledNumbers(
        pressure_prefactor=1.0 / params.epsilon**2,
        interaction_coefficient=params.xi_bar,
    )
