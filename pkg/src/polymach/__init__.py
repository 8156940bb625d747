"""Compressible FENE bead-spring polymer flow with a Mach continuation harness."""

from .parameters import (Params, ScaledNumbers, ValidationReport, rouse_matrix,
                         rouse_min_eigenvalue, scaled_numbers, validate)
from .fene import (BallGrid, Maxwellian, QGrid, SpringPotential, build_maxwellian,
                   build_qgrid, fene_eval, maxwellian_gradient_identity_check,
                   verify_assumptions)
from .grid import Grid2D
from .fluid import FluidSolver, FluidState, pressure, pressure_potential, stress
from .fokker_planck import (ConfigDistribution, FokkerPlanckSolver, KramersStress,
                            PolymerDensity, entropy_fisher, kramers_identity_check,
                            kramers_tensor, number_density, tau1)
from .acoustics import (AcousticTrace, SpectralBasis, acoustic_residual,
                        fit_frequency, helmholtz_project, mode_coefficients,
                        neumann_eigenbasis, pn_truncate)
from .coupled import CoupledIntegrator, CoupledState, EnergyLedger
from .config import RunConfig, parse_config
from .harness import (ConvergenceReport, RunResult, build_problem,
                      essential_residual_split, run_continuation, simulate,
                      well_prepared_init)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
