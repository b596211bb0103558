"""Simulation toolkit for SDEs driven by Brownian and fractional Brownian motion.

Modules:

* :mod:`mixedsde.grid`: time grids and sampled paths
* :mod:`mixedsde.drivers`: Brownian and fractional Brownian samplers, seeds, driver norm
* :mod:`mixedsde.fraccalc`: Weyl-Marchaud derivatives, pathwise integrals, norms, audits
* :mod:`mixedsde.coefficients`: coefficient sets, moduli of continuity, presets
* :mod:`mixedsde.euler`: Euler scheme and stopping times
* :mod:`mixedsde.bihari`: Bihari-type bound
* :mod:`mixedsde.harness`: studies and reports (CLI in :mod:`mixedsde.cli`)
"""

from .bihari import (
    ESCAPED,
    BihariParams,
    barrier_F,
    barrier_F_inverse,
    beta_constant,
    bihari_bound,
)
from .coefficients import CoefficientSet, ModulusOfContinuity, preset, probe_hypotheses, rho1, rho2
from .drivers import derive_seed, driver_norm, fbm_covariance, sample_bm, sample_fbm
from .euler import (
    EulerConfig,
    SolutionPath,
    euler_solve,
    moment_diagnostic,
    stop_process,
    stopping_time_TR,
    stopping_time_tauM,
)
from .fraccalc import FracOrder, NormReport, gls_integral, norms, weyl_left, weyl_right_of_shifted
from .grid import SamplePath, TimeGrid

__version__ = "0.1.0"

__all__ = [
    "ESCAPED",
    "BihariParams",
    "CoefficientSet",
    "EulerConfig",
    "FracOrder",
    "ModulusOfContinuity",
    "NormReport",
    "SamplePath",
    "SolutionPath",
    "TimeGrid",
    "barrier_F",
    "barrier_F_inverse",
    "beta_constant",
    "bihari_bound",
    "derive_seed",
    "driver_norm",
    "euler_solve",
    "fbm_covariance",
    "gls_integral",
    "moment_diagnostic",
    "norms",
    "preset",
    "probe_hypotheses",
    "rho1",
    "rho2",
    "sample_bm",
    "sample_fbm",
    "stop_process",
    "stopping_time_TR",
    "stopping_time_tauM",
    "weyl_left",
    "weyl_right_of_shifted",
]
