"""Numerical spectra of the linearized nonlocal operators around the instanton.

Typical use::

    from nlspectra import standard_kernel, solve_instanton, master_grid, restrict_to, build_grid, analyze
    k = standard_kernel()
    prof = solve_instanton(2.0, k, master_grid(10, 40))
    res = analyze(restrict_to(prof, build_grid(10, 40)), k).result
"""

from .cheeger import (CheegerConstants, CheegerReport, MarkovSystem, build_markov, cheeger_of_interval,
                      cheeger_scan, lawler_sokal_check, make_report, theoretical_D)
from .errors import ConfigError, HypothesisError, NonConvergenceError, SimplicityError, VerificationError
from .fitting import ExpFit, fit_exponential
from .instanton import (InstantonProfile, characteristic_rate, fit_decay_rate, instanton_derivative, master_grid,
                        restrict_to, solve_instanton, solve_mbeta)
from .kernels import (BoundaryKind, Grid, KernelSpec, boundary_mass, build_grid, convolve, get_kernel,
                      kernel_from_table, kernel_matrix, register_kernel, standard_kernel)
from .operators import (ChainPositivityReport, OperatorMatrix, SymmetrizedOperator, assemble, boundary_defect,
                        chain_positivity, symmetrize, weighted_inner)
from .spectral import (DecayParams, ShapeReport, SpectralResult, analyze, compare_to_instanton_derivative,
                       decay_params, full_spectrum, principal_eigenpair, rayleigh_trial, shape_report,
                       verify_eigen_decay)
from .scan import ScanConfig, ScanRow, emit_outputs, parse_config, read_scan_csv, run_scan, theorem81_verdict

__version__ = "0.1.0"
