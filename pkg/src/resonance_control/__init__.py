"""Weak-field coherent control of decay through overlapping resonances.

The package follows one pipeline: a coarse-grained resonance system is
binned, the binned propagation kernels give absolute or relative optimal
fields, the fields are expanded in Gaussian pulses and propagated back to
check the achieved populations.
"""
from .control import (ControlSolution, absolute_control, relative_control, scale_solution,
                      solve_relative, synthesize_field)
from .diagnostics import (MeasureReport, correlation_report, hadamard, hadamard_R,
                          log_hadamard, overlap_matrix)
from .dynamics import (KernelMatrices, TauFactors, build_Mc, build_Me, population,
                       population_c, population_trace, tau)
from .errors import (ArchiveError, CoarseGrainingWarning, IllConditionedError,
                     NumericalError, ValidationError)
from .pulses import (GaussianBasis, GaussianPulse, ShapedField, basis_matrix, faddeeva,
                     ftft_gaussian, solve_d, uniform_basis)
from .simplify import local_average, retention_sweep, smooth_expand, truncate_amplitudes
from .system import (HBAR_EV_FS, BinnedSystem, ResonanceSystem, bin_system,
                     generate_synthetic, identity_binning, load_archive, save_archive)

__version__ = "0.1.0"
