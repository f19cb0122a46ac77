"""Constructive, certificate-producing experiments on additive structure
over small finite abelian groups: transforms, sumset statistics, span
covers, the spectral energy bound, and the density-increment driver."""

from .additive import (EquationSpec, PointSet, additive_energy, correlation,
                       correlation_counts, doubling_constant,
                       has_nondegenerate_solution, indicator,
                       lambda_bruteforce, lambda_fourier, solution_count,
                       spectrum, sumset, symmetry_set)
from .config import (Budgets, BsgConfig, CoverConstants, DriverKnobs,
                     DriverLimits)
from .errors import BudgetExceeded, PostconditionError
from .groups import (Character, GroupDescriptor, GroupElement, arithmetic,
                     character_eval, make_group)
from .harmonic import (GroupFunction, Measure, Side, convolve, dot,
                       fourier_forward, fourier_invert, lp_norm)
from .increment import (IncrementTranscript, L2Finish, LinfStep,
                        ManySolutions, SubspaceDescriptor, iteration_step,
                        l2_increment, linf_increment, restrict, roth_driver)
from .instances import (InstanceSpec, ParseError, build_instance,
                        parse_instance, random_point_set, solution_free_set,
                        subgroup_set)
from .spans import (CoverCertificate, SpanBasis, bsg_extract,
                    chang_spectrum_cover, core_subset_search, correlated_span,
                    energy_bound_check, is_dissociated,
                    maximal_dissociated_cover, shkredov_asym_cover,
                    span_enumerate, symset_cover)
from .verify import verify_suite

__version__ = "0.1.0"
