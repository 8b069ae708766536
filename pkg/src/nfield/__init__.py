"""Solver and wellposedness lab for neural-field integral equations with delay."""

from .backend import active_backend, have_accel
from .delays import (ConstantDelay, DelayField, GeneralDelay, MetricDelay,
                     TransmissionDelay, ZeroDelay)
from .grids import (SpatialGrid, TimeGrid, make_time_grid, singleton_grid,
                    symmetric_interval, tensor_box, uniform_interval)
from .kernels import (AlphaDecay, ConstantMemory, ExponentialDecay, GaussianKernel,
                      GeneralKernel, Kernel, MexicanHat, PastDecay, PastGrowth,
                      SeparableKernel, SourceProfile, SpatialCallable,
                      SpatialKernel, TemporalKernel, UnsupportedModelError,
                      WizardHat, ZeroSpatial, two_population_kernel, zero_kernel)
from .model import (AssumptionReport, FieldModel, build_memory_truncation,
                    kernel_mass, validate_assumptions)
from .operator import FieldOperator, shift_lookup
from .prehistory import (Prehistory, constant_profile, gaussian_bump,
                         separable_history, zero_history)
from .rates import (CustomRate, FiringRate, Hill, Identity, Logistic, Square,
                    TanhSigmoid, certify_lipschitz)
from .solver import (CausalityReport, ContractionEstimate, NonConvergence,
                     OutcomeKind, SolutionOutcome, SolutionSegment, SolverConfig,
                     StepCollapse, TimeWindow, Trajectory, WindowDiagnostics,
                     check_volterra_property, estimate_step, extend_solution,
                     extend_window, picard_solve_window, restrict_window,
                     state_norm)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
