"""High-order DG spectral element solver for compressible flow with a modal relaxation-filter LES model."""

from .config import ConfigError, RunConfig, load_config
from .dg_operator import GasModel, InvalidStateError, dg_rhs, riemann_flux, two_point_kep_flux
from .driver import Simulation, run_simulation
from .les_filter import (FilterKernel, RelaxationFilter, SmagorinskyModel, build_filter_kernel,
                         load_presets, preset_kernel)
from .mesh import CartesianMesh, SolutionField, build_mesh, read_checkpoint, write_checkpoint
from .optimizer import bound_map, bound_unmap, filter_reference_to_les, nelder_mead
from .reference_element import ReferenceElement, reference_element
from .time_integrator import NumericalFailure, compute_dt, rk_step

__version__ = "0.1.0"
