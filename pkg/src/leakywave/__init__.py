"""Guided-wave dispersion in layered plates coupled to unbounded media."""

from .materials import (
    FluidMaterial,
    IsotropicSolid,
    MATERIAL_LIBRARY,
    isotropic_from_lame,
    isotropic_from_speeds,
)
from .fem import Layer, LayerStack, assemble_stack, choose_order, solve_free_plate
from .coupling import CoupledSystem, couple, nlevp_residual
from .mep import EigenTuple, Tolerances, build_mep, solve_coupled
from .postprocess import (
    NP_TO_DB,
    ClassifyOptions,
    ModeSolution,
    PlateModel,
    SweepResult,
    characteristic_residual,
    classify_mode,
    dispersion_sweep,
    evaluate_fields,
)
from .config import ConfigError, RunConfig, load_config, parse_config

__version__ = "0.1.0"
