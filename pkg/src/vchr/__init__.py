"""Linear, second-order, energy-stable IEQ schemes for the viscous
Cahn-Hilliard equation with hyperbolic relaxation."""

from .diagnostics import EnergyRecord
from .elliptic import CGFailure, SpdOperator, SpectralPlan, cg_solve
from .grid import BC, GridSpec
from .ic import InitialCondition, make_ic
from .potential import PotentialSpec
from .stepper import (ModelParams, Scheme, SchemeConfig, StepperState, init_state, run,
                      step_bdf, step_cn)

__version__ = "0.1.0"

__all__ = [
    "BC", "CGFailure", "EnergyRecord", "GridSpec", "InitialCondition", "ModelParams",
    "PotentialSpec", "Scheme", "SchemeConfig", "SpdOperator", "SpectralPlan",
    "StepperState", "cg_solve", "init_state", "make_ic", "run", "step_bdf", "step_cn",
]
