"""Motion-induced particle creation in a cavity made leaky by a delta mirror."""
from .coupling import DriveSpec, EffectiveParams, effective_params, find_resonant_partner
from .kernels import BACKEND
from .rwa import ThermalState, build_generator, propagate, response
from .spectral import CavityGeometry, Dominance, Mode, build_mode, eigenfrequency_roots, spectrum

__all__ = [
    "BACKEND", "CavityGeometry", "Dominance", "DriveSpec", "EffectiveParams", "Mode",
    "ThermalState", "build_generator", "build_mode", "effective_params",
    "eigenfrequency_roots", "find_resonant_partner", "propagate", "response", "spectrum",
]
