"""Exclusion process with a slow bond: lattice dynamics, hydrodynamic PDEs,
large-deviation functionals and likelihood-ratio estimates."""

__version__ = "0.1.0"

from .fields import DensityField, Perturbation, make_field, make_profile  # noqa: E402
from .lattice import Configuration, DynamicsSpec, Trajectory, simulate  # noqa: E402

__all__ = [
    "Configuration",
    "DensityField",
    "DynamicsSpec",
    "Perturbation",
    "Trajectory",
    "make_field",
    "make_profile",
    "simulate",
]
