"""Predator-prey dynamics with an additive Allee effect and Holling type IV prey group defense."""

from .model import AlleeRegime, Matrix2, ModelParams, State, allee_regime, jacobian, vector_field
from .equilibria import Equilibrium, ExistenceReport, all_equilibria, axial_roots, coexistence_points
from .stability import Classification, StabilityReport, classify, eigenvalues_2x2
from .dynamics import IntegratorConfig, Trajectory, classify_attractor, integrate

__version__ = "0.1.0"
