"""Finite-difference lab for the Laplace and heat equations with a flat cone metric."""
from .geometry import (BallDomain, ConeParams, ConePoint, ParabolicPoint, ParameterError,
                       cone_distance, distance_to_singular_set, dyadic_bands, in_ball,
                       parabolic_distance, sample_pairs)
from .operators import (GridSpec, ScalarField, assemble_laplacian, apply, first_derivatives,
                        read_field, weighted_second_derivatives, write_field)

__all__ = [
    "BallDomain", "ConeParams", "ConePoint", "ParabolicPoint", "ParameterError", "cone_distance",
    "distance_to_singular_set", "dyadic_bands", "in_ball", "parabolic_distance", "sample_pairs",
    "GridSpec", "ScalarField", "assemble_laplacian", "apply", "first_derivatives", "read_field",
    "weighted_second_derivatives", "write_field",
]
__version__ = "0.1.0"
