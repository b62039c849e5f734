"""Hermite-Galerkin spectral solver for the spatially homogeneous Boltzmann
equation with inverse-power-law collision kernels."""
from .basis import index_set, n_indices, rank, unrank
from .collision_models import (HybridModel, bgk_rhs, hybrid_rhs, linearized_operator,
                               quadratic_rhs, spectral_radius)
from .collision_tensor import CollisionTensor, assemble, load, memory_estimate, save
from .ipl_kernel import KernelModel, QuadratureSpec, bgk_tau, kernel_model, scaled_time_constant
from .solver import (BkwReference, Moments, SpectralState, bkw_coeffs, moments,
                     project_bigaussian, project_discontinuous, rk4_integrate)

__all__ = [
    "BkwReference", "CollisionTensor", "HybridModel", "KernelModel", "Moments",
    "QuadratureSpec", "SpectralState", "assemble", "bgk_rhs", "bgk_tau", "bkw_coeffs",
    "hybrid_rhs", "index_set", "kernel_model", "linearized_operator", "load",
    "memory_estimate", "moments", "n_indices", "project_bigaussian", "project_discontinuous",
    "quadratic_rhs", "rank", "rk4_integrate", "save", "scaled_time_constant",
    "spectral_radius", "unrank",
]
