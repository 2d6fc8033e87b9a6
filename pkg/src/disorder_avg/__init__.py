"""Disorder-averaged dynamics of the random all-to-all transverse-field Ising model
in the permutation-symmetric operator sector."""

from .effective_maps import DisorderModel
from .evolver import Trajectory, evolve_short_time, evolve_sk_exact, evolve_weak_disorder, t_bound
from .observables import magnetization, magnetization_variance, polarized_state
from .sym_basis import SymBasis, SymState, SymSuperOp, get_basis

__all__ = [
    "DisorderModel",
    "SymBasis",
    "SymState",
    "SymSuperOp",
    "Trajectory",
    "evolve_short_time",
    "evolve_sk_exact",
    "evolve_weak_disorder",
    "get_basis",
    "magnetization",
    "magnetization_variance",
    "polarized_state",
    "t_bound",
]
