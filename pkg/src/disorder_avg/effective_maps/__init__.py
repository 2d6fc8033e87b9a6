"""Symmetric-sector generators and maps of the disorder-averaged dynamics."""

from .closed_forms import (
    coherent_generator,
    dephasing_generator,
    field_dephasing_generator,
    kappa1_closed,
    kappa2_closed,
    kappa3_closed,
    lindbladian_closed,
)
from .model import DisorderModel
from .moments import (
    CumulantSet,
    UnsupportedOrderError,
    cumulant,
    cumulants,
    lindbladian,
    lindbladian_terms,
    mean_commutator,
    moment_superop,
)
from .sk import sk_exact_generator, sk_exact_map, sk_lindbladian
from .weak_disorder import (
    UnsupportedModelError,
    WeakDisorderGenerator,
    heisenberg_zz_commutator,
    trig_double_integrals,
    weak_disorder_generator,
)

__all__ = [
    "CumulantSet",
    "DisorderModel",
    "UnsupportedModelError",
    "UnsupportedOrderError",
    "WeakDisorderGenerator",
    "coherent_generator",
    "cumulant",
    "cumulants",
    "dephasing_generator",
    "field_dephasing_generator",
    "heisenberg_zz_commutator",
    "kappa1_closed",
    "kappa2_closed",
    "kappa3_closed",
    "lindbladian",
    "lindbladian_closed",
    "lindbladian_terms",
    "mean_commutator",
    "moment_superop",
    "sk_exact_generator",
    "sk_exact_map",
    "sk_lindbladian",
    "trig_double_integrals",
    "weak_disorder_generator",
]
