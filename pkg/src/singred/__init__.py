"""Numerics for singular cotangent-bundle reduction with a single orbit type."""

from .errors import (
    DegenerateFormError,
    InputError,
    IntegrationError,
    InvarianceError,
    UnsupportedError,
)
from .lie import LieAlgebra, get_algebra, so3, so3_u1, su2, u1
from .polynomial import Polynomial
from .strata import (
    IsotropyClass,
    Subgroup,
    annihilator_basis,
    enumerate_strata,
    fixed_set,
    isotropy_at,
    normalizer_algebra,
)

__version__ = "0.1.0"
