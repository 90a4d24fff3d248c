"""Generalized teleportation fidelity and singlet fraction for multi-DoF particles."""

__version__ = "0.1.0"

from .errors import ContractError, DegenerateStateError, DomainError  # noqa: E402
from .linalg import (DensityMatrix, haar_unitary, partial_trace, random_density,  # noqa: E402
                     tensor_product, uhlmann_fidelity)
from .multidof import DistState, DofLayout, build_dist_state, noisy_singlet  # noqa: E402
from .indist import IndistState, IndistTerm, indist_mes  # noqa: E402
from .fidelity import fef, gsf, gsf_upper_bound, kay_monogamy_check  # noqa: E402

__all__ = [
    "ContractError", "DegenerateStateError", "DomainError",
    "DensityMatrix", "haar_unitary", "partial_trace", "random_density", "tensor_product",
    "uhlmann_fidelity",
    "DistState", "DofLayout", "build_dist_state", "noisy_singlet",
    "IndistState", "IndistTerm", "indist_mes",
    "fef", "gsf", "gsf_upper_bound", "kay_monogamy_check",
]
