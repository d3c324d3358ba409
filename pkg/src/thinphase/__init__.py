"""Effective conductivity of composites with thin interphases."""

from .assemblage import (
    AssemblageSpec,
    DomainError,
    IntermediateConductivityWarning,
    VolumeFractions,
    approx_sigma_star,
    delta_sigma_first_order,
    exact_sigma_star,
    high_contrast_limit,
    laminate_sigma_star,
    low_contrast_limit,
    radius_from_fraction,
    reference_sigma_star,
    volume_fractions,
)
from .shift import (
    DeltaSigmaResult,
    GradedProfile,
    InterphaseStack,
    assemble_delta_tensor,
    graded_interphase_delta,
    interface_shift_delta,
    interface_shift_delta_tn,
    multi_interface_shift,
    multi_interphase_delta,
    single_interphase_delta,
)
from .tensors import (
    ConductivityTensor,
    InterfaceMesh,
    InterfacePatch,
    decompose_field,
    make_isotropic,
    quadratic_form,
)

__version__ = "0.1.0"
