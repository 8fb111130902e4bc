"""Functional-representation toolkit for truncated bosonic many-body systems.

The package models quantum states as generating functionals of normal-ordered
correlation functions, evolves them with lifted Hamiltonian superoperators,
and builds the associated two-branch (chronological / antichronological)
Green functions, self-energy extraction, and inclusive scattering tables.
Every analytic object is cross-checked against direct computations on a
truncated Fock space (:mod:`lfun.fock`).
"""

from .fock import (
    FockSpace,
    ModeSet,
    PolyCoefficients,
    SparseOperator,
    build_poly_operator,
    coherent_state,
    heisenberg,
    thermal_state,
    vacuum_state,
    weyl_displacement,
)
from .lfunctional import (
    CorrelationTable,
    DegreeOverflowError,
    GaussianL,
    GaussPolyL,
    SigmaIndex,
    apply_generator,
    apply_weyl_element,
    equilibrium_gaussian,
    involution,
    l_from_density,
    positivity_residual,
    tilde_defect,
)
from .evolution import (
    AdiabaticReport,
    DressOperator,
    HatHamiltonian,
    SwitchingProfile,
    adiabatic_evolve,
    adiabatic_smatrix,
    adiabatic_trend,
    dress_rates,
    dressed_smatrix,
    evolve,
    interaction_picture_smatrix,
)
from .keldysh import (
    Diagram,
    FreePropagator,
    evaluate_diagrams,
    free_propagator,
    ggreen_exact,
    ggreen_switched,
    is_zero_channel,
    wick_diagrams,
)
from .dyson import (
    SpectralG,
    TwoPointG,
    dyson_solve,
    quasiparticle_poles,
    self_energy_diagrams,
    self_energy_extract,
)
from .inclusive import (
    InclusiveTable,
    SMatrixOp,
    beamsplitter,
    completeness_check,
    inclusive_cross_section,
    momentum_reduced_entry,
    s_hat_apply,
    sigma_bruteforce,
    sigma_from_shat,
)
from . import models

__version__ = "0.1.0"

__all__ = [
    "FockSpace",
    "ModeSet",
    "PolyCoefficients",
    "SparseOperator",
    "build_poly_operator",
    "coherent_state",
    "heisenberg",
    "thermal_state",
    "vacuum_state",
    "weyl_displacement",
    "CorrelationTable",
    "DegreeOverflowError",
    "GaussianL",
    "GaussPolyL",
    "SigmaIndex",
    "apply_generator",
    "apply_weyl_element",
    "equilibrium_gaussian",
    "involution",
    "l_from_density",
    "positivity_residual",
    "tilde_defect",
    "AdiabaticReport",
    "DressOperator",
    "HatHamiltonian",
    "SwitchingProfile",
    "adiabatic_evolve",
    "adiabatic_smatrix",
    "adiabatic_trend",
    "dress_rates",
    "dressed_smatrix",
    "evolve",
    "interaction_picture_smatrix",
    "Diagram",
    "FreePropagator",
    "evaluate_diagrams",
    "free_propagator",
    "ggreen_exact",
    "ggreen_switched",
    "is_zero_channel",
    "wick_diagrams",
    "SpectralG",
    "TwoPointG",
    "dyson_solve",
    "quasiparticle_poles",
    "self_energy_diagrams",
    "self_energy_extract",
    "InclusiveTable",
    "SMatrixOp",
    "beamsplitter",
    "completeness_check",
    "inclusive_cross_section",
    "momentum_reduced_entry",
    "s_hat_apply",
    "sigma_bruteforce",
    "sigma_from_shat",
    "models",
    "__version__",
]
