"""Littlewood-Paley analysis and a Friedrichs-Galerkin solver for non-resistive MHD on the torus."""
from .grid import (
    Grid,
    SpectralField,
    VectorField,
    advect,
    derivative,
    divergence,
    gradient,
    leray_project,
    lp_norm,
    multiply,
    random_divfree_field,
    random_field,
    sobolev_norm,
)
from .littlewood_paley import (
    DyadicPartition,
    band_energies,
    block,
    bony_decomposition,
    build_partition,
    commutator,
    default_partition,
    low_pass,
    paraproduct,
    remainder,
)
from .besov import (
    BesovParams,
    NormLedger,
    besov_norm,
    chemin_lerner_norm,
    interpolate_bound,
    lebesgue_besov_norm,
)
from .estimates import (
    Ensemble,
    VerificationReport,
    gronwall_bound,
    verify_bernstein,
    verify_commutator_new,
    verify_commutator_transport,
    verify_heat_smoothing,
    verify_product_law,
)
from .solver import (
    MHDState,
    RunRecord,
    SolverConfig,
    apriori_monitor,
    cauchy_study,
    energy_identity_residual,
    friedrichs_project,
    perturbation_study,
    rhs,
    simulate,
    step,
)

__version__ = "0.1.0"
