"""Operator-theoretic quantities of smooth Jordan curves and the Coulomb gas
confined to them: Grunsky matrix, Fredholm determinant, Loewner energy,
linear-statistic predictions, and independent potential-theory / Monte Carlo
cross-checks."""

from .boundary import (
    BoundarySeries,
    HSolution,
    Prediction,
    analyze_g,
    conjugate,
    identity_lemma_gvar,
    log_selberg,
    predict,
    residual_inteq,
    solve_h,
    solve_resolvent,
)
from .curve import ConformalMap, CurveSamples, deform, make_curve, sample_curve
from .gas import (
    EstimatorReport,
    GasConfig,
    GasRun,
    batch_means,
    brute_force,
    brute_force_expectation,
    diagnostics,
    energy,
    fekete_deviation,
    mcmc_run,
    thermo_integrate,
)
from .grunsky import (
    DVector,
    GrunskyData,
    KOperator,
    build_operators,
    compute_grunsky,
    deformed_operators,
    fredholm_det,
)
from .potential import (
    NystromGrid,
    exterior_energy,
    interior_dirichlet_energy,
    neumann_jump_energy,
    np_fourier_matrix,
    nystrom_grid,
)

__all__ = [
    "ConformalMap",
    "CurveSamples",
    "make_curve",
    "deform",
    "sample_curve",
    "GrunskyData",
    "KOperator",
    "DVector",
    "compute_grunsky",
    "build_operators",
    "fredholm_det",
    "deformed_operators",
    "BoundarySeries",
    "HSolution",
    "Prediction",
    "analyze_g",
    "conjugate",
    "solve_resolvent",
    "solve_h",
    "residual_inteq",
    "predict",
    "identity_lemma_gvar",
    "log_selberg",
    "NystromGrid",
    "nystrom_grid",
    "np_fourier_matrix",
    "exterior_energy",
    "interior_dirichlet_energy",
    "neumann_jump_energy",
    "GasConfig",
    "GasRun",
    "EstimatorReport",
    "energy",
    "mcmc_run",
    "batch_means",
    "brute_force",
    "brute_force_expectation",
    "thermo_integrate",
    "fekete_deviation",
    "diagnostics",
]

__version__ = "0.1.0"
