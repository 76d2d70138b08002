"""Dynamical decoupling of a qubit dephased by a particle on the half-line.

The bath Hamiltonians H_alpha = p^2 + 2 alpha p (Dirichlet boundary at the
origin) are exactly solvable; this package simulates the bang-bang {1, X}
decoupling cycle, the resulting qubit coherence, its n -> infinity limits,
and the short-time (Zeno) decay profile, with two faithful discretizations
and an analysis/CLI layer that reproduces the published tables.
"""

from .grids import (
    Grid,
    Line,
    QubitBathState,
    WaveFunction,
    build_grid,
    cat_state,
    inner_product,
    normalize,
    odd_extend,
    restrict,
    sample,
    snapped_grid,
    tail_mass,
    tail_overlap,
    wavefunction_from_csv,
    wavefunction_to_csv,
)
from .wavexpr import ExprSyntaxError, NonNormalizableError, WaveExpr, parse_wave_expr
from .propagators import (
    DFTMatrix,
    PropagatorMatrix,
    Scheme,
    apply_hamiltonian,
    dft_matrix,
    fourier_step_pair,
    kernel_propagator,
    load_propagator,
    save_propagator,
    shift_left,
    shift_right,
)
from .ddengine import (
    DDParams,
    DDRunResult,
    PropagatorCache,
    ReducedDensityMatrix,
    TrotterOrder,
    barrier_approximation,
    dd_evolve,
    dd_offdiagonal,
    dd_run,
    free_offdiagonal,
    predicted_limit,
    survival_amplitude,
    trotter_product,
)
from .analysis import (
    DecayProfile,
    SweepTable,
    TABLE1_ROWS,
    convergence_sweep,
    decay_profile,
    fit_exponential,
    fit_quadratic,
    table1_sweep,
    zeno_coefficient,
)

__version__ = "0.1.0"
