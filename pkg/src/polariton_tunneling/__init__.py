"""Dressed electron states of a microcavity-embedded two-dimensional electron gas.

The bare electron injected in the second subband couples, through the cavity
vacuum field, to the continuum of intersubband polariton modes.  The reduced
Hamiltonian is an arrowhead matrix; diagonalizing it once gives the electron
spectral function for every wavevector outside the Fermi sea, and from there
the tunneling injection rates and the electroluminescence map.
"""

from .errors import (
    ConsistencyError,
    DarkStateError,
    DimensionCapError,
    NoResonanceError,
    ParameterError,
    SolverError,
    UndefinedEfficiencyError,
)
from .params import (
    DeviceParams,
    cavity_dispersion,
    collective_coupling,
    growth_wavevector,
    resonant_wavevector,
    subband_dispersion,
)
from .polariton import (
    BranchPoint,
    PolaritonTable,
    QGrid,
    branch_point,
    bright_coupling,
    continuum_density,
    photon_amplitudes,
    polariton_frequencies,
    polariton_table,
    ring_coupling,
)
from .arrowhead import (
    ArrowheadMatrix,
    EigenSystem,
    build_fano_matrix,
    dump_eigensystem,
    eigendecompose_arrowhead,
    eigendecompose_dense,
    load_eigensystem,
)
from .spectral import (
    SpectralCurve,
    SpectralLines,
    broaden,
    spectral_function_subband1,
    spectral_function_subband2,
)
from .electroluminescence import (
    ELMap,
    InjectorSpec,
    Rates,
    default_k_grid,
    electroluminescence_map,
    emission_distribution,
    injection_rate,
    injector_shape,
    photon_ring_weight,
    quantum_efficiency,
    radiative_rate,
    state_rates,
)

__version__ = "0.1.0"
