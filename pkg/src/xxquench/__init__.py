"""Entanglement of the end spins of an open XX chain after a global quench."""

__version__ = "0.1.0"

from .analysis import (
    PeakSummary,
    SweepGrid,
    alpha_map,
    first_peak,
    fwhm_alpha,
    scaling_sweep,
    time_sweep,
)
from .correlator import (
    FermionWord,
    dynamic_moment_naive,
    dynamic_moment_series,
    dynamic_moment_transfer,
    static_moment,
    static_moment_bell,
)
from .disorder import CouplingEnsemble, FlipEnsemble, ensemble_average, flip_mixture
from .entanglement import (
    EntanglementReport,
    concurrence,
    entanglement_report,
    fully_entangled_fraction,
    teleportation_fidelity,
)
from .lattice import (
    BellPairStateSpec,
    ChainSpec,
    CouplingProfile,
    MixtureSpec,
    ProductStateSpec,
    canted_state,
    flipped_state,
    gaussian_couplings,
    neel_state,
)
from .propagator import (
    Propagator,
    PropagatorSeries,
    analytic_propagator,
    analytic_series,
    numeric_propagator,
    numeric_series,
    walk_distribution,
)
from .rdm import TwoSpinDensityMatrix, rdm_bell, rdm_mixture, rdm_product, rdm_series
