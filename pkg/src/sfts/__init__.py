"""Reconstruction of Fourier-sparse signals from few noisy samples.

Pipeline: oblivious sketching -> sketch distillation through a well-balanced
sampling procedure -> weighted least-squares recovery.  Works for continuous
1-D signals, d-dimensional signals with lattice frequencies, and discrete
DFT set query.
"""

from .core import (
    DiscreteSignal,
    FourierSparseSignal,
    NoisyOracle,
    RngStream,
    continuous_norm_sq,
    dft,
    inverse_dft,
    weighted_norm_sq,
)
from .estimate import (
    EstimationReport,
    RegressionProblem,
    estimate_1d_accurate,
    estimate_1d_optimal,
    estimate_hd,
    recover_noiseless_1d,
    set_query_discrete,
    weighted_lsq,
)
from .lattice import LatticeBasis, enumerate_ball, expand_candidates, snap_to_grid, sparsity_bounds
from .qsample import BlockedQuadraticFormTree, QuadraticFormTree
from .sketch import (
    BiasedTimeDensity,
    ObliviousSketch,
    distill_1d,
    distill_discrete,
    distill_hd,
    uniform_sketch,
    weighted_sketch_1d,
)
from .wbsp import (
    DiscreteSupport,
    FunctionFamily,
    WeightedSampleSet,
    fourier_family,
    orthonormalize,
    rand_bss_plus,
    verify_wbsp,
)

__version__ = "0.1.0"
