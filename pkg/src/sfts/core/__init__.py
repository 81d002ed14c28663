from .dft import dft, inverse_dft
from .norms import continuous_norm_sq, cross_energy, gram_kernel, gram_matrix, weighted_norm_sq
from .oracle import NoisyOracle
from .rng import RngStream
from .signal import (
    DiscreteSignal,
    FourierSparseSignal,
    coords_to_index,
    index_to_coords,
    sparse_spectrum_signal,
)

__all__ = [
    "DiscreteSignal",
    "FourierSparseSignal",
    "NoisyOracle",
    "RngStream",
    "continuous_norm_sq",
    "coords_to_index",
    "cross_energy",
    "dft",
    "gram_kernel",
    "gram_matrix",
    "index_to_coords",
    "inverse_dft",
    "sparse_spectrum_signal",
    "weighted_norm_sq",
]
