"""DFT conventions: forward unnormalized, inverse carries ``1/n``.

    xhat_f = sum_t x_t exp(-2*pi*i <f, t> / p),     f in [p]^d
    x_t    = (1/n) sum_f xhat_f exp(2*pi*i <f, t> / p)

Arrays are flat length-``p^d`` vectors in row-major order.
"""

from __future__ import annotations

import numpy as np

from .signal import DiscreteSignal


def dft(signal: DiscreteSignal) -> np.ndarray:
    shape = (signal.side,) * signal.dim
    return np.fft.fftn(signal.values.reshape(shape)).ravel()


def inverse_dft(spectrum: np.ndarray, side: int, dim: int) -> DiscreteSignal:
    shape = (side,) * dim
    values = np.fft.ifftn(np.asarray(spectrum, dtype=complex).reshape(shape)).ravel()
    return DiscreteSignal(side=side, dim=dim, values=values)
