"""Exact energy computations for Fourier-sparse signals.

The time-domain energy of ``x`` on ``[0, T]^d`` is
``||x||_T^2 = T^{-d} \\int_{[0,T]^d} |x(t)|^2 dt``.  For a sparse signal this
is a closed-form quadratic ``sum_{i,j} v_i conj(v_j) K(f_i - f_j)`` in the
Gram kernel

    K(delta) = prod_c (exp(2*pi*i*delta_c*T) - 1) / (2*pi*i*delta_c*T),

evaluated here in the cancellation-free form ``exp(i*pi*delta*T) *
sinc(delta*T)`` per axis.  No quadrature is involved.
"""

from __future__ import annotations

import numpy as np

from .signal import FourierSparseSignal


def gram_kernel(delta: np.ndarray, horizon: float) -> np.ndarray:
    """``K(delta)`` for frequency differences ``delta`` of shape ``(..., d)``."""
    delta = np.asarray(delta, dtype=float)
    x = delta * horizon
    per_axis = np.exp(1j * np.pi * x) * np.sinc(x)
    return per_axis.prod(axis=-1)


def gram_matrix(freqs: np.ndarray, horizon: float) -> np.ndarray:
    """Hermitian PSD matrix ``G[i, j] = <e_i, e_j>_T = K(f_i - f_j)``."""
    freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
    delta = freqs[:, None, :] - freqs[None, :, :]
    return gram_kernel(delta, horizon)


def continuous_norm_sq(signal: FourierSparseSignal) -> float:
    """``||x||_T^2`` in closed form via the Gram kernel."""
    g = gram_matrix(signal.freqs, signal.horizon)
    v = signal.coeffs
    val = np.einsum("i,ij,j->", v, g, np.conj(v))
    return max(float(val.real), 0.0)


def cross_energy(
    freqs_a: np.ndarray,
    coeffs_a: np.ndarray,
    freqs_b: np.ndarray,
    coeffs_b: np.ndarray,
    horizon: float,
) -> complex:
    """``<a, b>_T = T^{-d} \\int a(t) conj(b(t)) dt`` for two sparse signals."""
    fa = np.atleast_2d(np.asarray(freqs_a, dtype=float))
    fb = np.atleast_2d(np.asarray(freqs_b, dtype=float))
    delta = fa[:, None, :] - fb[None, :, :]
    k = gram_kernel(delta, horizon)
    return complex(np.einsum("i,ij,j->", coeffs_a, k, np.conj(coeffs_b)))


def weighted_norm_sq(evaluator, points: np.ndarray, weights: np.ndarray) -> float:
    """``||x||_{S,w}^2 = sum_t w_t |x(t)|^2`` for positive weights."""
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0:
        return 0.0
    if np.any(weights <= 0):
        raise ValueError("weights must be positive")
    vals = np.asarray(evaluator(points))
    return float(np.sum(weights * np.abs(vals) ** 2))
