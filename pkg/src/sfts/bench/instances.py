"""Synthetic instance generation with exactly scaled noise energies.

Continuous instances put frequencies uniformly on the eta-lattice inside
``[-F, F]^d`` with complex-Gaussian coefficients.  Noise is a mixture of
off-lattice tones (optionally orthogonalized against the candidate family)
and white per-sample noise, scaled so the total noise energy matches the SNR
target exactly.  Discrete instances carry a sparse head on the query set and
a random tail on its complement scaled to the requested tail energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.norms import continuous_norm_sq, gram_kernel, gram_matrix
from ..core.rng import RngStream
from ..core.signal import FourierSparseSignal, coords_to_index, index_to_coords
from ..lattice import LatticeBasis, expand_candidates


@dataclass
class ContinuousInstance:
    signal: FourierSparseSignal
    centers: np.ndarray
    noise_tones: FourierSparseSignal | None
    white_sigma_sq: float
    noise_norm_sq: float
    candidate_freqs: np.ndarray

    def noise_eval(self, rng: RngStream):
        """Noise evaluator g(t); white part drawn from its own stream per call order."""
        gen = rng.generator()

        def g(points):
            pts = np.asarray(points, dtype=float)
            m = pts.shape[0] if pts.ndim else 1
            out = np.zeros(m, dtype=complex)
            if self.noise_tones is not None:
                out = out + self.noise_tones(points)
            if self.white_sigma_sq > 0:
                scale = np.sqrt(self.white_sigma_sq / 2.0)
                out = out + scale * (gen.standard_normal(m) + 1j * gen.standard_normal(m))
            return out

        return g if (self.noise_tones is not None or self.white_sigma_sq > 0) else None


def _lattice_freqs(gen, k: int, d: int, eta: float, band: float) -> np.ndarray:
    reach = int(np.floor(band / eta))
    if (2 * reach + 1) ** d < k:
        raise ValueError("band too narrow: fewer than k lattice points (eta*k > 2F)")
    coeffs: set[tuple] = set()
    while len(coeffs) < k:
        c = tuple(int(v) for v in gen.integers(-reach, reach + 1, size=d))
        coeffs.add(c)
    ordered = sorted(coeffs)
    return np.asarray(ordered, dtype=float) * eta


def _orthogonalize_tones(tone_freqs, tone_coeffs, family_freqs, horizon):
    """Subtract the projection onto the candidate span; exact via Gram algebra.

    Normal equations with <a, b> = T^-d int a conj(b): conj(G_ff) beta = rhs,
    rhs_j = sum_l c_l K(h_l - f_j).
    """
    g_ff = gram_matrix(family_freqs, horizon)
    delta = np.atleast_2d(family_freqs)[:, None, :] - np.atleast_2d(tone_freqs)[None, :, :]
    g_ft = gram_kernel(delta, horizon)
    beta = np.conj(np.linalg.solve(g_ff, g_ft @ np.conj(tone_coeffs)))
    freqs = np.vstack([np.atleast_2d(tone_freqs), np.atleast_2d(family_freqs)])
    coeffs = np.concatenate([tone_coeffs, -beta])
    return freqs, coeffs


def continuous_instance(cfg, rng: RngStream) -> ContinuousInstance:
    gen = rng.generator()
    d = cfg.d
    freqs = _lattice_freqs(gen, cfg.k, d, cfg.eta, cfg.band)
    coeffs = gen.standard_normal(cfg.k) + 1j * gen.standard_normal(cfg.k)
    signal = FourierSparseSignal(dim=d, horizon=cfg.horizon, freqs=freqs, coeffs=coeffs)
    signal_energy = continuous_norm_sq(signal)

    r_abs = cfg.radius * cfg.eta
    if d == 1:
        centers = freqs + gen.uniform(-0.9, 0.9, size=(cfg.k, 1)) * r_abs
    else:
        direction = gen.standard_normal((cfg.k, d))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        centers = freqs + direction * gen.uniform(0.0, 0.9, size=(cfg.k, 1)) * r_abs

    basis = LatticeBasis(np.eye(d) * cfg.eta)
    cand = expand_candidates(basis, centers, r_abs).frequencies

    if not np.isfinite(cfg.snr) or cfg.noise == "none":
        return ContinuousInstance(signal, centers, None, 0.0, 0.0, cand)

    target = signal_energy / cfg.snr
    n_tones = max(3, cfg.k // 2)
    offs = gen.uniform(0.3, 0.7, size=(n_tones, d)) * np.where(gen.random((n_tones, d)) < 0.5, -1.0, 1.0)
    tone_freqs = _lattice_freqs(gen, n_tones, d, cfg.eta, cfg.band) + offs * cfg.eta
    tone_coeffs = gen.standard_normal(n_tones) + 1j * gen.standard_normal(n_tones)

    white_sigma_sq = 0.0
    if cfg.noise == "ortho":
        tone_freqs, tone_coeffs = _orthogonalize_tones(tone_freqs, tone_coeffs, cand, cfg.horizon)
    elif cfg.noise == "white":
        white_sigma_sq = 0.5 * target  # half the budget; tones carry the rest

    tones = FourierSparseSignal(dim=d, horizon=cfg.horizon, freqs=tone_freqs, coeffs=tone_coeffs)
    tone_energy = continuous_norm_sq(tones)
    scale = np.sqrt(max(target - white_sigma_sq, 0.0) / tone_energy)
    tones = FourierSparseSignal(dim=d, horizon=cfg.horizon, freqs=tones.freqs,
                                coeffs=tones.coeffs * scale)
    return ContinuousInstance(signal, centers, tones, white_sigma_sq, target, cand)


@dataclass
class DiscreteInstance:
    side: int
    dim: int
    query_freqs: np.ndarray
    head_values: np.ndarray
    tail_freqs: np.ndarray
    tail_values: np.ndarray
    tail_energy: float

    def evaluator(self):
        """Time-domain access ``x_t`` at integer coordinate batches."""
        freqs = np.vstack([self.query_freqs, self.tail_freqs])
        spec = np.concatenate([self.head_values, self.tail_values])
        n = self.side**self.dim

        def x(points):
            pts = np.atleast_2d(np.asarray(points, dtype=float))
            phase = (pts @ freqs.T) / self.side
            return np.exp(2j * np.pi * phase) @ spec / n

        return x


def discrete_instance(cfg, rng: RngStream) -> DiscreteInstance:
    gen = rng.generator()
    n, p, d = cfg.n, cfg.p, cfg.d
    if cfg.k > n:
        raise ValueError("sparsity k exceeds signal length n")
    flat = gen.choice(n, size=cfg.k, replace=False)
    query = index_to_coords(np.sort(flat), p, d)

    head = gen.standard_normal(cfg.k) + 1j * gen.standard_normal(cfg.k)
    head_energy = cfg.tail_energy * cfg.snr if np.isfinite(cfg.snr) else float(n)
    head *= np.sqrt(head_energy / np.sum(np.abs(head) ** 2))

    taken = set(int(i) for i in flat)
    free = np.asarray([i for i in range(n) if i not in taken], dtype=np.int64)
    t_size = min(max(4 * cfg.k, 8), free.size)
    if t_size and cfg.tail_energy > 0:
        tail_flat = np.sort(gen.choice(free, size=t_size, replace=False))
        tail_freqs = index_to_coords(tail_flat, p, d)
        tail = gen.standard_normal(t_size) + 1j * gen.standard_normal(t_size)
        tail *= np.sqrt(cfg.tail_energy / np.sum(np.abs(tail) ** 2))
        tail_e = cfg.tail_energy
    else:
        tail_freqs = np.zeros((0, d), dtype=np.int64)
        tail = np.zeros(0, dtype=complex)
        tail_e = 0.0
    return DiscreteInstance(p, d, query, head, tail_freqs, tail, tail_e)
