"""Signal containers: continuous Fourier-sparse signals and discrete grids.

A continuous signal is ``x(t) = sum_j v_j * exp(2*pi*i <f_j, t>)`` observed on
the box ``[0, T]^d``.  A discrete signal is a complex vector of length
``n = p^d`` indexed by ``t in [p]^d`` in row-major order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class FourierSparseSignal:
    """``x(t) = sum_j coeffs[j] * exp(2*pi*i <freqs[j], t>)`` on ``[0, horizon]^dim``.

    ``freqs`` has shape ``(k, dim)`` in Hz and rows must be pairwise distinct;
    ``coeffs`` has shape ``(k,)``.
    """

    dim: int
    horizon: float
    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        freqs = np.atleast_2d(np.asarray(self.freqs, dtype=float))
        coeffs = np.asarray(self.coeffs, dtype=complex).ravel()
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if freqs.shape[1] != self.dim:
            raise ValueError(f"frequency vectors must have length {self.dim}")
        if freqs.shape[0] != coeffs.shape[0]:
            raise ValueError("freqs and coeffs must have matching lengths")
        if freqs.shape[0] == 0:
            raise ValueError("signal must have at least one term")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def sparsity(self) -> int:
        return self.freqs.shape[0]

    def min_gap(self) -> float:
        """Minimum pairwise l-infinity frequency gap (inf for a single tone)."""
        if self.sparsity < 2:
            return np.inf
        diff = self.freqs[:, None, :] - self.freqs[None, :, :]
        gaps = np.abs(diff).max(axis=2)
        iu = np.triu_indices(self.sparsity, k=1)
        return float(gaps[iu].min())

    def __call__(self, t: np.ndarray) -> np.ndarray:
        """Evaluate at points ``t`` of shape ``(m, dim)`` (or ``(m,)`` when dim == 1)."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0 or (t.ndim == 1 and self.dim > 1)
        pts = np.atleast_2d(t if t.ndim > 0 else t[None])
        if pts.shape[1] != self.dim:
            pts = pts.reshape(-1, self.dim)
        phase = pts @ self.freqs.T
        vals = np.exp(2j * np.pi * phase) @ self.coeffs
        return vals[0] if scalar else vals

    def to_json(self) -> str:
        terms = [
            {"freq": f.tolist(), "re": float(c.real), "im": float(c.imag)}
            for f, c in zip(self.freqs, self.coeffs)
        ]
        return json.dumps({"dim": self.dim, "T": self.horizon, "terms": terms})

    @classmethod
    def from_json(cls, text: str) -> "FourierSparseSignal":
        obj = json.loads(text)
        freqs = np.array([t["freq"] for t in obj["terms"]], dtype=float)
        coeffs = np.array([complex(t["re"], t["im"]) for t in obj["terms"]])
        return cls(dim=int(obj["dim"]), horizon=float(obj["T"]), freqs=freqs, coeffs=coeffs)


@dataclass(frozen=True)
class DiscreteSignal:
    """Length ``p^dim`` complex signal on the grid ``[p]^dim``, row-major."""

    side: int
    dim: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex).ravel()
        if self.side < 1 or self.dim < 1:
            raise ValueError("side and dim must be positive integers")
        if values.shape[0] != self.side**self.dim:
            raise ValueError(f"values must have length {self.side ** self.dim}")
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.side**self.dim

    def grid(self) -> np.ndarray:
        """All grid points as an ``(n, dim)`` integer array in row-major order."""
        return index_to_coords(np.arange(self.n), self.side, self.dim)

    def to_json(self) -> str:
        vals = [[float(v.real), float(v.imag)] for v in self.values]
        return json.dumps({"p": self.side, "dim": self.dim, "values": vals})

    @classmethod
    def from_json(cls, text: str) -> "DiscreteSignal":
        obj = json.loads(text)
        values = np.array([complex(re, im) for re, im in obj["values"]])
        return cls(side=int(obj["p"]), dim=int(obj["dim"]), values=values)


def index_to_coords(idx: np.ndarray, p: int, d: int) -> np.ndarray:
    """Row-major flat index -> coordinate vector ``t``, ``idx = sum_c t_c p^{d-c}``."""
    idx = np.asarray(idx, dtype=np.int64)
    out = np.empty(idx.shape + (d,), dtype=np.int64)
    rem = idx
    for c in range(d - 1, -1, -1):
        out[..., c] = rem % p
        rem = rem // p
    return out


def coords_to_index(coords: np.ndarray, p: int) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.int64)
    d = coords.shape[-1]
    weights = p ** np.arange(d - 1, -1, -1, dtype=np.int64)
    return coords @ weights


def sparse_spectrum_signal(p: int, d: int, freqs: np.ndarray, spectrum: np.ndarray) -> DiscreteSignal:
    """Discrete signal with ``x_t = (1/n) sum_i spectrum[i] exp(2*pi*i/p <freqs[i], t>)``."""
    freqs = np.atleast_2d(np.asarray(freqs, dtype=np.int64))
    spectrum = np.asarray(spectrum, dtype=complex).ravel()
    n = p**d
    t = index_to_coords(np.arange(n), p, d)
    phase = (t @ freqs.T) % p
    values = np.exp(2j * np.pi * phase / p) @ spectrum / n
    return DiscreteSignal(side=p, dim=d, values=values)
