"""Lattice machinery for semi-continuous frequencies.

``Lattice(B) = {B c : c integer}`` for a d x m basis matrix ``B`` of linearly
independent columns.  Candidate expansion turns a list of estimated
frequencies into every lattice point within a recovery radius; the counting
bounds certify how large that candidate set can get; grid snapping rounds an
arbitrary sparse spectrum onto ``gamma Z^d``.

Distances are Euclidean for recovery radii and l-infinity for frequency gaps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .core.signal import FourierSparseSignal


class CoefficientBoxOverflow(RuntimeError):
    """Integer search box for ball enumeration exceeds the configured limit."""


BOX_LIMIT = 10_000_000


@dataclass(frozen=True)
class LatticeBasis:
    """d x m basis with cached Gram-Schmidt columns, sigma_min and cell volume."""

    columns: np.ndarray
    gram_schmidt: np.ndarray = field(init=False, repr=False)
    sigma_min: float = field(init=False)
    cell_volume: float = field(init=False)

    def __post_init__(self):
        b = np.atleast_2d(np.asarray(self.columns, dtype=float))
        if b.ndim != 2 or b.shape[1] < 1:
            raise ValueError("basis must be a d x m matrix with m >= 1")
        svals = np.linalg.svd(b, compute_uv=False)
        if svals.min() <= 1e-10 * svals.max():
            raise ValueError("basis columns are linearly dependent")
        gs = np.zeros_like(b)
        for i in range(b.shape[1]):
            v = b[:, i].copy()
            for j in range(i):
                u = gs[:, j]
                v -= (v @ u) / (u @ u) * u
            gs[:, i] = v
        object.__setattr__(self, "columns", b)
        object.__setattr__(self, "gram_schmidt", gs)
        object.__setattr__(self, "sigma_min", float(svals.min()))
        object.__setattr__(self, "cell_volume", float(math.sqrt(max(np.linalg.det(b.T @ b), 0.0))))

    @property
    def dim(self) -> int:
        return self.columns.shape[0]

    @property
    def rank(self) -> int:
        return self.columns.shape[1]

    @property
    def spectral_norm(self) -> float:
        return float(np.linalg.norm(self.columns, 2))

    def min_gram_schmidt_norm(self) -> float:
        """Lower bound on the shortest nonzero lattice vector length."""
        return float(np.linalg.norm(self.gram_schmidt, axis=0).min())

    def to_json(self) -> str:
        import json

        return json.dumps({"columns": self.columns.T.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "LatticeBasis":
        import json

        cols = np.asarray(json.loads(text)["columns"], dtype=float).T
        return cls(columns=cols)


@dataclass(frozen=True)
class CandidateSet:
    """Expanded lattice frequencies, deduplicated by integer coefficient vector."""

    frequencies: np.ndarray
    coefficient_vectors: np.ndarray
    centers: np.ndarray
    radius: float

    @property
    def size(self) -> int:
        return self.frequencies.shape[0]


def enumerate_ball(basis: LatticeBasis, center: np.ndarray, radius: float,
                   box_limit: int = BOX_LIMIT) -> np.ndarray:
    """All lattice points inside the Euclidean ball ``B(center, radius)``.

    Integer coefficients are boxed by ``|c_i| <= (radius + ||center||) /
    sigma_min + 1`` and filtered by exact distance.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    center = np.asarray(center, dtype=float).ravel()
    if center.size != basis.dim:
        raise ValueError("center dimension mismatch")
    bound = int(math.floor((radius + np.linalg.norm(center)) / basis.sigma_min)) + 1
    per_axis = 2 * bound + 1
    if per_axis**basis.rank > box_limit:
        raise CoefficientBoxOverflow(
            f"coefficient box {per_axis}^{basis.rank} exceeds {box_limit}"
        )
    axes = [np.arange(-bound, bound + 1)] * basis.rank
    coeffs = np.array(np.meshgrid(*axes, indexing="ij")).reshape(basis.rank, -1).T
    points = coeffs @ basis.columns.T
    keep = np.linalg.norm(points - center, axis=1) <= radius + 1e-12
    return points[keep]


def expand_candidates(basis: LatticeBasis, centers: np.ndarray, radius: float,
                      box_limit: int = BOX_LIMIT) -> CandidateSet:
    """Union over centers of per-center ball enumerations, without duplicates."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    if centers.shape[0] == 0:
        raise ValueError("need at least one center")
    if centers.shape[1] != basis.dim:
        raise ValueError("center dimension mismatch")
    seen: dict[tuple, np.ndarray] = {}
    pinv = np.linalg.pinv(basis.columns)
    for c in centers:
        pts = enumerate_ball(basis, c, radius, box_limit=box_limit)
        for p in pts:
            key = tuple(int(z) for z in np.round(pinv @ p))
            if key not in seen:
                seen[key] = p
    keys = sorted(seen.keys())
    coeff = np.asarray(keys, dtype=np.int64).reshape(len(keys), basis.rank)
    freqs = coeff @ basis.columns.T
    return CandidateSet(frequencies=freqs, coefficient_vectors=coeff,
                        centers=centers, radius=radius)


def sparsity_bounds(basis: LatticeBasis, n_centers: int, radius: float):
    """Certified upper bounds on the candidate count, plus the tiny-radius flag.

    spectral: ``|L| (1 + 2 r / sigma_min)^m``
    volume:   ``|L| (r + sqrt(m) ||B||)^m * pi^{m/2} / ((m/2)! |det B|)``
    tiny:     ``r <= min_i ||b*_i||`` implies at most one lattice point per
              center, so the true count is at most ``|L|``.
    """
    m = basis.rank
    spectral = n_centers * (1.0 + 2.0 * radius / basis.sigma_min) ** m
    volume = (
        n_centers
        * (radius + math.sqrt(m) * basis.spectral_norm) ** m
        * math.pi ** (m / 2.0)
        / (math.gamma(m / 2.0 + 1.0) * basis.cell_volume)
    )
    tiny = radius <= basis.min_gram_schmidt_norm()
    return spectral, volume, tiny


def snap_to_grid(signal: FourierSparseSignal, gamma: float) -> FourierSparseSignal:
    """Round every frequency coordinate to the grid ``gamma Z`` and merge bins.

    Boundary ties round toward minus infinity.  Coefficients landing in the
    same bin are summed; merged coefficients below ``1e-12 * sum |v|`` are
    numeric dust and dropped (unless everything cancels, in which case one
    zero term on the nearest bin is kept so the signal stays well formed).
    """
    if gamma <= 0:
        raise ValueError("grid pitch must be positive")
    idx = np.ceil(signal.freqs / gamma - 0.5).astype(np.int64)
    bins: dict[tuple, complex] = {}
    for row, coeff in zip(idx, signal.coeffs):
        key = tuple(int(z) for z in row)
        bins[key] = bins.get(key, 0.0 + 0.0j) + coeff
    total_mag = sum(abs(v) for v in bins.values())
    floor = 1e-12 * max(total_mag, 1e-300)
    kept = {k: v for k, v in bins.items() if abs(v) >= floor}
    if not kept:
        first = tuple(int(z) for z in idx[0])
        kept = {first: 0.0 + 0.0j}
    keys = sorted(kept.keys())
    freqs = np.asarray(keys, dtype=float) * gamma
    coeffs = np.asarray([kept[k] for k in keys])
    return FourierSparseSignal(dim=signal.dim, horizon=signal.horizon, freqs=freqs, coeffs=coeffs)


def snap_pitch(eps: float, band_limit: float, horizon: float, eps1: float | None = None) -> float:
    """Grid pitch ``gamma = eps / sqrt(F0 T^3)`` for a target approximation level.

    ``F0`` pads the band limit by the Gaussian tail width needed at accuracy
    ``eps1`` (default ``eps^2 / T``).
    """
    e1 = eps1 if eps1 is not None else eps**2 / horizon
    f0 = band_limit + math.sqrt(max(math.log(max(band_limit, 2.0) / e1), 1.0)) / horizon
    return eps / math.sqrt(f0 * horizon**3)


def brute_force_ball(basis: LatticeBasis, center: np.ndarray, radius: float,
                     box: int) -> np.ndarray:
    """Independent oracle: enumerate a fixed integer box and filter by distance."""
    axes = [np.arange(-box, box + 1)] * basis.rank
    coeffs = np.array(np.meshgrid(*axes, indexing="ij")).reshape(basis.rank, -1).T
    points = coeffs @ basis.columns.T
    keep = np.linalg.norm(points - np.asarray(center, dtype=float), axis=1) <= radius + 1e-12
    return points[keep]
