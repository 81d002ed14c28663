"""Oblivious sketching distributions and sketch distillation.

Stage 1 picks a weighted point set *without touching the signal*: uniform
points sized by an energy bound ``R = sup_t |x(t)|^2 / ||x||_T^2`` over the
family, or (in one continuous dimension) the nearly-optimal biased density

    D(t) = c / (1 - |t/T|)        for |t| <= T (1 - 1/k),
           c * k                  for |t| in [T (1 - 1/k), T],

on ``[-T, T]`` with ``1/c = 2 T (ln k + 1)``.  Stage 2 ("distillation")
shrinks that sketch to ``O(k / eps^2)`` points by running the well-balanced
sampler over the renormalized stage-1 support; the result preserves
``||.||_T`` (or ``||.||_2^2 / n``) for every signal on the given frequencies
without amplifying noise energy by more than a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core.rng import RngStream
from .core.signal import FourierSparseSignal, index_to_coords
from .wbsp import DiscreteSupport, WeightedSampleSet, fourier_family, rand_bss_plus

SIZE_CONSTANT = 10.0
FAILURE_BUDGET = 0.1
HD_SUPPORT_CAP = 1_000_000


@dataclass(frozen=True)
class TimeBox:
    """Continuous sampling domain ``[0, horizon]^dim``."""

    horizon: float
    dim: int = 1


@dataclass(frozen=True)
class BiasedTimeDensity:
    """The edge-biased density on ``[-T, T]`` above, with closed-form CDF.

    The CDF core is logarithmic and the two edge bands are linear, so
    inverse-CDF sampling is exact and rejection-free.
    """

    horizon: float
    sparsity: float

    def __post_init__(self):
        if self.sparsity < 1 or self.horizon <= 0:
            raise ValueError("need sparsity >= 1 and horizon > 0")

    @property
    def normalizer(self) -> float:
        return 1.0 / (2.0 * self.horizon * (math.log(self.sparsity) + 1.0))

    @property
    def edge_start(self) -> float:
        return self.horizon * (1.0 - 1.0 / self.sparsity)

    def pdf(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        c = self.normalizer
        core = c / np.maximum(1.0 - a / self.horizon, 1.0 / self.sparsity)
        out = np.where(a <= self.edge_start, core, c * self.sparsity)
        return np.where(a <= self.horizon, out, 0.0)

    def cdf(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        sign = np.sign(t)
        a = np.clip(np.abs(t), 0.0, self.horizon)
        c, T, k = self.normalizer, self.horizon, self.sparsity
        core_mass = -c * T * np.log(np.maximum(1.0 - a / T, 1.0 / k))
        edge_mass = c * k * np.clip(a - self.edge_start, 0.0, None)
        half = np.where(a <= self.edge_start, core_mass, c * T * math.log(k) + edge_mass)
        return 0.5 + sign * half

    def inv_cdf(self, q: np.ndarray) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if np.any((q < 0) | (q > 1)):
            raise ValueError("quantiles must lie in [0, 1]")
        c, T, k = self.normalizer, self.horizon, self.sparsity
        y = np.abs(q - 0.5)
        core_cut = c * T * math.log(k)
        t_core = T * (1.0 - np.exp(-y / (c * T)))
        t_edge = self.edge_start + (y - core_cut) / (c * k)
        t = np.where(y <= core_cut, t_core, np.minimum(t_edge, T))
        return np.sign(q - 0.5) * t

    def sample(self, size: int, gen: np.random.Generator) -> np.ndarray:
        return self.inv_cdf(gen.random(size))


@dataclass(frozen=True)
class ObliviousSketch:
    """Stage-1 output: a weighted sample set valid for a whole signal family."""

    sample_set: WeightedSampleSet
    family: dict = field(default_factory=dict)
    eps: float = 0.0

    def renormalized_support(self) -> DiscreteSupport:
        """The discrete distribution ``D'(t) = w_t / sum(w)`` fed to stage 2."""
        w = self.sample_set.weights
        return DiscreteSupport(self.sample_set.points, w / w.sum())


def uniform_sketch_size(energy_bound: float, eps: float, k: int, rho: float = FAILURE_BUDGET,
                        size_constant: float = SIZE_CONSTANT) -> int:
    """``ceil(C * eps^-2 * R * ln(k / rho))`` with the package constants."""
    return int(math.ceil(size_constant * eps**-2 * energy_bound * math.log(max(k, 1) / rho)))


def weighted_sketch_size(k: int, eps: float, rho: float = FAILURE_BUDGET,
                         size_constant: float = SIZE_CONSTANT) -> int:
    return int(math.ceil(size_constant * eps**-2 * k * math.log(k + 1) * math.log((k + 1) / rho)))


def accurate_sketch_size(k: int, eps: float, rho: float = FAILURE_BUDGET,
                         size_constant: float = SIZE_CONSTANT) -> int:
    """Near-linear size ``O(eps^-1 k log k)`` used by the high-accuracy estimator."""
    return int(math.ceil(size_constant * eps**-1 * k * math.log(k + 1) * math.log((k + 1) / rho)))


def uniform_sketch(domain, size: int, rng: RngStream) -> ObliviousSketch:
    """I.i.d. uniform points over a :class:`TimeBox` or over ``[n]``, weights ``1/s``."""
    if size < 1:
        raise ValueError("sketch size must be >= 1")
    gen = rng.generator()
    if isinstance(domain, TimeBox):
        pts = gen.uniform(0.0, domain.horizon, size=(size, domain.dim))
        if domain.dim == 1:
            pts = pts.ravel()
        family = {"kind": "continuous", "T": domain.horizon, "d": domain.dim}
    else:
        n = int(domain)
        pts = gen.integers(0, n, size=size)
        family = {"kind": "discrete", "n": n}
    weights = np.full(size, 1.0 / size)
    sset = WeightedSampleSet(pts, weights, np.full(size, 1.0 / size), provenance="uniform_sketch")
    return ObliviousSketch(sample_set=sset, family=family)


def weighted_sketch_1d(k: int, eps: float, horizon: float, rng: RngStream,
                       size: int | None = None) -> ObliviousSketch:
    """Biased-density sketch for 1-D signals of sparsity ``k`` on ``[0, T]``.

    Points are drawn by inverse CDF on ``[-T, T]`` and mapped affinely onto
    ``[0, T]`` (``t = (u + T) / 2``); the weight of a draw ``u`` is the
    importance ratio ``1 / (2 T s D(u))`` against the uniform reference, so
    ``sum_i w_i |x(t_i)|^2`` is an unbiased estimate of ``||x||_T^2``.
    """
    if k < 1 or not 0 < eps < 1:
        raise ValueError("need k >= 1 and eps in (0, 1)")
    density = BiasedTimeDensity(horizon=horizon, sparsity=k)
    s = size if size is not None else weighted_sketch_size(k, eps)
    gen = rng.generator()
    u = density.sample(s, gen)
    pts = (u + horizon) / 2.0
    weights = 1.0 / (2.0 * horizon * s * density.pdf(u))
    sset = WeightedSampleSet(pts, weights, np.full(s, 1.0 / s), provenance="weighted_sketch_1d")
    return ObliviousSketch(sample_set=sset, family={"kind": "fourier-1d", "k": k, "T": horizon}, eps=eps)


def _bss_eps(eps: float, override: float | None) -> float:
    # Stage-2 sampler parameter.  eps^2 keeps the distilled size within the
    # 16 k / eps^2 budget (the walk runs ~14 dF/eps_bss rounds) while the
    # barrier containment ~0.55 sqrt(eps_bss) keeps distortion below eps.
    return override if override is not None else eps * eps


def distill_1d(freqs: np.ndarray, eps: float, horizon: float, rng: RngStream, *,
               stage1_eps: float | None = None, bss_eps: float | None = None) -> WeightedSampleSet:
    """Distill a biased 1-D sketch down to ``O(k / eps^2)`` weighted points.

    Norm preservation ``(1 +- eps)`` holds for every signal on ``freqs`` with
    probability >= 0.9; noise energy is not amplified beyond a constant.
    """
    freqs = np.asarray(freqs, dtype=float).ravel()
    if np.unique(freqs).size != freqs.size:
        raise ValueError("frequencies must be distinct")
    k = freqs.size
    sketch = weighted_sketch_1d(k, stage1_eps if stage1_eps is not None else eps / 4.0,
                                horizon, rng.child(0))
    support = sketch.renormalized_support()
    family = fourier_family(freqs.reshape(-1, 1))
    out = rand_bss_plus(family, support, _bss_eps(eps, bss_eps), rng.child(1))
    # Stage-2 weights preserve ||.||_{D'}; undo the renormalization so the
    # distilled norm tracks ||.||_T instead.
    total_w = float(sketch.sample_set.weights.sum())
    return WeightedSampleSet(
        points=out.points,
        weights=out.weights * total_w,
        alphas=out.alphas,
        provenance="distill_1d",
        source_probs=out.source_probs,
    )


def distill_hd(freqs: np.ndarray, eps: float, horizon: float, dim: int, rng: RngStream, *,
               bss_eps: float | None = None, stage1_eps: float | None = None) -> WeightedSampleSet:
    """Distillation for ``d``-dimensional continuous signals (uniform stage 1).

    Stage-1 size uses the ``k^{2d}`` proxy for the d-dimensional energy bound,
    capped at 1e6 support points.
    """
    freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
    k = freqs.shape[0]
    if freqs.shape[1] != dim:
        raise ValueError("frequency dimension mismatch")
    e0 = stage1_eps if stage1_eps is not None else eps / 4.0
    s0 = min(uniform_sketch_size(float(k) ** (2 * dim), e0, k), HD_SUPPORT_CAP)
    s0 = max(s0, k)
    sketch = uniform_sketch(TimeBox(horizon, dim), s0, rng.child(0))
    support = DiscreteSupport.uniform(sketch.sample_set.points)
    family = fourier_family(freqs)
    out = rand_bss_plus(family, support, _bss_eps(eps, bss_eps), rng.child(1))
    return WeightedSampleSet(out.points, out.weights, out.alphas,
                             provenance="distill_hd", source_probs=out.source_probs)


def distill_discrete(freqs: np.ndarray, eps: float, side: int, dim: int, rng: RngStream, *,
                     bss_eps: float | None = None) -> WeightedSampleSet:
    """Distillation for discrete signals on ``[p]^d``: ``n ||x||_{S,w}^2 ~ ||x||_2^2``.

    Stage 1 samples uniformly from ``[n]`` with replacement; duplicate points
    are merged (summed multiplicity) before the well-balanced stage.
    """
    freqs = np.atleast_2d(np.asarray(freqs, dtype=np.int64))
    k = freqs.shape[0]
    n = side**dim
    if freqs.shape[1] != dim:
        raise ValueError("frequency dimension mismatch")
    if k > n:
        raise ValueError(f"sparsity {k} exceeds signal length {n}")
    s0 = int(math.ceil(SIZE_CONSTANT * eps**-2 * k * math.log((k + 1) / FAILURE_BUDGET)))
    gen = rng.child(0).generator()
    draws = gen.integers(0, n, size=s0)
    uniq, counts = np.unique(draws, return_counts=True)
    coords = index_to_coords(uniq, side, dim).astype(float)
    support = DiscreteSupport(coords, counts / s0)
    family = fourier_family(freqs.astype(float), scale=1.0 / side)
    out = rand_bss_plus(family, support, _bss_eps(eps, bss_eps), rng.child(1))
    return WeightedSampleSet(out.points, out.weights, out.alphas,
                             provenance="distill_discrete", source_probs=out.source_probs)


def discrete_energy_ratio(values: np.ndarray) -> float:
    """``max_t |x_t|^2 / mean_t |x_t|^2`` — at most ``k`` for k-sparse spectra."""
    mags = np.abs(np.asarray(values)) ** 2
    return float(mags.max() / mags.mean())


def continuous_grid_ratio(signal: FourierSparseSignal, grid_size: int = 10_000) -> float:
    """``max_grid |x(t)|^2 / ||x||_T^2`` on a uniform time grid."""
    from .core.norms import continuous_norm_sq

    if signal.dim != 1:
        raise ValueError("grid ratio check is one-dimensional")
    t = np.linspace(0.0, signal.horizon, grid_size)
    peak = float(np.max(np.abs(signal(t)) ** 2))
    return peak / continuous_norm_sq(signal)


def hd_lower_bound_signal(k: int, dim: int, horizon: float) -> FourierSparseSignal:
    """The spiky product signal ``2^-k (1 + exp(2 pi i <f0, t>))^k``, ``f0 = 1/(100 d T)``.

    Its peak-to-average energy ratio grows with ``k``, witnessing that the
    d-dimensional energy bound must scale super-linearly.
    """
    f0 = np.full(dim, 1.0 / (100.0 * dim * horizon))
    js = np.arange(k + 1)
    freqs = js[:, None] * f0[None, :]
    coeffs = np.array([math.comb(k, int(j)) for j in js], dtype=float) * 2.0**-k
    return FourierSparseSignal(dim=dim, horizon=horizon, freqs=freqs, coeffs=coeffs.astype(complex))
