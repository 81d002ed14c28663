"""Well-balanced sampling via randomized barrier-potential BSS.

Given a linear function family ``F = {f(t) = sum_j c_j u_j(t)}`` of dimension
``dF`` and a discrete distribution ``D`` over candidate points, the sampler
returns a small weighted point set ``(S, w)`` such that

    sum_i w_i |h(t_i)|^2  ~=  ||h||_D^2   for every h in F,

together with per-draw coefficients ``alpha_i`` whose sum stays below 5/4.
The walk maintains a Hermitian matrix ``B_j`` and two moving barriers
``l_j < lambda(B_j) < u_j``; each step draws a point with probability
proportional to ``D(x) * v(x)^* E_j v(x)`` where

    E_j = (u_j I - B_j)^{-1} + (B_j - l_j I)^{-1},

adds the rank-one update ``s_j v(x) v(x)^*``, and advances the barriers so
the potential ``Phi_j = tr(u_j I - B_j)^{-1} + tr(B_j - l_j I)^{-1}`` stays
controlled.  Sampling the point is delegated to the quadratic-form trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core.rng import RngStream
from .qsample import BlockedQuadraticFormTree, QuadraticFormTree


class RankDeficient(ValueError):
    """Feature matrix has numerical rank below the family dimension."""


class IterationCapExceeded(RuntimeError):
    """The barrier walk failed to terminate within the safety cap."""


class BarrierViolation(RuntimeError):
    """An eigenvalue escaped the open barrier interval (l, u)."""


@dataclass(frozen=True)
class DiscreteSupport:
    """Finite candidate distribution: ``points`` with probabilities ``probs``."""

    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points)
        probs = np.asarray(self.probs, dtype=float).ravel()
        if points.shape[0] != probs.shape[0]:
            raise ValueError("one probability per point required")
        if np.any(probs < 0):
            raise ValueError("probabilities must be nonnegative")
        total = probs.sum()
        if not total > 0:
            raise ValueError("support must carry positive mass")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "probs", probs / total)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @classmethod
    def uniform(cls, points: np.ndarray) -> "DiscreteSupport":
        points = np.asarray(points)
        n = points.shape[0]
        return cls(points, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class FunctionFamily:
    """Linear span of ``dimension`` feature functions with a vectorized evaluator.

    ``evaluator`` maps an ``(m, ...)`` batch of points to the ``(m, dimension)``
    feature matrix ``[u_1(t), ..., u_dF(t)]`` and must be deterministic.
    """

    dimension: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    description: str = "generic"

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        out = np.asarray(self.evaluator(np.asarray(points)), dtype=complex)
        if out.ndim == 1:
            out = out[:, None]
        if out.shape[1] != self.dimension:
            raise ValueError("evaluator returned wrong feature dimension")
        return out


def fourier_family(freqs: np.ndarray, scale: float = 1.0) -> FunctionFamily:
    """Complex exponentials ``exp(2*pi*i * scale * <f_j, t>)``.

    ``scale=1`` is the continuous convention; ``scale=1/p`` gives the discrete
    |p|-grid convention acting on integer coordinates.  The phase matrix is
    the batched product ``points @ freqs.T``.
    """
    freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
    k, d = freqs.shape

    def evaluate(points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None] if d == 1 else pts.reshape(1, d)
        return np.exp(2j * np.pi * scale * (pts @ freqs.T))

    return FunctionFamily(dimension=k, evaluator=evaluate, description=f"fourier(k={k}, d={d})")


@dataclass(frozen=True)
class OrthonormalBasis:
    """Change of basis making features orthonormal under a reference distribution.

    ``transform`` (dF x dF) satisfies: the columns of
    ``family_features @ transform`` are orthonormal w.r.t. ``sum_t D(t) <.,.>``.
    ``support_values`` caches the orthonormalized features at the support
    points the basis was built on.
    """

    family: FunctionFamily
    transform: np.ndarray
    support: DiscreteSupport
    support_values: np.ndarray

    @property
    def dimension(self) -> int:
        return self.family.dimension

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        return self.family.evaluate(points) @ self.transform


def orthonormalize(family: FunctionFamily, support: DiscreteSupport) -> OrthonormalBasis:
    """Orthonormal basis of the family w.r.t. the discrete distribution.

    Weighted QR of ``diag(sqrt(D)) @ features``; a pivot below ``1e-10`` times
    the largest pivot means the family is numerically rank deficient on this
    support.
    """
    feats = family.evaluate(support.points)
    if support.size < family.dimension:
        raise RankDeficient("support smaller than family dimension")
    root_d = np.sqrt(support.probs)
    m = root_d[:, None] * feats
    q, r = np.linalg.qr(m)
    pivots = np.abs(np.diag(r))
    if pivots.min() < 1e-10 * pivots.max():
        raise RankDeficient(f"pivot ratio {pivots.min() / pivots.max():.3e} below 1e-10")
    transform = np.linalg.inv(r)
    # q = diag(sqrt(D)) @ feats @ transform, so the orthonormalized features
    # at the support are q with the sqrt(D) scaling undone (D > 0 rows only;
    # zero-probability rows are recomputed directly).
    safe = root_d > 0
    values = np.empty_like(q)
    values[safe] = q[safe] / root_d[safe, None]
    if not np.all(safe):
        values[~safe] = feats[~safe] @ transform
    return OrthonormalBasis(family=family, transform=transform, support=support,
                            support_values=values)


@dataclass(frozen=True)
class WeightedSampleSet:
    """Sample points with positive weights, plus WBSP bookkeeping.

    ``alphas`` are the per-draw WBSP coefficients; ``source_probs`` records the
    probability each point had under the distribution it was drawn from
    (diagnostics only).  Points appear in draw order and may repeat.
    """

    points: np.ndarray
    weights: np.ndarray
    alphas: np.ndarray
    provenance: str = "unspecified"
    source_probs: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "alphas", np.asarray(self.alphas, dtype=float))
        if self.points.shape[0] != self.weights.shape[0]:
            raise ValueError("one weight per point required")
        if self.weights.size and self.weights.min() <= 0:
            raise ValueError("weights must be positive")

    @property
    def size(self) -> int:
        return self.points.shape[0]

    def merged(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct points (in first-draw order) with summed weights."""
        pts = self.points if self.points.ndim > 1 else self.points[:, None]
        _, first_idx, inv = np.unique(pts, axis=0, return_index=True, return_inverse=True)
        sums = np.zeros(first_idx.size)
        np.add.at(sums, inv, self.weights)
        order = np.argsort(first_idx)
        return self.points[first_idx[order]], sums[order]


@dataclass
class BarrierState:
    """Running state of the barrier walk (exposed for tests/diagnostics)."""

    matrix: np.ndarray
    lower: float
    upper: float
    gamma: float
    mid: float
    potential: float = field(default=np.nan)

    def containment_ok(self, eigvals: np.ndarray, tol: float = 1e-9) -> bool:
        slack = tol * max(1.0, self.upper - self.lower)
        return eigvals.min() > self.lower - slack and eigvals.max() < self.upper + slack


def rand_bss_plus(
    family: FunctionFamily,
    support: DiscreteSupport,
    eps: float,
    rng: RngStream,
    *,
    iteration_cap_factor: float = 64.0,
    tree: str = "auto",
) -> WeightedSampleSet:
    """Barrier-potential randomized BSS over a discrete support.

    Returns ``O(dF / eps)`` weighted points whose weighted Gram matrix is
    spectrally close to the identity: with probability at least 0.9 the
    eigenvalues of ``A^* W A`` (for the orthonormalized features) lie in
    ``[1 - 10 sqrt(eps), 1 + 10 sqrt(eps)]``; the barrier containment actually
    enforced at termination is considerably tighter.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    gen = rng.generator()
    basis = orthonormalize(family, support)
    feats = basis.support_values
    d = family.dimension

    if tree == "dense" or (tree == "auto" and support.size * d * d <= 2_000_000):
        sampler = QuadraticFormTree(feats, support.probs)
    else:
        sampler = BlockedQuadraticFormTree(feats, support.probs)

    gamma = math.sqrt(eps) / 3.0
    mid = (4.0 * d / gamma) / (1.0 / (1.0 - gamma) - 1.0 / (1.0 + gamma))
    state = BarrierState(
        matrix=np.zeros((d, d), dtype=complex),
        lower=-2.0 * d / gamma,
        upper=2.0 * d / gamma,
        gamma=gamma,
        mid=mid,
    )
    cap = int(math.ceil(iteration_cap_factor * d / eps))
    target_gap = 8.0 * d / gamma

    indices: list[int] = []
    weights: list[float] = []
    alphas: list[float] = []
    src_probs: list[float] = []

    while state.upper - state.lower < target_gap:
        if len(indices) >= cap:
            raise IterationCapExceeded(f"exceeded {cap} iterations (eps={eps}, dF={d})")
        eigvals, eigvecs = np.linalg.eigh(state.matrix)
        if not state.containment_ok(eigvals):
            raise BarrierViolation(
                f"spectrum [{eigvals.min():.6g}, {eigvals.max():.6g}] outside "
                f"({state.lower:.6g}, {state.upper:.6g})"
            )
        inv_hi = 1.0 / (state.upper - eigvals)
        inv_lo = 1.0 / (eigvals - state.lower)
        phi = float(inv_hi.sum() + inv_lo.sum())
        state.potential = phi
        e_matrix = (eigvecs * (inv_hi + inv_lo)) @ eigvecs.conj().T

        q = sampler.sample(e_matrix / phi, gen)
        vq = feats[q]
        quad = float(np.real(np.vdot(vq, e_matrix @ vq)))
        s_j = gamma / quad
        state.matrix = state.matrix + s_j * np.outer(vq, vq.conj())

        indices.append(q)
        weights.append(s_j / mid)
        alphas.append(gamma / (phi * mid))
        src_probs.append(float(support.probs[q]) * quad / phi)

        state.upper += gamma / (phi * (1.0 - gamma))
        state.lower += gamma / (phi * (1.0 + gamma))

    idx = np.asarray(indices)
    return WeightedSampleSet(
        points=support.points[idx],
        weights=np.asarray(weights),
        alphas=np.asarray(alphas),
        provenance="rand_bss_plus",
        source_probs=np.asarray(src_probs),
    )


@dataclass(frozen=True)
class WbspReport:
    """Spectral check of a weighted sample set against a reference distribution."""

    lambda_min: float
    lambda_max: float
    ratio_min: float
    ratio_max: float

    @property
    def extremes_inside_bracket(self) -> bool:
        return self.lambda_min - 1e-10 <= self.ratio_min and self.ratio_max <= self.lambda_max + 1e-10


def verify_wbsp(
    sample_set: WeightedSampleSet,
    family: FunctionFamily,
    support: DiscreteSupport,
    rng: RngStream,
    trials: int = 32,
) -> WbspReport:
    """Eigenvalues of ``A^* W A`` plus empirical norm ratios over random family members.

    ``A[i, j] = sqrt(w_i) v_j(t_i)`` for the basis orthonormal under the
    reference distribution; the worst-case ratio ``||h||_{S,w}^2 / ||h||_D^2``
    over the random draws must land inside ``[lambda_min, lambda_max]``.
    """
    gen = rng.generator()
    basis = orthonormalize(family, support)
    a = np.sqrt(sample_set.weights)[:, None] * basis.evaluate(sample_set.points)
    gram = a.conj().T @ a
    eigs = np.linalg.eigvalsh(gram)
    lam_min, lam_max = float(eigs.min()), float(eigs.max())

    ratios = []
    for _ in range(max(1, trials)):
        coeff = gen.standard_normal(family.dimension) + 1j * gen.standard_normal(family.dimension)
        coeff /= np.linalg.norm(coeff)
        # ||h||_D^2 = 1 by orthonormality; weighted norm is the Rayleigh quotient.
        ratios.append(float(np.real(np.conj(coeff) @ gram @ coeff)))
    return WbspReport(
        lambda_min=lam_min,
        lambda_max=lam_max,
        ratio_min=float(np.min(ratios)),
        ratio_max=float(np.max(ratios)),
    )
