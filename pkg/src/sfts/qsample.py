"""Online quadratic-form sampling.

Preprocess vectors ``v_1..v_n`` with nonnegative coefficients ``alpha_i`` so
that, for any Hermitian PSD query matrix ``A``, an index can be drawn exactly
from

    D_A(i) = alpha_i * v_i^* A v_i / sum_j alpha_j * v_j^* A v_j.

Two variants with the same distribution contract:

* :class:`QuadraticFormTree` — a binary range tree whose node for ``[l, r]``
  stores ``V = sum_{i=l}^{r} alpha_i v_i v_i^*``; queries descend root-to-leaf
  with ``p_left = <left.V, A> / <node.V, A>`` in ``O(k^2 log n)``.
* :class:`BlockedQuadraticFormTree` — ``ceil(n/k)`` blocks holding raw slabs
  ``V2 = [v_l .. v_r] * sqrt(alpha)``; only internal nodes keep the k-by-k
  aggregate ``V1``, cutting storage to ``Theta(n k)`` complex entries.  The
  in-block step samples ``i`` proportional to ``diag(V2^* A V2)``.
"""

from __future__ import annotations

import numpy as np


class NotPSD(ValueError):
    """Query matrix failed the positive-semidefinite check."""


class ZeroMass(ValueError):
    """The query assigns (numerically) zero total mass to every index."""


def _trace_inner(v: np.ndarray, a: np.ndarray) -> float:
    # <V, A> = tr(V A) for Hermitian V, A; real up to roundoff.
    return float(np.vdot(v, a).real)


def _check_query(a: np.ndarray, k: int) -> float:
    a = np.asarray(a)
    if a.shape != (k, k):
        raise ValueError(f"query matrix must be {k}x{k}")
    eigs = np.linalg.eigvalsh((a + a.conj().T) / 2.0)
    norm = float(np.abs(eigs).max()) if eigs.size else 0.0
    if eigs.min() < -1e-9 * max(norm, 1e-300):
        raise NotPSD(f"min eigenvalue {eigs.min():.3e} below -1e-9 * ||A||")
    return norm


class _RangeTree:
    """Midpoint-split range tree over ``n_items`` leaf matrices.

    Children of ``[lo, hi)`` are ``[lo, m)`` and ``[m, hi)`` with
    ``m = (lo + hi + 1) // 2``, matching a 1-indexed split at floor((l+r)/2).
    Aggregates are computed level by level (vectorized); with
    ``store_leaves=False`` only internal aggregates stay resident and leaf
    masses are recomputed on demand from ``leaf_mass``.
    """

    def __init__(self, n_items: int, leaf_mats: np.ndarray, store_leaves: bool = True):
        los = [np.array([0])]
        his = [np.array([n_items])]
        lefts = [np.array([-1])]
        rights = [np.array([-1])]
        base = 1
        depth = 0
        while True:
            lo, hi = los[depth], his[depth]
            split = hi - lo > 1
            n_split = int(split.sum())
            if n_split == 0:
                break
            mid = (lo[split] + hi[split] + 1) // 2
            child_lo = np.empty(2 * n_split, dtype=np.int64)
            child_hi = np.empty(2 * n_split, dtype=np.int64)
            child_lo[0::2], child_lo[1::2] = lo[split], mid
            child_hi[0::2], child_hi[1::2] = mid, hi[split]
            ids = base + 2 * np.arange(n_split)
            lefts[depth][split] = ids
            rights[depth][split] = ids + 1
            los.append(child_lo)
            his.append(child_hi)
            lefts.append(np.full(2 * n_split, -1, dtype=np.int64))
            rights.append(np.full(2 * n_split, -1, dtype=np.int64))
            base += 2 * n_split
            depth += 1

        self.lo = np.concatenate(los)
        self.hi = np.concatenate(his)
        self.left = np.concatenate(lefts)
        self.right = np.concatenate(rights)
        self.depth = depth
        self.node_count = self.lo.size
        level_of = np.concatenate([np.full(a.size, i) for i, a in enumerate(los)])
        is_leaf = self.left < 0

        k = leaf_mats.shape[-1]
        full = np.empty((self.node_count, k, k), dtype=complex)
        full[is_leaf] = leaf_mats[self.lo[is_leaf]]
        for lev in range(self.depth - 1, -1, -1):
            ids = np.nonzero((level_of == lev) & ~is_leaf)[0]
            if ids.size:
                full[ids] = full[self.left[ids]] + full[self.right[ids]]
        if store_leaves:
            self.slot = np.arange(self.node_count)
            self.V = full
        else:
            internal = np.nonzero(~is_leaf)[0]
            self.slot = np.full(self.node_count, -1)
            self.slot[internal] = np.arange(internal.size)
            self.V = np.ascontiguousarray(full[internal])

    def node_mass(self, nid: int, a: np.ndarray, leaf_mass) -> float:
        s = self.slot[nid]
        if s >= 0:
            m = np.vdot(self.V[s], a).real
            return m if m > 0.0 else 0.0
        m = leaf_mass(int(self.lo[nid]), a)
        return m if m > 0.0 else 0.0

    def root_matrix(self, leaf_mass_matrix=None) -> np.ndarray:
        if self.slot[0] >= 0:
            return self.V[self.slot[0]]
        return leaf_mass_matrix(int(self.lo[0]))

    def descend(self, a: np.ndarray, rng: np.random.Generator, leaf_mass):
        """Walk root-to-leaf; returns (leaf node id, inner products used)."""
        nid = 0
        n_inner = 0
        while self.left[nid] >= 0:
            lid, rid = self.left[nid], self.right[nid]
            wl = self.node_mass(lid, a, leaf_mass)
            wr = self.node_mass(rid, a, leaf_mass)
            n_inner += 2
            total = wl + wr
            if total <= 0.0:
                raise ZeroMass("both children have zero conditional mass")
            nid = lid if rng.random() < wl / total else rid
        return nid, n_inner

    def path_probability(self, a: np.ndarray, item: int, leaf_mass) -> float:
        nid = 0
        prob = 1.0
        while self.left[nid] >= 0:
            lid, rid = self.left[nid], self.right[nid]
            wl = self.node_mass(lid, a, leaf_mass)
            wr = self.node_mass(rid, a, leaf_mass)
            total = wl + wr
            if total <= 0.0:
                return 0.0
            if item < self.hi[lid]:
                prob *= wl / total
                nid = lid
            else:
                prob *= wr / total
                nid = rid
        return prob


def _prepare(vectors: np.ndarray, coefficients: np.ndarray):
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise ValueError("vectors must be a non-empty (n, k) array")
    coefficients = np.asarray(coefficients, dtype=float).ravel()
    if coefficients.shape[0] != vectors.shape[0]:
        raise ValueError("one coefficient per vector required")
    if np.any(coefficients < 0):
        raise ValueError("coefficients must be nonnegative")
    if not np.any(coefficients > 0):
        raise ValueError("coefficients must not all be zero")
    return vectors, coefficients


class QuadraticFormTree:
    """Dense variant: every node stores the full k-by-k aggregate."""

    def __init__(self, vectors: np.ndarray, coefficients: np.ndarray):
        vectors, coefficients = _prepare(vectors, coefficients)
        self.n, self.k = vectors.shape
        leaf = np.einsum("i,ij,il->ijl", coefficients, vectors, vectors.conj())
        self._tree = _RangeTree(self.n, leaf, store_leaves=True)

    @property
    def node_count(self) -> int:
        return self._tree.node_count

    @property
    def depth(self) -> int:
        return self._tree.depth

    @property
    def root_matrix(self) -> np.ndarray:
        return self._tree.root_matrix()

    _leaf_mass = None  # all aggregates stored; never recomputed

    def _check(self, a: np.ndarray) -> None:
        norm = _check_query(a, self.k)
        root = self.root_matrix
        total = _trace_inner(root, a)
        if total <= 1e-14 * norm * float(np.trace(root).real):
            raise ZeroMass("query has zero total mass over the tree")

    def sample(self, a: np.ndarray, rng: np.random.Generator) -> int:
        return self.sample_with_stats(a, rng)[0]

    def sample_with_stats(self, a: np.ndarray, rng: np.random.Generator):
        """Returns ``(index, inner_products_used)`` for complexity audits."""
        self._check(a)
        nid, n_inner = self._tree.descend(a, rng, self._leaf_mass)
        return int(self._tree.lo[nid]), n_inner

    def leaf_probability(self, a: np.ndarray, index: int) -> float:
        """Exact probability of ``sample`` returning ``index`` (no randomness)."""
        self._check(a)
        if not 0 <= index < self.n:
            raise IndexError(index)
        return self._tree.path_probability(a, index, self._leaf_mass)


class BlockedQuadraticFormTree:
    """O(nk)-space variant: leaves keep raw slabs, internals the aggregates."""

    def __init__(self, vectors: np.ndarray, coefficients: np.ndarray, block_size: int | None = None):
        vectors, coefficients = _prepare(vectors, coefficients)
        self.n, self.k = vectors.shape
        self.block_size = int(block_size) if block_size else self.k
        if self.block_size < 1:
            raise ValueError("block_size must be positive")
        # sqrt(alpha) folded into the rows keeps query paths coefficient-free
        self._scaled = vectors * np.sqrt(coefficients)[:, None]  # (n, k)
        self.n_blocks = -(-self.n // self.block_size)
        leaf = np.empty((self.n_blocks, self.k, self.k), dtype=complex)
        n_full = self.n // self.block_size
        if n_full:
            slabs = self._scaled[: n_full * self.block_size].reshape(n_full, self.block_size, self.k)
            leaf[:n_full] = slabs.transpose(0, 2, 1) @ slabs.conj()
        if n_full < self.n_blocks:
            slab = self._slab(self.n_blocks - 1)
            leaf[-1] = slab @ slab.conj().T
        self._tree = _RangeTree(self.n_blocks, leaf, store_leaves=False)
        self._root = leaf[0] if self.n_blocks == 1 else self._tree.V[self._tree.slot[0]]

    def _slab(self, block: int) -> np.ndarray:
        # k x b view of the block's scaled vectors as columns
        return self._scaled[block * self.block_size : min((block + 1) * self.block_size, self.n)].T

    @property
    def node_count(self) -> int:
        return self._tree.node_count

    @property
    def depth(self) -> int:
        return self._tree.depth

    @property
    def root_matrix(self) -> np.ndarray:
        return self._root

    @property
    def storage_complex_entries(self) -> int:
        return int(self._tree.V.size + self._scaled.size + self._root.size)

    def _leaf_mass(self, block: int, a: np.ndarray) -> float:
        return float(self._block_weights(a, block).sum())

    def _block_weights(self, a: np.ndarray, block: int) -> np.ndarray:
        v2 = self._slab(block)
        u = (v2.conj() * (a @ v2)).sum(axis=0)
        return np.clip(u.real, 0.0, None)

    def _check(self, a: np.ndarray) -> None:
        norm = _check_query(a, self.k)
        total = _trace_inner(self._root, a)
        if total <= 1e-14 * norm * float(np.trace(self._root).real):
            raise ZeroMass("query has zero total mass over the tree")

    def sample(self, a: np.ndarray, rng: np.random.Generator) -> int:
        self._check(a)
        nid, _ = self._tree.descend(a, rng, self._leaf_mass)
        block = int(self._tree.lo[nid])
        w = self._block_weights(a, block)
        total = w.sum()
        if total <= 0.0:
            raise ZeroMass("selected block has zero conditional mass")
        i = int(np.searchsorted(np.cumsum(w), rng.random() * total, side="right"))
        i = min(i, w.size - 1)
        return block * self.block_size + i

    def leaf_probability(self, a: np.ndarray, index: int) -> float:
        self._check(a)
        if not 0 <= index < self.n:
            raise IndexError(index)
        block, offset = divmod(index, self.block_size)
        p_block = self._tree.path_probability(a, block, self._leaf_mass)
        w = self._block_weights(a, block)
        total = w.sum()
        if total <= 0.0:
            return 0.0
        return p_block * float(w[offset]) / float(total)


def brute_force_distribution(vectors, coefficients, a) -> np.ndarray:
    """Direct ``D_A`` by explicit quadratic forms; the exactness oracle."""
    vectors, coefficients = _prepare(vectors, coefficients)
    quad = np.einsum("ij,jl,il->i", vectors.conj(), a, vectors).real
    mass = coefficients * quad
    mass = np.clip(mass, 0.0, None)
    total = mass.sum()
    if total <= 0.0:
        raise ZeroMass("query has zero total mass")
    return mass / total
