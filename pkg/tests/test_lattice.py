import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfts.core import FourierSparseSignal, continuous_norm_sq
from sfts.estimate import signal_error_energy
from sfts.lattice import (
    BOX_LIMIT,
    CoefficientBoxOverflow,
    LatticeBasis,
    brute_force_ball,
    enumerate_ball,
    expand_candidates,
    snap_pitch,
    snap_to_grid,
    sparsity_bounds,
)


def random_basis(gen, m, min_sigma=0.3):
    # entries in [0.5, 2] with random signs; re-draw near-singular bases so
    # enumeration boxes stay small
    while True:
        cols = gen.uniform(0.5, 2.0, size=(m, m)) * np.where(gen.random((m, m)) < 0.5, -1, 1)
        try:
            basis = LatticeBasis(cols)
        except ValueError:
            continue
        if basis.sigma_min >= min_sigma:
            return basis


class TestLatticeBasis:
    def test_cached_quantities(self):
        basis = LatticeBasis(np.array([[2.0, 1.0], [0.0, 1.0]]))
        assert basis.cell_volume == pytest.approx(abs(np.linalg.det(basis.columns)), abs=1e-9)
        assert basis.sigma_min == pytest.approx(np.linalg.svd(basis.columns, compute_uv=False).min())
        # Gram-Schmidt columns are mutually orthogonal and span-preserving
        gs = basis.gram_schmidt
        assert abs(gs[:, 0] @ gs[:, 1]) < 1e-12

    def test_rejects_dependent_columns(self):
        with pytest.raises(ValueError):
            LatticeBasis(np.array([[1.0, 2.0], [2.0, 4.0]]))

    def test_json_round_trip(self):
        basis = LatticeBasis(np.array([[1.5, 0.0], [0.5, 2.0]]))
        data = json.loads(basis.to_json())
        assert set(data) == {"columns"}
        back = LatticeBasis.from_json(basis.to_json())
        assert np.allclose(back.columns, basis.columns)


class TestEnumerateBall:
    def test_standard_grid_nine_points(self):
        basis = LatticeBasis(np.eye(2))
        pts = enumerate_ball(basis, np.zeros(2), 1.5)
        assert pts.shape[0] == 9

    def test_small_radius_single_point(self):
        basis = LatticeBasis(np.eye(2))
        assert enumerate_ball(basis, np.zeros(2), 0.5).shape[0] == 1

    def test_zero_radius_on_lattice_point(self):
        basis = LatticeBasis(np.eye(2))
        pts = enumerate_ball(basis, np.array([2.0, -1.0]), 0.0)
        assert pts.shape[0] == 1
        assert np.allclose(pts[0], [2.0, -1.0])

    def test_matches_brute_force(self):
        gen = np.random.default_rng(2)
        for trial in range(30):
            m = int(gen.integers(1, 4))
            basis = random_basis(gen, m)
            center = gen.uniform(-2, 2, m)
            radius = float(gen.uniform(0.1, 2.5))
            mine = enumerate_ball(basis, center, radius)
            box = int(np.ceil((radius + np.linalg.norm(center)) / basis.sigma_min)) + 2
            reference = brute_force_ball(basis, center, radius, box)
            assert mine.shape[0] == reference.shape[0]
            a = set(map(tuple, np.round(mine, 9)))
            b = set(map(tuple, np.round(reference, 9)))
            assert a == b

    def test_box_overflow(self):
        basis = LatticeBasis(np.eye(3) * 1e-3)
        with pytest.raises(CoefficientBoxOverflow):
            enumerate_ball(basis, np.zeros(3), 10.0)

    def test_negative_radius(self):
        with pytest.raises(ValueError):
            enumerate_ball(LatticeBasis(np.eye(1)), np.zeros(1), -1.0)


class TestExpandCandidates:
    def test_single_exact_center(self):
        basis = LatticeBasis(np.eye(2))
        cand = expand_candidates(basis, np.array([[3.0, 4.0]]), 0.5)
        assert cand.size == 1
        assert np.allclose(cand.frequencies[0], [3.0, 4.0])

    def test_1d_grid_counts(self):
        eta = 0.5
        basis = LatticeBasis(np.array([[eta]]))
        centers = np.array([[0.1], [2.3], [7.7]])
        r = 2.5 * eta
        cand = expand_candidates(basis, centers, r)
        per_center_cap = 3 * (1 + 2 * 2)  # floor(2.5) multiples on each side, plus center
        assert cand.size <= per_center_cap * 3
        rounded = set()
        for c in centers.ravel():
            lo = int(np.ceil((c - r) / eta))
            hi = int(np.floor((c + r) / eta))
            rounded.update(range(lo, hi + 1))
        assert cand.size == len(rounded)

    def test_overlapping_centers_dedup(self):
        basis = LatticeBasis(np.eye(1))
        separate = sum(
            enumerate_ball(basis, np.array([c]), 1.2).shape[0] for c in (0.0, 0.5)
        )
        cand = expand_candidates(basis, np.array([[0.0], [0.5]]), 1.2)
        assert cand.size <= separate

    def test_requires_centers(self):
        with pytest.raises(ValueError):
            expand_candidates(LatticeBasis(np.eye(1)), np.zeros((0, 1)), 1.0)


class TestSparsityBounds:
    def test_spectral_example(self):
        basis = LatticeBasis(np.eye(2))
        spectral, volume, tiny = sparsity_bounds(basis, 1, 1.5)
        assert spectral == pytest.approx(16.0)
        actual = enumerate_ball(basis, np.zeros(2), 1.5).shape[0]
        assert spectral >= actual and volume >= 0

    def test_1d_closed_form(self):
        eta = 0.25
        basis = LatticeBasis(np.array([[eta]]))
        spectral, _, _ = sparsity_bounds(basis, 3, 1.0)
        assert spectral == pytest.approx(3 * (1 + 2 * 1.0 / eta))

    def test_bounds_dominate_truth(self):
        gen = np.random.default_rng(7)
        for _ in range(40):
            m = int(gen.integers(1, 4))
            basis = random_basis(gen, m)
            radius = float(gen.uniform(0.05, 2.0))
            spectral, volume, tiny = sparsity_bounds(basis, 1, radius)
            actual = enumerate_ball(basis, np.zeros(m), radius).shape[0]
            assert spectral + 1e-9 >= actual
            assert volume + 1e-9 >= actual
            if tiny:
                assert actual <= 1

    def test_tiny_flag_uses_gram_schmidt(self):
        basis = LatticeBasis(np.array([[1.0, 0.6], [0.0, 0.8]]))
        _, _, tiny = sparsity_bounds(basis, 5, 0.5 * basis.min_gram_schmidt_norm())
        assert tiny


class TestSnapToGrid:
    def test_identity_on_grid(self):
        # output is in canonical (sorted) bin order
        sig = FourierSparseSignal(1, 1.0, np.array([[1.0], [-2.0]]), np.array([1.0, 2j]))
        out = snap_to_grid(sig, 0.5)
        assert np.allclose(out.freqs.ravel(), [-2.0, 1.0])
        assert np.allclose(out.coeffs, [2j, 1.0])

    def test_cancelling_tones_collapse(self):
        sig = FourierSparseSignal(1, 1.0, np.array([[1.01], [0.99]]), np.array([1.0, -1.0]))
        out = snap_to_grid(sig, 1.0)
        assert out.sparsity == 1
        assert out.coeffs[0] == 0

    def test_sparsity_never_grows_and_freqs_on_grid(self):
        gen = np.random.default_rng(3)
        for _ in range(20):
            k = int(gen.integers(1, 8))
            sig = FourierSparseSignal(1, 1.0, gen.uniform(-4, 4, (k, 1)),
                                      gen.standard_normal(k) + 1j * gen.standard_normal(k))
            gamma = float(gen.uniform(0.05, 1.0))
            out = snap_to_grid(sig, gamma)
            assert out.sparsity <= sig.sparsity
            multiples = out.freqs / gamma
            assert np.abs(multiples - np.round(multiples)).max() < 1e-9

    def test_error_bound_and_monotonicity(self):
        # bound at the design pitch, monotone error over a coarse-to-fine
        # ladder (factor-8 steps keep cross terms from flipping the order)
        eps = 0.05
        gen = np.random.default_rng(11)
        for _ in range(10):
            freqs = np.sort(gen.uniform(-8, 8, 5))
            coeffs = gen.standard_normal(5) + 1j * gen.standard_normal(5)
            sig = FourierSparseSignal(1, 1.0, freqs.reshape(-1, 1), coeffs)
            gamma = snap_pitch(eps, 8.0, 1.0)
            err = signal_error_energy(snap_to_grid(sig, gamma), sig)
            assert err <= 10 * eps**2 * np.sum(np.abs(coeffs)) ** 2
            errs = [signal_error_energy(snap_to_grid(sig, g), sig)
                    for g in (gamma, gamma / 8, gamma / 64)]
            assert errs[1] <= errs[0] + 1e-12 and errs[2] <= errs[1] + 1e-12

    def test_tie_rounds_down(self):
        sig = FourierSparseSignal(1, 1.0, np.array([[0.5]]), np.array([1.0]))
        out = snap_to_grid(sig, 1.0)
        assert out.freqs[0, 0] == pytest.approx(0.0)

    def test_coordinatewise_in_2d(self):
        sig = FourierSparseSignal(2, 1.0, np.array([[0.6, 1.4]]), np.array([1.0]))
        out = snap_to_grid(sig, 1.0)
        assert np.allclose(out.freqs[0], [1.0, 1.0])

    def test_positive_pitch_required(self):
        sig = FourierSparseSignal(1, 1.0, np.array([[0.5]]), np.array([1.0]))
        with pytest.raises(ValueError):
            snap_to_grid(sig, 0.0)


@given(st.integers(0, 10_000), st.integers(1, 3), st.floats(0.1, 2.0))
@settings(max_examples=25, deadline=None)
def test_enumeration_matches_brute_force_property(seed, m, radius):
    gen = np.random.default_rng(seed)
    basis = random_basis(gen, m)
    center = gen.uniform(-1, 1, m)
    box = int(np.ceil((radius + np.linalg.norm(center)) / basis.sigma_min)) + 2
    if (2 * box + 1) ** m > 100_000:
        return
    mine = enumerate_ball(basis, center, radius)
    ref = brute_force_ball(basis, center, radius, box)
    assert mine.shape[0] == ref.shape[0]
