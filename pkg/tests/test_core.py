import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sfts.core import (
    DiscreteSignal,
    FourierSparseSignal,
    NoisyOracle,
    RngStream,
    continuous_norm_sq,
    coords_to_index,
    dft,
    index_to_coords,
    inverse_dft,
    sparse_spectrum_signal,
    weighted_norm_sq,
)


def random_signal(gen, k, d=1, horizon=1.0, band=8.0):
    freqs = gen.uniform(-band, band, size=(k, d))
    coeffs = gen.standard_normal(k) + 1j * gen.standard_normal(k)
    return FourierSparseSignal(dim=d, horizon=horizon, freqs=freqs, coeffs=coeffs)


class TestContinuousNorm:
    def test_single_term_is_coeff_magnitude(self):
        sig = FourierSparseSignal(1, 2.5, np.array([[0.7]]), np.array([3 + 4j]))
        assert continuous_norm_sq(sig) == pytest.approx(25.0, abs=1e-12)

    def test_orthogonal_tones(self):
        # cross kernel (e^{2 pi i} - 1) / (2 pi i) = 0 at frequency gap 1/T
        sig = FourierSparseSignal(1, 1.0, np.array([[0.0], [1.0]]), np.array([1.0, 1.0]))
        assert continuous_norm_sq(sig) == pytest.approx(2.0, abs=1e-12)

    def test_matches_dense_quadrature_1d(self):
        # independent oracle: 1e6-point trapezoid on [0, T]
        gen = np.random.default_rng(0)
        t = np.linspace(0.0, 1.0, 1_000_001)
        for k in (2, 5, 8):
            sig = random_signal(gen, k)
            reference = np.trapezoid(np.abs(sig(t)) ** 2, t)
            assert continuous_norm_sq(sig) == pytest.approx(reference, rel=1e-6)

    def test_matches_dense_quadrature_2d(self):
        from scipy.integrate import simpson

        gen = np.random.default_rng(1)
        axis = np.linspace(0.0, 1.0, 801)
        xx, yy = np.meshgrid(axis, axis, indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
        for k in (2, 4):
            sig = random_signal(gen, k, d=2, band=3.0)
            vals = np.abs(sig(pts)) ** 2
            reference = simpson(simpson(vals.reshape(801, 801), x=axis), x=axis)
            assert continuous_norm_sq(sig) == pytest.approx(reference, rel=1e-6)

    @given(st.integers(0, 2**31 - 1), st.floats(0.1, 4.0))
    @settings(max_examples=25, deadline=None)
    def test_scaling_property(self, seed, scale):
        gen = np.random.default_rng(seed)
        sig = random_signal(gen, 3)
        scaled = FourierSparseSignal(1, sig.horizon, sig.freqs, sig.coeffs * scale)
        assert continuous_norm_sq(scaled) == pytest.approx(
            scale**2 * continuous_norm_sq(sig), rel=1e-9
        )


class TestWeightedNorm:
    def test_unit_mass_constant(self):
        pts = np.array([0.1, 0.5, 0.9])
        w = np.array([0.2, 0.5, 0.3])
        assert weighted_norm_sq(lambda t: np.ones(len(t)), pts, w) == pytest.approx(1.0)

    def test_empty_set(self):
        assert weighted_norm_sq(lambda t: np.ones(len(t)), np.array([]), np.array([])) == 0.0

    def test_matches_direct_summation(self):
        gen = np.random.default_rng(3)
        sig = random_signal(gen, 4)
        pts = gen.uniform(0, 1, 50)
        w = gen.uniform(0.01, 1.0, 50)
        direct = sum(wi * abs(sig(np.array([ti]))[0]) ** 2 for ti, wi in zip(pts, w))
        assert weighted_norm_sq(sig, pts, w) == pytest.approx(direct, rel=1e-12)

    def test_rejects_nonpositive_weights(self):
        with pytest.raises(ValueError):
            weighted_norm_sq(lambda t: np.ones(len(t)), np.array([0.5]), np.array([0.0]))


class TestDft:
    def test_delta_gives_flat_spectrum(self):
        values = np.zeros(4, dtype=complex)
        values[0] = 1.0
        sig = DiscreteSignal(4, 1, values)
        assert np.allclose(dft(sig), np.ones(4), atol=1e-12)

    def test_round_trip(self):
        gen = np.random.default_rng(5)
        for p, d in [(16, 1), (8, 2), (4, 3)]:
            n = p**d
            sig = DiscreteSignal(p, d, gen.standard_normal(n) + 1j * gen.standard_normal(n))
            back = inverse_dft(dft(sig), p, d)
            assert np.abs(back.values - sig.values).max() < 1e-10

    def test_parseval(self):
        gen = np.random.default_rng(6)
        for p, d in [(64, 1), (16, 2)]:
            n = p**d
            sig = DiscreteSignal(p, d, gen.standard_normal(n) + 1j * gen.standard_normal(n))
            lhs = np.sum(np.abs(sig.values) ** 2)
            rhs = np.sum(np.abs(dft(sig)) ** 2) / n
            assert lhs == pytest.approx(rhs, rel=1e-10)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_linearity(self, seed):
        gen = np.random.default_rng(seed)
        a = gen.standard_normal(16) + 1j * gen.standard_normal(16)
        b = gen.standard_normal(16) + 1j * gen.standard_normal(16)
        fa = dft(DiscreteSignal(16, 1, a))
        fb = dft(DiscreteSignal(16, 1, b))
        fab = dft(DiscreteSignal(16, 1, 2.0 * a + 3j * b))
        assert np.abs(fab - (2.0 * fa + 3j * fb)).max() < 1e-10

    def test_sparse_spectrum_signal_convention(self):
        # x_t = (1/n) sum_i xhat_i exp(2 pi i <f_i, t> / p): forward DFT recovers xhat
        freqs = np.array([[1, 2], [3, 0]])
        spec = np.array([2.0 + 0j, 1j])
        sig = sparse_spectrum_signal(8, 2, freqs, spec)
        xhat = dft(sig)
        idx = coords_to_index(freqs, 8)
        assert np.abs(xhat[idx] - spec).max() < 1e-10
        rest = np.delete(xhat, idx)
        assert np.abs(rest).max() < 1e-10


class TestIndexing:
    @given(st.integers(2, 7), st.integers(1, 3), st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_round_trip(self, p, d, raw):
        idx = raw % p**d
        coords = index_to_coords(np.array([idx]), p, d)
        assert coords_to_index(coords, p)[0] == idx
        assert coords.shape == (1, d)
        assert np.all(coords >= 0) and np.all(coords < p)


class TestJsonInterfaces:
    def test_signal_schema(self):
        sig = FourierSparseSignal(2, 1.5, np.array([[0.5, -1.0]]), np.array([1 - 2j]))
        data = json.loads(sig.to_json())
        assert set(data) == {"dim", "T", "terms"}
        assert data["terms"][0] == {"freq": [0.5, -1.0], "re": 1.0, "im": -2.0}
        back = FourierSparseSignal.from_json(sig.to_json())
        assert np.allclose(back.freqs, sig.freqs) and np.allclose(back.coeffs, sig.coeffs)

    def test_discrete_schema(self):
        sig = DiscreteSignal(2, 1, np.array([1 + 2j, 3 - 1j]))
        data = json.loads(sig.to_json())
        assert set(data) == {"p", "dim", "values"}
        assert data["values"] == [[1.0, 2.0], [3.0, -1.0]]
        back = DiscreteSignal.from_json(sig.to_json())
        assert np.allclose(back.values, sig.values)


class TestOracle:
    def test_counter_tracks_batches(self):
        oracle = NoisyOracle(lambda t: np.zeros(len(np.atleast_1d(t)), dtype=complex))
        oracle.sample(np.array([0.1, 0.2, 0.3]))
        assert oracle.count == 3
        oracle.sample(np.array([0.4]))
        assert oracle.count == 4

    def test_noise_added(self):
        oracle = NoisyOracle(
            lambda t: np.ones(len(t), dtype=complex),
            lambda t: 2j * np.ones(len(t), dtype=complex),
        )
        assert np.allclose(oracle.sample(np.array([0.0, 1.0])), 1 + 2j)


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(7, 3).generator().standard_normal(5)
        b = RngStream(7, 3).generator().standard_normal(5)
        assert np.array_equal(a, b)

    def test_children_independent(self):
        a = RngStream(7).child(0).generator().standard_normal(5)
        b = RngStream(7).child(1).generator().standard_normal(5)
        assert not np.allclose(a, b)


class TestValidation:
    def test_signal_invariants(self):
        with pytest.raises(ValueError):
            FourierSparseSignal(1, -1.0, np.array([[0.0]]), np.array([1.0]))
        with pytest.raises(ValueError):
            FourierSparseSignal(2, 1.0, np.array([[0.0]]), np.array([1.0]))
        with pytest.raises(ValueError):
            FourierSparseSignal(1, 1.0, np.zeros((0, 1)), np.array([]))

    def test_discrete_length(self):
        with pytest.raises(ValueError):
            DiscreteSignal(4, 2, np.zeros(15))

    def test_min_gap(self):
        sig = FourierSparseSignal(1, 1.0, np.array([[0.0], [2.0], [5.0]]), np.ones(3))
        assert sig.min_gap() == pytest.approx(2.0)
