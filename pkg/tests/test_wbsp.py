import numpy as np
import pytest

from sfts.core import RngStream
from sfts.wbsp import (
    BarrierState,
    DiscreteSupport,
    FunctionFamily,
    IterationCapExceeded,
    RankDeficient,
    WeightedSampleSet,
    fourier_family,
    orthonormalize,
    rand_bss_plus,
    verify_wbsp,
)


def uniform_freq_setup(seed, d_f=8, n_support=2000, band=40):
    gen = RngStream(seed, 99).generator()
    freqs = np.sort(gen.choice(np.arange(-band, band + 1), size=d_f, replace=False)).astype(float)
    points = np.sort(gen.uniform(0.0, 1.0, n_support))
    return fourier_family(freqs.reshape(-1, 1)), DiscreteSupport.uniform(points)


class TestOrthonormalize:
    def test_already_orthonormal_family(self):
        pts = np.array([0.0, 0.25, 0.5, 0.75])
        family = fourier_family(np.array([[0.0], [1.0]]))
        support = DiscreteSupport.uniform(pts)
        basis = orthonormalize(family, support)
        a = np.sqrt(support.probs)[:, None] * basis.support_values
        assert np.abs(a.conj().T @ a - np.eye(2)).max() < 1e-12

    def test_duplicate_column_rank_deficient(self):
        family = FunctionFamily(2, lambda t: np.stack([np.ones(len(t))] * 2, axis=1))
        with pytest.raises(RankDeficient):
            orthonormalize(family, DiscreteSupport.uniform(np.linspace(0, 1, 16)))

    def test_random_family_gram_identity(self):
        gen = np.random.default_rng(4)
        freqs = np.sort(gen.uniform(-20, 20, 6))
        family = fourier_family(freqs.reshape(-1, 1))
        pts = gen.uniform(0, 1, 200)
        probs = gen.random(200) + 0.05
        support = DiscreteSupport(pts, probs / probs.sum())
        basis = orthonormalize(family, support)
        a = np.sqrt(support.probs)[:, None] * basis.support_values
        assert np.abs(a.conj().T @ a - np.eye(6)).max() < 1e-8

    def test_support_too_small(self):
        family = fourier_family(np.array([[0.0], [1.0], [2.0]]))
        with pytest.raises(RankDeficient):
            orthonormalize(family, DiscreteSupport.uniform(np.array([0.0, 0.5])))


class TestRandBssPlus:
    def test_single_direction_weights_sum(self):
        eps = 0.25
        family = FunctionFamily(1, lambda t: np.ones((len(t), 1), dtype=complex))
        support = DiscreteSupport.uniform(np.linspace(0, 1, 64))
        out = rand_bss_plus(family, support, eps, RngStream(0))
        assert abs(out.weights.sum() - 1.0) <= 10 * np.sqrt(eps)

    @pytest.mark.parametrize("eps", [0.25, 0.5])
    def test_spectral_contract(self, eps):
        d_f = 8
        hits = 0
        for seed in range(20):
            family, support = uniform_freq_setup(seed, d_f)
            out = rand_bss_plus(family, support, eps, RngStream(seed, 1))
            assert out.size <= 64 * d_f / eps
            assert out.alphas.sum() <= 1.25
            report = verify_wbsp(out, family, support, RngStream(seed, 2))
            lo, hi = 1 - 10 * np.sqrt(eps), 1 + 10 * np.sqrt(eps)
            if lo <= report.lambda_min and report.lambda_max <= hi:
                hits += 1
        assert hits >= 18

    def test_deterministic_under_fixed_stream(self):
        family, support = uniform_freq_setup(3)
        a = rand_bss_plus(family, support, 0.3, RngStream(5, 2))
        b = rand_bss_plus(family, support, 0.3, RngStream(5, 2))
        assert np.array_equal(a.points, b.points)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.alphas, b.alphas)

    def test_iteration_cap(self):
        family, support = uniform_freq_setup(1, d_f=4, n_support=300)
        with pytest.raises(IterationCapExceeded):
            rand_bss_plus(family, support, 0.25, RngStream(0), iteration_cap_factor=0.5)

    def test_eps_validation(self):
        family, support = uniform_freq_setup(1, d_f=2, n_support=50)
        with pytest.raises(ValueError):
            rand_bss_plus(family, support, 1.5, RngStream(0))

    def test_blocked_tree_path_same_contract(self):
        family, support = uniform_freq_setup(2, d_f=4, n_support=500)
        out = rand_bss_plus(family, support, 0.25, RngStream(1), tree="blocked")
        report = verify_wbsp(out, family, support, RngStream(2))
        assert report.lambda_min > 1 - 10 * np.sqrt(0.25)
        assert report.lambda_max < 1 + 10 * np.sqrt(0.25)


class TestBarrierState:
    def test_containment_check(self):
        state = BarrierState(matrix=np.zeros((2, 2)), lower=-1.0, upper=1.0, gamma=0.1, mid=1.0)
        assert state.containment_ok(np.array([-0.5, 0.5]))
        assert not state.containment_ok(np.array([-0.5, 1.5]))


class TestVerifyWbsp:
    def test_full_support_is_exact(self):
        family, support = uniform_freq_setup(0, d_f=4, n_support=400)
        sset = WeightedSampleSet(support.points, support.probs, support.probs, "full")
        report = verify_wbsp(sset, family, support, RngStream(1))
        assert report.lambda_min == pytest.approx(1.0, abs=1e-10)
        assert report.lambda_max == pytest.approx(1.0, abs=1e-10)

    def test_degenerate_single_sample(self):
        family = fourier_family(np.array([[0.0], [1.0]]))
        support = DiscreteSupport.uniform(np.linspace(0, 1, 32))
        sset = WeightedSampleSet(np.array([0.25]), np.array([1.0]), np.array([1.0]), "degenerate")
        report = verify_wbsp(sset, family, support, RngStream(0))
        assert report.lambda_min == pytest.approx(0.0, abs=1e-12)

    def test_extremes_inside_bracket(self):
        family, support = uniform_freq_setup(7, d_f=6, n_support=800)
        out = rand_bss_plus(family, support, 0.3, RngStream(7, 1))
        report = verify_wbsp(out, family, support, RngStream(7, 2), trials=64)
        assert report.extremes_inside_bracket


class TestOrthogonalEnergy:
    def test_preservation_bound(self):
        # for g orthogonal to the family under D, the sketched projections
        # carry at most C * eps * ||g||_D^2 of energy, C = 10
        d_f, eps, trials = 6, 0.25, 40
        hits = 0
        for seed in range(trials):
            family, support = uniform_freq_setup(seed, d_f, n_support=600)
            basis = orthonormalize(family, support)
            gen = RngStream(seed, 5).generator()
            g = gen.standard_normal(support.size) + 1j * gen.standard_normal(support.size)
            proj = basis.support_values.conj().T @ (support.probs * g)
            g_perp = g - basis.support_values @ proj
            norm_d = float(np.sum(support.probs * np.abs(g_perp) ** 2))
            out = rand_bss_plus(family, support, eps, RngStream(seed, 6))
            idx = {tuple(np.atleast_1d(p)): i for i, p in enumerate(support.points)}
            sel = np.array([idx[tuple(np.atleast_1d(p))] for p in out.points])
            inner = basis.support_values[sel].conj().T @ (out.weights * g_perp[sel])
            if np.sum(np.abs(inner) ** 2) <= 10 * eps * norm_d:
                hits += 1
        assert hits >= int(0.9 * trials)
