import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from phonon_accum.errors import DomainError, TruncationError
from phonon_accum.fock import PhononDistribution, fock_state, thermal_distribution
from phonon_accum.qng import (
    GaussianPureParams,
    QNGConfig,
    gaussian_amplitudes,
    gaussian_envelope,
    gaussian_fock_probabilities,
    highest_violated_level,
    qng_hierarchy,
    qng_witness,
)

LEVELS = (0, 1, 2, 3)


def dense_gaussian(d, r, dim=160):
    """``D(d) S(r)|0>`` by matrix exponentials on a large truncated space."""
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    ad = a.T
    vac = np.zeros(dim)
    vac[0] = 1
    squeeze = expm(0.5 * r * (a @ a - ad @ ad))
    disp = expm(d * (ad - a))
    return disp @ squeeze @ vac


class TestGaussianStates:
    def test_vacuum(self):
        p = gaussian_fock_probabilities(GaussianPureParams(0, 0), 5)
        assert p.probs.tolist() == [1, 0, 0, 0, 0, 0]

    def test_coherent(self):
        p = gaussian_fock_probabilities(GaussianPureParams(1, 0), 30).probs
        ref = np.exp(-1) / np.array([math.factorial(n) for n in range(31)], dtype=float)
        np.testing.assert_allclose(p, ref, rtol=1e-12)

    def test_squeezed_vacuum_parity(self):
        p = gaussian_fock_probabilities(GaussianPureParams(0, 0.7), 40).probs
        assert np.all(p[1::2] == 0)

    @pytest.mark.parametrize("d,r", [(0.5, 0.3), (1.2, -0.6), (2.0, 0.9), (0.0, -1.1)])
    def test_matches_dense_construction(self, d, r):
        amp = gaussian_amplitudes(d, r, 30)
        ref = dense_gaussian(d, r)[:31]
        # squeezing convention: only the sign of r may differ between conventions
        assert np.allclose(amp, ref, atol=1e-10) or np.allclose(amp, dense_gaussian(d, -r)[:31], atol=1e-10)

    def test_spec_recurrence(self):
        d, r = 1.3, 0.4
        c = gaussian_amplitudes(d, r, 20)
        ch, sh = math.cosh(r), math.sinh(r)
        for m in range(1, 20):
            lhs = ch * math.sqrt(m + 1) * c[m + 1]
            rhs = d * (ch + sh) * c[m] - sh * math.sqrt(m) * c[m - 1]
            assert lhs == pytest.approx(rhs, abs=1e-14)

    @given(st.floats(0, 3), st.floats(-1.2, 1.2))
    def test_normalized(self, d, r):
        p = gaussian_fock_probabilities(GaussianPureParams(d, r), 400).probs
        assert p.sum() == pytest.approx(1, abs=1e-10)

    def test_incomplete_raises_with_suggestion(self):
        with pytest.raises(TruncationError) as info:
            gaussian_fock_probabilities(GaussianPureParams(3, 0), 5, require_complete=True)
        assert info.value.suggested_n_cap > 5
        tail = gaussian_fock_probabilities(GaussianPureParams(3, 0), info.value.suggested_n_cap).tail
        assert tail <= 1e-10

    def test_search_box(self):
        with pytest.raises(DomainError):
            GaussianPureParams(11, 0)
        with pytest.raises(DomainError):
            GaussianPureParams(1, 6)
        with pytest.raises(DomainError):
            GaussianPureParams(-1, 0)


class TestEnvelope:
    def test_slopes_both_signs(self):
        s = QNGConfig().slopes()
        assert s.size == 121 and 0 in s and s.min() == -1e3 and s.max() == 1e3

    def test_single_phonon_bound(self):
        env = gaussian_envelope(1)
        g0 = env.values[env.slopes == 0][0]
        assert g0 == pytest.approx(0.4779, abs=2e-4)

    @pytest.mark.parametrize("level", LEVELS)
    def test_envelope_dominates_grid(self, level):
        env = gaussian_envelope(level)
        ds = np.linspace(0, 10, 41)
        rs = np.linspace(-5, 5, 41)
        dd, rr = np.meshgrid(ds, rs)
        p = gaussian_amplitudes(dd, rr, level) ** 2
        pn, tail = p[level], 1 - p.sum(axis=0)
        for a, g in zip(env.slopes, env.values):
            assert (pn + a * tail).max() <= g + 1e-12


class TestWitness:
    def test_single_phonon(self):
        v = qng_witness(fock_state(1, 3), 1)
        assert v.violated and v.margin > 0
        violated, margin = v
        assert violated is True and margin == v.margin

    @pytest.mark.parametrize("level", LEVELS)
    def test_thermal(self, level):
        assert not qng_witness(thermal_distribution(1.19, 60), level).violated

    @pytest.mark.parametrize("d,r", [(0.0, 0.0), (1.0, 0.0), (0.5, 0.8), (2.0, -1.0), (0.0, 1.5)])
    def test_pure_gaussians(self, d, r):
        g = gaussian_fock_probabilities(GaussianPureParams(d, r), 300)
        for v in qng_hierarchy(g, LEVELS):
            assert v.margin <= 1e-9

    @given(st.integers(0, 2**32 - 1), st.integers(1, 5))
    def test_gaussian_mixtures_never_fire(self, seed, k):
        rng = np.random.default_rng(seed)
        w = rng.dirichlet(np.ones(k))
        probs = np.zeros(301)
        for wi in w:
            d, r = rng.uniform(0, 4), rng.uniform(-1.5, 1.5)
            probs += wi * gaussian_amplitudes(d, r, 300) ** 2
        mix = PhononDistribution(np.clip(probs, 0, None))
        for v in qng_hierarchy(mix, LEVELS):
            assert not v.violated
            assert v.margin <= 1e-9

    def test_level_range(self):
        with pytest.raises(DomainError):
            qng_witness(fock_state(1), 1)

    def test_highest_level(self):
        verdicts = qng_hierarchy(fock_state(3, 5), LEVELS)
        assert highest_violated_level(verdicts) == 3
        assert highest_violated_level(qng_hierarchy(thermal_distribution(1.0, 40), LEVELS)) is None

    def test_fitted_data_margin(self):
        d = PhononDistribution([0.05, 0.9, 0.05, 0])
        assert qng_witness(d, 1).violated
        assert not qng_witness(d, 1, margin_tol=10.0).violated
