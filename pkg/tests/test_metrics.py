import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import distributions
from phonon_accum.errors import DomainError, IncompleteDistributionWarning, UndefinedMetricError
from phonon_accum.fock import PhononDistribution, fock_state, poisson_distribution, thermal_distribution
from phonon_accum.metrics import fano_factor, klyshko, klyshko_series, laguerre_table, wigner_origin, wigner_radial


class TestFano:
    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_fock(self, n):
        assert fano_factor(fock_state(n)) == 0

    def test_poisson(self):
        assert fano_factor(poisson_distribution(2, 40)) == pytest.approx(1, abs=1e-6)

    def test_thermal(self):
        assert fano_factor(thermal_distribution(1.19, 60)) == pytest.approx(2.19, abs=1e-4)

    def test_vacuum_undefined(self):
        with pytest.raises(UndefinedMetricError):
            fano_factor(fock_state(0))


class TestKlyshko:
    @pytest.mark.parametrize("n", [1, 2, 4])
    def test_fock(self, n):
        assert klyshko(fock_state(n, n + 1), n) == n

    @given(st.floats(0.01, 5), st.integers(1, 20))
    def test_poisson_zero(self, lam, n):
        assert klyshko(poisson_distribution(lam, 30), n) == pytest.approx(0, abs=1e-9)

    @given(st.floats(0.01, 5), st.integers(1, 20))
    def test_thermal_negative(self, nb, n):
        d = thermal_distribution(nb, 30)
        assert klyshko(d, n) == pytest.approx(-d.probs[n] ** 2, rel=1e-9, abs=1e-300)
        assert klyshko(d, n) <= 0

    def test_range(self):
        with pytest.raises(DomainError):
            klyshko(fock_state(1, 3), 0)
        with pytest.raises(DomainError):
            klyshko(fock_state(1, 3), 3)

    def test_series(self):
        assert [n for n, _ in klyshko_series(fock_state(1, 4))] == [1, 2, 3]


class TestWigner:
    def test_origin_examples(self):
        assert wigner_origin(fock_state(0)) == pytest.approx(2 / math.pi)
        assert wigner_origin(fock_state(1)) == pytest.approx(-2 / math.pi)

    def test_incomplete_flagged(self):
        with pytest.warns(IncompleteDistributionWarning):
            wigner_origin(PhononDistribution([0.5, 0.4]))

    def test_radial_vacuum(self):
        assert wigner_radial(fock_state(0), [0.0])[0] == pytest.approx(2 / math.pi)

    def test_radial_single_phonon_node(self):
        w = wigner_radial(fock_state(1), [0.49, 0.5, 0.51])
        assert w[0] < 0 and w[1] == pytest.approx(0, abs=1e-15) and w[2] > 0

    @given(distributions(max_size=30))
    def test_radial_matches_origin(self, d):
        assert wigner_radial(d, [0.0])[0] == pytest.approx(wigner_origin(d), abs=1e-12)

    def test_laguerre_against_closed_forms(self):
        z = np.linspace(0, 8, 17)
        lag = laguerre_table(3, z)
        np.testing.assert_allclose(lag[2], 1 - 2 * z + z**2 / 2, atol=1e-12)
        np.testing.assert_allclose(lag[3], 1 - 3 * z + 1.5 * z**2 - z**3 / 6, atol=1e-11)

    @given(distributions(max_size=20))
    def test_radial_normalization(self, d):
        # a phase-randomized state's Wigner function integrates to its trace
        x = np.linspace(0, 8, 4001)
        w = wigner_radial(d, x)
        integral = np.trapezoid(2 * math.pi * x * w, x)
        assert integral == pytest.approx(d.total, abs=1e-5)
