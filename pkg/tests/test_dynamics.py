import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import distributions
from phonon_accum.dynamics import (
    IterationTrace,
    StepParams,
    exact_thermalization_oracle,
    full_step,
    heating_edge,
    ideal_step,
    iterate,
    thermalization_map,
)
from phonon_accum.errors import DomainError, IncompleteDistributionWarning, TruncationError, ValidityError
from phonon_accum.fock import PhononDistribution, TruncationPolicy, fock_state, mean_phonon, thermal_distribution

areas = st.floats(0.1, 3 * math.pi)


def heating_generator(p):
    """``L P(n) = (n+1) P(n+1) + n P(n-1) - (2n+1) P(n)`` on a zero-padded vector."""
    q = np.concatenate([p, [0.0, 0.0]])
    n = np.arange(q.size, dtype=float)
    out = -(2 * n + 1) * q
    out[:-1] += (n[1:]) * q[1:]
    out[1:] += n[1:] * q[:-1]
    return out


class TestParams:
    def test_validation(self):
        with pytest.raises(DomainError):
            StepParams(pulse_area=0)
        with pytest.raises(DomainError):
            StepParams(contrast=1.5)
        with pytest.raises(DomainError):
            StepParams(eta_eff=-0.1)
        with pytest.raises(DomainError):
            StepParams(eta_eff=0.4)


class TestIdealStep:
    def test_adds_a_phonon(self):
        np.testing.assert_allclose(ideal_step(PhononDistribution([1, 0]), math.pi).probs[:2], [0, 1], atol=1e-15)

    def test_fixed_point(self):
        out = ideal_step(fock_state(3), math.pi)
        assert out.probs[3] == pytest.approx(1, abs=1e-15)

    def test_split(self):
        out = ideal_step(PhononDistribution([0, 1, 0]), math.pi)
        assert out.probs[1] == pytest.approx(math.cos(math.pi * math.sqrt(2) / 2) ** 2, abs=1e-12)
        assert out.probs[1] == pytest.approx(0.3669, abs=1e-4)
        assert out.probs[2] == pytest.approx(0.6331, abs=1e-4)

    @given(distributions(complete=False), areas)
    def test_trace(self, d, area):
        out = ideal_step(d, area)
        assert out.n_max == d.n_max + 1
        assert out.total == pytest.approx(d.total, abs=1e-14)

    @given(distributions(max_size=20))
    def test_fixed_points_never_lose_population(self, d):
        out = ideal_step(d, math.pi)
        for n in (3, 15):
            if n <= d.n_max:
                assert out.probs[n] >= d.probs[n] - 1e-15

    @given(distributions())
    def test_ground_state_emptied(self, d):
        assert ideal_step(d, math.pi).probs[0] == pytest.approx(0, abs=1e-30)


class TestThermalization:
    def test_calibration_example(self):
        out = thermalization_map(PhononDistribution([0, 1, 0]), math.sqrt(0.033))
        np.testing.assert_allclose(out.probs[:3], [0.033, 0.901, 0.066], atol=1e-12)

    def test_default_eta(self):
        out = thermalization_map(PhononDistribution([0, 1, 0]), 0.17)
        np.testing.assert_allclose(out.probs[:3], [0.0289, 0.9133, 0.0578], atol=1e-12)

    @given(distributions(complete=False))
    def test_identity_at_zero(self, d):
        np.testing.assert_array_equal(thermalization_map(d, 0.0).probs[: d.probs.size], d.probs)

    @given(distributions(max_size=10), st.floats(0, 0.25))
    def test_trace_and_heating_law(self, d, eta):
        out = thermalization_map(d, eta)
        assert out.total == pytest.approx(d.total, abs=1e-14)
        assert mean_phonon(out) == pytest.approx(mean_phonon(d) + eta**2, abs=1e-12)

    def test_breakdown_is_reported(self):
        with pytest.raises(ValidityError, match="n=20"):
            thermalization_map(fock_state(20), 0.17)

    def test_flux_limit_stays_positive(self):
        out = thermalization_map(fock_state(40), 0.17, clip_outflow=True)
        assert out.probs.min() >= 0
        assert out.total == pytest.approx(1, abs=1e-14)

    def test_edge(self):
        assert heating_edge(0.17) == 16
        assert 0.17**2 * (2 * 16 + 1) <= 1 < 0.17**2 * (2 * 17 + 1)


class TestOracle:
    def test_identity(self):
        d = thermal_distribution(1.19, 20)
        assert exact_thermalization_oracle(d, 0.0) == d

    def test_trace(self):
        d = thermal_distribution(1.19, 40)
        out = exact_thermalization_oracle(d, 0.17)
        assert out.total == pytest.approx(d.total, abs=1e-8)

    def test_energy_gain_is_exact(self):
        d = fock_state(2, 10)
        out = exact_thermalization_oracle(d, 0.1)
        assert mean_phonon(out) == pytest.approx(2 + 0.01, abs=1e-9)

    @pytest.mark.parametrize("n", [0, 1, 3])
    @pytest.mark.parametrize("eta", [0.05, 0.1])
    def test_fourth_order_term(self, n, eta):
        # the expansion misses exactly (eta^4/2) L^2 P at leading order
        d = fock_state(n, n + 2)
        exact = exact_thermalization_oracle(d, eta).probs
        approx = thermalization_map(d, eta).probs
        m = min(exact.size, approx.size)
        predicted = 0.5 * eta**4 * heating_generator(heating_generator(d.probs))[:m]
        np.testing.assert_allclose(exact[:m] - approx[:m], predicted, atol=60 * (n + 1) ** 3 * eta**6)

    def test_quadrature_order(self):
        with pytest.raises(DomainError):
            exact_thermalization_oracle(fock_state(1), 0.1, quad_order=4)

    def test_truncation_error(self):
        with pytest.raises(TruncationError) as info:
            exact_thermalization_oracle(fock_state(5), 0.3, pad=3, guard=2)
        assert info.value.suggested_n_cap is not None


class TestFullStep:
    def test_reduces_to_ideal(self):
        out = full_step(PhononDistribution([1, 0, 0]), StepParams(math.pi, 1.0, 0.0))
        np.testing.assert_allclose(out.probs[:3], [0, 1, 0], atol=1e-15)

    def test_default_parameters(self):
        out = full_step(PhononDistribution([1, 0, 0]), StepParams(math.pi, 0.97, 0.17))
        np.testing.assert_allclose(out.probs[:3], [0.0580, 0.8859, 0.0561], atol=1e-4)

    @given(distributions(max_size=8), areas, st.floats(0, 0.3))
    def test_zero_contrast(self, d, area, eta):
        out = full_step(d, StepParams(area, 0.0, eta))
        np.testing.assert_allclose(out.probs[: d.probs.size], d.probs, atol=1e-15)

    @given(distributions(max_size=8), areas)
    def test_degenerate_reduction(self, d, area):
        a = full_step(d, StepParams(area, 1.0, 0.0)).probs
        b = ideal_step(d, area).probs
        np.testing.assert_allclose(a[: b.size], b, atol=1e-15)
        assert np.all(a[b.size :] == 0)

    @given(distributions(max_size=8), areas, st.floats(0, 1), st.floats(0, 0.3))
    def test_trace(self, d, area, kappa, eta):
        out = full_step(d, StepParams(area, kappa, eta))
        assert out.total == pytest.approx(d.total, abs=1e-13)


class TestIterate:
    def test_zero_steps(self):
        d = thermal_distribution(1.19, 40)
        tr = iterate(d, StepParams(), 0)
        assert len(tr) == 1 and tr[0] is d

    def test_fixed_point_is_stationary(self):
        tr = iterate(fock_state(3), StepParams(math.pi, 1.0, 0.0), 5)
        for s in tr.states:
            assert s.probs[3] == pytest.approx(1, abs=1e-14)

    def test_states_complete_and_loss_bounded(self):
        policy = TruncationPolicy()
        tr = iterate(thermal_distribution(1.19, 40), StepParams(), 20, policy)
        assert tr.tail_loss < 20 * policy.tail_tol
        assert all(s.is_complete(policy.tail_tol) for s in tr.states)

    def test_fixed_cap_overflow(self):
        with pytest.raises(TruncationError):
            iterate(thermal_distribution(1.19, 40), StepParams(), 20, TruncationPolicy("fixed", n_cap=10))

    def test_fixed_cap_pads(self):
        tr = iterate(fock_state(0), StepParams(math.pi, 1.0, 0.0), 3, TruncationPolicy("fixed", n_cap=12))
        assert all(s.n_max == 12 for s in tr.states[1:])

    def test_incomplete_initial_warns(self):
        with pytest.warns(IncompleteDistributionWarning):
            iterate(thermal_distribution(1.19, 5), StepParams(), 1)

    def test_ideal_step_callable(self):
        tr = iterate(fock_state(0), StepParams(math.pi, 1.0, 0.0), 2, step=lambda d, p: ideal_step(d, p.pulse_area))
        assert tr.final.probs[2] == pytest.approx(math.sin(math.pi * math.sqrt(2) / 2) ** 2)

    def test_negative_k(self):
        with pytest.raises(DomainError):
            iterate(fock_state(0), StepParams(), -1)

    def test_json_roundtrip(self):
        tr = iterate(thermal_distribution(1.19, 40), StepParams(), 3)
        back = IterationTrace.from_dict(__import__("json").loads(tr.to_json()))
        assert all(a == b for a, b in zip(back.states, tr.states))
        assert back.params == tr.params and back.policy == tr.policy

    def test_csv(self):
        tr = iterate(fock_state(0), StepParams(math.pi, 1.0, 0.0), 1)
        lines = tr.to_csv().splitlines()
        assert lines[0] == "k,n,P"
        assert len(lines) == 1 + 1 + sum(s.probs.size for s in tr.states[1:])

    def test_ground_state_depopulates(self):
        tr = iterate(thermal_distribution(1.19, 40), StepParams(math.pi, 1.0, 0.0), 5)
        assert np.all(tr.population(0)[1:] < 1e-30)
