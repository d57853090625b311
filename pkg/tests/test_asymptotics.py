import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import distributions
from phonon_accum.asymptotics import (
    FixedPointSet,
    asymptotic_distribution,
    asymptotic_report,
    fixed_point_set,
    pulse_area_for_target,
    thermal_fock_weight,
    thermal_weight_crossing,
)
from phonon_accum.dynamics import ideal_step
from phonon_accum.errors import DomainError
from phonon_accum.fock import fock_state, thermal_distribution
from phonon_accum.tomography import total_variation


class TestFixedPoints:
    def test_pi(self):
        assert fixed_point_set(math.pi, 40).points == (3, 15, 35)

    def test_two_pi_over_root3(self):
        assert fixed_point_set(2 * math.pi / math.sqrt(3), 50).points == (2, 11, 26, 47)

    def test_twenty(self):
        assert fixed_point_set(2 * math.pi / math.sqrt(21), 25).points == (20,)

    def test_empty_is_valid(self):
        assert len(fixed_point_set(1.0, 5)) == 0

    def test_loose_tolerance_for_near_miss(self):
        assert fixed_point_set(0.9 * math.pi, 30).points == ()
        assert fixed_point_set(0.9 * math.pi, 30, tol=0.05).points == (4, 19)

    def test_bad_area(self):
        with pytest.raises(DomainError):
            fixed_point_set(0.0, 10)

    def test_ordering_invariant(self):
        with pytest.raises(DomainError):
            FixedPointSet(1.0, (3, 3))

    @given(st.integers(0, 60), st.integers(1, 4))
    def test_inverse(self, n, l):
        area = pulse_area_for_target(n, l)
        assert n in fixed_point_set(area, n).points

    @given(st.floats(0.2, 10), st.integers(0, 60))
    def test_members_are_invariant(self, area, n_max):
        for n in fixed_point_set(area, n_max, tol=1e-9):
            out = ideal_step(fock_state(n), area)
            assert out.probs[n] == pytest.approx(1, abs=1e-15)

    def test_pulse_area_examples(self):
        assert pulse_area_for_target(3, 1) == pytest.approx(math.pi)
        assert pulse_area_for_target(2, 1) == pytest.approx(2 * math.pi / math.sqrt(3))
        assert pulse_area_for_target(0, 1) == pytest.approx(2 * math.pi)
        with pytest.raises(DomainError):
            pulse_area_for_target(-1, 1)


class TestLimit:
    def test_thermal_pi(self):
        d = asymptotic_distribution(thermal_distribution(1.19, 60), math.pi)
        assert d.probs[3] == pytest.approx(0.9128, abs=1e-4)
        assert d.probs[15] == pytest.approx(0.0871, abs=1e-4)
        assert d.probs[35] == pytest.approx(5.8e-5, rel=0.01)

    def test_fock_fixed(self):
        d = asymptotic_distribution(fock_state(3), math.pi)
        assert d.probs.tolist() == [0, 0, 0, 1]

    def test_geometric_weight(self):
        d = asymptotic_distribution(thermal_distribution(9, 400), 2 * math.pi / math.sqrt(21))
        assert d.probs[20] == pytest.approx(1 - 0.9**21, abs=1e-12)
        assert d.probs[20] == pytest.approx(0.8906, abs=1e-4)

    def test_crossing(self):
        nb = thermal_weight_crossing(20, 0.9)
        assert thermal_fock_weight(nb, 20) == pytest.approx(0.9, abs=1e-12)
        assert nb == pytest.approx(8.629, abs=1e-3)

    def test_unassigned_tail(self):
        rep = asymptotic_report(thermal_distribution(1.19, 10), math.pi)
        assert rep.fixed_points.points == (3,)
        assert rep.unassigned_tail == pytest.approx(thermal_distribution(1.19, 10).probs[4:].sum())
        assert rep.distribution.total + rep.unassigned_tail == pytest.approx(thermal_distribution(1.19, 10).total)

    def test_report_json(self):
        obj = json.loads(asymptotic_report(thermal_distribution(1.19, 60), math.pi).to_json())
        assert set(obj) == {"pulse_area", "fixed_points", "P_infinity", "unassigned_tail"}
        assert obj["fixed_points"] == [3, 15, 35]

    @given(distributions(max_size=40), st.sampled_from([math.pi, 2 * math.pi / math.sqrt(3), 2 * math.pi / math.sqrt(5)]))
    def test_idempotent_and_trace_preserving(self, d, area):
        rep = asymptotic_report(d, area)
        again = asymptotic_report(rep.distribution, area)
        np.testing.assert_allclose(again.distribution.probs, rep.distribution.probs, atol=1e-15)
        assert rep.distribution.total + rep.unassigned_tail == pytest.approx(d.total, abs=1e-14)

    @pytest.mark.parametrize("nb", [0.5, 1.19, 2.0])
    def test_ideal_dynamics_converge(self, nb):
        d0 = thermal_distribution(nb, 60)
        limit = asymptotic_distribution(d0, math.pi)
        d = d0
        for _ in range(200):
            d = ideal_step(d, math.pi)
            d = type(d)(d.probs[:61])
        assert total_variation(d, limit) < 1e-3
