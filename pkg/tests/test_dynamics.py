import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treespread import (
    DynamicsError,
    ScalarMapSpec,
    dominant_profile,
    iterate,
    make_offspring,
    make_profile,
    scalar_deriv,
    scalar_eval,
    step_full,
    step_variant,
    uniform_profile,
    zary,
    zary_map,
)
from treespread.dynamics import (
    full_stepper,
    scalar_stepper,
    trajectory_to_csv,
    trajectory_to_json_obj,
    variant_stepper,
)

FIG_FE = make_offspring([(3, 1 / 3), (6, 1 / 3), (10, 1 / 3)])


class TestProfiles:
    def test_uniform(self):
        p = uniform_profile(3)
        assert p.k == 3 and p.sane == 0.25
        assert p.dominant_count == 3

    def test_make_profile_rejects_zero_when_strict(self):
        with pytest.raises(DynamicsError):
            make_profile([0.5, 0.0, 0.5])
        make_profile([0.5, 0.0, 0.5], strict=False)

    def test_make_profile_rejects_bad_sum(self):
        with pytest.raises(DynamicsError):
            make_profile([0.5, 0.4])

    def test_make_profile_rejects_increasing_order(self):
        with pytest.raises(DynamicsError):
            make_profile([0.2, 0.5, 0.3])

    def test_dominant_count(self):
        assert make_profile([0.4, 0.4, 0.1, 0.1]).dominant_count == 2
        assert make_profile([0.5, 0.2, 0.3]).dominant_count == 1

    def test_dominant_profile(self):
        for k in range(1, 6):
            for i in range(1, k + 1):
                p = dominant_profile(k, i)
                assert p.k == k and p.dominant_count == i
                assert abs(sum(p.masses) - 1.0) < 1e-12
                if i < k:
                    assert p.masses[0] > p.masses[i]
        with pytest.raises(DynamicsError):
            dominant_profile(3, 4)


class TestStepFull:
    def test_binary_pinned(self):
        # hand-computed: G(s)=s^2, sane=0.3 -> (0.8^2-0.09, 0.5^2-0.09, rest)
        out = step_full(zary(2), [0.5, 0.2, 0.3])
        assert np.allclose(out, [0.55, 0.16, 0.29], atol=1e-15)

    def test_preserves_simplex(self):
        out = step_full(FIG_FE, [0.4, 0.3, 0.2, 0.1])
        assert abs(out.sum() - 1.0) < 1e-12
        assert np.all(out >= 0)

    def test_degenerate_certain_disease(self):
        # a single disease with full mass is fixed: unanimity propagates it
        out = step_full(zary(2), [1.0, 0.0])
        assert out[0] == 1.0

    def test_all_sane_fixed(self):
        out = step_full(FIG_FE, [0.0, 1.0])
        assert out[1] == 1.0

    def test_rejects_bad_vector(self):
        with pytest.raises(DynamicsError):
            step_full(zary(2), [0.5, 0.4])
        with pytest.raises(DynamicsError):
            step_full(zary(2), [1.2, -0.2])

    def test_matches_scalar_map_on_uniform_points(self):
        for k in (1, 2, 4):
            x = 0.8 / (k + 1)
            p = [x] * k + [1 - k * x]
            out = step_full(zary(6), p)
            fx = scalar_eval(zary_map(6, k), x)
            assert out[0] == pytest.approx(fx, abs=1e-14)


class TestStepVariant:
    def test_alpha_one_recovers_standard(self):
        p = [0.4, 0.3, 0.2, 0.1]
        assert np.allclose(step_variant(FIG_FE, p, 1.0), step_full(FIG_FE, p), atol=0)

    def test_rejects_alpha_outside_domain(self):
        for a in (0.0, -0.5, 1.5):
            with pytest.raises(DynamicsError):
                step_variant(zary(2), [0.5, 0.5], a)

    def test_preserves_simplex(self):
        out = step_variant(FIG_FE, [0.4, 0.3, 0.3], 0.6)
        assert abs(out.sum() - 1.0) < 1e-12
        assert np.all(out >= -1e-15)

    def test_matches_scalar_variant_on_uniform_points(self):
        spec = ScalarMapSpec(zary(4), 2, variant_alpha=0.6)
        x = 0.25
        out = step_variant(zary(4), [x, x, 1 - 2 * x], 0.6)
        assert out[0] == pytest.approx(scalar_eval(spec, x), abs=1e-14)


class TestScalarMap:
    def test_domain(self):
        spec = zary_map(2, 2)
        assert scalar_eval(spec, 0.0) == 0.0
        with pytest.raises(DynamicsError):
            scalar_eval(spec, 0.6)
        with pytest.raises(DynamicsError):
            scalar_eval(spec, -0.1)

    def test_known_value(self):
        # f_{2,2}(x) = (1-x)^2 - (1-2x)^2 = 2x - 3x^2
        spec = zary_map(2, 2)
        for x in (0.1, 0.25, 0.5):
            assert scalar_eval(spec, x) == pytest.approx(2 * x - 3 * x * x, abs=1e-15)

    def test_deriv_orders(self):
        spec = zary_map(2, 2)
        for x in (0.1, 0.3):
            assert scalar_deriv(spec, x, 1) == pytest.approx(2 - 6 * x, abs=1e-13)
            assert scalar_deriv(spec, x, 2) == pytest.approx(-6.0, abs=1e-12)
        with pytest.raises(DynamicsError):
            scalar_deriv(spec, 0.1, 3)

    @pytest.mark.parametrize("alpha", [None, 0.4, 1.0])
    def test_deriv_finite_difference(self, alpha):
        spec = ScalarMapSpec(FIG_FE, 3, variant_alpha=alpha)
        h = 1e-6
        for x in (0.05, 0.15, 0.3):
            fd = (scalar_eval(spec, x + h) - scalar_eval(spec, x - h)) / (2 * h)
            assert abs(fd - scalar_deriv(spec, x, 1)) < 1e-7
            fd2 = (scalar_deriv(spec, x + h, 1) - scalar_deriv(spec, x - h, 1)) / (2 * h)
            assert abs(fd2 - scalar_deriv(spec, x, 2)) < 1e-5

    def test_spec_validation(self):
        with pytest.raises(DynamicsError):
            ScalarMapSpec(zary(2), 0)
        with pytest.raises(DynamicsError):
            ScalarMapSpec(zary(2), 2, variant_alpha=0.0)


@given(st.floats(1e-6, 0.5), st.integers(2, 10))
@settings(max_examples=60, deadline=None)
def test_scalar_map_stays_in_domain(x, z):
    spec = zary_map(z, 2)
    y = scalar_eval(spec, x)
    assert 0.0 <= y <= 0.5


class TestIterate:
    def test_converged_binary_uniform(self):
        traj = iterate(full_stepper(zary(2)), uniform_profile(2))
        assert traj.stop_reason == "converged"
        assert np.allclose(traj.final, [1 / 3, 1 / 3, 1 / 3], atol=1e-9)

    def test_period2_detection(self):
        traj = iterate(scalar_stepper(zary_map(6, 2)), 0.3)
        assert traj.stop_reason == "period2"
        assert abs(traj.states[-1] - traj.states[-3]) < traj.tol

    def test_max_iters(self):
        traj = iterate(scalar_stepper(zary_map(6, 2)), 0.3, max_iters=5)
        assert traj.stop_reason == "max_iters"
        assert traj.iterations == 5

    def test_variant_alpha_one_matches_standard(self):
        p = make_profile([0.5, 0.2, 0.3])
        t1 = iterate(full_stepper(zary(2)), p, max_iters=20)
        t2 = iterate(variant_stepper(zary(2), 1.0), p, max_iters=20)
        assert np.array_equal(t1.final, t2.final)


class TestSerialization:
    def test_csv_vector(self):
        traj = iterate(full_stepper(zary(2)), uniform_profile(2), max_iters=3)
        text = trajectory_to_csv(traj)
        lines = text.strip().split("\n")
        assert lines[0] == "n,p_1,p_2,p_3"
        assert len(lines) == len(traj.states) + 1
        # 17-significant-digit fields round-trip
        val = float(lines[1].split(",")[1])
        assert val == traj.states[0][0]

    def test_csv_scalar(self):
        traj = iterate(scalar_stepper(zary_map(2, 2)), 0.2, max_iters=4)
        lines = trajectory_to_csv(traj).strip().split("\n")
        assert lines[0] == "n,x"

    def test_json_obj(self):
        traj = iterate(full_stepper(zary(2)), uniform_profile(2), max_iters=3)
        obj = trajectory_to_json_obj(traj)
        assert obj["stop_reason"] == traj.stop_reason
        assert obj["states"][0] == [1 / 3, 1 / 3, 1 / 3]
